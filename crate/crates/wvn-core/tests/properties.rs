use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use wvn_core::chebyshev::Propagator;
use wvn_core::commutators::check_all;
use wvn_core::hs::{HsMesh, HsQuadrature, DEFAULT_ORDER};
use wvn_core::lap::{weighted_resolvent_norm, Weight, WeightKind};
use wvn_core::lattice::{self, hamiltonian};
use wvn_core::linalg::norm2;
use wvn_core::mourre::{bipartite_check, varrho_delta};
use wvn_core::smooth::{Bracket, SmoothFunction, SmoothWindow};
use wvn_core::thresholds::{critical_points_1d, threshold_e, Sign, SymbolFunctions};
use wvn_core::{Boundary, ExecPolicy, LatticeBox, ModelSpec, Potential};

/// Wavenumbers bounded away from πℤ.
fn wavenumber() -> impl Strategy<Value = f64> {
    prop_oneof![0.05..PI - 0.05, PI + 0.05..2.0 * PI - 0.05]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflected_wavenumber_swaps_branches(k in wavenumber(), x in 0.0..4.0f64) {
        let a = SymbolFunctions::new(k).unwrap();
        let b = SymbolFunctions::new(2.0 * PI - k).unwrap();
        prop_assert!((a.g_branch(Sign::Plus, x) - b.g_branch(Sign::Minus, x)).abs() < 1e-12);
        prop_assert!((a.g(x, 0) - a.g_minus(x)).abs() < 1e-15);
        prop_assert!((threshold_e(k).unwrap() - threshold_e(2.0 * PI - k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn minus_branch_is_convex_on_lower_half(k in 0.05..PI - 0.05, x in 0.01..3.99f64) {
        let s = SymbolFunctions::new(k).unwrap();
        prop_assert!(s.h_minus_second_derivative(x) > 0.0);
    }

    #[test]
    fn critical_points_mirror_about_band_center(k in wavenumber()) {
        let (a, b) = critical_points_1d(k).unwrap();
        prop_assert!((0.0..=4.0).contains(&a) && (0.0..=4.0).contains(&b) && a != b);
        prop_assert!((a + b - 4.0).abs() < 1e-12);
        let s = SymbolFunctions::new(k).unwrap();
        prop_assert!((s.lambda(Sign::Minus) + s.lambda(Sign::Plus) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_lies_in_lower_half_band(k in wavenumber()) {
        let e = threshold_e(k).unwrap();
        prop_assert!((0.0..=4.0).contains(&e));
    }

    #[test]
    fn varrho_is_reflection_symmetric(e in 0.0..8.0f64) {
        let a = varrho_delta(e, 2).unwrap();
        let b = varrho_delta(8.0 - e, 2).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn window_values_in_unit_interval(c in -3.0..3.0f64, hw in 0.1..2.0f64, m in 0.05..2.0f64, x in -8.0..8.0f64) {
        let w = SmoothWindow::new(c, hw, m).unwrap();
        let v = w.value(x);
        prop_assert!((0.0..=1.0).contains(&v));
        if (x - c).abs() <= hw {
            prop_assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn hs_scalar_reproduces_bracket(x in -3.0..3.0f64) {
        let phi = Bracket { power: -2.0 };
        let q = HsQuadrature::new(&phi, DEFAULT_ORDER, HsMesh::default(), 3.0).unwrap();
        let v = q.scalar(&[x], 0, ExecPolicy::Sequential).unwrap();
        prop_assert!((v[0] - phi.value(x)).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn closed_form_commutators_hold_on_interior(
        q in 0.1..2.0f64,
        k in wavenumber(),
        c in 0.0..1.0f64,
        rho in 0.2..1.5f64,
        l in 6usize..20,
        d in 1usize..3,
    ) {
        let lat = LatticeBox::new(d, l, Boundary::Dirichlet).unwrap();
        let spec = ModelSpec::isotropic(q, k).with_potential(Potential::InversePower { c, rho });
        for (name, r) in check_all(&lat, &spec).unwrap() {
            prop_assert!(r.interior < 1e-12, "{} {}", name, r.interior);
        }
    }

    #[test]
    fn bipartite_reflection(q in 0.1..2.0f64, k in wavenumber(), c in 0.0..1.0f64, l in 5usize..40) {
        let lat = LatticeBox::new(1, l, Boundary::Dirichlet).unwrap();
        let spec = ModelSpec::isotropic(q, k).with_potential(Potential::ShortRange { c, rho: 0.5 });
        prop_assert!(bipartite_check(&lat, &spec).unwrap().distance < 1e-10);
    }

    #[test]
    fn resolvent_norm_below_inverse_distance(
        e in 0.0..4.0f64,
        y in 0.05..1.0f64,
        s in 0.6..1.5f64,
        dilation in any::<bool>(),
    ) {
        let lat = LatticeBox::new(1, 24, Boundary::Dirichlet).unwrap();
        let h = hamiltonian(&lat, &ModelSpec::isotropic(0.5, PI / 3.0)).unwrap();
        let kind = if dilation { WeightKind::Dilation } else { WeightKind::Position };
        let w = Weight::new(&lat, kind, s).unwrap();
        let r = weighted_resolvent_norm(&h, &w, 24, e, y, &[], 0.01).unwrap();
        prop_assert!(r.norm <= (1.0 + 1e-9) / y);
    }

    #[test]
    fn weighted_norm_nonincreasing_in_exponent(
        e in 0.0..4.0f64,
        y in 0.05..1.0f64,
        s in 0.6..1.4f64,
        ds in 0.05..0.5f64,
        dilation in any::<bool>(),
    ) {
        let lat = LatticeBox::new(1, 16, Boundary::Dirichlet).unwrap();
        let h = hamiltonian(&lat, &ModelSpec::isotropic(0.5, PI / 3.0)).unwrap();
        let kind = if dilation { WeightKind::Dilation } else { WeightKind::Position };
        let a = Weight::new(&lat, kind, s).unwrap();
        let b = Weight::new(&lat, kind, s + ds).unwrap();
        let na = weighted_resolvent_norm(&h, &a, 16, e, y, &[], 0.01).unwrap().norm;
        let nb = weighted_resolvent_norm(&h, &b, 16, e, y, &[], 0.01).unwrap().norm;
        prop_assert!(nb <= na * (1.0 + 1e-8));
    }

    #[test]
    fn position_weight_decreases_in_exponent(s in 0.0..2.0f64, ds in 0.01..1.0f64) {
        let lat = LatticeBox::new(2, 4, Boundary::Dirichlet).unwrap();
        let a = lattice::position_weight(&lat, s);
        let b = lattice::position_weight(&lat, s + ds);
        prop_assert!(a.iter().zip(&b).all(|(x, y)| y <= x && *x <= 1.0));
    }

    #[test]
    fn propagation_is_unitary(q in 0.1..1.5f64, k in wavenumber(), dt in 0.1..3.0f64, site in 0usize..41) {
        let lat = LatticeBox::new(1, 20, Boundary::Dirichlet).unwrap();
        let h = hamiltonian(&lat, &ModelSpec::isotropic(q, k)).unwrap();
        let p = Propagator::new(h.matrix(), dt, 1e-13).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); lat.len()];
        v[site] = C64::new(1.0, 0.0);
        for _ in 0..5 {
            v = p.step(&v);
        }
        prop_assert!((norm2(&v) - 1.0).abs() < 1e-10);
    }
}
