//! Acceptance checks, one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wvn_core::commutators::{check_all, laplacian_commutator, noncompactness_probe, wigner_commutator};
use wvn_core::hs::{hs_operator, HsMesh, DEFAULT_ORDER};
use wvn_core::lap::{lap_scan, local_decay, LapConfig, Verdict, WeightKind};
use wvn_core::lattice::{hamiltonian, laplacian};
use wvn_core::linalg::{spectral_norm, HermitianEigen, SparseMatrix};
use wvn_core::mourre::{
    bipartite_check, mourre_constant, snap_wavenumber, window_annihilation, ProjectorMode, SpectralWindow,
};
use wvn_core::smooth::{Bracket, IntegratedBracket, SmoothFunction, SmoothWindow};
use wvn_core::thresholds::{
    critical_points_1d, energy_set_oracle, extremum_lambda, threshold_e, threshold_eprime, Interval, OracleConfig,
    Sign,
};
use wvn_core::{Boundary, ExecPolicy, LatticeBox, LinearOperator, ModelSpec, Potential};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Debug>(e: E) -> String {
    format!("error: {e:?}")
}

fn c1_commutators() -> Outcome {
    let start = Instant::now();
    let iso = ModelSpec::isotropic(0.7, PI / 3.0).with_potential(Potential::InversePower { c: 0.4, rho: 0.5 });
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for d in [1usize, 2] {
        let lat = LatticeBox::new(d, 32, Boundary::Dirichlet).map_err(fail)?;
        let sep = ModelSpec::separable(vec![0.9; d], vec![PI / 3.0; d]);
        for spec in [&iso, &sep] {
            for (name, r) in check_all(&lat, spec).map_err(fail)? {
                worst = worst.max(r.interior);
                lines.push(format!("d={d} {name}={:.1e}", r.interior));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-12 && secs <= 10.0,
        format!("max interior residual {worst:.2e}, {secs:.2}s [{}]", lines.join(", ")),
    )
}

fn c2_closed_forms() -> Outcome {
    let k = PI / 3.0;
    let (em, _) = critical_points_1d(k).map_err(fail)?;
    let lm = extremum_lambda(k, Sign::Minus).map_err(fail)?;
    let e = threshold_e(k).map_err(fail)?;
    let ok = (em - 0.267949).abs() <= 1e-6
        && (lm - 1.0).abs() <= 1e-12
        && (e - 0.535898).abs() <= 1e-6
        && (8.0 - e - 7.4641).abs() <= 1e-4;
    check(ok, format!("E_-={em:.9} lambda_-={lm:.15} E={e:.9} 8-E={:.6}", 8.0 - e))
}

fn c3_oracle() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 9.0] {
        let k = m * PI / 6.0;
        let start = Instant::now();
        let set = energy_set_oracle(2, k, &OracleConfig::new(512), ExecPolicy::Parallel).map_err(fail)?;
        let secs = start.elapsed().as_secs_f64();
        let e = threshold_e(k).map_err(fail)?;
        let min = set.grid_min_positive.ok_or("no positive energy on the grid")?;
        let dev = (min - e).abs();
        let good = dev <= 2.0 * set.energy_step && secs <= 60.0;
        ok &= good;
        parts.push(format!("{m}pi/6: |{min:.5}-{e:.5}|={dev:.1e} {secs:.1}s"));
    }
    check(ok, format!("grid 512, 2 steps = {:.4}; {}", 4.0 * 2.0 * PI / 512.0, parts.join("; ")))
}

fn c4_annihilation() -> Outcome {
    let lat = LatticeBox::new(1, 150, Boundary::Periodic).map_err(fail)?;
    let (k, _) = snap_wavenumber(PI / 3.0, lat.side());
    let q = 0.5;
    let spec = ModelSpec::isotropic(q, k);
    let (em, _) = critical_points_1d(k).map_err(fail)?;
    let inside = SpectralWindow::open(1.5, 2.5, 0.3).map_err(fail)?;
    let at_threshold = SpectralWindow::open(em - 0.2, em + 0.2, 0.3).map_err(fail)?;
    let a = window_annihilation(&lat, &spec, &inside, ProjectorMode::Smooth, false).map_err(fail)?;
    let b = window_annihilation(&lat, &spec, &at_threshold, ProjectorMode::Smooth, false).map_err(fail)?;

    let lat2 = LatticeBox::new(2, 20, Boundary::Periodic).map_err(fail)?;
    let (k2, _) = snap_wavenumber(PI / 3.0, lat2.side());
    let sep = ModelSpec::separable(vec![q, q], vec![k2, k2]);
    let ep = threshold_eprime(&[k2, k2]).map_err(fail)?;
    let iv = Interval {
        lo: 0.0,
        hi: 0.9 * ep,
        lo_closed: true,
        hi_closed: false,
    };
    let w2 = SpectralWindow::new(iv, 0.2).map_err(fail)?;
    let c = window_annihilation(&lat2, &sep, &w2, ProjectorMode::Sharp, false).map_err(fail)?;
    check(
        a.norm <= 1e-12 && b.norm >= 1e-2 * q && c.norm <= 1e-12,
        format!(
            "k={k:.6} (2L+1=301): E=2 window {:.1e}, E_- window {:.3e} (need >= {:.0e}); W' d=2 [0, 0.9E'={:.4}) {:.1e}",
            a.norm,
            b.norm,
            1e-2 * q,
            0.9 * ep,
            c.norm
        ),
    )
}

fn c5_mourre() -> Outcome {
    let eps = 0.5;
    let lat = LatticeBox::new(2, 10, Boundary::Periodic).map_err(fail)?;
    let w = SpectralWindow::open(eps, 4.0 - eps, 0.1).map_err(fail)?;
    let theory = eps * (4.0 - eps);
    let est = mourre_constant(&laplacian(&lat), &laplacian_commutator(&lat), &w, Some(theory)).map_err(fail)?;
    let c = est.c_est.ok_or("empty window")?;
    check(
        c >= theory - 1e-10 && est.negative_count == 0,
        format!("rank {}, c_est={c:.12} (theory {theory}), negatives {}", est.rank, est.negative_count),
    )
}

fn c6_noncompact() -> Outcome {
    let lat = LatticeBox::new(1, 210, Boundary::Dirichlet).map_err(fail)?;
    let spec = ModelSpec::isotropic(1.0, PI / 2.0);
    let (k, b) = wigner_commutator(&lat, &spec).map_err(fail)?;
    let bn = noncompactness_probe(&b, &lat, 200).map_err(fail)?;
    let kn = noncompactness_probe(&k, &lat, 200).map_err(fail)?;
    let dev = bn.iter().map(|(_, v)| (v - 2f64.sqrt()).abs()).fold(0.0, f64::max);
    let k_ratio = kn.iter().map(|&(j, v)| v * j as f64 / 2.0).fold(0.0, f64::max);
    check(
        dev <= 1e-12 && k_ratio <= 1.0,
        format!("max |‖Bδ_j‖-√2| = {dev:.1e}, max j‖Kδ_j‖/2 = {k_ratio:.3}"),
    )
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&m + m.adjoint()) * C64::new(0.25, 0.0)
}

fn c7_hs() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bump = SmoothWindow::new(0.0, 1.0, 2.0).map_err(fail)?;
    let bracket = Bracket { power: -2.0 };
    let weight = IntegratedBracket::new(1.0).map_err(fail)?;
    let fns: [&dyn SmoothFunction; 3] = [&bump, &bracket, &weight];
    let coarse = HsMesh::with_step(2.0 * HsMesh::default().h);
    let mut worst = 0.0f64;
    let mut worst_ratio = f64::INFINITY;
    for _ in 0..10 {
        let a = random_hermitian(16, &mut rng);
        let op = LinearOperator::new("A", SparseMatrix::from_dense(&a), true).map_err(fail)?;
        let eig = HermitianEigen::new(&a);
        for f in fns {
            let exact = eig.apply_function(|l| C64::new(f.value(l), 0.0));
            let fine = hs_operator(f, &op, DEFAULT_ORDER, HsMesh::default()).map_err(fail)?;
            let rough = hs_operator(f, &op, DEFAULT_ORDER, coarse).map_err(fail)?;
            let e_fine = spectral_norm(&(fine.matrix().to_dense() - &exact));
            let e_rough = spectral_norm(&(rough.matrix().to_dense() - &exact));
            worst = worst.max(e_fine);
            worst_ratio = worst_ratio.min(e_rough / e_fine);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && worst_ratio >= 2.0 && secs <= 30.0,
        format!("max error {worst:.2e} at h=0.02, min refinement factor {worst_ratio:.1}, {secs:.1}s"),
    )
}

fn model() -> ModelSpec {
    ModelSpec::isotropic(0.5, PI / 3.0).with_potential(Potential::InversePower { c: 0.3, rho: 1.0 })
}

fn c8_lap() -> Outcome {
    let start = Instant::now();
    let (em, _) = critical_points_1d(PI / 3.0).map_err(fail)?;
    let cfg = LapConfig {
        e_grid: vec![2.0, em, 0.0],
        y_count: 10,
        s: 1.0,
        weight: WeightKind::Dilation,
        half_widths: vec![128, 256, 512],
        boundary: Boundary::Dirichlet,
        deflate: false,
    };
    let scan = lap_scan(&model(), 1, &cfg, ExecPolicy::Parallel).map_err(fail)?;
    let secs = start.elapsed().as_secs_f64();
    let want = [Verdict::Pass, Verdict::Fail, Verdict::Fail];
    let ok = scan.fits.iter().zip(want).all(|(f, v)| f.verdict == v) && secs <= 600.0;
    let parts: Vec<String> = scan
        .fits
        .iter()
        .map(|f| format!("E={:.4}: exponent {:.3}", f.e, f.exponent))
        .collect();
    check(ok, format!("{}; {secs:.1}s", parts.join(", ")))
}

fn c9_decay() -> Outcome {
    let lat = LatticeBox::new(1, 1024, Boundary::Dirichlet).map_err(fail)?;
    let h = hamiltonian(&lat, &model()).map_err(fail)?;
    let w = SpectralWindow::open(1.0, 3.0, 0.3).map_err(fail)?;
    let mut u = vec![C64::new(0.0, 0.0); lat.len()];
    u[lat.index(&[0]).ok_or("origin")?] = C64::new(1.0, 0.0);
    let weighted = local_decay(&h, &lat, &w, &u, 0.6, 200.0, 0.5, &[]).map_err(fail)?;
    let control = local_decay(&h, &lat, &w, &u, 0.0, 200.0, 0.5, &[]).map_err(fail)?;
    let ok = weighted.saturation_ratio <= 1.2
        && weighted.unitarity_drift <= 1e-9
        && control.unitarity_drift <= 1e-9
        && (control.mean_rate - 1.0).abs() <= 0.05;
    check(
        ok,
        format!(
            "s=0.6 ratio {:.4}, drift {:.1e}; s=0 slope {:.6}",
            weighted.saturation_ratio, weighted.unitarity_drift, control.mean_rate
        ),
    )
}

fn c10_symmetry() -> Outcome {
    let mut dist = 0.0f64;
    for d in [1usize, 2] {
        let lat = LatticeBox::new(d, if d == 1 { 100 } else { 12 }, Boundary::Dirichlet).map_err(fail)?;
        dist = dist.max(bipartite_check(&lat, &model()).map_err(fail)?.distance);
    }
    let cfg = OracleConfig::new(256);
    let a = energy_set_oracle(2, PI / 3.0, &cfg, ExecPolicy::Parallel).map_err(fail)?;
    let b = energy_set_oracle(2, 2.0 * PI - PI / 3.0, &cfg, ExecPolicy::Parallel).map_err(fail)?;
    let set_dist = a.energy_distance(&b);
    check(
        dist <= 1e-10 && set_dist <= a.energy_step,
        format!(
            "bipartite distance {dist:.1e}; oracle sets k vs 2pi-k distance {set_dist:.1e} (resolution {:.4})",
            a.energy_step
        ),
    )
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("commutator exactness", c1_commutators),
        ("threshold closed forms", c2_closed_forms),
        ("oracle agreement", c3_oracle),
        ("window annihilation", c4_annihilation),
        ("strict Mourre constant", c5_mourre),
        ("non-compactness probe", c6_noncompact),
        ("HS calculus oracle", c7_hs),
        ("LAP probe verdicts", c8_lap),
        ("local decay saturation", c9_decay),
        ("symmetry suite", c10_symmetry),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1)
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
