//! Closed-form commutators with the dilation generator and the harness that
//! checks them against `i(TA - AT)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    self, dilation_generator, sign_weight, truncated_shift, wigner_factor, wtilde, wtilde_axis, LatticeBox,
    ModelSpec, Potential, Wigner,
};
use crate::linalg::SparseMatrix;
use crate::operator::LinearOperator;

/// Sites at distance at least this far from a cut count as interior.
pub const INTERIOR_COLLAR: usize = 2;

const HALF: Complex64 = Complex64 { re: 0.5, im: 0.0 };

/// `X + X^†`, exactly hermitian entrywise.
fn hermitian_part_sum(x: &SparseMatrix) -> SparseMatrix {
    x.add(&x.adjoint())
}

/// All closed forms for one model on one box.
#[derive(Debug, Clone)]
pub struct CommutatorSet {
    pub lattice: LatticeBox,
    pub delta_comm: LinearOperator,
    pub wigner_k: Option<LinearOperator>,
    pub wigner_b: Option<LinearOperator>,
    pub potential_comm: Option<LinearOperator>,
}

impl CommutatorSet {
    pub fn new(lattice: &LatticeBox, spec: &ModelSpec) -> Result<Self> {
        let (wigner_k, wigner_b) = if spec.wigner == Wigner::None {
            (None, None)
        } else {
            let (k, b) = wigner_commutator(lattice, spec)?;
            (Some(k), Some(b))
        };
        let potential_comm = if spec.potential == Potential::None {
            None
        } else {
            Some(potential_commutator(lattice, spec)?)
        };
        Ok(Self {
            lattice: *lattice,
            delta_comm: laplacian_commutator(lattice),
            wigner_k,
            wigner_b,
            potential_comm,
        })
    }

    /// Interior predicate used by the residual harness.
    pub fn is_interior(&self, index: usize) -> bool {
        self.lattice.is_interior(index, INTERIOR_COLLAR)
    }
}

/// `Σ_i Δ_i (4 - Δ_i)`.
pub fn laplacian_commutator(lattice: &LatticeBox) -> LinearOperator {
    let n = lattice.len();
    let mut acc = SparseMatrix::zeros(n, n);
    let four = SparseMatrix::identity(n).scale_real(4.0);
    for axis in 0..lattice.dim() {
        let d = lattice::laplacian_axis(lattice, axis).expect("axis in range");
        let p = d.matrix().mul(&four.sub(d.matrix()));
        acc = acc.add(&p);
    }
    LinearOperator::hermitian(format!("[laplacian, iA] closed form ({})", lattice.descriptor()), acc)
}

/// Closed forms `(K, B)` with `K + B = [W, iA]` for the isotropic variant,
/// or `(K_{W′}, B_{W′})` for the separable one.
///
/// Isotropic: `K_W = ½ Σ_i [W (S_i^* + S_i) + (S_i^* + S_i) W]`,
/// `B_W = Σ_i [U_i W̃ (S_i^* - S_i) - (S_i^* - S_i) W̃ U_i]`.
/// Separable: the one-axis forms with `W̃′_i` in place of `U W̃`, each
/// multiplied by the remaining factors `Π_{j≠i} W′_j`.
pub fn wigner_commutator(lattice: &LatticeBox, spec: &ModelSpec) -> Result<(LinearOperator, LinearOperator)> {
    spec.validate_for(lattice)?;
    let n = lattice.len();
    let mut k_acc = SparseMatrix::zeros(n, n);
    let mut b_acc = SparseMatrix::zeros(n, n);
    match &spec.wigner {
        Wigner::None => return Err(Error::Misuse("model has no Wigner-von Neumann term".into())),
        Wigner::Isotropic { .. } => {
            let w = lattice::wigner(lattice, spec)?;
            let wt = wtilde(lattice, spec)?;
            for axis in 0..lattice.dim() {
                let s = truncated_shift(lattice, axis, false)?;
                let sa = truncated_shift(lattice, axis, true)?;
                let u = sign_weight(lattice, axis)?;
                let sym = sa.matrix().add(s.matrix());
                let anti = sa.matrix().sub(s.matrix());
                let half_k = w.matrix().mul(&sym).scale(HALF);
                k_acc = k_acc.add(&hermitian_part_sum(&half_k));
                let x = u.matrix().mul(wt.matrix()).mul(&anti);
                b_acc = b_acc.add(&hermitian_part_sum(&x));
            }
        }
        Wigner::Separable { .. } => {
            let factors: Vec<LinearOperator> = (0..lattice.dim())
                .map(|a| wigner_factor(lattice, spec, a))
                .collect::<Result<_>>()?;
            for axis in 0..lattice.dim() {
                let s = truncated_shift(lattice, axis, false)?;
                let sa = truncated_shift(lattice, axis, true)?;
                let sym = sa.matrix().add(s.matrix());
                let anti = sa.matrix().sub(s.matrix());
                let wi = factors[axis].matrix();
                let wti = wtilde_axis(lattice, spec, axis)?;
                let mut others = SparseMatrix::identity(n);
                for (j, f) in factors.iter().enumerate() {
                    if j != axis {
                        others = others.mul(f.matrix());
                    }
                }
                let ki = hermitian_part_sum(&wi.mul(&sym).scale(HALF));
                let bi = hermitian_part_sum(&wti.matrix().mul(&anti));
                k_acc = k_acc.add(&others.mul(&ki));
                b_acc = b_acc.add(&others.mul(&bi));
            }
        }
    }
    Ok((
        LinearOperator::hermitian("K_W (compact part)", k_acc),
        LinearOperator::hermitian("B_W (non-compact part)", b_acc),
    ))
}

/// `[V, iA] = Σ_i [-(N_i - ½)(V - τ_i V) S_i + (N_i + ½)(V - τ_i^* V) S_i^*]`
/// where `(τ_i V)(n) = V(n - e_i)`.
pub fn potential_commutator(lattice: &LatticeBox, spec: &ModelSpec) -> Result<LinearOperator> {
    spec.validate_for(lattice)?;
    let n = lattice.len();
    if spec.potential == Potential::None {
        return Ok(LinearOperator::hermitian("[V, iA] (V = 0)", SparseMatrix::zeros(n, n)));
    }
    lattice::potential(lattice, spec)?;
    let mut buf = vec![0i64; lattice.dim()];
    let mut trip = Vec::new();
    for i in 0..n {
        lattice.site_into(i, &mut buf);
        let v = spec.potential_at(&buf).unwrap_or(0.0);
        for axis in 0..lattice.dim() {
            if let Some(j) = lattice.neighbor(i, axis, false, false) {
                let mut prev = buf.clone();
                prev[axis] -= 1;
                let vp = spec.potential_at(&prev).unwrap_or(0.0);
                let c = -(buf[axis] as f64 - 0.5) * (v - vp);
                trip.push((i, j, Complex64::new(c, 0.0)));
            }
        }
    }
    let x = SparseMatrix::from_triplets(n, n, trip);
    Ok(LinearOperator::hermitian("[V, iA] closed form", hermitian_part_sum(&x)))
}

/// `i(TA - AT)` for hermitian `T` and `A`, assembled as `X + X^†` with
/// `X = iTA` so the result is exactly hermitian.
pub fn matrix_commutator(t: &LinearOperator, a: &LinearOperator) -> Result<LinearOperator> {
    t.check_dim(a)?;
    let i = Complex64::new(0.0, 1.0);
    if t.is_hermitian() && a.is_hermitian() {
        let x = t.matrix().mul(a.matrix()).scale(i);
        return Ok(LinearOperator::hermitian(
            format!("i[{}, {}]", t.label(), a.label()),
            hermitian_part_sum(&x),
        ));
    }
    let ta = t.matrix().mul(a.matrix());
    let at = a.matrix().mul(t.matrix());
    Ok(LinearOperator::general(
        format!("i[{}, {}]", t.label(), a.label()),
        ta.axpby(i, &at, -i),
    ))
}

/// Residual of a closed form against the matrix commutator.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CommutatorResidual {
    /// Max over interior basis vectors `e_j` of `‖(i[T,A] - closed) e_j‖`.
    pub interior: f64,
    /// Same maximum over the remaining (collar) basis vectors.
    pub collar: f64,
    pub interior_sites: usize,
}

/// Compares `closed` with `i(TA - AT)` column by column.
pub fn verify_form_commutator(
    t: &LinearOperator,
    a: &LinearOperator,
    closed: &LinearOperator,
    lattice: &LatticeBox,
) -> Result<CommutatorResidual> {
    for op in [t, a, closed] {
        if op.dim() != lattice.len() {
            return Err(Error::DimensionMismatch {
                expected: lattice.len(),
                got: op.dim(),
            });
        }
    }
    let direct = matrix_commutator(t, a)?;
    let diff = direct.matrix().sub(closed.matrix());
    let norms = diff.column_norms();
    let mut out = CommutatorResidual {
        interior: 0.0,
        collar: 0.0,
        interior_sites: 0,
    };
    for (j, &r) in norms.iter().enumerate() {
        if lattice.is_interior(j, INTERIOR_COLLAR) {
            out.interior = out.interior.max(r);
            out.interior_sites += 1;
        } else {
            out.collar = out.collar.max(r);
        }
    }
    Ok(out)
}

/// `‖B δ_j‖` for `δ_j` at site `(j, 0, …, 0)`, `j = 2..=j_max`.
pub fn noncompactness_probe(b: &LinearOperator, lattice: &LatticeBox, j_max: usize) -> Result<Vec<(i64, f64)>> {
    if b.dim() != lattice.len() {
        return Err(Error::DimensionMismatch {
            expected: lattice.len(),
            got: b.dim(),
        });
    }
    if j_max + INTERIOR_COLLAR > lattice.half_width() || j_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "j_max = {j_max} must lie in [2, L - {INTERIOR_COLLAR}] for L = {}",
            lattice.half_width()
        )));
    }
    let norms = b.matrix().column_norms();
    let mut site = vec![0i64; lattice.dim()];
    Ok((2..=j_max as i64)
        .map(|j| {
            site[0] = j;
            (j, norms[lattice.index(&site).expect("inside box")])
        })
        .collect())
}

/// The commutator identities checked by `commutator-check`, as
/// `(pair name, T, closed form)`.
pub fn identity_pairs(lattice: &LatticeBox, spec: &ModelSpec) -> Result<Vec<(String, LinearOperator, LinearOperator)>> {
    let set = CommutatorSet::new(lattice, spec)?;
    let mut out = vec![(
        "laplacian".to_string(),
        lattice::laplacian(lattice),
        set.delta_comm.clone(),
    )];
    if let (Some(k), Some(b)) = (&set.wigner_k, &set.wigner_b) {
        let name = match spec.wigner {
            Wigner::Separable { .. } => "wigner_separable",
            _ => "wigner",
        };
        out.push((name.to_string(), lattice::wigner(lattice, spec)?, k.plus(b)?));
    }
    if let Some(p) = &set.potential_comm {
        out.push(("potential".to_string(), lattice::potential(lattice, spec)?, p.clone()));
    }
    Ok(out)
}

/// Residuals for every identity in [`identity_pairs`].
pub fn check_all(lattice: &LatticeBox, spec: &ModelSpec) -> Result<Vec<(String, CommutatorResidual)>> {
    let a = dilation_generator(lattice);
    identity_pairs(lattice, spec)?
        .into_iter()
        .map(|(name, t, closed)| Ok((name, verify_form_commutator(&t, &a, &closed, lattice)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use std::f64::consts::PI;

    fn line(l: usize) -> LatticeBox {
        LatticeBox::new(1, l, Boundary::Dirichlet).unwrap()
    }

    #[test]
    fn sign_convention_fixed_by_laplacian() {
        let b = line(8);
        let a = dilation_generator(&b);
        let r = verify_form_commutator(&lattice::laplacian(&b), &a, &laplacian_commutator(&b), &b).unwrap();
        assert!(r.interior < 1e-12);
        let flipped = laplacian_commutator(&b).scaled(-1.0);
        let r = verify_form_commutator(&lattice::laplacian(&b), &a, &flipped, &b).unwrap();
        assert!(r.interior > 1.0);
    }

    #[test]
    fn laplacian_commutator_on_delta() {
        let b = line(6);
        let c = laplacian_commutator(&b);
        let o = b.index(&[0]).unwrap();
        assert_eq!(c.matrix().get(o, o).re, 2.0);
        assert_eq!(c.matrix().get(o + 2, o).re, -1.0);
        assert_eq!(c.matrix().get(o - 2, o).re, -1.0);
        assert_eq!(c.matrix().get(o + 1, o).re, 0.0);
    }

    #[test]
    fn b_w_on_delta_j() {
        let b = line(20);
        let (q, k) = (0.8, 1.1);
        let (_, bw) = wigner_commutator(&b, &ModelSpec::isotropic(q, k)).unwrap();
        for j in 2..15i64 {
            let col = b.index(&[j]).unwrap();
            let lo = q * ((k * (j - 1) as f64).sin() - (k * j as f64).sin());
            let hi = -q * ((k * (j + 1) as f64).sin() - (k * j as f64).sin());
            assert!((bw.matrix().get(col - 1, col).re - lo).abs() < 1e-14);
            assert!((bw.matrix().get(col + 1, col).re - hi).abs() < 1e-14);
        }
    }

    #[test]
    fn wigner_identity_holds_at_origin() {
        let b = line(10);
        let spec = ModelSpec::isotropic(1.3, 2.0);
        let (k, bw) = wigner_commutator(&b, &spec).unwrap();
        let direct = matrix_commutator(&lattice::wigner(&b, &spec).unwrap(), &dilation_generator(&b)).unwrap();
        let diff = direct.matrix().sub(k.plus(&bw).unwrap().matrix());
        let norms = diff.column_norms();
        for n in -1..=1i64 {
            assert!(norms[b.index(&[n]).unwrap()] < 1e-14);
        }
    }

    #[test]
    fn potential_matrix_element() {
        let b = line(10);
        let spec = ModelSpec::free().with_potential(Potential::InversePower { c: 1.0, rho: 1.0 });
        let p = potential_commutator(&b, &spec).unwrap();
        let v = |n: i64| (1.0 + (n * n) as f64).powf(-0.5);
        for n in -5..5i64 {
            let i = b.index(&[n]).unwrap();
            let expected = (n as f64 + 0.5) * (v(n) - v(n + 1));
            assert!((p.matrix().get(i, i + 1).re - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_potential_commutes() {
        let b = line(5);
        let spec = ModelSpec::free().with_potential(Potential::InversePower { c: 0.0, rho: 1.0 });
        assert_eq!(potential_commutator(&b, &spec).unwrap().matrix().nnz(), 0);
    }

    #[test]
    fn separable_identity_two_dimensions() {
        let b = LatticeBox::new(2, 7, Boundary::Dirichlet).unwrap();
        let spec = ModelSpec::separable(vec![0.6, -1.1], vec![PI / 2.0, 2.0 * PI / 3.0]);
        let res = check_all(&b, &spec).unwrap();
        for (name, r) in res {
            assert!(r.interior < 1e-12, "{name}: {}", r.interior);
        }
    }
}
