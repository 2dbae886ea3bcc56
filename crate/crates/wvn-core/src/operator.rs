//! Labelled sparse operators and the text export format.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::linalg::SparseMatrix;

/// Hermiticity tolerance, relative to `max(1, largest entry)`.
pub const HERMITIAN_TOL: f64 = 1e-14;

/// Square complex sparse matrix with a provenance label.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    label: String,
    matrix: SparseMatrix,
    hermitian: bool,
}

impl LinearOperator {
    /// Wraps `matrix`; when `hermitian` is claimed it is checked against
    /// [`HERMITIAN_TOL`].
    pub fn new(label: impl Into<String>, matrix: SparseMatrix, hermitian: bool) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if hermitian {
            let defect = matrix.hermitian_defect();
            if defect > HERMITIAN_TOL * matrix.max_abs().max(1.0) {
                return Err(Error::Misuse(format!(
                    "operator claimed hermitian but |M - M^*| reaches {defect:e}"
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            matrix,
            hermitian,
        })
    }

    /// Wraps a matrix known to be hermitian by construction.
    pub(crate) fn hermitian(label: impl Into<String>, matrix: SparseMatrix) -> Self {
        debug_assert!(matrix.hermitian_defect() <= HERMITIAN_TOL * matrix.max_abs().max(1.0));
        Self {
            label: label.into(),
            matrix,
            hermitian: true,
        }
    }

    pub(crate) fn general(label: impl Into<String>, matrix: SparseMatrix) -> Self {
        Self {
            label: label.into(),
            matrix,
            hermitian: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Sum of two operators; hermitian when both are.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            label: format!("{} + {}", self.label, other.label),
            matrix: self.matrix.add(&other.matrix),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            label: format!("{} - {}", self.label, other.label),
            matrix: self.matrix.sub(&other.matrix),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// Real multiple; keeps the hermitian flag.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            label: format!("{alpha} * ({})", self.label),
            matrix: self.matrix.scale_real(alpha),
            hermitian: self.hermitian,
        }
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_vec(x)
    }

    /// Text export: a `#` header followed by `row col re im` lines in
    /// (row, col) order. Floats use the shortest round-trip representation,
    /// so the output is byte-stable.
    pub fn export(&self, lattice: &LatticeBox) -> Result<String> {
        if lattice.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.len(),
                got: self.dim(),
            });
        }
        let mut out = String::new();
        let _ = writeln!(out, "# label: {}", self.label);
        let _ = writeln!(out, "# dim: {}", self.dim());
        let _ = writeln!(out, "# hermitian: {}", self.hermitian);
        let _ = writeln!(out, "# box: {}", lattice.descriptor());
        let _ = writeln!(out, "# nnz: {}", self.matrix.nnz());
        for (r, c, v) in self.matrix.iter() {
            let _ = writeln!(out, "{r} {c} {:e} {:e}", v.re, v.im);
        }
        Ok(out)
    }

    /// Parses the output of [`LinearOperator::export`].
    pub fn import(text: &str) -> Result<Self> {
        let mut label = String::new();
        let mut dim = None;
        let mut hermitian = false;
        let mut trip = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let parse_err = |m: &str| Error::Parse {
                line: lineno,
                message: m.to_string(),
            };
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, value) = rest.split_once(": ").ok_or_else(|| parse_err("malformed header"))?;
                match key {
                    "label" => label = value.to_string(),
                    "dim" => dim = Some(value.parse::<usize>().map_err(|_| parse_err("bad dim"))?),
                    "hermitian" => hermitian = value == "true",
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(parse_err("expected 'row col re im'"));
            }
            let r = f[0].parse::<usize>().map_err(|_| parse_err("bad row"))?;
            let c = f[1].parse::<usize>().map_err(|_| parse_err("bad col"))?;
            let re = f[2].parse::<f64>().map_err(|_| parse_err("bad real part"))?;
            let im = f[3].parse::<f64>().map_err(|_| parse_err("bad imaginary part"))?;
            trip.push((r, c, Complex64::new(re, im)));
        }
        let dim = dim.ok_or(Error::Parse {
            line: 0,
            message: "missing dim header".into(),
        })?;
        if let Some(&(r, c, _)) = trip.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(Error::Parse {
                line: 0,
                message: format!("entry ({r}, {c}) outside dimension {dim}"),
            });
        }
        Self::new(label, SparseMatrix::from_triplets(dim, dim, trip), hermitian)
    }
}
