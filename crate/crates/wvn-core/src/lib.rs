//! Numerical toolkit for discrete Schrödinger operators `H = Δ + W + V` on
//! `ℤ^d` with an oscillating Wigner–von Neumann term `W` and a long-range
//! potential `V`.
//!
//! The crate assembles the operators on truncated boxes, checks the
//! closed-form commutators with the generator of dilations, computes the
//! threshold energies in closed form and by a torus search, implements the
//! Helffer–Sjöstrand functional calculus and probes resolvent bounds and
//! local decay.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chebyshev;
pub mod commutators;
pub mod error;
pub mod hs;
pub mod jet;
pub mod lap;
pub mod lattice;
pub mod mourre;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod smooth;
pub mod thresholds;

pub use error::{Error, Result};
pub use lattice::{Boundary, LatticeBox, ModelSpec, Potential, Wigner};
pub use operator::LinearOperator;
pub use par::ExecPolicy;
