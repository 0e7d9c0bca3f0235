//! Exact multiple orthogonal polynomials and the multidimensional Toda
//! lattices built on them.
//!
//! Everything that touches moments is computed in exact rational arithmetic:
//! block-Hankel tau functions, type I/II polynomials, nearest-neighbour
//! recurrence coefficients, Christoffel/Geronimus coefficients, step-line
//! reductions and transition matrices. Identity checks therefore return
//! residuals that must be exactly zero. The only floating-point code is the
//! fixed-step RK4 integrator for the continuous-time lattice.
//!
//! Module map:
//!
//! * [`exact`]: rationals, dense polynomials, matrices, fraction-free determinants.
//! * [`moments`]: moment specifications and tables, their discrete and continuous evolution.
//! * [`index`]: multi-indices and finite boxes of lattice sites.
//! * [`mop`]: tau functions, type I/II polynomials, recurrence coefficients.
//! * [`continuous`]: the continuous-time lattice, its integrator and tau derivatives.
//! * [`discrete`]: Christoffel/Geronimus coefficients, the discrete-time lattice, qd.
//! * [`stepline`]: step-line polynomials, Miura maps and the Kostant–Toda flows.
//! * [`zero_curvature`]: 3×3 transition matrices and their compatibility relations.

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod exact;
pub mod index;
pub mod moments;
pub mod mop;
pub mod residual;
pub mod stepline;
pub mod zero_curvature;

pub use error::{Error, Result};
pub use exact::{det, poly_eval, solve_linear, MatrixQ, Poly, PolyMatrix, Rational};
pub use index::{LatticeBox, MultiIndex};
pub use moments::{MomentKind, MomentSpec, MomentTable};
pub use mop::NNCoefficients;
pub use residual::ResidualSet;
