//! Entire non-polynomial solutions of the k-Hessian equation `σ_k(D²u) = 1`
//! for `2k = n + 1`, together with the machinery to check them.
//!
//! * [`symfunc`]: elementary symmetric functions and `σ_k` of symmetric
//!   matrices by three independent routes, plus a Jacobi eigen-solver.
//! * [`cone`]: Gårding cone `Γ_k⁺` membership tests.
//! * [`solution`]: the solution family `u = r²eᵗ + h(t)` and its jets.
//! * [`verify`]: seeded numerical audits (residual, ellipticity, phase,
//!   finite-difference oracle, non-polynomial witness).
//! * [`symbolic`]: exact expansion of `σ_k` of the Hessian over the
//!   rationals.
//! * [`extended`]: double-double arithmetic for the high-accuracy residual.
//! * [`cli`]: the `sigmak` command-line front end.

// `!(a < b)` is used deliberately so that NaN inputs take the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cone;
mod error;
pub mod extended;
pub mod solution;
pub mod symbolic;
pub mod symfunc;
pub mod verify;

pub use error::{Error, Result};
