//! Exact distributions of the maximum and minimum of dependent multivariate
//! Poisson vectors.
//!
//! Three dependence structures are supported:
//!
//! * **common shock** – `X_j = Y_0 + Y_j` with one shared Poisson shock;
//! * **comonotonic shock** – `X_j = Y_j + Z_j` where the shocks `Z_j` are
//!   Poisson quantile transforms of a single uniform variable;
//! * **thinning dependence** – `X_j = Σ_k X_j^k` where each `X_j^k` is a
//!   binomial thinning of a shared background count `Y_k`.
//!
//! For each structure the crate evaluates `P(max X ≤ x)` and `P(min X ≤ x)`
//! exactly (finite sums, or truncated sums with a reported error bound),
//! provides the closed-form limits these CDFs approach as a rate, a mixing
//! weight, a thinning probability or the dimension grows, and ships
//! independent Monte Carlo and lattice-enumeration oracles.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command-line
//! front end and parallel drivers live in the companion `mvpois-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod logspace;
mod math;

pub mod asymptotics;
pub mod correlation;
pub mod error;
pub mod extrema;
pub mod models;
pub mod oracle;
pub mod poisson;
pub mod specfun;

pub use error::{Error, Result};
pub use extrema::{EvalResult, ExtremeKind, ExtremeQuery, Method};
pub use models::{CommonShockParams, ComonotonicParams, Model, SampleVector, ThinningParams};
pub use poisson::PoissonDist;
pub use specfun::RegularizedValue;
