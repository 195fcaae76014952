//! Short-maturity asymptotics of call prices and generator expansions for
//! semimartingales with given local characteristics, with a Monte Carlo
//! cross-check.
//!
//! - [`characteristics`]: local characteristics `(beta, delta, m)` and builders.
//! - [`operator`]: the generator `L0` on smooth test functions.
//! - [`asymptotics`]: leading-order call price coefficients by regime.
//! - [`montecarlo`]: deterministic parallel simulation of `S_t = exp(X_t)`.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod asymptotics;
pub mod characteristics;
pub mod error;
pub mod montecarlo;
pub mod operator;
pub mod quadrature;

pub use error::{Error, Result};
