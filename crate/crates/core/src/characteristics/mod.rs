//! Jump compensators and frozen semimartingale characteristics.

mod builders;
mod compensator;
mod local;

pub use builders::{
    from_markov, from_time_changed_levy, JumpMap, MarkovCharacteristics, MarkovJumps, MarkovModel,
};
pub use compensator::{
    exp_excess, exp_excess_kappa, kappa, Atom, DensityCompensator, DensityLaw, JumpCompensator,
    ScalarFn, StableKernel, StableLikeCompensator,
};
pub use local::{ExpModelCharacteristics, LocalCharacteristics};

/// `int g(y) m(dy)` to absolute tolerance `tol`.
pub fn integrate<G: Fn(f64) -> f64>(m: &JumpCompensator, g: G, tol: f64) -> crate::Result<f64> {
    Ok(m.integrate(g, tol)?.value)
}

/// Upper exponential double tail, see [`JumpCompensator::exp_double_tail_up`].
pub fn exp_double_tail_up(m: &JumpCompensator, z: f64, tol: f64) -> crate::Result<f64> {
    m.exp_double_tail_up(z, tol)
}

/// Lower exponential double tail, see [`JumpCompensator::exp_double_tail_down`].
pub fn exp_double_tail_down(m: &JumpCompensator, z: f64, tol: f64) -> crate::Result<f64> {
    m.exp_double_tail_down(z, tol)
}
