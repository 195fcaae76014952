use std::fmt;
use std::sync::Arc;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::quadrature::{self, Integral};

/// Scalar function shared across threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The fixed truncation function `y / (1 + y^2)`.
#[inline]
pub fn kappa(y: f64) -> f64 {
    y / (1.0 + y * y)
}

/// Upper normal tail `P(Z >= x)`.
#[inline]
/// `e^y - 1 - y` without cancellation near 0.
pub fn exp_excess(y: f64) -> f64 {
    if y.abs() < 1e-2 {
        let y2 = y * y;
        y2 * (0.5 + y * (1.0 / 6.0 + y * (1.0 / 24.0 + y * (1.0 / 120.0 + y * (1.0 / 720.0)))))
    } else {
        y.exp_m1() - y
    }
}

/// `e^y - 1 - kappa(y)` without cancellation near 0.
pub fn exp_excess_kappa(y: f64) -> f64 {
    exp_excess(y) + y * y * y / (1.0 + y * y)
}

pub(crate) fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// A point mass of the compensator: jumps of log-size `location` arriving at
/// rate `mass` per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

impl Atom {
    pub fn new(location: f64, mass: f64) -> Self {
        Self { location, mass }
    }
}

/// Closed-form or user-supplied jump density.
#[derive(Clone)]
pub enum DensityLaw {
    /// `intensity * N(mean, std^2)` (Merton jumps).
    Normal { intensity: f64, mean: f64, std: f64 },
    /// Kou jumps: `intensity * (p_up * eta_up e^{-eta_up y} 1_{y>0} + (1-p_up) eta_down e^{eta_down y} 1_{y<0})`.
    DoubleExponential {
        intensity: f64,
        p_up: f64,
        eta_up: f64,
        eta_down: f64,
    },
    /// Arbitrary nonnegative density.
    Function(ScalarFn),
    /// Image of a scalar measure under a jump map `y -> map(y)`.
    Pushforward {
        base: Box<JumpCompensator>,
        map: ScalarFn,
    },
}

impl fmt::Debug for DensityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityLaw::Normal {
                intensity,
                mean,
                std,
            } => f
                .debug_struct("Normal")
                .field("intensity", intensity)
                .field("mean", mean)
                .field("std", std)
                .finish(),
            DensityLaw::DoubleExponential {
                intensity,
                p_up,
                eta_up,
                eta_down,
            } => f
                .debug_struct("DoubleExponential")
                .field("intensity", intensity)
                .field("p_up", p_up)
                .field("eta_up", eta_up)
                .field("eta_down", eta_down)
                .finish(),
            DensityLaw::Function(_) => f.write_str("Function(..)"),
            DensityLaw::Pushforward { base, .. } => f
                .debug_struct("Pushforward")
                .field("base", base)
                .finish_non_exhaustive(),
        }
    }
}

/// Absolutely continuous compensator on `[lo, hi]`, possibly singular at 0 like
/// `|y|^{-singularity}`.
#[derive(Debug, Clone)]
pub struct DensityCompensator {
    pub law: DensityLaw,
    pub lo: f64,
    pub hi: f64,
    pub singularity: f64,
}

impl DensityCompensator {
    /// Density value at `y`. Not available for pushforward measures.
    pub fn density(&self, y: f64) -> f64 {
        if y < self.lo || y > self.hi {
            return 0.0;
        }
        match &self.law {
            DensityLaw::Normal {
                intensity,
                mean,
                std,
            } => {
                let z = (y - mean) / std;
                intensity * (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
            }
            DensityLaw::DoubleExponential {
                intensity,
                p_up,
                eta_up,
                eta_down,
            } => {
                if y >= 0.0 {
                    intensity * p_up * eta_up * (-eta_up * y).exp()
                } else {
                    intensity * (1.0 - p_up) * eta_down * (eta_down * y).exp()
                }
            }
            DensityLaw::Function(g) => g(y),
            DensityLaw::Pushforward { .. } => f64::NAN,
        }
    }

    fn integrate(&self, g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<Integral> {
        if let DensityLaw::Pushforward { base, map } = &self.law {
            return base.integrate_dyn(
                &|y| {
                    let u = map(y);
                    if u >= lo && u <= hi {
                        g(u)
                    } else {
                        0.0
                    }
                },
                f64::NEG_INFINITY,
                f64::INFINITY,
                tol,
            );
        }
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        if lo >= hi {
            return Ok(Integral::ZERO);
        }
        let integrand = |y: f64| {
            let d = self.density(y);
            if d == 0.0 {
                0.0
            } else {
                d * g(y)
            }
        };
        integrate_possibly_singular(&integrand, lo, hi, self.singularity, tol)
    }

    fn upper_tail(&self, x: f64, tol: f64) -> Result<f64> {
        match &self.law {
            DensityLaw::Normal {
                intensity,
                mean,
                std,
            } => Ok(intensity * normal_sf((x - mean) / std)),
            DensityLaw::DoubleExponential {
                intensity,
                p_up,
                eta_up,
                ..
            } if x > 0.0 => Ok(intensity * p_up * (-eta_up * x).exp()),
            _ => Ok(self.integrate(&|_| 1.0, x, f64::INFINITY, tol)?.value),
        }
    }

    fn lower_tail(&self, x: f64, tol: f64) -> Result<f64> {
        match &self.law {
            DensityLaw::Normal {
                intensity,
                mean,
                std,
            } => Ok(intensity * normal_sf((mean - x) / std)),
            DensityLaw::DoubleExponential {
                intensity,
                p_up,
                eta_down,
                ..
            } if x < 0.0 => Ok(intensity * (1.0 - p_up) * (eta_down * x).exp()),
            _ => Ok(self.integrate(&|_| 1.0, f64::NEG_INFINITY, x, tol)?.value),
        }
    }
}

/// Small-jump profile `c(y)` of a stable-like compensator.
#[derive(Clone)]
pub enum StableKernel {
    Constant(f64),
    Function(ScalarFn),
}

impl fmt::Debug for StableKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StableKernel::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            StableKernel::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl StableKernel {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            StableKernel::Constant(c) => *c,
            StableKernel::Function(g) => g(y),
        }
    }
}

/// `m(dy) = residual(dy) + 1_{|y| <= 1} c(y) / |y|^{1+alpha} dy` with `alpha` in (1, 2).
#[derive(Debug, Clone)]
pub struct StableLikeCompensator {
    pub alpha: f64,
    pub kernel: StableKernel,
    pub residual: Box<JumpCompensator>,
    c_max: f64,
}

impl StableLikeCompensator {
    pub fn c0(&self) -> f64 {
        self.kernel.eval(0.0)
    }

    /// Supremum of `c` over `[-1, 1]` (grid estimate for non-constant kernels).
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// The pure stable part `1_{|y| <= 1} c(y) |y|^{-1-alpha} dy`.
    pub fn without_residual(&self) -> Self {
        Self {
            residual: Box::new(JumpCompensator::zero()),
            ..self.clone()
        }
    }

    pub fn constant_kernel(&self) -> Option<f64> {
        match self.kernel {
            StableKernel::Constant(c) => Some(c),
            StableKernel::Function(_) => None,
        }
    }

    /// Integral of `g` against the stable part restricted to `lo <= |y| <= 1` on one side.
    pub(crate) fn integrate_stable_side<G: Fn(f64) -> f64>(
        &self,
        g: &G,
        positive: bool,
        from: f64,
        tol: f64,
    ) -> Result<Integral> {
        let sign = if positive { 1.0 } else { -1.0 };
        let alpha = self.alpha;
        let integrand = |r: f64| {
            let y = sign * r;
            let c = self.kernel.eval(y);
            if c == 0.0 {
                0.0
            } else {
                g(y) * c / r.powf(1.0 + alpha)
            }
        };
        if from > 0.0 {
            return quadrature::integrate_finite(integrand, from, 1.0, tol);
        }
        singular_side(&integrand, 1.0, 1.0 + alpha, tol)
    }

    fn stable_upper_tail(&self, x: f64, tol: f64) -> Result<f64> {
        if x > 1.0 {
            return Ok(0.0);
        }
        debug_assert!(x > 0.0);
        match self.kernel {
            StableKernel::Constant(c) => Ok(c / self.alpha * (x.powf(-self.alpha) - 1.0)),
            StableKernel::Function(_) => {
                Ok(self.integrate_stable_side(&|_| 1.0, true, x, tol)?.value)
            }
        }
    }

    fn stable_lower_tail(&self, x: f64, tol: f64) -> Result<f64> {
        if x < -1.0 {
            return Ok(0.0);
        }
        match self.kernel {
            StableKernel::Constant(c) => Ok(c / self.alpha * ((-x).powf(-self.alpha) - 1.0)),
            StableKernel::Function(_) => {
                Ok(self.integrate_stable_side(&|_| 1.0, false, -x, tol)?.value)
            }
        }
    }
}

/// Jump compensator `m(t0, dy)` on log-jump sizes.
#[derive(Debug, Clone)]
pub enum JumpCompensator {
    Atomic(Vec<Atom>),
    Density(DensityCompensator),
    StableLike(StableLikeCompensator),
}

impl Default for JumpCompensator {
    fn default() -> Self {
        Self::zero()
    }
}

/// Integrates `g` on `[lo, hi]` splitting at 0 where the density may blow up.
fn integrate_possibly_singular<G: Fn(f64) -> f64>(
    g: &G,
    lo: f64,
    hi: f64,
    singularity: f64,
    tol: f64,
) -> Result<Integral> {
    if singularity <= 0.0 || lo >= 0.0 || hi <= 0.0 {
        if singularity > 0.0 && (lo == 0.0 || hi == 0.0) {
            // one-sided support touching the singular point
            return if lo == 0.0 {
                singular_side(&|r| g(r), hi, singularity, tol)
            } else {
                singular_side(&|r| g(-r), -lo, singularity, tol)
            };
        }
        return quadrature::integrate(g, lo, hi, tol);
    }
    let right = singular_side(&|r| g(r), hi, singularity, 0.5 * tol)?;
    let left = singular_side(&|r| g(-r), -lo, singularity, 0.5 * tol)?;
    Ok(left + right)
}

/// Integrates `h(r)` over `(0, b]` for `h` singular like `r^{-s}` times a
/// factor vanishing like `r^2`. Uses `r = u^{1/(3-s)}` near 0, which makes the
/// mapped integrand bounded whenever `h(r) r^s = O(r^2)`.
fn singular_side<H: Fn(f64) -> f64>(h: &H, b: f64, s: f64, tol: f64) -> Result<Integral> {
    let split = b.min(1.0);
    let p = 1.0 / (3.0 - s);
    let ub = split.powf(1.0 / p);
    let near = quadrature::integrate_finite(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let r = u.powf(p);
            let v = h(r);
            if v == 0.0 {
                0.0
            } else {
                v * p * r / u
            }
        },
        0.0,
        ub,
        if b > split { 0.5 * tol } else { tol },
    )?;
    if b > split {
        let far = quadrature::integrate(h, split, b, 0.5 * tol)?;
        Ok(near + far)
    } else {
        Ok(near)
    }
}

fn check_finite_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvariantViolation(format!(
            "{name} must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}

impl JumpCompensator {
    /// The zero measure.
    pub fn zero() -> Self {
        JumpCompensator::Atomic(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            JumpCompensator::Atomic(a) => a.iter().all(|a| a.mass == 0.0),
            JumpCompensator::Density(d) => match &d.law {
                DensityLaw::Normal { intensity, .. }
                | DensityLaw::DoubleExponential { intensity, .. } => *intensity == 0.0,
                DensityLaw::Pushforward { base, .. } => base.is_zero(),
                DensityLaw::Function(_) => false,
            },
            JumpCompensator::StableLike(_) => false,
        }
    }

    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            check_finite_nonneg("atom mass", a.mass)?;
            if !a.location.is_finite() {
                return Err(Error::InvariantViolation(format!(
                    "atom location {} is not finite",
                    a.location
                )));
            }
        }
        Self::Atomic(atoms).validated()
    }

    pub fn normal(intensity: f64, mean: f64, std: f64) -> Result<Self> {
        check_finite_nonneg("intensity", intensity)?;
        if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "normal jumps need std > 0, got {std}"
            )));
        }
        Self::Density(DensityCompensator {
            law: DensityLaw::Normal {
                intensity,
                mean,
                std,
            },
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            singularity: 0.0,
        })
        .validated()
    }

    pub fn double_exponential(
        intensity: f64,
        p_up: f64,
        eta_up: f64,
        eta_down: f64,
    ) -> Result<Self> {
        check_finite_nonneg("intensity", intensity)?;
        if !(0.0..=1.0).contains(&p_up) {
            return Err(Error::InvariantViolation(format!(
                "p_up must lie in [0, 1], got {p_up}"
            )));
        }
        if !(eta_down > 0.0) {
            return Err(Error::InvariantViolation(format!(
                "eta_down must be > 0, got {eta_down}"
            )));
        }
        // (e^y - 1)^2 integrability of the upward branch
        if p_up > 0.0 && !(eta_up > 2.0) {
            return Err(Error::InvariantViolation(format!(
                "eta_up must exceed 2 for a finite exponential second moment, got {eta_up}"
            )));
        }
        Self::Density(DensityCompensator {
            law: DensityLaw::DoubleExponential {
                intensity,
                p_up,
                eta_up,
                eta_down,
            },
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            singularity: 0.0,
        })
        .validated()
    }

    /// User density on `[lo, hi]` behaving like `|y|^{-singularity}` at 0.
    pub fn density<F>(density: F, lo: f64, hi: f64, singularity: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo < hi) {
            return Err(Error::InvariantViolation(format!(
                "empty support [{lo}, {hi}]"
            )));
        }
        if !(0.0..3.0).contains(&singularity) {
            return Err(Error::InvariantViolation(format!(
                "singularity order must lie in [0, 3), got {singularity}"
            )));
        }
        Self::Density(DensityCompensator {
            law: DensityLaw::Function(Arc::new(density)),
            lo,
            hi,
            singularity,
        })
        .validated()
    }

    /// Image of `base` under `map`; exposed through its tails and integrals.
    pub fn pushforward(base: JumpCompensator, map: ScalarFn, singularity: f64) -> Result<Self> {
        Self::Density(DensityCompensator {
            law: DensityLaw::Pushforward {
                base: Box::new(base),
                map,
            },
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            singularity,
        })
        .validated()
    }

    pub fn stable_like(
        alpha: f64,
        kernel: StableKernel,
        residual: JumpCompensator,
    ) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvariantViolation(format!(
                "alpha must lie in (1, 2), got {alpha}"
            )));
        }
        let c0 = kernel.eval(0.0);
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "c(0) must be > 0, got {c0}"
            )));
        }
        let c_max = match &kernel {
            StableKernel::Constant(c) => *c,
            StableKernel::Function(g) => {
                let mut m: f64 = 0.0;
                for i in 0..=2000 {
                    let y = -1.0 + i as f64 / 1000.0;
                    let v = g(y);
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::InvariantViolation(format!(
                            "c({y}) = {v} is not a valid kernel value"
                        )));
                    }
                    m = m.max(v);
                }
                m
            }
        };
        if matches!(residual, JumpCompensator::StableLike(_)) {
            return Err(Error::InvariantViolation(
                "residual must be atomic or a density".into(),
            ));
        }
        let abs_first = residual.integrate(|y| y.abs(), quadrature::DEFAULT_TOL);
        match abs_first {
            Ok(v) if v.value.is_finite() => {}
            _ => {
                return Err(Error::InvariantViolation(
                    "residual measure must integrate |y| finitely".into(),
                ))
            }
        }
        Self::StableLike(StableLikeCompensator {
            alpha,
            kernel,
            residual: Box::new(residual),
            c_max,
        })
        .validated()
    }

    /// Checks `int min(1, y^2) m(dy) < inf` and `int (e^y - 1)^2 m(dy) < inf`.
    fn validated(self) -> Result<Self> {
        let tol = 1e-6;
        let finite = |r: Result<Integral>| matches!(r, Ok(v) if v.value.is_finite());
        if !finite(self.integrate(|y| (y * y).min(1.0), tol)) {
            return Err(Error::InvariantViolation(
                "measure fails int min(1, y^2) m(dy) < inf".into(),
            ));
        }
        if !finite(self.integrate(|y| y.exp_m1().powi(2), tol)) {
            return Err(Error::InvariantViolation(
                "measure fails int (e^y - 1)^2 m(dy) < inf".into(),
            ));
        }
        Ok(self)
    }

    /// `int g(y) m(dy)` with error estimate.
    ///
    /// The stable part is split at `|y| = 1` and integrated in the variable
    /// `u = |y|^{2 - alpha}`, which leaves a bounded integrand for `g = O(y^2)`.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G, tol: f64) -> Result<Integral> {
        self.integrate_on(&g, f64::NEG_INFINITY, f64::INFINITY, tol)
    }

    /// `int_{[lo, hi]} g(y) m(dy)`.
    pub fn integrate_on<G: Fn(f64) -> f64>(
        &self,
        g: &G,
        lo: f64,
        hi: f64,
        tol: f64,
    ) -> Result<Integral> {
        self.integrate_dyn(g, lo, hi, tol)
    }

    fn integrate_dyn(
        &self,
        g: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        tol: f64,
    ) -> Result<Integral> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be > 0, got {tol}")));
        }
        match self {
            JumpCompensator::Atomic(atoms) => {
                let value = atoms
                    .iter()
                    .filter(|a| a.location >= lo && a.location <= hi && a.mass != 0.0)
                    .map(|a| a.mass * g(a.location))
                    .sum::<f64>();
                Ok(Integral { value, error: 0.0 })
            }
            JumpCompensator::Density(d) => d.integrate(g, lo, hi, tol),
            JumpCompensator::StableLike(s) => {
                let residual = s.residual.integrate_dyn(g, lo, hi, tol / 3.0)?;
                let restricted = |y: f64| if y >= lo && y <= hi { g(y) } else { 0.0 };
                let pos = if hi > 0.0 && lo < 1.0 {
                    s.integrate_stable_side(&restricted, true, lo.max(0.0), tol / 3.0)?
                } else {
                    Integral::ZERO
                };
                let neg = if lo < 0.0 && hi > -1.0 {
                    s.integrate_stable_side(&restricted, false, (-hi).max(0.0), tol / 3.0)?
                } else {
                    Integral::ZERO
                };
                Ok(residual + pos + neg)
            }
        }
    }

    /// `m([x, inf))` for `x > 0`.
    pub fn upper_tail(&self, x: f64, tol: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("upper tail needs x > 0, got {x}")));
        }
        match self {
            JumpCompensator::Atomic(atoms) => Ok(atoms
                .iter()
                .filter(|a| a.location >= x)
                .map(|a| a.mass)
                .sum()),
            JumpCompensator::Density(d) => d.upper_tail(x, tol),
            JumpCompensator::StableLike(s) => {
                Ok(s.residual.upper_tail(x, tol)? + s.stable_upper_tail(x, tol)?)
            }
        }
    }

    /// `m((-inf, x])` for `x < 0`.
    pub fn lower_tail(&self, x: f64, tol: f64) -> Result<f64> {
        if !(x < 0.0) {
            return Err(Error::Domain(format!("lower tail needs x < 0, got {x}")));
        }
        match self {
            JumpCompensator::Atomic(atoms) => Ok(atoms
                .iter()
                .filter(|a| a.location <= x)
                .map(|a| a.mass)
                .sum()),
            JumpCompensator::Density(d) => d.lower_tail(x, tol),
            JumpCompensator::StableLike(s) => {
                Ok(s.residual.lower_tail(x, tol)? + s.stable_lower_tail(x, tol)?)
            }
        }
    }

    /// Largest point of the support (`+inf` when unbounded).
    fn support_hi(&self) -> f64 {
        match self {
            JumpCompensator::Atomic(atoms) => atoms
                .iter()
                .map(|a| a.location)
                .fold(f64::NEG_INFINITY, f64::max),
            JumpCompensator::Density(d) => match d.law {
                DensityLaw::Pushforward { .. } => f64::INFINITY,
                _ => d.hi,
            },
            JumpCompensator::StableLike(s) => s.residual.support_hi().max(1.0),
        }
    }

    fn support_lo(&self) -> f64 {
        match self {
            JumpCompensator::Atomic(atoms) => atoms
                .iter()
                .map(|a| a.location)
                .fold(f64::INFINITY, f64::min),
            JumpCompensator::Density(d) => match d.law {
                DensityLaw::Pushforward { .. } => f64::NEG_INFINITY,
                _ => d.lo,
            },
            JumpCompensator::StableLike(s) => s.residual.support_lo().min(-1.0),
        }
    }

    /// Exponential double tail `psi(z) = int_z^inf e^x m([x, inf)) dx` for `z > 0`.
    pub fn exp_double_tail_up(&self, z: f64, tol: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::Domain(format!(
                "upper exponential double tail needs z > 0, got {z}"
            )));
        }
        if let JumpCompensator::Atomic(atoms) = self {
            return Ok(atoms
                .iter()
                .filter(|a| a.location > z)
                .map(|a| a.mass * (a.location.exp() - z.exp()))
                .sum());
        }
        let hi = self.support_hi();
        if hi <= z {
            return Ok(0.0);
        }
        let failure = std::cell::RefCell::new(None);
        let r = quadrature::integrate(
            |x| match self.upper_tail(x, 0.1 * tol) {
                Ok(0.0) => 0.0,
                Ok(t) => x.exp() * t,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            z,
            hi,
            tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(r?.value.max(0.0))
    }

    /// Lower exponential double tail `int_{-inf}^z e^x m((-inf, x]) dx` for `z < 0`.
    pub fn exp_double_tail_down(&self, z: f64, tol: f64) -> Result<f64> {
        if !(z < 0.0) {
            return Err(Error::Domain(format!(
                "lower exponential double tail needs z < 0, got {z}"
            )));
        }
        if let JumpCompensator::Atomic(atoms) = self {
            return Ok(atoms
                .iter()
                .filter(|a| a.location < z)
                .map(|a| a.mass * (z.exp() - a.location.exp()))
                .sum());
        }
        let lo = self.support_lo();
        if lo >= z {
            return Ok(0.0);
        }
        let failure = std::cell::RefCell::new(None);
        let r = quadrature::integrate(
            |x| match self.lower_tail(x, 0.1 * tol) {
                Ok(0.0) => 0.0,
                Ok(t) => x.exp() * t,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            z,
            tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(r?.value.max(0.0))
    }

    /// `int |y| m(dy)` if finite numerically, `None` otherwise.
    pub fn abs_first_moment(&self, tol: f64) -> Option<f64> {
        if matches!(self, JumpCompensator::StableLike(_)) {
            return None;
        }
        match self.integrate(|y| y.abs(), tol) {
            Ok(v) if v.value.is_finite() => Some(v.value),
            _ => None,
        }
    }

    /// Multiplies the measure by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        check_finite_nonneg("scale factor", factor)?;
        Ok(match self {
            JumpCompensator::Atomic(atoms) => JumpCompensator::Atomic(
                atoms
                    .iter()
                    .map(|a| Atom::new(a.location, a.mass * factor))
                    .collect(),
            ),
            JumpCompensator::Density(d) => {
                let law = match &d.law {
                    DensityLaw::Normal {
                        intensity,
                        mean,
                        std,
                    } => DensityLaw::Normal {
                        intensity: intensity * factor,
                        mean: *mean,
                        std: *std,
                    },
                    DensityLaw::DoubleExponential {
                        intensity,
                        p_up,
                        eta_up,
                        eta_down,
                    } => DensityLaw::DoubleExponential {
                        intensity: intensity * factor,
                        p_up: *p_up,
                        eta_up: *eta_up,
                        eta_down: *eta_down,
                    },
                    DensityLaw::Function(g) => {
                        let g = g.clone();
                        DensityLaw::Function(Arc::new(move |y| factor * g(y)))
                    }
                    DensityLaw::Pushforward { base, map } => DensityLaw::Pushforward {
                        base: Box::new(base.scaled(factor)?),
                        map: map.clone(),
                    },
                };
                JumpCompensator::Density(DensityCompensator { law, ..d.clone() })
            }
            JumpCompensator::StableLike(s) => {
                if factor == 0.0 {
                    return Ok(JumpCompensator::zero());
                }
                let kernel = match &s.kernel {
                    StableKernel::Constant(c) => StableKernel::Constant(c * factor),
                    StableKernel::Function(g) => {
                        let g = g.clone();
                        StableKernel::Function(Arc::new(move |y| factor * g(y)))
                    }
                };
                JumpCompensator::StableLike(StableLikeCompensator {
                    alpha: s.alpha,
                    kernel,
                    residual: Box::new(s.residual.scaled(factor)?),
                    c_max: s.c_max * factor,
                })
            }
        })
    }
}


#[cfg(test)]
mod excess_tests {
    use super::*;

    #[test]
    fn exp_excess_is_continuous_and_accurate() {
        for y in [1e-12f64, 1e-6, 9.999e-3, 1e-2, 0.3, -0.3, -9.999e-3] {
            let exact = y * y / 2.0
                * (1.0
                    + y / 3.0
                    + y * y / 12.0
                    + y.powi(3) / 60.0
                    + y.powi(4) / 360.0
                    + y.powi(5) / 2520.0);
            let v = exp_excess(y);
            if y.abs() < 0.05 {
                assert!((v / exact - 1.0).abs() < 1e-13, "{y}");
            } else {
                assert!((v - (y.exp() - 1.0 - y)).abs() < 1e-15);
            }
        }
    }
}
