//! Turns a compensator into compound-Poisson components plus a drift correction.
//!
//! Log-price over a step `dt`:
//! `dX = (r - sigma^2/2 + drift) dt + sigma dW + (raw kept jumps) + (stable increment)`,
//! where `drift = -int_kept (e^u - 1) m - int_small (e^u - 1 - u) m` and
//! `u = map(y)` is the log-jump produced by a base jump `y`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::asymptotics::stable_scale_factor;
use crate::characteristics::{exp_excess, DensityLaw, JumpCompensator, ScalarFn, StableKernel};
use crate::error::{Error, Result};
use crate::montecarlo::stable::symmetric_stable;
use crate::montecarlo::Scheme;
use crate::quadrature;

const PLAN_TOL: f64 = 1e-11;
const TABLE_CELLS: usize = 4096;

pub(crate) enum SizeSampler {
    Atoms {
        cdf: Vec<f64>,
        locations: Vec<f64>,
    },
    Normal {
        mean: f64,
        std: f64,
    },
    DoubleExponential {
        p_up: f64,
        eta_up: f64,
        eta_down: f64,
    },
    Tabulated {
        grid: Vec<f64>,
        cdf: Vec<f64>,
    },
    /// `|y|` in `(eps, 1]` with density proportional to `c(y) |y|^{-1-alpha}`.
    PowerLaw {
        alpha: f64,
        eps: f64,
        positive: bool,
        kernel: StableKernel,
        c_max: f64,
    },
}

impl SizeSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SizeSampler::Atoms { cdf, locations } => {
                let u = rng.random::<f64>() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c <= u).min(locations.len() - 1);
                locations[i]
            }
            SizeSampler::Normal { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
            SizeSampler::DoubleExponential {
                p_up,
                eta_up,
                eta_down,
            } => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<f64>() < *p_up {
                    e / eta_up
                } else {
                    -e / eta_down
                }
            }
            SizeSampler::Tabulated { grid, cdf } => {
                let total = cdf[cdf.len() - 1];
                let u = rng.random::<f64>() * total;
                let i = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                grid[i - 1] + w * (grid[i] - grid[i - 1])
            }
            SizeSampler::PowerLaw {
                alpha,
                eps,
                positive,
                kernel,
                c_max,
            } => {
                let top = eps.powf(-alpha);
                loop {
                    let u = rng.random::<f64>();
                    let r = (top - u * (top - 1.0)).powf(-1.0 / alpha);
                    let y = if *positive { r } else { -r };
                    if let StableKernel::Constant(_) = kernel {
                        return y;
                    }
                    if rng.random::<f64>() * c_max <= kernel.eval(y) {
                        return y;
                    }
                }
            }
        }
    }
}

pub(crate) struct CompoundPart {
    rate: f64,
    sampler: SizeSampler,
    map: Option<ScalarFn>,
}

pub(crate) struct JumpPlan {
    parts: Vec<CompoundPart>,
    cum_rates: Vec<f64>,
    pub total_rate: f64,
    /// Compensator correction added to `r - sigma^2/2`.
    pub drift: f64,
    /// `(alpha, scale)`: exact symmetric stable increments, characteristic
    /// exponent `scale |z|^alpha` per unit time, conditioned on `|increment| <= 1`.
    pub stable: Option<(f64, f64)>,
    pub dropped_variance: f64,
    pub total_variance: f64,
}

impl JumpPlan {
    pub fn dropped_fraction(&self) -> f64 {
        if self.total_variance > 0.0 {
            self.dropped_variance / self.total_variance
        } else {
            0.0
        }
    }

    /// Sum of `count` jumps drawn from the mixture of components.
    pub fn sample_jumps<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> f64 {
        let mut sum = 0.0;
        for _ in 0..count {
            let part = if self.parts.len() == 1 {
                &self.parts[0]
            } else {
                let u = rng.random::<f64>() * self.total_rate;
                let i = self
                    .cum_rates
                    .partition_point(|&c| c <= u)
                    .min(self.parts.len() - 1);
                &self.parts[i]
            };
            let y = part.sampler.sample(rng);
            sum += match &part.map {
                Some(m) => m(y),
                None => y,
            };
        }
        sum
    }

    /// Stable increment over `dt`, or 0 without a stable component.
    pub fn sample_stable<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        let Some((alpha, scale)) = self.stable else {
            return 0.0;
        };
        let width = (scale * dt).powf(1.0 / alpha);
        loop {
            let v = width * symmetric_stable(alpha, rng);
            if v.abs() <= 1.0 {
                return v;
            }
        }
    }

    pub fn build(m: &JumpCompensator, scheme: Scheme, cutoff: Option<f64>) -> Result<Self> {
        let mut b = Builder {
            scheme,
            cutoff,
            plan: JumpPlan {
                parts: Vec::new(),
                cum_rates: Vec::new(),
                total_rate: 0.0,
                drift: 0.0,
                stable: None,
                dropped_variance: 0.0,
                total_variance: 0.0,
            },
        };
        b.add(m, None)?;
        if scheme == Scheme::ExactStableIncrement && b.plan.stable.is_none() {
            return Err(Error::Config(
                "exact_stable_increment needs a stable-like compensator with constant c".into(),
            ));
        }
        let mut plan = b.plan;
        plan.parts.retain(|p| p.rate > 0.0);
        let mut acc = 0.0;
        plan.cum_rates = plan
            .parts
            .iter()
            .map(|p| {
                acc += p.rate;
                acc
            })
            .collect();
        plan.total_rate = acc;
        Ok(plan)
    }
}

struct Builder {
    scheme: Scheme,
    cutoff: Option<f64>,
    plan: JumpPlan,
}

fn compose(outer: Option<&ScalarFn>, inner: &ScalarFn) -> ScalarFn {
    match outer {
        None => inner.clone(),
        Some(o) => {
            let (o, i) = (o.clone(), inner.clone());
            Arc::new(move |y| o(i(y)))
        }
    }
}

fn apply(map: Option<&ScalarFn>, y: f64) -> f64 {
    match map {
        Some(m) => m(y),
        None => y,
    }
}

impl Builder {
    fn kept_drift(
        &mut self,
        m: &JumpCompensator,
        map: Option<&ScalarFn>,
        lo: f64,
        hi: f64,
    ) -> Result<()> {
        let r = m.integrate_on(&|y| apply(map, y).exp_m1(), lo, hi, PLAN_TOL)?;
        self.plan.drift -= r.value;
        Ok(())
    }

    fn variance(&mut self, m: &JumpCompensator, map: Option<&ScalarFn>) -> Result<()> {
        let v = m.integrate(|y| apply(map, y).powi(2), PLAN_TOL)?;
        self.plan.total_variance += v.value;
        Ok(())
    }

    fn add(&mut self, m: &JumpCompensator, map: Option<ScalarFn>) -> Result<()> {
        let map_ref = map.as_ref();
        match m {
            JumpCompensator::Atomic(atoms) => {
                let atoms: Vec<_> = atoms.iter().filter(|a| a.mass > 0.0).collect();
                if atoms.is_empty() {
                    return Ok(());
                }
                let mut acc = 0.0;
                let cdf = atoms
                    .iter()
                    .map(|a| {
                        acc += a.mass;
                        acc
                    })
                    .collect();
                self.plan.drift -= atoms
                    .iter()
                    .map(|a| a.mass * apply(map_ref, a.location).exp_m1())
                    .sum::<f64>();
                self.plan.total_variance += atoms
                    .iter()
                    .map(|a| a.mass * apply(map_ref, a.location).powi(2))
                    .sum::<f64>();
                self.plan.parts.push(CompoundPart {
                    rate: acc,
                    sampler: SizeSampler::Atoms {
                        cdf,
                        locations: atoms.iter().map(|a| a.location).collect(),
                    },
                    map,
                });
                Ok(())
            }
            JumpCompensator::Density(d) => {
                if let DensityLaw::Pushforward { base, map: inner } = &d.law {
                    let composed = compose(map_ref, inner);
                    return self.add(base, Some(composed));
                }
                self.variance(m, map_ref)?;
                let (rate, sampler) = match &d.law {
                    DensityLaw::Normal {
                        intensity,
                        mean,
                        std,
                    } => (
                        *intensity,
                        SizeSampler::Normal {
                            mean: *mean,
                            std: *std,
                        },
                    ),
                    DensityLaw::DoubleExponential {
                        intensity,
                        p_up,
                        eta_up,
                        eta_down,
                    } => (
                        *intensity,
                        SizeSampler::DoubleExponential {
                            p_up: *p_up,
                            eta_up: *eta_up,
                            eta_down: *eta_down,
                        },
                    ),
                    DensityLaw::Function(g) if d.singularity >= 1.0 => {
                        // infinite activity: keep |y| > eps, compensate the rest
                        let eps = self.require_cutoff()?;
                        self.small_jump_compensation(m, map_ref, eps)?;
                        for (a, b) in [(d.lo, -eps), (eps, d.hi)] {
                            if a < b {
                                let grid = side_grid(g, a, b)?;
                                let table = tabulate(g, grid)?;
                                self.kept_drift(m, map_ref, a, b)?;
                                self.plan.parts.push(CompoundPart {
                                    rate: table.0,
                                    sampler: table.1,
                                    map: map.clone(),
                                });
                            }
                        }
                        return Ok(());
                    }
                    DensityLaw::Function(g) => {
                        let (lo, hi) = effective_support(g, d.lo, d.hi)?;
                        let grid = uniform_grid(lo, hi);
                        let (rate, sampler) = tabulate(g, grid)?;
                        (rate, sampler)
                    }
                    DensityLaw::Pushforward { .. } => unreachable!(),
                };
                self.kept_drift(m, map_ref, f64::NEG_INFINITY, f64::INFINITY)?;
                self.plan.parts.push(CompoundPart { rate, sampler, map });
                Ok(())
            }
            JumpCompensator::StableLike(s) => {
                self.add(&s.residual, map.clone())?;
                let stable_only = JumpCompensator::StableLike(s.without_residual());
                self.variance(&stable_only, map_ref)?;
                match self.scheme {
                    Scheme::ExactStableIncrement => {
                        let Some(c) = s.constant_kernel() else {
                            return Err(Error::Config(
                                "exact_stable_increment needs a constant kernel c".into(),
                            ));
                        };
                        if map.is_some() {
                            return Err(Error::Config(
                                "exact_stable_increment cannot simulate a mapped stable measure"
                                    .into(),
                            ));
                        }
                        let comp = stable_only.integrate(exp_excess, PLAN_TOL)?;
                        self.plan.drift -= comp.value;
                        self.plan.stable = Some((s.alpha, stable_scale_factor(s.alpha) * c));
                        Ok(())
                    }
                    Scheme::EulerLog => {
                        let eps = self.require_cutoff()?;
                        self.small_jump_compensation(&stable_only, map_ref, eps)?;
                        if eps < 1.0 {
                            self.kept_drift(&stable_only, map_ref, f64::NEG_INFINITY, -eps)?;
                            self.kept_drift(&stable_only, map_ref, eps, f64::INFINITY)?;
                            for positive in [true, false] {
                                let rate = s
                                    .integrate_stable_side(&|_| 1.0, positive, eps, PLAN_TOL)?
                                    .value;
                                self.plan.parts.push(CompoundPart {
                                    rate,
                                    sampler: SizeSampler::PowerLaw {
                                        alpha: s.alpha,
                                        eps,
                                        positive,
                                        kernel: s.kernel.clone(),
                                        c_max: s.c_max(),
                                    },
                                    map: map.clone(),
                                });
                            }
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    fn require_cutoff(&self) -> Result<f64> {
        match self.cutoff {
            Some(e) if e > 0.0 && e <= 1.0 => Ok(e),
            _ => Err(Error::Config(
                "an infinite-activity measure needs a small-jump cutoff in (0, 1]".into(),
            )),
        }
    }

    /// Drops jumps with `|y| <= eps`, moving `int (e^u - 1 - u) m` into the drift.
    fn small_jump_compensation(
        &mut self,
        m: &JumpCompensator,
        map: Option<&ScalarFn>,
        eps: f64,
    ) -> Result<()> {
        let comp = m.integrate_on(&|y| exp_excess(apply(map, y)), -eps, eps, PLAN_TOL)?;
        self.plan.drift -= comp.value;
        let var = m.integrate_on(&|y| apply(map, y).powi(2), -eps, eps, PLAN_TOL)?;
        self.plan.dropped_variance += var.value;
        Ok(())
    }
}

fn uniform_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..=TABLE_CELLS)
        .map(|i| lo + (hi - lo) * i as f64 / TABLE_CELLS as f64)
        .collect()
}

/// Grid on one side of the origin, geometric towards the singular point.
fn side_grid(g: &ScalarFn, a: f64, b: f64) -> Result<Vec<f64>> {
    let (lo, hi) = effective_support(g, a, b)?;
    if lo > 0.0 {
        let ratio = hi / lo;
        Ok((0..=TABLE_CELLS)
            .map(|i| lo * ratio.powf(i as f64 / TABLE_CELLS as f64))
            .collect())
    } else {
        let ratio = lo / hi;
        let mut v: Vec<f64> = (0..=TABLE_CELLS)
            .map(|i| hi * ratio.powf(i as f64 / TABLE_CELLS as f64))
            .collect();
        v.reverse();
        Ok(v)
    }
}

/// Finite window carrying all but a `1e-12` fraction of the mass.
fn effective_support(g: &ScalarFn, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let mass =
        |a: f64, b: f64| -> Result<f64> { Ok(quadrature::integrate(|y| g(y), a, b, 1e-14)?.value) };
    let total = mass(lo, hi)?;
    let cut = 1e-12 * total.max(f64::MIN_POSITIVE);
    let mut new_hi = hi;
    if hi.is_infinite() {
        let mut b = lo.max(0.0) + 1.0;
        while mass(b, f64::INFINITY)? > cut && b < 1e4 {
            b *= 2.0;
        }
        new_hi = b;
    }
    let mut new_lo = lo;
    if lo.is_infinite() {
        let mut a = hi.min(0.0) - 1.0;
        while mass(f64::NEG_INFINITY, a)? > cut && a > -1e4 {
            a *= 2.0;
        }
        new_lo = a;
    }
    Ok((new_lo, new_hi))
}

fn tabulate(g: &ScalarFn, grid: Vec<f64>) -> Result<(f64, SizeSampler)> {
    let mut cdf = Vec::with_capacity(grid.len());
    cdf.push(0.0);
    let mut acc = 0.0;
    for w in grid.windows(2) {
        acc += quadrature::integrate_finite(|y| g(y), w[0], w[1], 1e-14)?
            .value
            .max(0.0);
        cdf.push(acc);
    }
    Ok((acc, SizeSampler::Tabulated { grid, cdf }))
}
