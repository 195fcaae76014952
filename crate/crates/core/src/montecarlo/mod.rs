//! Monte Carlo simulation of the exponential jump-diffusion at short horizons.
//!
//! Paths are simulated for `X = ln S` with frozen characteristics. Every path
//! owns a counter-based stream keyed by `(master_seed, path_index)`, and all
//! reductions use a fixed pairwise summation tree, so results are bit-identical
//! under any degree of parallelism.

mod plan;
mod rng;
mod stable;

use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::characteristics::ExpModelCharacteristics;
use crate::error::{Error, Result};

pub use rng::{derive_seed, mix64, path_rng};
pub use stable::symmetric_stable;

use plan::JumpPlan;

/// Largest fraction of jump variance the small-jump cutoff may discard.
pub const MAX_DROPPED_VARIANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Euler steps in log-space; stable-like small jumps below the cutoff are
    /// dropped and their compensator moved into the drift.
    EulerLog,
    /// Exact symmetric stable increments for a constant stable kernel.
    ExactStableIncrement,
}

/// Piecewise-constant deterministic short rate: `rates[i]` applies until `until[i]`,
/// the last rate extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRates {
    pub until: Vec<f64>,
    pub rates: Vec<f64>,
}

impl StepRates {
    pub fn rate_at(&self, s: f64) -> f64 {
        let i = self.until.partition_point(|&u| u <= s);
        self.rates[i.min(self.rates.len() - 1)]
    }

    /// `int_0^t r(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut start = 0.0;
        for (i, &r) in self.rates.iter().enumerate() {
            let end = self.until.get(i).copied().unwrap_or(f64::INFINITY).min(t);
            if end > start {
                acc += r * (end - start);
                start = end;
            }
            if start >= t {
                break;
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub master_seed: u64,
    /// Small-jump cutoff `eps` for stable-like measures under [`Scheme::EulerLog`].
    pub small_jump_cutoff: Option<f64>,
    pub scheme: Scheme,
    /// Overrides the model's constant rate.
    pub rates: Option<StepRates>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 1,
            master_seed: 0,
            small_jump_cutoff: None,
            scheme: Scheme::EulerLog,
            rates: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(Error::Config(format!(
                "n_paths must be >= 100, got {}",
                self.n_paths
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        if let Some(e) = self.small_jump_cutoff {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Config(format!(
                    "small_jump_cutoff must lie in (0, 1], got {e}"
                )));
            }
        }
        if let Some(r) = &self.rates {
            if r.rates.is_empty()
                || r.rates.len() != r.until.len() + 1 && r.rates.len() != r.until.len()
            {
                return Err(Error::Config(
                    "rate schedule needs one rate per piece".into(),
                ));
            }
            if r.until.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("rate breakpoints must increase".into()));
            }
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Deterministic pairwise sum.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 256;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    if xs.len() > 1 << 16 {
        let (sa, sb) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
        sa + sb
    } else {
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Mean and standard error `sd / sqrt(n)` of `values`.
pub fn estimate_mean(values: &[f64]) -> Estimate {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let dev: Vec<f64> = values.par_iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if n > 1 {
        pairwise_sum(&dev) / (n - 1) as f64
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_error: (var / n as f64).sqrt(),
        n_paths: n,
    }
}

/// `int_0^t r(s) ds` under `cfg`.
pub fn discount_exponent(ec: &ExpModelCharacteristics, t: f64, cfg: &SimConfig) -> f64 {
    match &cfg.rates {
        Some(r) => r.integral(t),
        None => ec.r * t,
    }
}

/// Drift-adjusted simulation plan; fails with `CutoffTooCoarse` when the
/// dropped small jumps carry too much of the jump variance.
fn plan_for(ec: &ExpModelCharacteristics, cfg: &SimConfig) -> Result<JumpPlan> {
    let plan = JumpPlan::build(&ec.jumps, cfg.scheme, cfg.small_jump_cutoff)?;
    let fraction = plan.dropped_fraction();
    if fraction > MAX_DROPPED_VARIANCE {
        return Err(Error::CutoffTooCoarse { fraction });
    }
    Ok(plan)
}

/// `n_paths` samples of `S_t`.
pub fn simulate_terminal(
    ec: &ExpModelCharacteristics,
    t: f64,
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be > 0, got {t}")));
    }
    let plan = plan_for(ec, cfg)?;
    let dt = t / cfg.n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let sigma = ec.sigma;
    let base_drift = -0.5 * sigma * sigma + plan.drift;
    let step_drift: Vec<f64> = (0..cfg.n_steps)
        .map(|k| {
            let r = match &cfg.rates {
                Some(sr) => sr.rate_at(k as f64 * dt),
                None => ec.r,
            };
            (r + base_drift) * dt
        })
        .collect();
    let poisson = if plan.total_rate > 0.0 {
        Some(
            Poisson::new(plan.total_rate * dt)
                .map_err(|e| Error::Config(format!("jump intensity: {e}")))?,
        )
    } else {
        None
    };
    let x0 = ec.s0.ln();
    let mut out = vec![0.0; cfg.n_paths];
    out.par_iter_mut().enumerate().for_each(|(i, slot)| {
        let mut rng = path_rng(cfg.master_seed, i as u64);
        let mut x = x0;
        for drift in &step_drift {
            x += drift;
            if sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                x += sigma * sqrt_dt * z;
            }
            if let Some(p) = &poisson {
                let n = p.sample(&mut rng) as u64;
                if n > 0 {
                    x += plan.sample_jumps(n, &mut rng);
                }
            }
            x += plan.sample_stable(dt, &mut rng);
        }
        *slot = x.exp();
    });
    Ok(out)
}

/// Discounted call estimate on a given sample set (common random numbers across strikes).
pub fn call_from_samples(samples: &[f64], k: f64, discount: f64) -> Estimate {
    let payoffs: Vec<f64> = samples
        .par_iter()
        .map(|s| discount * (s - k).max(0.0))
        .collect();
    estimate_mean(&payoffs)
}

/// `e^{-int r} E[(S_t - K)^+]`.
pub fn estimate_call(
    ec: &ExpModelCharacteristics,
    t: f64,
    k: f64,
    cfg: &SimConfig,
) -> Result<Estimate> {
    let samples = simulate_terminal(ec, t, cfg)?;
    let discount = (-discount_exponent(ec, t, cfg)).exp();
    Ok(call_from_samples(&samples, k, discount))
}

/// Estimate of `E[g(S_t)]`.
pub fn estimate_expectation<G>(
    ec: &ExpModelCharacteristics,
    t: f64,
    g: G,
    cfg: &SimConfig,
) -> Result<Estimate>
where
    G: Fn(f64) -> f64 + Sync,
{
    let samples = simulate_terminal(ec, t, cfg)?;
    let values: Vec<f64> = samples.par_iter().map(|&s| g(s)).collect();
    Ok(estimate_mean(&values))
}

/// One maturity of a [`SlopeStudy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeRow {
    pub t: f64,
    pub estimate: Estimate,
    /// `(C(t) - offset) / t^p`
    pub ratio: f64,
    pub ratio_std_error: f64,
}

/// Weighted least-squares fit of `ln(C - offset)` on `ln t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub std_error: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeStudy {
    pub rows: Vec<SlopeRow>,
    pub fit: Option<ExponentFit>,
}

impl SlopeStudy {
    /// Row with the smallest maturity.
    pub fn smallest_t(&self) -> &SlopeRow {
        self.rows.last().expect("non-empty grid")
    }
}

/// Checks a maturity grid: descending, within `(0, 0.1]`, at least four
/// points, and spanning at least one decade.
pub fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 4 {
        return Err(Error::Config(format!(
            "t grid needs >= 4 points, got {}",
            t_grid.len()
        )));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t <= 0.1)) {
        return Err(Error::Config("t grid must lie in (0, 0.1]".into()));
    }
    if t_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Config("t grid must be strictly descending".into()));
    }
    if t_grid[0] / t_grid[t_grid.len() - 1] < 10.0 - 1e-9 {
        return Err(Error::Config("t grid must span at least one decade".into()));
    }
    Ok(())
}

/// Estimates `C(t)` on a maturity grid and regresses the empirical exponent.
///
/// Each maturity uses an independent seed derived from `cfg.master_seed` and its
/// grid position.
pub fn slope_study(
    ec: &ExpModelCharacteristics,
    k: f64,
    t_grid: &[f64],
    p_hypothesis: f64,
    offset: f64,
    cfg: &SimConfig,
) -> Result<SlopeStudy> {
    validate_grid(t_grid)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let cfg_i = SimConfig {
            master_seed: derive_seed(cfg.master_seed, i as u64),
            ..cfg.clone()
        };
        let estimate = estimate_call(ec, t, k, &cfg_i)?;
        let scale = t.powf(p_hypothesis);
        rows.push(SlopeRow {
            t,
            estimate,
            ratio: (estimate.value - offset) / scale,
            ratio_std_error: estimate.std_error / scale,
        });
    }
    let zero_like = rows
        .iter()
        .filter(|r| (r.estimate.value - offset).abs() <= 2.0 * r.estimate.std_error)
        .count();
    if 2 * zero_like > rows.len() {
        return Err(Error::InsufficientSignal {
            zero_like,
            total: rows.len(),
        });
    }
    let fit = fit_exponent(&rows, offset);
    Ok(SlopeStudy { rows, fit })
}

fn fit_exponent(rows: &[SlopeRow], offset: f64) -> Option<ExponentFit> {
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.estimate.value - offset > 0.0)
        .map(|r| {
            let y = r.estimate.value - offset;
            let se_log = r.estimate.std_error / y;
            (r.t.ln(), y.ln(), se_log)
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let weighted = pts.iter().all(|p| p.2 > 0.0);
    let w: Vec<f64> = pts
        .iter()
        .map(|p| if weighted { 1.0 / (p.2 * p.2) } else { 1.0 })
        .collect();
    let sw: f64 = w.iter().sum();
    let xm = pts.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let ym = pts.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.0 - xm).powi(2))
        .sum();
    let sxy: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.0 - xm) * (p.1 - ym))
        .sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let std_error = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        let n = pts.len() as f64;
        let rss: f64 = pts
            .iter()
            .map(|p| (p.1 - ym - slope * (p.0 - xm)).powi(2))
            .sum();
        if n > 2.0 {
            (rss / (n - 2.0) / sxx).sqrt()
        } else {
            0.0
        }
    };
    Some(ExponentFit {
        exponent: slope,
        std_error,
        intercept: ym - slope * xm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{Atom, JumpCompensator};

    fn cfg(n: usize) -> SimConfig {
        SimConfig {
            n_paths: n,
            ..Default::default()
        }
    }

    #[test]
    fn degenerate_model_is_deterministic() {
        let ec = ExpModelCharacteristics::new(1.7, 0.0, 0.0, JumpCompensator::zero()).unwrap();
        let s = simulate_terminal(&ec, 0.01, &cfg(500)).unwrap();
        assert!(s.iter().all(|&v| (v - 1.7).abs() < 1e-15));
    }

    #[test]
    fn pairwise_sum_matches_exact_integers() {
        let xs: Vec<f64> = (1..=100_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 5_000_050_000.0);
    }

    #[test]
    fn step_rates_integral() {
        let r = StepRates {
            until: vec![0.5],
            rates: vec![0.02, 0.04],
        };
        assert!((r.integral(1.0) - 0.03).abs() < 1e-15);
        assert!((r.integral(0.25) - 0.005).abs() < 1e-15);
        assert_eq!(r.rate_at(0.6), 0.04);
    }

    #[test]
    fn small_path_count_rejected() {
        let ec = ExpModelCharacteristics::new(1.0, 0.0, 0.2, JumpCompensator::zero()).unwrap();
        assert!(matches!(
            simulate_terminal(&ec, 0.01, &cfg(10)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn exact_scheme_without_stable_part_is_config_error() {
        let jumps = JumpCompensator::atomic(vec![Atom::new(0.1, 1.0)]).unwrap();
        let ec = ExpModelCharacteristics::new(1.0, 0.0, 0.0, jumps).unwrap();
        let c = SimConfig {
            scheme: Scheme::ExactStableIncrement,
            ..cfg(1000)
        };
        assert!(matches!(
            simulate_terminal(&ec, 0.01, &c),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(validate_grid(&[0.03, 0.01, 0.003, 0.001]).is_ok());
        assert!(validate_grid(&[0.001, 0.003, 0.01, 0.03]).is_err());
        assert!(validate_grid(&[0.01, 0.009, 0.008, 0.007]).is_err());
        assert!(validate_grid(&[0.2, 0.01, 0.003, 0.001]).is_err());
    }
}
