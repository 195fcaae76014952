//! Command implementations and their output records.

use std::io::Write;

use serde::Serialize;
use shortmat::asymptotics::{call_asymptotics, AsymptoticResult};
use shortmat::montecarlo::{estimate_call, estimate_expectation, slope_study};
use shortmat::operator::{short_time_expectation, Generator};

use crate::error::CliError;
use crate::spec::{ModelSpec, Space};

/// Grid used by `verify` when neither the command line nor the spec gives one.
pub const DEFAULT_T_GRID: [f64; 4] = [3e-2, 1e-2, 3e-3, 1e-3];
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_REL_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Command-line values that take precedence over the spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Overrides {
    pub strike: Option<f64>,
    pub t: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub tol: f64,
    /// Replaces the analytic coefficient in `verify`.
    pub predicted: Option<f64>,
    pub rel_tol: f64,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            strike: None,
            t: None,
            t_grid: None,
            seed: None,
            paths: None,
            tol: DEFAULT_TOL,
            predicted: None,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub quadrature_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternate_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable_scale: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsRecord {
    pub regime: String,
    pub exponent: f64,
    pub coefficient: f64,
    pub constant_term: f64,
    pub strike: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub diagnostics: DiagnosticsRecord,
}

impl From<(&AsymptoticResult, f64)> for AsymptoticsRecord {
    fn from((a, strike): (&AsymptoticResult, f64)) -> Self {
        Self {
            regime: a.regime.as_str().to_string(),
            exponent: a.exponent,
            coefficient: a.coefficient,
            constant_term: a.constant_term,
            strike,
            alpha: a.alpha,
            diagnostics: DiagnosticsRecord {
                quadrature_error: a.diagnostics.quadrature_error,
                cross_check: a.diagnostics.cross_check,
                alternate_coefficient: a.diagnostics.alternate_coefficient,
                stable_scale: a.diagnostics.stable_scale,
                notes: a.diagnostics.notes.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionRecord {
    pub space: Space,
    pub x: Vec<f64>,
    pub f: f64,
    pub generator: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<f64>,
}

/// One row of the convergence table; CSV columns are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyRow {
    pub t: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub ratio: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub name: String,
    pub coefficient: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: String,
    pub regime: String,
    pub strike: f64,
    pub exponent: f64,
    pub constant_term: f64,
    pub smallest_t: f64,
    pub ratio: f64,
    pub ratio_std_error: f64,
    pub rel_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent_std_error: Option<f64>,
    pub candidates: Vec<Candidate>,
    pub n_paths: usize,
    pub seed: u64,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == "PASS"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulateRow {
    pub t: f64,
    /// Empty for the forward `E[S_t]`.
    pub strike: Option<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

fn strike(spec: &ModelSpec, ov: &Overrides, s0: f64) -> Result<f64, CliError> {
    let k = ov.strike.or(spec.query().strike).unwrap_or(s0);
    if !(k > 0.0 && k.is_finite()) {
        return Err(CliError::Schema(format!("strike must be > 0, got {k}")));
    }
    Ok(k)
}

fn sorted_grid(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(|a, b| b.total_cmp(a));
    g.dedup();
    g
}

fn sim_config(spec: &ModelSpec, ov: &Overrides) -> shortmat::montecarlo::SimConfig {
    let mut sim = spec.sim();
    if let Some(s) = ov.seed {
        sim.seed = s;
    }
    if let Some(n) = ov.paths {
        sim.n_paths = n;
    }
    sim.config()
}

pub fn asymptotics(spec: &ModelSpec, ov: &Overrides) -> Result<AsymptoticsRecord, CliError> {
    let r = spec.resolve(ov.tol)?;
    let k = strike(spec, ov, r.exp.s0)?;
    let a = call_asymptotics(&r.exp, k, ov.tol)?;
    Ok((&a, k).into())
}

pub fn expansion(spec: &ModelSpec, ov: &Overrides) -> Result<ExpansionRecord, CliError> {
    let q = spec.query();
    let f = q
        .function
        .as_ref()
        .ok_or_else(|| CliError::Schema("expansion needs [query] function".into()))?
        .build()?;
    let r = spec.resolve(ov.tol)?;
    let space = q.space.unwrap_or_default();
    let generator: &dyn Generator = match space {
        Space::Log => &r.local,
        Space::Price => &r.exp,
    };
    let x = match (q.x, space) {
        (Some(x), _) => x,
        (None, Space::Log) => r.x0.clone(),
        (None, Space::Price) => vec![r.exp.s0],
    };
    let t = ov.t.or(q.t);
    let lf = generator.apply(&f, &x, ov.tol)?;
    let expansion = match t {
        Some(t) => Some(short_time_expectation(generator, &f, &x, t, ov.tol)?),
        None => None,
    };
    Ok(ExpansionRecord {
        space,
        f: f.value(&x),
        x,
        generator: lf,
        t,
        expansion,
    })
}

pub fn verify(spec: &ModelSpec, ov: &Overrides) -> Result<VerifyReport, CliError> {
    let r = spec.resolve(ov.tol)?;
    let k = strike(spec, ov, r.exp.s0)?;
    let a = call_asymptotics(&r.exp, k, ov.tol)?;
    let grid = sorted_grid(
        ov.t_grid
            .as_deref()
            .or(spec.query.as_ref().and_then(|q| q.t_grid.as_deref()))
            .unwrap_or(&DEFAULT_T_GRID),
    );
    let cfg = sim_config(spec, ov);
    let study = slope_study(&r.exp, k, &grid, a.exponent, a.constant_term, &cfg)?;

    let mut named = vec![];
    match ov.predicted {
        Some(p) => named.push(("override", p)),
        None => {
            let primary = if a.diagnostics.alternate_coefficient.is_some() {
                "r_s0"
            } else {
                "leading"
            };
            named.push((primary, a.coefficient));
            if let Some(alt) = a.diagnostics.alternate_coefficient {
                named.push(("r_k", alt));
            }
        }
    }
    let last = study.smallest_t();
    let candidates: Vec<Candidate> = named
        .into_iter()
        .map(|(name, c)| {
            let tolerance = 3.0 * last.ratio_std_error + ov.rel_tol * c.abs();
            Candidate {
                name: name.to_string(),
                coefficient: c,
                tolerance,
                pass: (last.ratio - c).abs() <= tolerance,
            }
        })
        .collect();
    let predicted = candidates[0].coefficient;
    let rows = study
        .rows
        .iter()
        .map(|row| VerifyRow {
            t: row.t,
            estimate: row.estimate.value,
            std_error: row.estimate.std_error,
            ratio: row.ratio,
            predicted,
        })
        .collect();
    let pass = candidates.iter().any(|c| c.pass);
    Ok(VerifyReport {
        rows,
        verdict: Verdict {
            status: if pass { "PASS" } else { "FAIL" }.to_string(),
            regime: a.regime.as_str().to_string(),
            strike: k,
            exponent: a.exponent,
            constant_term: a.constant_term,
            smallest_t: last.t,
            ratio: last.ratio,
            ratio_std_error: last.ratio_std_error,
            rel_tol: ov.rel_tol,
            empirical_exponent: study.fit.map(|f| f.exponent),
            exponent_std_error: study.fit.map(|f| f.std_error),
            candidates,
            n_paths: cfg.n_paths,
            seed: cfg.master_seed,
        },
    })
}

pub fn simulate(spec: &ModelSpec, ov: &Overrides) -> Result<Vec<SimulateRow>, CliError> {
    let r = spec.resolve(ov.tol)?;
    let q = spec.query();
    let ts = match (ov.t, &ov.t_grid, q.t, &q.t_grid) {
        (Some(t), ..) => vec![t],
        (None, Some(g), ..) => sorted_grid(g),
        (None, None, Some(t), _) => vec![t],
        (None, None, None, Some(g)) => sorted_grid(g),
        _ => {
            return Err(CliError::Schema(
                "simulate needs a maturity (--t, --t-grid or [query])".into(),
            ))
        }
    };
    let k = ov.strike.or(q.strike);
    let cfg = sim_config(spec, ov);
    ts.iter()
        .map(|&t| {
            let e = match k {
                Some(k) => estimate_call(&r.exp, t, k, &cfg)?,
                None => estimate_expectation(&r.exp, t, |s| s, &cfg)?,
            };
            Ok(SimulateRow {
                t,
                strike: k,
                estimate: e.value,
                std_error: e.std_error,
                n_paths: e.n_paths,
            })
        })
        .collect()
}

/// Serializes `value` as pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// Writes `rows` as CSV with a header.
pub fn write_csv<W: Write, T: Serialize>(out: &mut W, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
