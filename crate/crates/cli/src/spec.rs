//! TOML model-spec schema and its conversion into library objects.
//!
//! Exactly one of `[model]`, `[markov]` or `[time_change]` must be present.
//! `[query]` and `[sim]` are optional. Rates are per year.
//!
//! ```toml
//! [model]
//! s0 = 1.0
//! r = 0.0
//! sigma = 0.2
//! jumps = { type = "normal", intensity = 1.0, mean = 0.0, std = 0.4 }
//!
//! [query]
//! strike = 1.2
//! t_grid = [0.03, 0.01, 0.003, 0.001]
//!
//! [sim]
//! n_paths = 1000000
//! seed = 7
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use shortmat::characteristics::{
    from_markov, from_time_changed_levy, Atom, ExpModelCharacteristics, JumpCompensator, JumpMap,
    LocalCharacteristics, MarkovJumps, MarkovModel, StableKernel,
};
use shortmat::montecarlo::{Scheme, SimConfig};
use shortmat::operator::{Monomial, SmoothFunction};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ExpModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markov: Option<MarkovSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_change: Option<TimeChangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<QuerySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpModelSpec {
    pub s0: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub jumps: JumpSpec,
}

/// Log-jump compensator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpSpec {
    #[default]
    None,
    /// `atoms = [[location, mass], ...]`
    Atomic {
        atoms: Vec<[f64; 2]>,
    },
    Normal {
        intensity: f64,
        mean: f64,
        std: f64,
    },
    DoubleExponential {
        intensity: f64,
        p_up: f64,
        eta_up: f64,
        eta_down: f64,
    },
    /// `residual + 1_{|y| <= 1} c |y|^{-1-alpha} dy`
    Stable {
        alpha: f64,
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        residual: Option<Box<JumpSpec>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovSpec {
    pub b: Vec<f64>,
    /// `d x n`, by rows.
    pub sigma: Vec<Vec<f64>>,
    pub z0: Vec<f64>,
    #[serde(default)]
    pub jump_map: JumpMapSpec,
    pub nu: NuSpec,
    pub f: FunctionSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpMapSpec {
    #[default]
    Identity,
    Scale {
        factor: f64,
    },
    /// `psi(y) = matrix . y`, `d x k`.
    Linear {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NuSpec {
    /// Point masses in `R^k`.
    AtomicNd { atoms: Vec<NdAtom> },
    /// Scalar measure; the jump map sees a one-element vector.
    Scalar { jumps: JumpSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NdAtom {
    pub y: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeChangeSpec {
    /// Mean drift of the Lévy process per unit of business time.
    pub b: f64,
    pub sigma2: f64,
    pub nu: JumpSpec,
    pub theta0: f64,
    /// Current value of the log-price.
    #[serde(default)]
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `sum_k coeffs[k] x^k`
    Polynomial {
        coeffs: Vec<f64>,
    },
    PolynomialNd {
        dim: usize,
        terms: Vec<TermSpec>,
    },
    ExpAffine {
        scale: f64,
        weights: Vec<f64>,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        constant: f64,
    },
    GaussianBump {
        #[serde(default = "one")]
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    MollifiedCall {
        strike: f64,
        n: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// Generator of `X = ln S`, or of `xi` for markov / time_change specs.
    #[default]
    Log,
    /// Price-space generator of `S`.
    Price,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<Space>,
    /// Evaluation point; defaults to the current state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSpec {
    #[default]
    EulerLog,
    ExactStableIncrement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default)]
    pub scheme: SchemeSpec,
}

fn default_paths() -> usize {
    100_000
}

fn default_steps() -> usize {
    1
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            n_paths: default_paths(),
            n_steps: default_steps(),
            seed: 0,
            cutoff: None,
            scheme: SchemeSpec::EulerLog,
        }
    }
}

/// A spec resolved into library objects.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Exponential-model view used by the price commands.
    pub exp: ExpModelCharacteristics,
    /// Characteristics of the state variable (`ln S` for `[model]`).
    pub local: LocalCharacteristics,
    /// Current state.
    pub x0: Vec<f64>,
}

fn schema<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Schema(e.to_string())
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: ModelSpec = toml::from_str(text).map_err(schema)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn emit(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(schema)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let blocks = [
            self.model.is_some(),
            self.markov.is_some(),
            self.time_change.is_some(),
        ];
        let n = blocks.iter().filter(|b| **b).count();
        if n != 1 {
            return Err(CliError::Schema(format!(
                "exactly one of [model], [markov], [time_change] is required, found {n}"
            )));
        }
        Ok(())
    }

    pub fn query(&self) -> QuerySpec {
        self.query.clone().unwrap_or_default()
    }

    pub fn sim(&self) -> SimSpec {
        self.sim.clone().unwrap_or_default()
    }

    pub fn resolve(&self, tol: f64) -> Result<Resolved, CliError> {
        if let Some(m) = &self.model {
            let exp = ExpModelCharacteristics::new(m.s0, m.r, m.sigma, m.jumps.build()?)?;
            let local = exp.log_characteristics(tol)?;
            return Ok(Resolved {
                x0: vec![m.s0.ln()],
                exp,
                local,
            });
        }
        if let Some(mk) = &self.markov {
            let model = MarkovModel {
                b: mk.b.clone(),
                sigma: mk.sigma.clone(),
                jump_map: mk.jump_map.build(),
                nu: mk.nu.build()?,
                f: mk.f.build()?,
                z0: mk.z0.clone(),
            };
            let out = from_markov(&model, tol)?;
            let exp = ExpModelCharacteristics::from_log_characteristics(&out.chars, out.xi0, tol)?;
            return Ok(Resolved {
                exp,
                local: out.chars,
                x0: vec![out.xi0],
            });
        }
        let tc = self.time_change.as_ref().expect("validated");
        let local = from_time_changed_levy(tc.b, tc.sigma2, &tc.nu.build()?, tc.theta0, tol)?;
        let exp = ExpModelCharacteristics::from_log_characteristics(&local, tc.x0, tol)?;
        Ok(Resolved {
            exp,
            local,
            x0: vec![tc.x0],
        })
    }
}

impl JumpSpec {
    pub fn build(&self) -> Result<JumpCompensator, CliError> {
        Ok(match self {
            JumpSpec::None => JumpCompensator::zero(),
            JumpSpec::Atomic { atoms } => {
                JumpCompensator::atomic(atoms.iter().map(|a| Atom::new(a[0], a[1])).collect())?
            }
            JumpSpec::Normal {
                intensity,
                mean,
                std,
            } => JumpCompensator::normal(*intensity, *mean, *std)?,
            JumpSpec::DoubleExponential {
                intensity,
                p_up,
                eta_up,
                eta_down,
            } => JumpCompensator::double_exponential(*intensity, *p_up, *eta_up, *eta_down)?,
            JumpSpec::Stable { alpha, c, residual } => {
                let residual = match residual {
                    Some(r) => r.build()?,
                    None => JumpCompensator::zero(),
                };
                JumpCompensator::stable_like(*alpha, StableKernel::Constant(*c), residual)?
            }
        })
    }
}

impl JumpMapSpec {
    pub fn build(&self) -> JumpMap {
        match self.clone() {
            JumpMapSpec::Identity => Arc::new(|y: &[f64]| y.to_vec()),
            JumpMapSpec::Scale { factor } => {
                Arc::new(move |y: &[f64]| y.iter().map(|v| factor * v).collect())
            }
            JumpMapSpec::Linear { matrix } => Arc::new(move |y: &[f64]| {
                matrix
                    .iter()
                    .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
                    .collect()
            }),
        }
    }
}

impl NuSpec {
    pub fn build(&self) -> Result<MarkovJumps, CliError> {
        Ok(match self {
            NuSpec::AtomicNd { atoms } => {
                MarkovJumps::Atomic(atoms.iter().map(|a| (a.y.clone(), a.mass)).collect())
            }
            NuSpec::Scalar { jumps } => MarkovJumps::Scalar(jumps.build()?),
        })
    }
}

impl FunctionSpec {
    pub fn build(&self) -> Result<SmoothFunction, CliError> {
        Ok(match self {
            FunctionSpec::Polynomial { coeffs } => SmoothFunction::polynomial_1d(coeffs)?,
            FunctionSpec::PolynomialNd { dim, terms } => SmoothFunction::polynomial(
                *dim,
                terms
                    .iter()
                    .map(|t| Monomial {
                        coef: t.coef,
                        powers: t.powers.clone(),
                    })
                    .collect(),
            )?,
            FunctionSpec::ExpAffine {
                scale,
                weights,
                offset,
                constant,
            } => SmoothFunction::exp_affine(*scale, weights.clone(), *offset, *constant)?,
            FunctionSpec::GaussianBump {
                amplitude,
                center,
                width,
            } => SmoothFunction::gaussian_bump(*amplitude, center.clone(), *width)?,
            FunctionSpec::MollifiedCall { strike, n } => {
                SmoothFunction::mollified_call(*strike, *n)?
            }
        })
    }
}

impl SimSpec {
    pub fn config(&self) -> SimConfig {
        SimConfig {
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            master_seed: self.seed,
            small_jump_cutoff: self.cutoff,
            scheme: match self.scheme {
                SchemeSpec::EulerLog => Scheme::EulerLog,
                SchemeSpec::ExactStableIncrement => Scheme::ExactStableIncrement,
            },
            rates: None,
        }
    }
}
