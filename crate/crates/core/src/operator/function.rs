use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One term `coef * prod_i x_i^{powers[i]}` of a multivariate polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Parameters of the builtin function families.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionFamily {
    Polynomial {
        terms: Vec<Monomial>,
    },
    /// `scale * exp(weights . x + offset) + constant`
    ExpAffine {
        scale: f64,
        weights: Vec<f64>,
        offset: f64,
        constant: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`
    GaussianBump {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// Softplus smoothing of `(x - strike)^+` lying within `1/n` above it.
    MollifiedCall {
        strike: f64,
        n: f64,
    },
    Custom,
}

type VecFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type MatFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;
type ValFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
struct CustomFns {
    value: Arc<ValFn>,
    gradient: Arc<VecFn>,
    hessian: Arc<MatFn>,
}

/// A `C^2` function with analytic gradient and Hessian.
#[derive(Clone)]
pub struct SmoothFunction {
    dim: usize,
    family: FunctionFamily,
    custom: Option<CustomFns>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFunction")
            .field("dim", &self.dim)
            .field("family", &self.family)
            .finish()
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SmoothFunction {
    /// Univariate polynomial `sum_k coeffs[k] x^k`.
    pub fn polynomial_1d(coeffs: &[f64]) -> Result<Self> {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, &coef)| Monomial {
                coef,
                powers: vec![k as u32],
            })
            .collect();
        Self::polynomial(1, terms)
    }

    pub fn polynomial(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidFunction("dimension must be positive".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.powers.len() != dim) {
            return Err(Error::InvalidFunction(format!(
                "monomial has {} powers for dimension {dim}",
                t.powers.len()
            )));
        }
        Self::builtin(dim, FunctionFamily::Polynomial { terms })
    }

    pub fn exp_affine(scale: f64, weights: Vec<f64>, offset: f64, constant: f64) -> Result<Self> {
        let dim = weights.len();
        if dim == 0 {
            return Err(Error::InvalidFunction("weights must be non-empty".into()));
        }
        Self::builtin(
            dim,
            FunctionFamily::ExpAffine {
                scale,
                weights,
                offset,
                constant,
            },
        )
    }

    pub fn gaussian_bump(amplitude: f64, center: Vec<f64>, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidFunction(format!(
                "width must be > 0, got {width}"
            )));
        }
        if center.is_empty() {
            return Err(Error::InvalidFunction("center must be non-empty".into()));
        }
        Self::builtin(
            center.len(),
            FunctionFamily::GaussianBump {
                amplitude,
                center,
                width,
            },
        )
    }

    /// Smooth call payoff `f_n` with `(x-K)^+ <= f_n(x) <= (x-K)^+ + 1/n`.
    pub fn mollified_call(strike: f64, n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidFunction(format!("n must be > 0, got {n}")));
        }
        Self::builtin(1, FunctionFamily::MollifiedCall { strike, n })
    }

    /// Library-level function from user closures. Not validated; see [`SmoothFunction::check_derivatives`].
    pub fn custom<V, G, H>(dim: usize, value: V, gradient: G, hessian: H) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        H: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            dim,
            family: FunctionFamily::Custom,
            custom: Some(CustomFns {
                value: Arc::new(value),
                gradient: Arc::new(gradient),
                hessian: Arc::new(hessian),
            }),
        }
    }

    fn builtin(dim: usize, family: FunctionFamily) -> Result<Self> {
        let f = Self {
            dim,
            family,
            custom: None,
        };
        let points = f.probe_points(8);
        f.check_derivatives(&points)?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &FunctionFamily {
        &self.family
    }

    /// Deterministic random points in the region where the family varies.
    fn probe_points(&self, count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
        let (center, radius): (Vec<f64>, f64) = match &self.family {
            FunctionFamily::GaussianBump { center, width, .. } => (center.clone(), 3.0 * width),
            FunctionFamily::MollifiedCall { strike, n } => (vec![*strike], 4.0 / n),
            _ => (vec![0.0; self.dim], 1.5),
        };
        (0..count)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + radius * (2.0 * rng.random::<f64>() - 1.0))
                    .collect()
            })
            .collect()
    }

    /// Compares gradient and Hessian with centered differences (step `1e-5`)
    /// at the given points; relative error must stay below `1e-5`.
    pub fn check_derivatives(&self, points: &[Vec<f64>]) -> Result<()> {
        const H: f64 = 1e-5;
        const REL: f64 = 1e-5;
        let close = |fd: f64, an: f64| (fd - an).abs() <= REL * an.abs().max(1.0);
        for x in points {
            if x.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: x.len(),
                });
            }
            let grad = self.gradient(x);
            let hess = self.hessian(x);
            let mut xp = x.clone();
            let mut xm = x.clone();
            for i in 0..self.dim {
                xp[i] = x[i] + H;
                xm[i] = x[i] - H;
                let fd = (self.value(&xp) - self.value(&xm)) / (2.0 * H);
                if !close(fd, grad[i]) {
                    return Err(Error::InvalidFunction(format!(
                        "gradient component {i} at {x:?}: analytic {} vs finite difference {fd}",
                        grad[i]
                    )));
                }
                let gp = self.gradient(&xp);
                let gm = self.gradient(&xm);
                for j in 0..self.dim {
                    let fd = (gp[j] - gm[j]) / (2.0 * H);
                    if !close(fd, hess[j][i]) {
                        return Err(Error::InvalidFunction(format!(
                            "hessian entry ({j},{i}) at {x:?}: analytic {} vs finite difference {fd}",
                            hess[j][i]
                        )));
                    }
                }
                xp[i] = x[i];
                xm[i] = x[i];
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.family {
            FunctionFamily::Polynomial { terms } => terms
                .iter()
                .map(|t| {
                    t.coef
                        * t.powers
                            .iter()
                            .zip(x)
                            .map(|(&p, &xi)| xi.powi(p as i32))
                            .product::<f64>()
                })
                .sum(),
            FunctionFamily::ExpAffine {
                scale,
                weights,
                offset,
                constant,
            } => scale * (dot(weights, x) + offset).exp() + constant,
            FunctionFamily::GaussianBump {
                amplitude,
                center,
                width,
            } => amplitude * (-sq_dist(x, center) / (2.0 * width * width)).exp(),
            FunctionFamily::MollifiedCall { strike, n } => {
                let k = n * std::f64::consts::LN_2;
                softplus(k * (x[0] - strike)) / k
            }
            FunctionFamily::Custom => (self.custom.as_ref().expect("custom fns").value)(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.family {
            FunctionFamily::Polynomial { terms } => (0..self.dim)
                .map(|i| {
                    terms
                        .iter()
                        .filter(|t| t.powers[i] > 0)
                        .map(|t| {
                            let mut prod = t.coef * t.powers[i] as f64;
                            for (j, (&p, &xj)) in t.powers.iter().zip(x).enumerate() {
                                let p = if j == i { p - 1 } else { p };
                                prod *= xj.powi(p as i32);
                            }
                            prod
                        })
                        .sum()
                })
                .collect(),
            FunctionFamily::ExpAffine {
                scale,
                weights,
                offset,
                ..
            } => {
                let e = scale * (dot(weights, x) + offset).exp();
                weights.iter().map(|w| w * e).collect()
            }
            FunctionFamily::GaussianBump { center, width, .. } => {
                let v = self.value(x);
                let w2 = width * width;
                x.iter()
                    .zip(center)
                    .map(|(xi, ci)| -(xi - ci) / w2 * v)
                    .collect()
            }
            FunctionFamily::MollifiedCall { strike, n } => {
                let k = n * std::f64::consts::LN_2;
                vec![sigmoid(k * (x[0] - strike))]
            }
            FunctionFamily::Custom => (self.custom.as_ref().expect("custom fns").gradient)(x),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim;
        match &self.family {
            FunctionFamily::Polynomial { terms } => {
                let mut h = vec![vec![0.0; d]; d];
                for t in terms {
                    for i in 0..d {
                        for j in 0..d {
                            let mut powers = t.powers.clone();
                            let mut c = t.coef;
                            if powers[i] == 0 {
                                continue;
                            }
                            c *= powers[i] as f64;
                            powers[i] -= 1;
                            if powers[j] == 0 {
                                continue;
                            }
                            c *= powers[j] as f64;
                            powers[j] -= 1;
                            h[i][j] += c * powers
                                .iter()
                                .zip(x)
                                .map(|(&p, &xk)| xk.powi(p as i32))
                                .product::<f64>();
                        }
                    }
                }
                h
            }
            FunctionFamily::ExpAffine {
                scale,
                weights,
                offset,
                ..
            } => {
                let e = scale * (dot(weights, x) + offset).exp();
                weights
                    .iter()
                    .map(|wi| weights.iter().map(|wj| wi * wj * e).collect())
                    .collect()
            }
            FunctionFamily::GaussianBump { center, width, .. } => {
                let v = self.value(x);
                let w2 = width * width;
                (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| {
                                let di = x[i] - center[i];
                                let dj = x[j] - center[j];
                                let delta = if i == j { 1.0 } else { 0.0 };
                                v * (di * dj / (w2 * w2) - delta / w2)
                            })
                            .collect()
                    })
                    .collect()
            }
            FunctionFamily::MollifiedCall { strike, n } => {
                let k = n * std::f64::consts::LN_2;
                let s = sigmoid(k * (x[0] - strike));
                vec![vec![k * s * (1.0 - s)]]
            }
            FunctionFamily::Custom => (self.custom.as_ref().expect("custom fns").hessian)(x),
        }
    }

    /// Scalar shorthand `(f, f', f'')` for one-dimensional functions.
    pub fn derivatives_1d(&self, x: f64) -> (f64, f64, f64) {
        let p = [x];
        (self.value(&p), self.gradient(&p)[0], self.hessian(&p)[0][0])
    }

    /// `a f + b g` as a custom function.
    pub fn linear_combination(
        a: f64,
        f: &SmoothFunction,
        b: f64,
        g: &SmoothFunction,
    ) -> Result<SmoothFunction> {
        if f.dim != g.dim {
            return Err(Error::DimensionMismatch {
                expected: f.dim,
                got: g.dim,
            });
        }
        let (f1, g1) = (f.clone(), g.clone());
        let (f2, g2) = (f.clone(), g.clone());
        let (f3, g3) = (f.clone(), g.clone());
        Ok(SmoothFunction::custom(
            f.dim,
            move |x| a * f1.value(x) + b * g1.value(x),
            move |x| {
                f2.gradient(x)
                    .iter()
                    .zip(g2.gradient(x))
                    .map(|(u, v)| a * u + b * v)
                    .collect()
            },
            move |x| {
                f3.hessian(x)
                    .iter()
                    .zip(g3.hessian(x))
                    .map(|(ru, rv)| ru.iter().zip(rv).map(|(u, v)| a * u + b * v).collect())
                    .collect()
            },
        ))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
