//! Characteristics of `f(Z)` for a jump-diffusion `Z`, and of time-changed Lévy processes.

use std::sync::Arc;

use crate::characteristics::compensator::{kappa, Atom, DensityLaw, JumpCompensator};
use crate::characteristics::local::LocalCharacteristics;
use crate::error::{Error, Result};
use crate::operator::{taylor_remainder, SmoothFunction, REMAINDER_RADIUS};

/// Jump amplitude `y -> psi(0, Z0, y)` of the underlying Markov process.
pub type JumpMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Jump measure `nu` driving the Markov process.
#[derive(Debug, Clone)]
pub enum MarkovJumps {
    /// Point masses in `R^k`.
    Atomic(Vec<(Vec<f64>, f64)>),
    /// Any scalar compensator; the jump map receives a one-element slice.
    Scalar(JumpCompensator),
}

/// `dZ = b dt + Sigma dW + int psi(Z, y) N~(dt dy)` frozen at `Z0`, observed through `f`.
#[derive(Clone)]
pub struct MarkovModel {
    pub b: Vec<f64>,
    /// `d x n`, by rows.
    pub sigma: Vec<Vec<f64>>,
    pub jump_map: JumpMap,
    pub nu: MarkovJumps,
    pub f: SmoothFunction,
    pub z0: Vec<f64>,
}

/// Output of [`from_markov`].
#[derive(Debug, Clone)]
pub struct MarkovCharacteristics {
    /// Characteristics of `xi = f(Z)` in the truncation convention of [`LocalCharacteristics`].
    pub chars: LocalCharacteristics,
    /// Drift of `xi` when every jump is compensated, `grad f . b + tr/2 + int (...) nu(dy)`.
    pub compensated_drift: f64,
    /// `f(Z0)`.
    pub xi0: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds the scalar characteristics of `xi_t = f(Z_t)` at time 0.
///
/// The jump part of `xi` is the image of `nu` under
/// `y -> f(Z0 + psi(y)) - f(Z0)`: atomic `nu` maps to atoms, other measures
/// to a pushforward compensator whose tails are indicator integrals against `nu`.
pub fn from_markov(model: &MarkovModel, tol: f64) -> Result<MarkovCharacteristics> {
    let d = model.z0.len();
    if d == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    for got in [model.b.len(), model.sigma.len(), model.f.dim()] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    if model
        .sigma
        .iter()
        .any(|row| row.len() != model.sigma[0].len())
    {
        return Err(Error::InvariantViolation(
            "Sigma rows must have equal length".into(),
        ));
    }
    let z0 = &model.z0;
    let f0 = model.f.value(z0);
    let grad = model.f.gradient(z0);
    let hess = model.f.hessian(z0);
    if grad[d - 1] == 0.0 {
        return Err(Error::DegenerateGradient);
    }

    // 1/2 tr[hess Sigma Sigma^T]
    let n = model.sigma[0].len();
    let mut half_trace = 0.0;
    for i in 0..d {
        for j in 0..d {
            let cov_ij: f64 = (0..n).map(|k| model.sigma[i][k] * model.sigma[j][k]).sum();
            half_trace += 0.5 * hess[i][j] * cov_ij;
        }
    }
    let vol_row: Vec<f64> = (0..n)
        .map(|k| (0..d).map(|i| grad[i] * model.sigma[i][k]).sum())
        .collect();
    let delta = vol_row.iter().map(|v| v * v).sum::<f64>().sqrt();

    let increment = {
        let f = model.f.clone();
        let z0 = z0.clone();
        let map = model.jump_map.clone();
        move |y: &[f64]| {
            let jump = map(y);
            let z: Vec<f64> = z0.iter().zip(&jump).map(|(a, b)| a + b).collect();
            f.value(&z) - f0
        }
    };

    let (jump_drift, jumps) = match &model.nu {
        MarkovJumps::Atomic(atoms) => {
            let mut drift = 0.0;
            let mut image = Vec::with_capacity(atoms.len());
            for (y, mass) in atoms {
                let jump = (model.jump_map)(y);
                if jump.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: jump.len(),
                    });
                }
                let u = increment(y);
                drift += mass * (u - dot(&jump, &grad));
                if u != 0.0 {
                    image.push(Atom::new(u, *mass));
                }
            }
            (drift, JumpCompensator::atomic(image)?)
        }
        MarkovJumps::Scalar(nu) => {
            let map = model.jump_map.clone();
            let inc = increment.clone();
            let (grad_c, z0c, fc) = (grad.clone(), z0.clone(), model.f.clone());
            let drift = nu
                .integrate(
                    |y| {
                        let jump = map(&[y]);
                        if y.abs() < REMAINDER_RADIUS {
                            // f(z0 + j) - f(z0) - j . grad f along the segment z0 + s j
                            taylor_remainder(1.0, |s| {
                                let z: Vec<f64> =
                                    z0c.iter().zip(&jump).map(|(a, b)| a + s * b).collect();
                                let h = fc.hessian(&z);
                                let mut q = 0.0;
                                for i in 0..d {
                                    for j in 0..d {
                                        q += jump[i] * h[i][j] * jump[j];
                                    }
                                }
                                q
                            })
                        } else {
                            inc(&[y]) - dot(&jump, &grad_c)
                        }
                    },
                    tol,
                )?
                .value;
            let singularity = match nu {
                JumpCompensator::StableLike(s) => 1.0 + s.alpha,
                JumpCompensator::Density(dc)
                    if !matches!(dc.law, DensityLaw::Pushforward { .. }) =>
                {
                    dc.singularity
                }
                _ => 0.0,
            };
            let scalar_inc = Arc::new(move |y: f64| increment(&[y]));
            (
                drift,
                JumpCompensator::pushforward(nu.clone(), scalar_inc, singularity)?,
            )
        }
    };

    let compensated_drift = dot(&grad, &model.b) + half_trace + jump_drift;
    let large_jump_shift = jumps.integrate(|u| u - kappa(u), tol)?.value;
    let chars = LocalCharacteristics::scalar(compensated_drift + large_jump_shift, delta, jumps)?;
    Ok(MarkovCharacteristics {
        chars,
        compensated_drift,
        xi0: f0,
    })
}

/// Characteristics at time 0 of `L_{Theta_t}` with `Theta_t = int_0^t theta_s ds`.
///
/// `b` is the mean drift of `L` (`E[L_1] = b`), which needs `int y^2 nu(dy) < inf`.
pub fn from_time_changed_levy(
    b: f64,
    sigma2: f64,
    nu: &JumpCompensator,
    theta0: f64,
    tol: f64,
) -> Result<LocalCharacteristics> {
    if !(theta0 >= 0.0 && theta0.is_finite()) {
        return Err(Error::InvariantViolation(format!(
            "theta0 must be >= 0, got {theta0}"
        )));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvariantViolation(format!(
            "sigma^2 must be >= 0, got {sigma2}"
        )));
    }
    match nu.integrate(|y| y * y, tol) {
        Ok(v) if v.value.is_finite() => {}
        _ => {
            return Err(Error::InvariantViolation(
                "Levy measure must satisfy int y^2 nu(dy) < inf".into(),
            ))
        }
    }
    let shift = nu.integrate(|y| y - kappa(y), tol)?.value;
    LocalCharacteristics::scalar(
        (b - shift) * theta0,
        (sigma2 * theta0).sqrt(),
        nu.scaled(theta0)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{apply_generator, Monomial};

    const TOL: f64 = 1e-10;

    fn identity_map() -> JumpMap {
        Arc::new(|y: &[f64]| y.to_vec())
    }

    fn linear_1d(slope: f64) -> SmoothFunction {
        SmoothFunction::polynomial_1d(&[0.0, slope]).unwrap()
    }

    #[test]
    fn identity_observation_keeps_triplet() {
        let nu = JumpCompensator::normal(1.0, 0.0, 0.3).unwrap();
        let model = MarkovModel {
            b: vec![0.03],
            sigma: vec![vec![0.2]],
            jump_map: identity_map(),
            nu: MarkovJumps::Scalar(nu.clone()),
            f: linear_1d(1.0),
            z0: vec![0.5],
        };
        let out = from_markov(&model, TOL).unwrap();
        assert!((out.compensated_drift - 0.03).abs() < 1e-12);
        assert!((out.chars.scalar_volatility() - 0.2).abs() < 1e-15);
        for u in [0.05, 0.3, 1.0] {
            let a = out.chars.jumps().upper_tail(u, TOL).unwrap();
            let b = nu.upper_tail(u, TOL).unwrap();
            assert!((a - b).abs() < 1e-8, "u={u}: {a} vs {b}");
            let a = out.chars.jumps().lower_tail(-u, TOL).unwrap();
            let b = nu.lower_tail(-u, TOL).unwrap();
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_scaling_of_atom() {
        let model = MarkovModel {
            b: vec![0.0],
            sigma: vec![vec![0.0]],
            jump_map: identity_map(),
            nu: MarkovJumps::Atomic(vec![(vec![0.5], 1.0)]),
            f: linear_1d(2.0),
            z0: vec![0.0],
        };
        let m = from_markov(&model, TOL).unwrap().chars.jumps().clone();
        assert_eq!(m.upper_tail(0.4, TOL).unwrap(), 1.0);
        assert_eq!(m.upper_tail(1.0, TOL).unwrap(), 1.0);
        assert_eq!(m.upper_tail(1.0001, TOL).unwrap(), 0.0);
    }

    #[test]
    fn two_dimensional_atom_enumeration() {
        let grid = [-0.4, 0.1, 0.3];
        let masses = [0.5, 1.0, 2.0];
        let mut atoms = Vec::new();
        for (i, &a) in grid.iter().enumerate() {
            for (j, &b) in grid.iter().enumerate() {
                atoms.push((vec![a, b], masses[i] * masses[j]));
            }
        }
        let f = SmoothFunction::polynomial(
            2,
            vec![
                Monomial {
                    coef: 1.0,
                    powers: vec![1, 0],
                },
                Monomial {
                    coef: 1.0,
                    powers: vec![0, 1],
                },
            ],
        )
        .unwrap();
        let model = MarkovModel {
            b: vec![0.01, 0.02],
            sigma: vec![vec![0.1, 0.0], vec![0.0, 0.2]],
            jump_map: identity_map(),
            nu: MarkovJumps::Atomic(atoms.clone()),
            f,
            z0: vec![1.0, 2.0],
        };
        let out = from_markov(&model, TOL).unwrap();
        assert!((out.chars.scalar_volatility() - (0.01f64 + 0.04).sqrt()).abs() < 1e-15);
        for u in [0.05, 0.25, 0.5, 0.7] {
            let brute: f64 = atoms
                .iter()
                .filter(|(y, _)| y[0] + y[1] >= u)
                .map(|(_, w)| w)
                .sum();
            assert!((out.chars.jumps().upper_tail(u, TOL).unwrap() - brute).abs() < 1e-12);
            let brute: f64 = atoms
                .iter()
                .filter(|(y, _)| y[0] + y[1] <= -u)
                .map(|(_, w)| w)
                .sum();
            assert!((out.chars.jumps().lower_tail(-u, TOL).unwrap() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_gradient_rejected() {
        let model = MarkovModel {
            b: vec![0.0],
            sigma: vec![vec![0.1]],
            jump_map: identity_map(),
            nu: MarkovJumps::Atomic(vec![]),
            f: SmoothFunction::polynomial_1d(&[0.0, 0.0, 1.0]).unwrap(),
            z0: vec![0.0],
        };
        assert!(matches!(
            from_markov(&model, TOL),
            Err(Error::DegenerateGradient)
        ));
    }

    #[test]
    fn frozen_clock_and_identity_time_change() {
        let nu = JumpCompensator::normal(1.0, 0.1, 0.2).unwrap();
        let frozen = from_time_changed_levy(0.05, 0.04, &nu, 0.0, TOL).unwrap();
        assert_eq!(frozen.beta(), &[0.0]);
        assert_eq!(frozen.scalar_volatility(), 0.0);
        assert!(
            frozen
                .jumps()
                .integrate(|y| y * y, TOL)
                .unwrap()
                .value
                .abs()
                < 1e-15
        );

        let same = from_time_changed_levy(0.05, 0.04, &nu, 1.0, TOL).unwrap();
        let shift = nu.integrate(|y| y - kappa(y), TOL).unwrap().value;
        assert!((same.beta()[0] - (0.05 - shift)).abs() < 1e-15);
        assert!((same.scalar_volatility() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn generator_scales_with_rate() {
        let nu = JumpCompensator::atomic(vec![Atom::new(0.5, 1.0)]).unwrap();
        let f = SmoothFunction::gaussian_bump(1.0, vec![0.1], 0.6).unwrap();
        let l1 = from_time_changed_levy(0.02, 0.09, &nu, 1.0, TOL).unwrap();
        let l2 = from_time_changed_levy(0.02, 0.09, &nu, 2.0, TOL).unwrap();
        assert_eq!(l2.jumps().upper_tail(0.5, TOL).unwrap(), 2.0);
        let g1 = apply_generator(&l1, &f, &[0.0], TOL).unwrap();
        let g2 = apply_generator(&l2, &f, &[0.0], TOL).unwrap();
        assert!((g2 / g1 - 2.0).abs() < 1e-12, "{g1} {g2}");
    }

    #[test]
    fn heavy_levy_measure_rejected() {
        // finite (e^y - 1)^2 moment, infinite second moment
        let nu =
            JumpCompensator::density(|y: f64| 1.0 / (y * y), f64::NEG_INFINITY, -1.0, 0.0).unwrap();
        assert!(matches!(
            from_time_changed_levy(0.0, 0.0, &nu, 1.0, TOL),
            Err(Error::InvariantViolation(_))
        ));
    }
}
