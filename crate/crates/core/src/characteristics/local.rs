use crate::characteristics::compensator::{exp_excess_kappa, JumpCompensator};
use crate::error::{Error, Result};

/// Frozen characteristics `(beta, delta, m)` of a `d`-dimensional Itô
/// semimartingale at the evaluation time.
///
/// `beta` is the drift relative to the truncation `kappa(y) = y / (1 + y^2)`:
/// small jumps enter compensated through `kappa`, large jumps raw through
/// `y - kappa(y)`. Jumps are scalar, so a nonzero compensator needs `d = 1`.
#[derive(Debug, Clone)]
pub struct LocalCharacteristics {
    beta: Vec<f64>,
    delta: Vec<Vec<f64>>,
    jumps: JumpCompensator,
}

impl LocalCharacteristics {
    /// `delta` is a `d x n` matrix given by rows.
    pub fn new(beta: Vec<f64>, delta: Vec<Vec<f64>>, jumps: JumpCompensator) -> Result<Self> {
        let d = beta.len();
        if d == 0 {
            return Err(Error::InvariantViolation(
                "dimension must be positive".into(),
            ));
        }
        if delta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: delta.len(),
            });
        }
        let n = delta[0].len();
        if let Some(row) = delta.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
        if beta
            .iter()
            .chain(delta.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvariantViolation(
                "drift and diffusion entries must be finite".into(),
            ));
        }
        if d > 1 && !jumps.is_zero() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: d,
            });
        }
        Ok(Self { beta, delta, jumps })
    }

    /// One-dimensional characteristics with scalar volatility.
    pub fn scalar(beta: f64, delta: f64, jumps: JumpCompensator) -> Result<Self> {
        Self::new(vec![beta], vec![vec![delta]], jumps)
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn delta(&self) -> &[Vec<f64>] {
        &self.delta
    }

    pub fn jumps(&self) -> &JumpCompensator {
        &self.jumps
    }

    /// `delta delta^T`, the instantaneous covariance.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        self.delta[i]
                            .iter()
                            .zip(&self.delta[j])
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Scalar volatility `|delta|` (only meaningful for `d = 1`).
    pub fn scalar_volatility(&self) -> f64 {
        self.delta[0].iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Data of the exponential model `dS = r S dt + sigma S dW + S (e^y - 1) (M - mu)(dt dy)`.
#[derive(Debug, Clone)]
pub struct ExpModelCharacteristics {
    pub s0: f64,
    pub r: f64,
    pub sigma: f64,
    pub jumps: JumpCompensator,
}

impl ExpModelCharacteristics {
    pub fn new(s0: f64, r: f64, sigma: f64, jumps: JumpCompensator) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "S0 must be > 0, got {s0}"
            )));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "r must be >= 0, got {r}"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "sigma must be >= 0, got {sigma}"
            )));
        }
        Ok(Self {
            s0,
            r,
            sigma,
            jumps,
        })
    }

    pub fn is_pure_jump(&self) -> bool {
        self.sigma == 0.0
    }

    /// `int (e^y - 1 - kappa(y)) m(dy)`, the exponential compensator correction.
    pub fn exp_compensator(&self, tol: f64) -> Result<f64> {
        Ok(self.jumps.integrate(exp_excess_kappa, tol)?.value)
    }

    /// Characteristics of `X = ln S`: drift `r - sigma^2/2 - int (e^y - 1 - kappa(y)) m(dy)`.
    pub fn log_characteristics(&self, tol: f64) -> Result<LocalCharacteristics> {
        let beta = self.r - 0.5 * self.sigma * self.sigma - self.exp_compensator(tol)?;
        LocalCharacteristics::scalar(beta, self.sigma, self.jumps.clone())
    }

    /// Reads scalar characteristics as those of a log-price started at `x0`;
    /// the discount rate is the one making `e^{-rt} S_t` a martingale.
    pub fn from_log_characteristics(
        chars: &LocalCharacteristics,
        x0: f64,
        tol: f64,
    ) -> Result<Self> {
        if chars.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: chars.dim(),
            });
        }
        let sigma = chars.scalar_volatility();
        let correction = chars.jumps().integrate(exp_excess_kappa, tol)?.value;
        let r = chars.beta()[0] + 0.5 * sigma * sigma + correction;
        if r < 0.0 {
            return Err(Error::InvariantViolation(format!(
                "implied discount rate {r} is negative; the characteristics do not describe a price with r >= 0"
            )));
        }
        Self::new(x0.exp(), r, sigma, chars.jumps().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::Atom;

    #[test]
    fn covariance_is_delta_delta_t() {
        let c = LocalCharacteristics::new(
            vec![0.0, 0.0],
            vec![vec![1.0, 2.0], vec![0.0, 3.0]],
            JumpCompensator::zero(),
        )
        .unwrap();
        assert_eq!(c.covariance(), vec![vec![5.0, 6.0], vec![6.0, 9.0]]);
    }

    #[test]
    fn multidimensional_jumps_rejected() {
        let jumps = JumpCompensator::atomic(vec![Atom::new(0.1, 1.0)]).unwrap();
        let err = LocalCharacteristics::new(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]], jumps)
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn log_and_exp_views_round_trip() {
        let jumps = JumpCompensator::normal(1.0, -0.1, 0.3).unwrap();
        let ec = ExpModelCharacteristics::new(1.3, 0.02, 0.25, jumps).unwrap();
        let lc = ec.log_characteristics(1e-10).unwrap();
        let back =
            ExpModelCharacteristics::from_log_characteristics(&lc, 1.3f64.ln(), 1e-10).unwrap();
        assert!((back.r - 0.02).abs() < 1e-12);
        assert!((back.s0 - 1.3).abs() < 1e-12);
        assert!((back.sigma - 0.25).abs() < 1e-15);
    }

    #[test]
    fn invalid_spot_rejected() {
        assert!(ExpModelCharacteristics::new(0.0, 0.0, 0.1, JumpCompensator::zero()).is_err());
        assert!(ExpModelCharacteristics::new(1.0, -0.1, 0.1, JumpCompensator::zero()).is_err());
    }
}
