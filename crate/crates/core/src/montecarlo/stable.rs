use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Symmetric alpha-stable variate with characteristic function `exp(-|z|^alpha)`
/// (Chambers–Mallows–Stuck).
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = FRAC_PI_2 * (2.0 * rng.random::<f64>() - 1.0);
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::rng::path_rng;

    // E[cos(zX)] = exp(-|z|^alpha) for the standard symmetric law.
    #[test]
    fn empirical_characteristic_function() {
        let alpha = 1.5;
        let n = 200_000;
        let mut rng = path_rng(11, 0);
        let xs: Vec<f64> = (0..n).map(|_| symmetric_stable(alpha, &mut rng)).collect();
        for z in [0.3f64, 1.0, 2.0] {
            let emp = xs.iter().map(|x| (z * x).cos()).sum::<f64>() / n as f64;
            let exact = (-z.powf(alpha)).exp();
            // var(cos) <= 1/2, so 5 std errors is below 0.008
            assert!((emp - exact).abs() < 0.008, "z={z}: {emp} vs {exact}");
        }
    }

    #[test]
    fn alpha_two_limit_is_gaussian_with_variance_two() {
        let mut rng = path_rng(5, 1);
        let n = 100_000;
        let var = (0..n)
            .map(|_| symmetric_stable(1.999_999, &mut rng).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((var - 2.0).abs() < 0.1, "{var}");
    }
}
