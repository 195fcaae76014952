//! The integro-differential generator and first-order short-time expansions.

mod function;

pub use function::{FunctionFamily, Monomial, SmoothFunction};

use crate::characteristics::{
    kappa, ExpModelCharacteristics, JumpCompensator, LocalCharacteristics,
};
use crate::error::{Error, Result};

/// Below this jump size the compensated integrand is evaluated in the
/// integral-remainder form `int_0^h (h - s) f''(x + s) ds`, which avoids the
/// cancellation in `f(x + h) - f(x) - h f'(x)`.
pub const REMAINDER_RADIUS: f64 = 1e-2;

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// `f(x + h) - f(x) - h f'(x) = h^2 int_0^1 (1 - v) f''(x + v h) dv`, by
/// 8-point Gauss-Legendre on the second derivative `d2`.
pub fn taylor_remainder<D: Fn(f64) -> f64>(h: f64, d2: D) -> f64 {
    let mut acc = 0.0;
    for (node, weight) in GL8 {
        for v in [0.5 * (1.0 - node), 0.5 * (1.0 + node)] {
            acc += weight * (1.0 - v) * d2(v * h);
        }
    }
    0.5 * acc * h * h
}

/// Anything that can act as the generator `L_0` on smooth functions.
pub trait Generator {
    fn dim(&self) -> usize;
    fn apply(&self, f: &SmoothFunction, x: &[f64], tol: f64) -> Result<f64>;
}

impl Generator for LocalCharacteristics {
    fn dim(&self) -> usize {
        LocalCharacteristics::dim(self)
    }
    fn apply(&self, f: &SmoothFunction, x: &[f64], tol: f64) -> Result<f64> {
        apply_generator(self, f, x, tol)
    }
}

impl Generator for ExpModelCharacteristics {
    fn dim(&self) -> usize {
        1
    }
    fn apply(&self, f: &SmoothFunction, x: &[f64], tol: f64) -> Result<f64> {
        if x.len() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: x.len(),
            });
        }
        apply_exp_generator(self, f, x[0], tol)
    }
}

fn jump_integral<G: Fn(f64) -> f64, T: Fn(f64) -> f64>(
    m: &JumpCompensator,
    exact: G,
    near: T,
    tol: f64,
) -> Result<f64> {
    if m.is_zero() {
        return Ok(0.0);
    }
    if let JumpCompensator::Atomic(_) = m {
        return Ok(m.integrate(exact, tol)?.value);
    }
    Ok(m.integrate(
        |y| {
            if y.abs() < REMAINDER_RADIUS {
                near(y)
            } else {
                exact(y)
            }
        },
        tol,
    )?
    .value)
}

/// `L_0 f(x) = beta . grad f + 1/2 tr[delta delta^T hess f] + int [f(x+y) - f(x) - kappa(y) f'(x)] m(dy)`.
pub fn apply_generator(
    chars: &LocalCharacteristics,
    f: &SmoothFunction,
    x: &[f64],
    tol: f64,
) -> Result<f64> {
    let d = chars.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: f.dim(),
        });
    }
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let grad = f.gradient(x);
    let hess = f.hessian(x);
    let drift: f64 = chars.beta().iter().zip(&grad).map(|(b, g)| b * g).sum();
    let cov = chars.covariance();
    let mut diffusion = 0.0;
    for i in 0..d {
        for j in 0..d {
            diffusion += cov[i][j] * hess[i][j];
        }
    }
    diffusion *= 0.5;

    let jumps = if d == 1 {
        let x0 = x[0];
        let (fx, g1) = (f.value(x), grad[0]);
        jump_integral(
            chars.jumps(),
            |y| f.value(&[x0 + y]) - fx - kappa(y) * g1,
            |y| {
                y * y * y / (1.0 + y * y) * g1 + taylor_remainder(y, |s| f.derivatives_1d(x0 + s).2)
            },
            tol,
        )?
    } else {
        0.0
    };
    Ok(drift + diffusion + jumps)
}

/// Price-space generator `r x f' + x^2 sigma^2 / 2 f'' + int [f(x e^y) - f(x) - x (e^y - 1) f'(x)] m(dy)`.
pub fn apply_exp_generator(
    ec: &ExpModelCharacteristics,
    f: &SmoothFunction,
    x: f64,
    tol: f64,
) -> Result<f64> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim(),
        });
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "price-space generator needs x > 0, got {x}"
        )));
    }
    let (fx, d1, d2) = f.derivatives_1d(x);
    let local = ec.r * x * d1 + 0.5 * x * x * ec.sigma * ec.sigma * d2;
    let jumps = jump_integral(
        &ec.jumps,
        |y| f.value(&[x * y.exp()]) - fx - x * y.exp_m1() * d1,
        |y| taylor_remainder(x * y.exp_m1(), |s| f.derivatives_1d(x + s).2),
        tol,
    )?;
    Ok(local + jumps)
}

/// First-order expansion `f(x) + t L_0 f(x)` of `E[f(xi_t)]`.
pub fn short_time_expectation<G: Generator + ?Sized>(
    generator: &G,
    f: &SmoothFunction,
    x: &[f64],
    t: f64,
    tol: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    let fx = f.value(x);
    if t == 0.0 {
        return Ok(fx);
    }
    Ok(fx + t * generator.apply(f, x, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{Atom, StableKernel};

    const TOL: f64 = 1e-10;

    fn square() -> SmoothFunction {
        SmoothFunction::polynomial_1d(&[0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn drift_on_square() {
        let c = LocalCharacteristics::scalar(0.3, 0.0, JumpCompensator::zero()).unwrap();
        let v = apply_generator(&c, &square(), &[2.0], TOL).unwrap();
        assert!((v - 1.2).abs() < 1e-15);
        let e = short_time_expectation(&c, &square(), &[2.0], 0.01, TOL).unwrap();
        assert!((e - 4.012).abs() < 1e-14);
        assert_eq!(
            short_time_expectation(&c, &square(), &[2.0], 0.0, TOL).unwrap(),
            4.0
        );
    }

    #[test]
    fn diffusion_on_square() {
        let c = LocalCharacteristics::scalar(0.0, 0.35, JumpCompensator::zero()).unwrap();
        let v = apply_generator(&c, &square(), &[-1.3], TOL).unwrap();
        assert!((v - 0.35 * 0.35).abs() < 1e-15);
    }

    #[test]
    fn atomic_bump() {
        let m = JumpCompensator::atomic(vec![Atom::new(1.0, 0.5)]).unwrap();
        let c = LocalCharacteristics::scalar(0.0, 0.0, m).unwrap();
        let f = SmoothFunction::gaussian_bump(1.0, vec![0.2], 0.7).unwrap();
        let v = apply_generator(&c, &f, &[0.0], TOL).unwrap();
        let fv = |x: f64| (-(x - 0.2f64).powi(2) / (2.0 * 0.49)).exp();
        let d1 = fv(0.0) * 0.2 / 0.49;
        let exact = 0.5 * (fv(1.0) - fv(0.0) - 0.5 * d1);
        assert!((v - exact).abs() < 1e-14, "{v} vs {exact}");
    }

    #[test]
    fn linear_payoff_grows_at_rate_r() {
        let f = SmoothFunction::polynomial_1d(&[0.0, 1.0]).unwrap();
        for m in [
            JumpCompensator::zero(),
            JumpCompensator::normal(1.0, 0.0, 0.4).unwrap(),
            JumpCompensator::stable_like(1.5, StableKernel::Constant(0.1), JumpCompensator::zero())
                .unwrap(),
        ] {
            let ec = ExpModelCharacteristics::new(1.0, 0.03, 0.2, m).unwrap();
            let v = apply_exp_generator(&ec, &f, 1.7, TOL).unwrap();
            assert!((v - 0.03 * 1.7).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn second_moment_of_price() {
        let s0 = 1.4;
        let f = SmoothFunction::polynomial_1d(&[s0 * s0, -2.0 * s0, 1.0]).unwrap();
        let m = JumpCompensator::double_exponential(1.5, 0.4, 9.0, 6.0).unwrap();
        let jump_var = m.integrate(|y| y.exp_m1().powi(2), TOL).unwrap().value;
        let ec = ExpModelCharacteristics::new(s0, 0.0, 0.25, m).unwrap();
        let v = apply_exp_generator(&ec, &f, s0, TOL).unwrap();
        let expected = s0 * s0 * 0.25 * 0.25 + s0 * s0 * jump_var;
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }

    #[test]
    fn stable_generator_is_finite_and_matches_power_series() {
        // f(x) = x^2: L f(0) = int (y^2 - 0) m(dy) = 2 c / (2 - alpha)
        let m =
            JumpCompensator::stable_like(1.5, StableKernel::Constant(0.1), JumpCompensator::zero())
                .unwrap();
        let c = LocalCharacteristics::scalar(0.0, 0.0, m).unwrap();
        let v = apply_generator(&c, &square(), &[0.0], TOL).unwrap();
        assert!((v - 0.4).abs() < 1e-9, "{v}");
    }

    #[test]
    fn truncation_consistency() {
        let m = JumpCompensator::normal(2.0, 0.1, 0.3).unwrap();
        let f = SmoothFunction::gaussian_bump(1.0, vec![0.1], 0.4).unwrap();
        let beta = 0.07;
        let kappa_form = apply_generator(
            &LocalCharacteristics::scalar(beta, 0.2, m.clone()).unwrap(),
            &f,
            &[0.3],
            TOL,
        )
        .unwrap();
        let shift = m.integrate(|y| y - kappa(y), TOL).unwrap().value;
        let (fx, g, h) = f.derivatives_1d(0.3);
        let untruncated = (beta + shift) * g
            + 0.5 * 0.04 * h
            + m.integrate(|y| f.value(&[0.3 + y]) - fx - y * g, TOL)
                .unwrap()
                .value;
        assert!((kappa_form - untruncated).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let c = LocalCharacteristics::scalar(0.0, 0.1, JumpCompensator::zero()).unwrap();
        let f = SmoothFunction::gaussian_bump(1.0, vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            apply_generator(&c, &f, &[0.0], TOL),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multivariate_trace() {
        // f = x1 x2, delta delta^T = [[5, 6], [6, 9]] -> 1/2 (6 + 6) = 6
        let f = SmoothFunction::polynomial(
            2,
            vec![Monomial {
                coef: 1.0,
                powers: vec![1, 1],
            }],
        )
        .unwrap();
        let c = LocalCharacteristics::new(
            vec![1.0, -1.0],
            vec![vec![1.0, 2.0], vec![0.0, 3.0]],
            JumpCompensator::zero(),
        )
        .unwrap();
        let v = apply_generator(&c, &f, &[2.0, 3.0], TOL).unwrap();
        assert!((v - (3.0 - 2.0 + 6.0)).abs() < 1e-14);
    }
}
