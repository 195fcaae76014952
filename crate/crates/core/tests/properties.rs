use proptest::prelude::*;
use shortmat::asymptotics::{atm_coefficient, otm_slope};
use shortmat::characteristics::{
    from_time_changed_levy, Atom, ExpModelCharacteristics, JumpCompensator, LocalCharacteristics,
    StableKernel,
};
use shortmat::operator::{apply_generator, SmoothFunction};

const TOL: f64 = 1e-10;

fn atomic() -> impl Strategy<Value = JumpCompensator> {
    prop::collection::vec((-1.0..1.0f64, 0.0..3.0f64), 1..5).prop_map(|v| {
        JumpCompensator::atomic(v.into_iter().map(|(y, w)| Atom::new(y, w)).collect()).unwrap()
    })
}

fn density() -> impl Strategy<Value = JumpCompensator> {
    prop_oneof![
        (0.1..3.0f64, -0.3..0.3f64, 0.05..0.5f64)
            .prop_map(|(l, m, s)| JumpCompensator::normal(l, m, s).unwrap()),
        (0.1..3.0f64, 0.0..1.0f64, 3.0..20.0f64, 1.0..20.0f64)
            .prop_map(|(l, p, u, d)| JumpCompensator::double_exponential(l, p, u, d).unwrap()),
    ]
}

fn stable() -> impl Strategy<Value = JumpCompensator> {
    (1.1..1.9f64, 0.01..0.5f64).prop_map(|(a, c)| {
        JumpCompensator::stable_like(a, StableKernel::Constant(c), JumpCompensator::zero()).unwrap()
    })
}

fn any_measure() -> impl Strategy<Value = JumpCompensator> {
    prop_oneof![atomic(), density(), stable()]
}

fn atoms_of(m: &JumpCompensator) -> Vec<Atom> {
    match m {
        JumpCompensator::Atomic(a) => a.clone(),
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn psi_up_nonincreasing(m in prop_oneof![atomic(), density()]) {
        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let v = m.exp_double_tail_up(0.05 * i as f64, TOL).unwrap();
            prop_assert!(v >= 0.0 && v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn psi_down_nondecreasing(m in prop_oneof![atomic(), density()]) {
        let mut prev = 0.0f64;
        for i in (1..=20).rev() {
            let v = m.exp_double_tail_down(-0.05 * i as f64, TOL).unwrap();
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn payoff_identity(m in prop_oneof![atomic(), density()], s0 in 0.5..2.0f64, moneyness in 1.01..1.8f64) {
        let k = s0 * moneyness;
        let psi = s0 * m.exp_double_tail_up((k / s0).ln(), TOL).unwrap();
        let payoff = m.integrate_on(&|y| s0 * y.exp() - k, (k / s0).ln(), f64::INFINITY, TOL).unwrap().value;
        prop_assert!((psi - payoff).abs() <= 10.0 * TOL * s0.max(1.0), "{} vs {}", psi, payoff);
    }

    #[test]
    fn integral_is_linear(m in any_measure(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let g1 = |y: f64| y * y;
        let g2 = shortmat::characteristics::exp_excess;
        let lhs = m.integrate(|y| a * g1(y) + b * g2(y), TOL).unwrap().value;
        let rhs = a * m.integrate(g1, TOL).unwrap().value + b * m.integrate(g2, TOL).unwrap().value;
        prop_assert!((lhs - rhs).abs() < 1e-8, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn atomic_operations_match_finite_sums(m in atomic(), s0 in 0.5..2.0f64) {
        let atoms = atoms_of(&m);
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300) || a == b;
        let sum = |f: &dyn Fn(f64) -> f64| atoms.iter().map(|a| a.mass * f(a.location)).sum::<f64>();
        prop_assert!(rel(m.integrate(|y| y.exp(), TOL).unwrap().value, sum(&|y| y.exp())));
        let z = 0.1;
        let up = sum(&|y| if y > z { y.exp() - z.exp() } else { 0.0 });
        let down = sum(&|y| if y < -z { (-z).exp() - y.exp() } else { 0.0 });
        prop_assert!(rel(m.exp_double_tail_up(z, TOL).unwrap(), up));
        prop_assert!(rel(m.exp_double_tail_down(-z, TOL).unwrap(), down));
        let ec = ExpModelCharacteristics::new(s0, 0.0, 0.0, m.clone()).unwrap();
        let otm = otm_slope(&ec, 1.1 * s0, TOL).unwrap().coefficient;
        prop_assert!(rel(otm, sum(&|y| (s0 * y.exp() - 1.1 * s0).max(0.0))));
        let atm = atm_coefficient(&ec, TOL).unwrap().coefficient;
        prop_assert!(rel(atm, s0 * sum(&|y| y.exp_m1().max(0.0))));
    }

    #[test]
    fn time_change_scales_linearly(nu in prop_oneof![atomic(), density()], theta in 0.0..5.0f64) {
        let one = from_time_changed_levy(0.02, 0.04, &nu, 1.0, TOL).unwrap();
        let th = from_time_changed_levy(0.02, 0.04, &nu, theta, TOL).unwrap();
        for g in [|y: f64| y * y, |y: f64| y.exp_m1().powi(2), |y: f64| (y.exp() - 1.1).max(0.0)] {
            let a = one.jumps().integrate(g, TOL).unwrap().value;
            let b = th.jumps().integrate(g, TOL).unwrap().value;
            prop_assert!((b - theta * a).abs() < 1e-8 * (1.0 + theta));
        }
        prop_assert!((th.beta()[0] - theta * one.beta()[0]).abs() < 1e-12);
        prop_assert!((th.scalar_volatility().powi(2) - theta * 0.04).abs() < 1e-12);
    }

    #[test]
    fn generator_is_linear(m in any_measure(), a in -2.0..2.0f64, b in -2.0..2.0f64, x in -0.5..0.5f64) {
        let c = LocalCharacteristics::scalar(0.1, 0.2, m).unwrap();
        let f = SmoothFunction::gaussian_bump(1.0, vec![0.1], 0.5).unwrap();
        let g = SmoothFunction::exp_affine(0.5, vec![0.7], 0.0, 1.0).unwrap();
        let h = SmoothFunction::linear_combination(a, &f, b, &g).unwrap();
        let lh = apply_generator(&c, &h, &[x], TOL).unwrap();
        let lf = apply_generator(&c, &f, &[x], TOL).unwrap();
        let lg = apply_generator(&c, &g, &[x], TOL).unwrap();
        prop_assert!((lh - (a * lf + b * lg)).abs() < 1e-8);
    }

    #[test]
    fn otm_slope_nonincreasing_in_strike(m in prop_oneof![atomic(), density(), stable()]) {
        let ec = ExpModelCharacteristics::new(1.0, 0.0, 0.1, m).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..=15 {
            let a = otm_slope(&ec, 1.0 + 0.04 * i as f64, TOL).unwrap().coefficient;
            prop_assert!(a <= prev + 1e-9);
            prev = a;
        }
    }

    #[test]
    fn coefficients_homogeneous_in_spot(m in any_measure(), s0 in 0.2..5.0f64) {
        let unit = ExpModelCharacteristics::new(1.0, 0.0, 0.0, m.clone()).unwrap();
        let scaled = ExpModelCharacteristics::new(s0, 0.0, 0.0, m).unwrap();
        let a1 = otm_slope(&unit, 1.3, TOL).unwrap().coefficient;
        let a2 = otm_slope(&scaled, 1.3 * s0, TOL).unwrap().coefficient;
        prop_assert!((a2 - s0 * a1).abs() < 1e-8 * s0.max(1.0));
        let b1 = atm_coefficient(&unit, TOL).unwrap().coefficient;
        let b2 = atm_coefficient(&scaled, TOL).unwrap().coefficient;
        prop_assert!((b2 - s0 * b1).abs() < 1e-8 * s0.max(1.0));
    }

    #[test]
    fn diffusive_coefficient_ignores_jumps(m in any_measure(), sigma in 0.01..1.0f64) {
        let plain = ExpModelCharacteristics::new(1.0, 0.0, sigma, JumpCompensator::zero()).unwrap();
        let jumpy = ExpModelCharacteristics::new(1.0, 0.0, sigma, m).unwrap();
        let a = atm_coefficient(&plain, TOL).unwrap().coefficient;
        let b = atm_coefficient(&jumpy, TOL).unwrap().coefficient;
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}
