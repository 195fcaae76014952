use shortmat::asymptotics::atm_coefficient;
use shortmat::characteristics::{Atom, ExpModelCharacteristics, JumpCompensator, StableKernel};
use shortmat::montecarlo::{
    call_from_samples, estimate_call, estimate_mean, simulate_terminal, slope_study, Scheme,
    SimConfig, StepRates,
};
use shortmat::operator::{apply_exp_generator, SmoothFunction};
use shortmat::Error;
use statrs::distribution::{ContinuousCDF, Normal};

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

fn cfg(n_paths: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_paths,
        master_seed: seed,
        ..Default::default()
    }
}

fn merton(r: f64) -> ExpModelCharacteristics {
    ExpModelCharacteristics::new(1.0, r, 0.2, JumpCompensator::normal(1.0, 0.0, 0.4).unwrap())
        .unwrap()
}

fn stable_model() -> ExpModelCharacteristics {
    let m = JumpCompensator::stable_like(1.5, StableKernel::Constant(0.1), JumpCompensator::zero())
        .unwrap();
    ExpModelCharacteristics::new(1.0, 0.0, 0.0, m).unwrap()
}

fn assert_discounted_martingale(ec: &ExpModelCharacteristics, t: f64, c: &SimConfig) {
    let s = simulate_terminal(ec, t, c).unwrap();
    assert!(s.iter().all(|&v| v > 0.0));
    let disc: Vec<f64> = s.iter().map(|v| v * (-ec.r * t).exp()).collect();
    let e = estimate_mean(&disc);
    assert!(
        (e.value - ec.s0).abs() < 4.0 * e.std_error,
        "mean {} se {} vs {}",
        e.value,
        e.std_error,
        ec.s0
    );
}

#[test]
fn martingale_property() {
    let bs = ExpModelCharacteristics::new(1.0, 0.0, 0.2, JumpCompensator::zero()).unwrap();
    assert_discounted_martingale(&bs, 0.1, &cfg(200_000, 1));
    assert_discounted_martingale(&merton(0.05), 0.1, &cfg(200_000, 2));
    let de = JumpCompensator::double_exponential(3.0, 0.3, 8.0, 5.0).unwrap();
    let kou = ExpModelCharacteristics::new(2.0, 0.02, 0.1, de).unwrap();
    assert_discounted_martingale(
        &kou,
        0.05,
        &SimConfig {
            n_steps: 4,
            ..cfg(200_000, 3)
        },
    );
    let euler = SimConfig {
        small_jump_cutoff: Some(0.001),
        ..cfg(200_000, 4)
    };
    assert_discounted_martingale(&stable_model(), 0.05, &euler);
    let exact = SimConfig {
        scheme: Scheme::ExactStableIncrement,
        ..cfg(200_000, 5)
    };
    assert_discounted_martingale(&stable_model(), 0.05, &exact);
}

#[test]
fn second_moment_matches_generator() {
    let ec = merton(0.0);
    let t = 0.01;
    let s = simulate_terminal(&ec, t, &cfg(1_000_000, 11)).unwrap();
    let sq: Vec<f64> = s.iter().map(|v| (v - 1.0).powi(2) / t).collect();
    let e = estimate_mean(&sq);
    let f = SmoothFunction::polynomial_1d(&[1.0, -2.0, 1.0]).unwrap();
    let lf = apply_exp_generator(&ec, &f, 1.0, 1e-10).unwrap();
    assert!(
        (e.value - lf).abs() < 4.0 * e.std_error,
        "{} +- {} vs {lf}",
        e.value,
        e.std_error
    );
}

#[test]
fn black_scholes_atm_call() {
    let ec = ExpModelCharacteristics::new(1.0, 0.0, 0.2, JumpCompensator::zero()).unwrap();
    let e = estimate_call(&ec, 0.01, 1.0, &cfg(1_000_000, 21)).unwrap();
    let exact = 2.0 * phi(0.01) - 1.0;
    assert!(
        (e.value - exact).abs() < 4.0 * e.std_error,
        "{} vs {exact}",
        e.value
    );
}

#[test]
fn strike_limits() {
    let ec = merton(0.03);
    let t = 0.05;
    let c = cfg(200_000, 31);
    let low = estimate_call(&ec, t, 1e-12, &c).unwrap();
    assert!((low.value - 1.0).abs() < 4.0 * low.std_error + 1e-12);
    let finite = ExpModelCharacteristics::new(
        1.0,
        0.0,
        0.2,
        JumpCompensator::atomic(vec![Atom::new(0.5, 2.0)]).unwrap(),
    )
    .unwrap();
    let high = estimate_call(&finite, t, 10f64.exp(), &c).unwrap();
    assert_eq!(high.value, 0.0);
}

#[test]
fn monotone_in_strike_under_common_numbers() {
    let s = simulate_terminal(&merton(0.0), 0.02, &cfg(50_000, 41)).unwrap();
    let mut prev = f64::INFINITY;
    for i in 0..60 {
        let k = 0.7 + 0.01 * i as f64;
        let c = call_from_samples(&s, k, 1.0).value;
        assert!(c <= prev, "K={k}");
        prev = c;
    }
}

#[test]
fn deterministic_under_parallelism() {
    let ec = merton(0.01);
    let c = SimConfig {
        n_steps: 3,
        ..cfg(20_000, 51)
    };
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| simulate_terminal(&ec, 0.01, &c).unwrap());
    let b = four.install(|| simulate_terminal(&ec, 0.01, &c).unwrap());
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    let ea = one.install(|| estimate_call(&ec, 0.01, 1.0, &c).unwrap());
    let eb = four.install(|| estimate_call(&ec, 0.01, 1.0, &c).unwrap());
    assert_eq!(ea.value.to_bits(), eb.value.to_bits());
    assert_eq!(ea.std_error.to_bits(), eb.std_error.to_bits());
}

#[test]
fn cutoff_consistency() {
    let ec = stable_model();
    let t = 0.01;
    let run = |eps: f64, seed: u64| {
        let c = SimConfig {
            small_jump_cutoff: Some(eps),
            ..cfg(100_000, seed)
        };
        estimate_call(&ec, t, 1.0, &c).unwrap()
    };
    let a = run(4e-4, 61);
    let b = run(2e-4, 62);
    let combined = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.value - b.value).abs() < 2.0 * combined, "{a:?} {b:?}");
}

#[test]
fn coarse_cutoff_rejected() {
    let c = SimConfig {
        small_jump_cutoff: Some(0.5),
        ..cfg(1000, 0)
    };
    assert!(matches!(
        simulate_terminal(&stable_model(), 0.01, &c),
        Err(Error::CutoffTooCoarse { .. })
    ));
}

#[test]
fn step_rates_discount() {
    let ec = ExpModelCharacteristics::new(1.0, 0.0, 0.2, JumpCompensator::zero()).unwrap();
    let c = SimConfig {
        n_steps: 4,
        rates: Some(StepRates {
            until: vec![0.05],
            rates: vec![0.02, 0.06],
        }),
        ..cfg(200_000, 71)
    };
    // discounted forward is S0 for any deterministic rate path
    let e = estimate_call(&ec, 0.1, 1e-12, &c).unwrap();
    assert!((e.value - 1.0).abs() < 4.0 * e.std_error);
}

#[test]
fn black_scholes_exponent() {
    let ec = ExpModelCharacteristics::new(1.0, 0.0, 0.2, JumpCompensator::zero()).unwrap();
    let grid = [0.1, 0.03, 0.01, 0.003, 0.001];
    let study = slope_study(&ec, 1.0, &grid, 0.5, 0.0, &cfg(400_000, 81)).unwrap();
    let fit = study.fit.unwrap();
    assert!((fit.exponent - 0.5).abs() < 0.02, "{fit:?}");
    let a = atm_coefficient(&ec, 1e-10).unwrap().coefficient;
    for row in &study.rows {
        assert!(
            (row.ratio - a).abs() < 4.0 * row.ratio_std_error + 0.02 * a,
            "{row:?}"
        );
    }
}

#[test]
fn insufficient_signal() {
    // deep OTM without jumps: every estimate is zero
    let ec = ExpModelCharacteristics::new(1.0, 0.0, 0.01, JumpCompensator::zero()).unwrap();
    let r = slope_study(&ec, 2.0, &[0.1, 0.03, 0.01, 0.001], 1.0, 0.0, &cfg(1000, 0));
    assert!(matches!(r, Err(Error::InsufficientSignal { .. })));
}
