//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Intervals are bisected in order of largest error estimate until the summed
//! estimate drops below the requested absolute tolerance. Semi-infinite and
//! infinite ranges are folded onto a finite interval by `x = a + u / (1 - u)`,
//! so the tail of a decaying integrand is handled by the same adaptive loop.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default absolute tolerance used across the crate.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Maximum number of subintervals kept by a single adaptive run.
pub const SUBDIVISION_BUDGET: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
    };

    pub fn scale(self, factor: f64) -> Integral {
        Integral {
            value: self.value * factor,
            error: self.error * factor.abs(),
        }
    }
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::iter::Sum for Integral {
    fn sum<I: Iterator<Item = Integral>>(iter: I) -> Integral {
        iter.fold(Integral::ZERO, |a, b| a + b)
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += wk * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Integrates `f` over the finite interval `[a, b]` to absolute tolerance `tol`.
///
/// Non-finite integrand values are treated as a divergence.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if a == b {
        return Ok(Integral::ZERO);
    }
    if b < a {
        return integrate_finite(f, b, a, tol).map(|r| r.scale(-1.0));
    }
    let (value, error) = kronrod15(&f, a, b);
    if !value.is_finite() {
        return Err(Error::QuadratureDivergence {
            estimate: f64::INFINITY,
            tol,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total_error = error;

    while total_error > tol {
        if heap.len() >= SUBDIVISION_BUDGET {
            return Err(Error::QuadratureDivergence {
                estimate: total_error,
                tol,
            });
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval collapsed to adjacent floats
            return Err(Error::QuadratureDivergence {
                estimate: total_error,
                tol,
            });
        }
        let (v1, e1) = kronrod15(&f, seg.a, mid);
        let (v2, e2) = kronrod15(&f, mid, seg.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::QuadratureDivergence {
                estimate: f64::INFINITY,
                tol,
            });
        }
        total_error += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // resum to shed the drift of the running update
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Integral { value, error })
}

/// Integrates `f` over `[a, b]` where either end may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(f, a, b, tol),
        (true, false) if b > 0.0 => integrate_upper_tail(f, a, tol),
        (false, true) if a < 0.0 => integrate_upper_tail(|u| f(-u), -b, tol),
        (false, false) if a < b => {
            let left = integrate_upper_tail(|u| f(-u), 0.0, 0.5 * tol)?;
            let right = integrate_upper_tail(&f, 0.0, 0.5 * tol)?;
            Ok(left + right)
        }
        _ => Err(Error::Domain(format!(
            "invalid integration range [{a}, {b}]"
        ))),
    }
}

fn integrate_upper_tail<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<Integral> {
    let mapped = |u: f64| {
        let w = 1.0 - u;
        let x = a + u / w;
        let jac = 1.0 / (w * w);
        let fx = f(x);
        // the mapped integrand must vanish at u -> 1 for integrable tails
        if fx == 0.0 {
            0.0
        } else {
            fx * jac
        }
    };
    integrate_finite(mapped, 0.0, 1.0, tol)
}

/// Integrates `f(y)` over `(0, b]` where `f` may blow up like `y^{-s}` at 0, `s < 1`.
///
/// Substitutes `y = u^p` with `p = 1 / (1 - s)`; `dy = p u^{p-1} du` cancels the
/// singular factor, so the mapped integrand stays bounded when `f(y) y^s` is.
pub fn integrate_singular_at_zero<F: Fn(f64) -> f64>(
    f: F,
    s: f64,
    b: f64,
    tol: f64,
) -> Result<Integral> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!(
            "singularity order {s} outside [0, 1)"
        )));
    }
    if b <= 0.0 {
        return Ok(Integral::ZERO);
    }
    let p = 1.0 / (1.0 - s);
    let ub = b.powf(1.0 / p);
    integrate_finite(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let y = u.powf(p);
            f(y) * p * u.powf(p - 1.0)
        },
        0.0,
        ub,
        tol,
    )
}
