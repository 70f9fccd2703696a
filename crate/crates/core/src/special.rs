//! Gaussian tail functions and the derived constants of the dilation bounds.
//!
//! The error-function kernels are W. J. Cody's rational Chebyshev
//! approximations (erf, erfc and the scaled erfcx on three intervals), with
//! `exp(-x^2)` split into a sixteenth-rounded part and a small correction so
//! that the exponential does not amplify the rounding of `x^2`.
//!
//! Every public function validates its argument and returns [`Result`]; the
//! [`raw`] module exposes the same kernels without validation for inner loops.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{require_finite, Error, Result};
use crate::roots;

/// `sqrt(2 pi)`.
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Values of `f` at or below this are treated as `-inf` (and above its
/// negation as `+inf`): `Phi(-40)` is far below the smallest double.
pub const INFINITE_CLAMP: f64 = 40.0;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_286_95;
// 1/sqrt(2) - FRAC_1_SQRT_2
const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_457e-17;
const ERF_THRESHOLD: f64 = 0.46875;
const ERFC_XBIG: f64 = 26.543;
const ERFCX_XNEG: f64 = -26.628_735_713_751_4;

const A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_156,
    377.485_237_685_302_021,
    3_209.377_589_138_469_47,
    0.185_777_706_184_603_153,
];
const B: [f64; 4] = [
    23.601_290_952_344_120_9,
    244.024_637_934_444_173,
    1_282.616_526_077_372_28,
    2_844.236_833_439_170_62,
];
const C: [f64; 9] = [
    0.564_188_496_988_670_089,
    8.883_149_794_388_375_94,
    66.119_190_637_141_629_5,
    298.635_138_197_400_131,
    881.952_221_241_769_09,
    1_712.047_612_634_070_58,
    2_051.078_377_826_071_47,
    1_230.339_354_797_997_25,
    2.153_115_354_744_038_46e-8,
];
const D: [f64; 8] = [
    15.744_926_110_709_834_7,
    117.693_950_891_312_499,
    537.181_101_862_009_858,
    1_621.389_574_566_690_19,
    3_290.799_235_733_459_63,
    4_362.619_090_143_247_16,
    3_439.367_674_143_721_64,
    1_230.339_354_803_749_42,
];
const P: [f64; 6] = [
    0.305_326_634_961_232_344,
    0.360_344_899_949_804_439,
    0.125_781_726_111_229_246,
    0.016_083_785_148_742_276_6,
    6.587_491_615_298_378_03e-4,
    0.016_315_387_137_302_097_8,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822_42,
    1.872_952_849_923_460_47,
    0.527_905_102_951_428_412,
    0.060_518_341_312_441_319_1,
    0.002_335_204_976_268_691_85,
];

// erf(x) / x on |x| <= 0.46875, as a function of z = x^2.
fn erf_small(z: f64) -> f64 {
    let num = (((A[4] * z + A[0]) * z + A[1]) * z + A[2]) * z + A[3];
    let den = (((z + B[0]) * z + B[1]) * z + B[2]) * z + B[3];
    num / den
}

// erfcx(y) on 0.46875 < y <= 4.
fn erfcx_mid(y: f64) -> f64 {
    let mut num = C[8] * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + C[i]) * y;
        den = (den + D[i]) * y;
    }
    (num + C[7]) / (den + D[7])
}

// erfcx(y) for y > 4.
fn erfcx_large(y: f64) -> f64 {
    let z = 1.0 / (y * y);
    let mut num = P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + P[i]) * z;
        den = (den + Q[i]) * z;
    }
    let r = z * (num + P[4]) / (den + Q[4]);
    (FRAC_1_SQRT_PI - r) / y
}

fn erfcx_positive_tail(y: f64) -> f64 {
    if y <= 4.0 {
        erfcx_mid(y)
    } else {
        erfcx_large(y)
    }
}

fn trunc16(y: f64) -> f64 {
    (y * 16.0).trunc() / 16.0
}

// exp(-y^2) without amplifying the rounding of y^2.
fn exp_neg_square(y: f64) -> f64 {
    let yt = trunc16(y);
    (-yt * yt).exp() * (-(y - yt) * (y + yt)).exp()
}

fn exp_pos_square(y: f64) -> f64 {
    let yt = trunc16(y);
    (yt * yt).exp() * ((y - yt) * (y + yt)).exp()
}

fn erfc_abs(y: f64) -> f64 {
    if y >= ERFC_XBIG {
        0.0
    } else {
        erfcx_positive_tail(y) * exp_neg_square(y)
    }
}

/// Unvalidated kernels. Infinite arguments map to the limiting values; NaN propagates.
pub mod raw {
    use super::*;

    pub fn erf(x: f64) -> f64 {
        let y = x.abs();
        if y <= ERF_THRESHOLD {
            return x * erf_small(y * y);
        }
        let e = erfc_abs(y);
        if x < 0.0 {
            e - 1.0
        } else {
            1.0 - e
        }
    }

    pub fn erfc(x: f64) -> f64 {
        let y = x.abs();
        if y <= ERF_THRESHOLD {
            return 1.0 - x * erf_small(y * y);
        }
        let e = erfc_abs(y);
        if x < 0.0 {
            2.0 - e
        } else {
            e
        }
    }

    /// `exp(x^2) erfc(x)`; overflows to `+inf` below about -26.6.
    pub fn erfcx(x: f64) -> f64 {
        let y = x.abs();
        if y <= ERF_THRESHOLD {
            let z = y * y;
            return z.exp() * (1.0 - x * erf_small(z));
        }
        if x < ERFCX_XNEG {
            return f64::INFINITY;
        }
        let r = erfcx_positive_tail(y);
        if x < 0.0 {
            2.0 * exp_pos_square(y) - r
        } else {
            r
        }
    }

    // x / sqrt(2) as an unevaluated sum z + dz. Dropping dz costs about 2 z^2
    // ulps of relative accuracy in erfc(z), i.e. most of the budget near |x| = 8.
    fn halve_variance(x: f64) -> (f64, f64) {
        let z = x * FRAC_1_SQRT_2;
        let dz = x.mul_add(FRAC_1_SQRT_2, -z) + x * FRAC_1_SQRT_2_LO;
        (z, dz)
    }

    // erfc(z + dz) to first order in dz.
    fn erfc_corrected(z: f64, dz: f64) -> f64 {
        let e = erfc(z);
        if dz == 0.0 || !z.is_finite() {
            return e;
        }
        e - dz * 2.0 * FRAC_1_SQRT_PI * exp_neg_square(z.abs())
    }

    /// Standard normal distribution function.
    pub fn cdf(x: f64) -> f64 {
        let (z, dz) = halve_variance(-x);
        0.5 * erfc_corrected(z, dz)
    }

    /// Upper tail `1 - cdf(x)`, computed without cancellation.
    pub fn tail(x: f64) -> f64 {
        let (z, dz) = halve_variance(x);
        0.5 * erfc_corrected(z, dz)
    }

    /// `exp(y^2 / 2) * tail(y)`.
    pub fn scaled_tail(y: f64) -> f64 {
        let (z, dz) = halve_variance(y);
        let e = erfcx(z);
        if dz == 0.0 || !e.is_finite() {
            return 0.5 * e;
        }
        0.5 * (e + dz * (2.0 * z * e - 2.0 * FRAC_1_SQRT_PI))
    }

    /// `ln tail(x)`, finite far past the underflow of `tail` itself.
    pub fn ln_tail(x: f64) -> f64 {
        if x < 0.0 {
            (-cdf(x)).ln_1p()
        } else if x <= 6.0 {
            tail(x).ln()
        } else {
            -0.5 * x * x + scaled_tail(x).ln()
        }
    }

    /// Inverse Mills ratio `phi(y) / tail(y) = 1 / (sqrt(2 pi) exp(y^2/2) tail(y))`.
    pub fn inverse_mills(y: f64) -> f64 {
        1.0 / (SQRT_2PI * scaled_tail(y))
    }

    /// `-sqrt(2 pi) exp(y^2/2) tail(y) ln tail(y)`.
    pub fn tail_log_ratio(y: f64) -> f64 {
        if y >= 0.0 {
            -SQRT_2PI * scaled_tail(y) * ln_tail(y)
        } else {
            // -ln tail(y) = cdf(y) * rho and exp(y^2/2) cdf(y) = scaled_tail(-y).
            let lower = cdf(y);
            let rho = if lower == 0.0 {
                1.0
            } else {
                -(-lower).ln_1p() / lower
            };
            SQRT_2PI * tail(y) * scaled_tail(-y) * rho
        }
    }

    /// `u / (2 (1 - exp(-u^2/2)))`.
    pub fn radius_measure_ratio(u: f64) -> f64 {
        u / (-2.0 * (-0.5 * u * u).exp_m1())
    }

    /// `sqrt(2 pi) exp(y^2/2) tail(y) cdf(y)`; even in `y`.
    pub fn tail_cdf_product(y: f64) -> f64 {
        let a = y.abs();
        SQRT_2PI * scaled_tail(a) * cdf(a)
    }

    /// `x >= 0` with `tail(x) = q`, for `q` in `(0, 1/2]`.
    pub fn inverse_tail(q: f64) -> f64 {
        if q <= 0.0 {
            return f64::INFINITY;
        }
        if q >= 0.5 {
            return 0.0;
        }
        let ln_q = q.ln();
        let t = (-2.0 * ln_q).sqrt();
        // Hastings' rational start, good to about 5e-4.
        let mut x = t
            - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
                / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
        x = x.max(0.0);
        // Newton on ln tail(x) - ln q; ln tail is concave so iterates settle from the right.
        for _ in 0..100 {
            let step = (ln_tail(x) - ln_q) / inverse_mills(x);
            let next = (x + step).max(0.0);
            let done = (next - x).abs() <= 4.0 * f64::EPSILON * x.max(1.0);
            x = next;
            if done {
                break;
            }
        }
        x
    }

    /// Normal quantile from a probability and its complement, `p + q = 1`.
    /// Uses whichever of the two is smaller so neither tail loses precision.
    pub fn quantile(p: f64, q: f64) -> f64 {
        if p <= q {
            -inverse_tail(p)
        } else {
            inverse_tail(q)
        }
    }
}

/// `Phi(x)`, the standard normal distribution function.
pub fn normal_cdf(x: f64) -> Result<f64> {
    Ok(raw::cdf(require_finite("x", x)?))
}

/// `T(x) = 1 - Phi(x)`.
pub fn normal_tail(x: f64) -> Result<f64> {
    Ok(raw::tail(require_finite("x", x)?))
}

/// `exp(y^2/2) T(y)`; exceeds the double range (returns `+inf`) below `y ≈ -37.6`.
pub fn scaled_tail(y: f64) -> Result<f64> {
    Ok(raw::scaled_tail(require_finite("y", y)?))
}

/// `ln T(x)`.
pub fn ln_normal_tail(x: f64) -> Result<f64> {
    Ok(raw::ln_tail(require_finite("x", x)?))
}

/// `g(y) = 1 / (sqrt(2 pi) exp(y^2/2) T(y))`; for `y > 0`, `y < g(y) < sqrt(y^2 + 2)`.
pub fn inverse_mills(y: f64) -> Result<f64> {
    Ok(raw::inverse_mills(require_finite("y", y)?))
}

/// `F(y) = -sqrt(2 pi) exp(y^2/2) T(y) ln T(y)`: positive, increasing, onto `(0, inf)`.
pub fn tail_log_ratio(y: f64) -> Result<f64> {
    Ok(raw::tail_log_ratio(require_finite("y", y)?))
}

/// `G(u) = u / (2 (1 - exp(-u^2/2)))`, defined for `u > 0`.
pub fn radius_measure_ratio(u: f64) -> Result<f64> {
    let u = require_finite("u", u)?;
    if u <= 0.0 {
        return Err(Error::Domain(format!("u must be positive, got {u}")));
    }
    Ok(raw::radius_measure_ratio(u))
}

/// Inverse of [`tail_log_ratio`]: bracket from `[-1, 2]`, doubling, then bisect.
pub fn inverse_tail_log_ratio(target: f64) -> Result<f64> {
    let target = require_finite("target", target)?;
    if target <= 0.0 {
        return Err(Error::Domain(format!("target must be positive, got {target}")));
    }
    roots::solve_increasing(|y| raw::tail_log_ratio(y) - target, -1.0, 2.0, 64)
}

/// Normal quantile from `(p, q)` with `p + q = 1`.
pub fn normal_quantile(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) || (p + q - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "need probabilities with p + q = 1, got p = {p}, q = {q}"
        )));
    }
    Ok(raw::quantile(p, q))
}

/// Regularized incomplete gamma for integer shape: `(P(n, x), Q(n, x))`.
///
/// `P(n, x)` is the probability that a chi-square variable with `2n` degrees
/// of freedom is below `2x`. Both halves are summed directly (Poisson tails),
/// so the smaller one keeps full relative precision.
pub fn gamma_p_int(n: u32, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x == f64::INFINITY {
        return (1.0, 0.0);
    }
    let ln_x = x.ln();
    let nf = n as f64;
    if x < nf + 1.0 {
        let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        let mut term = (-x + nf * ln_x - ln_fact).exp();
        let mut sum = 0.0;
        let mut k = nf;
        while term > sum * 1e-17 {
            sum += term;
            k += 1.0;
            term *= x / k;
        }
        (sum, 1.0 - sum)
    } else {
        let mut ln_fact = 0.0;
        let mut q = 0.0;
        for k in 0..n {
            if k > 0 {
                ln_fact += (k as f64).ln();
            }
            q += (-x + k as f64 * ln_x - ln_fact).exp();
        }
        (1.0 - q, q)
    }
}

/// The constants of the measure-restricted dilation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    /// Root of `F(H) = G(u_star)`.
    #[serde(rename = "H")]
    pub h: f64,
    /// Measure threshold `1 - exp(-1 / (pi exp(H^2/2) T(H)))`.
    pub c: f64,
    /// Strip half-width with `1 - 2 T(s0) = c`.
    pub s0: f64,
    /// `sqrt(8 / pi)`.
    pub u_star: f64,
    /// Slope of the weak dilation factor `1 + K (t - 1)`.
    #[serde(rename = "K")]
    pub k: f64,
}

impl Constants {
    /// Named margins of the structural invariants; each must be `>= 0`.
    pub fn invariant_margins(&self) -> Vec<(&'static str, f64)> {
        let f_gap = (raw::tail_log_ratio(self.h) - raw::radius_measure_ratio(self.u_star)).abs();
        let s_gap = (1.0 - 2.0 * raw::tail(self.s0) - self.c).abs();
        vec![
            ("H > 0.7", self.h - 0.7),
            ("H < 0.75", 0.75 - self.h),
            ("c > 0.64", self.c - 0.64),
            ("c < 1", 1.0 - self.c),
            ("s0 > 0.9", self.s0 - 0.9),
            ("|1 - 2T(s0) - c| <= 1e-12", 1e-12 - s_gap),
            ("|F(H) - G(u_star)| <= 1e-12", 1e-12 - f_gap),
        ]
    }

    pub fn invariants_hold(&self) -> bool {
        self.invariant_margins().iter().all(|(_, m)| *m > 0.0)
    }

    /// `l(t) = 1 + K (t - 1)`.
    pub fn dilation_factor(&self, t: f64) -> f64 {
        1.0 + self.k * (t - 1.0)
    }
}

pub fn compute_constants() -> Result<Constants> {
    let u_star = (8.0 / PI).sqrt();
    let h = inverse_tail_log_ratio(raw::radius_measure_ratio(u_star))?;
    let c = -(-1.0 / (PI * raw::scaled_tail(h))).exp_m1();
    let s0 = roots::solve_increasing(|s| 1.0 - 2.0 * raw::tail(s) - c, 0.0, 2.0, 32)?;
    Ok(Constants {
        h,
        c,
        s0,
        u_star,
        k: 3.0,
    })
}

/// Process-wide constants, computed once on first use.
pub fn constants() -> &'static Constants {
    static CELL: OnceLock<Constants> = OnceLock::new();
    CELL.get_or_init(|| compute_constants().expect("constants are computable"))
}
