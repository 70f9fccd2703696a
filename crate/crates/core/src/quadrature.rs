//! Adaptive 15-point Gauss-Kronrod quadrature on finite intervals.
//!
//! The worst interval is bisected until the summed error estimate drops below
//! `max(abs_tol, rel_tol * |I|)`. Error estimates use the QUADPACK rescaling
//! of `|K15 - G7|`, which is very pessimistic for rough integrands and close to
//! the true error for analytic ones.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
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
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    /// Purely relative target, for integrals far below unit scale.
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = f(center - dx);
        let hi = f(center + dx);
        f1[j] = lo;
        f2[j] = hi;
        kronrod += WGK[j] * (lo + hi);
        abs_sum += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quadrature> {
    integrate_pieces(f, &[a, b], opts)
}

/// Integrate over consecutive pieces `[p0, p1], [p1, p2], ...`; kinks of the
/// integrand belong at the breakpoints. Reversed or empty pieces contribute 0.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<Quadrature> {
    if breakpoints.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    let mut segments: Vec<Segment> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(&f, w[0], w[1]))
        .collect();
    let mut evaluations = 15 * segments.len();
    if segments.is_empty() {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations,
            intervals: 0,
        });
    }
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::Numeric(format!(
                "integrand produced a non-finite value on [{}, {}]",
                breakpoints[0],
                breakpoints[breakpoints.len() - 1]
            )));
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(Quadrature {
                value,
                error,
                evaluations,
                intervals: segments.len(),
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("nonempty");
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        let too_narrow = mid <= seg.a || mid >= seg.b;
        if segments.len() >= opts.max_intervals || too_narrow {
            return Err(Error::Quadrature {
                lower: breakpoints[0],
                upper: breakpoints[breakpoints.len() - 1],
                estimate: value,
                error,
                intervals: segments.len(),
            });
        }
        segments[worst] = gauss_kronrod(&f, seg.a, mid);
        segments.push(gauss_kronrod(&f, mid, seg.b));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, QuadOptions::default()).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((q.value - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let q = integrate(
            |t| t * (-0.5 * t * t).exp(),
            0.0,
            3.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((q.value - (1.0 - (-4.5f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn kink_at_breakpoint() {
        let f = |x: f64| (x - 0.3).abs();
        let q = integrate_pieces(f, &[0.0, 0.3, 1.0], QuadOptions::default()).unwrap();
        assert!((q.value - (0.045 + 0.245)).abs() < 1e-15);
    }

    #[test]
    fn tiny_scale_with_relative_target() {
        let scale = 1e-70;
        let q = integrate(|x| scale * x.exp(), 0.0, 1.0, QuadOptions::relative(1e-12)).unwrap();
        assert!(((q.value - scale * (1f64.exp() - 1.0)) / q.value).abs() < 1e-13);
    }

    #[test]
    fn empty_interval() {
        let q = integrate(|x| x, 1.0, 1.0, QuadOptions::default()).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn non_convergence_reports_diagnostics() {
        let opts = QuadOptions {
            max_intervals: 5,
            ..QuadOptions::default()
        };
        let err = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature { intervals: 5, .. }));
    }
}
