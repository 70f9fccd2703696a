//! Sets in R^3 lying under a radial profile, and the truncation functional.
//!
//! A profile `f` on `[0, w)` describes
//! `A = {(z, t) in R^2 x R : |z| < w, t <= f(|z|)}`. For `x` in `[0, w]` the
//! truncated set `A(x)` adds the full cylinder of radius `x`, and `a(x)` is the
//! radius of the cylinder with the same Gaussian measure. The functional
//!
//! ```text
//! L(x) = w * P2(x) + x * P1(x) - a(x) * a(x) exp(-a(x)^2 / 2)
//! ```
//!
//! (`P2` the perimeter of the graph part outside radius `x` plus the lateral
//! wall, `P1` the perimeter of the cylinder wall above the graph at radius `x`)
//! vanishes at `x = w` and equals `w * per(A) - p * per(P)` at `x = 0`.
//!
//! Profiles with a finite limit at `w` get an explicit lateral wall term
//! `w exp(-w^2/2) Phi(f(w-))`; values at or below `-INFINITE_CLAMP` count as
//! `-inf` and contribute nothing.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{require_finite, Error, Result};
use crate::quadrature::{integrate_pieces, QuadOptions};
use crate::special::{raw, INFINITE_CLAMP, SQRT_2PI};

/// Tolerance on knot differences when validating sampled profiles.
pub const SHAPE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileShape {
    /// `f(r) = height`.
    Frustum { height: f64 },
    /// `f(r) = apex + slope * r`, `slope <= 0`.
    Cone { apex: f64, slope: f64 },
    /// Piecewise linear through `(r, f)` knots starting at `r = 0`, extended
    /// past the last knot with the last slope.
    Sampled { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    width: f64,
    shape: ProfileShape,
}

fn check_width(width: f64) -> Result<f64> {
    let w = require_finite("width", width)?;
    if w <= 0.0 {
        return Err(Error::Domain(format!("width must be positive, got {w}")));
    }
    Ok(w)
}

fn clamp_infinite(f: f64) -> f64 {
    f.clamp(-INFINITE_CLAMP, INFINITE_CLAMP)
}

impl RadialProfile {
    pub fn frustum(width: f64, height: f64) -> Result<Self> {
        let height = if height.is_nan() {
            return Err(Error::Domain("frustum height is NaN".into()));
        } else {
            clamp_infinite(height)
        };
        Ok(Self {
            width: check_width(width)?,
            shape: ProfileShape::Frustum { height },
        })
    }

    pub fn cone(width: f64, apex: f64, slope: f64) -> Result<Self> {
        let apex = require_finite("apex", apex)?;
        let slope = require_finite("slope", slope)?;
        if slope > 0.0 {
            return Err(Error::Domain(format!(
                "cone slope must be nonpositive, got {slope}"
            )));
        }
        Ok(Self {
            width: check_width(width)?,
            shape: ProfileShape::Cone { apex, slope },
        })
    }

    /// Sampled profile; `width` defaults to the last knot and may not precede it.
    /// Knot values are clamped to `±INFINITE_CLAMP` and must be nonincreasing
    /// and concave up to [`SHAPE_TOLERANCE`].
    pub fn sampled(knots: Vec<(f64, f64)>, width: Option<f64>) -> Result<Self> {
        let knots: Vec<(f64, f64)> = knots.into_iter().map(|(r, f)| (r, clamp_infinite(f))).collect();
        validate_knots(&knots).map_err(|(i, message)| Error::Profile { line: i + 1, message })?;
        let last = knots[knots.len() - 1].0;
        let width = match width {
            Some(w) if w < last => {
                return Err(Error::Domain(format!(
                    "width {w} precedes the last knot at {last}"
                )))
            }
            Some(w) => check_width(w)?,
            None => check_width(last)?,
        };
        Ok(Self {
            width,
            shape: ProfileShape::Sampled { knots },
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    /// `f(r)`; at `r = w` the left limit `f(w-)`.
    pub fn value(&self, r: f64) -> f64 {
        match &self.shape {
            ProfileShape::Frustum { height } => *height,
            ProfileShape::Cone { apex, slope } => clamp_infinite(apex + slope * r),
            ProfileShape::Sampled { knots } => {
                let (i, s) = self.piece(knots, r);
                clamp_infinite(knots[i].1 + s * (r - knots[i].0))
            }
        }
    }

    /// Right derivative `f'(r+)`.
    pub fn slope(&self, r: f64) -> f64 {
        match &self.shape {
            ProfileShape::Frustum { .. } => 0.0,
            ProfileShape::Cone { apex, slope } => {
                if apex + slope * r <= -INFINITE_CLAMP {
                    0.0
                } else {
                    *slope
                }
            }
            ProfileShape::Sampled { knots } => self.piece(knots, r).1,
        }
    }

    // Index of the knot opening the piece containing r, and that piece's slope.
    fn piece(&self, knots: &[(f64, f64)], r: f64) -> (usize, f64) {
        if knots.len() == 1 {
            return (0, 0.0);
        }
        let idx = knots.partition_point(|k| k.0 <= r).saturating_sub(1).min(knots.len() - 2);
        let (r0, f0) = knots[idx];
        let (r1, f1) = knots[idx + 1];
        (idx, (f1 - f0) / (r1 - r0))
    }

    /// `f(w-)`.
    pub fn edge_value(&self) -> f64 {
        self.value(self.width)
    }

    /// Whether `f(w-)` is finite, giving the set a lateral wall at radius `w`.
    pub fn has_wall(&self) -> bool {
        self.edge_value() > -INFINITE_CLAMP
    }

    /// Quadrature breakpoints covering `[x, w]`.
    fn breakpoints(&self, x: f64) -> Vec<f64> {
        let mut pts = vec![x];
        match &self.shape {
            ProfileShape::Sampled { knots } => {
                pts.extend(knots.iter().map(|k| k.0).filter(|&r| r > x && r < self.width));
            }
            ProfileShape::Cone { apex, slope } if *slope < 0.0 => {
                // Where the clamp at -inf kicks in the integrands have a kink.
                let r = (-INFINITE_CLAMP - apex) / slope;
                if r > x && r < self.width {
                    pts.push(r);
                }
            }
            _ => {}
        }
        pts.push(self.width);
        pts
    }

    /// Knots of a sampled profile.
    pub fn knots(&self) -> Option<&[(f64, f64)]> {
        match &self.shape {
            ProfileShape::Sampled { knots } => Some(knots),
            _ => None,
        }
    }

    /// Largest violation of monotonicity and of concavity over `grid`
    /// (second differences on a possibly nonuniform grid). Both are `<= 0`
    /// for a valid profile.
    pub fn shape_violations(&self, grid: &[f64]) -> (f64, f64) {
        let vals: Vec<f64> = grid.iter().map(|&r| self.value(r)).collect();
        let mut increase = f64::NEG_INFINITY;
        let mut convexity = f64::NEG_INFINITY;
        for i in 1..grid.len() {
            increase = increase.max(vals[i] - vals[i - 1]);
            if i + 1 < grid.len() {
                let s0 = (vals[i] - vals[i - 1]) / (grid[i] - grid[i - 1]);
                let s1 = (vals[i + 1] - vals[i]) / (grid[i + 1] - grid[i]);
                convexity = convexity.max(s1 - s0);
            }
        }
        (increase, convexity)
    }

    fn check_x(&self, x: f64) -> Result<f64> {
        let x = require_finite("x", x)?;
        if x < 0.0 || x > self.width {
            return Err(Error::Domain(format!(
                "x = {x} outside [0, {}]",
                self.width
            )));
        }
        Ok(x)
    }
}

// Returns (knot index, message) on failure.
fn validate_knots(knots: &[(f64, f64)]) -> std::result::Result<(), (usize, String)> {
    if knots.is_empty() {
        return Err((0, "profile has no knots".into()));
    }
    for (i, &(r, f)) in knots.iter().enumerate() {
        if !r.is_finite() || f.is_nan() {
            return Err((i, format!("non-finite knot ({r}, {f})")));
        }
    }
    if knots[0].0 != 0.0 {
        return Err((0, format!("first knot must be at r = 0, got {}", knots[0].0)));
    }
    for i in 1..knots.len() {
        let (r0, r1) = (knots[i - 1].0, knots[i].0);
        if r1 <= r0 {
            return Err((i, format!("r not strictly increasing: {r1} after {r0}")));
        }
    }
    for i in 1..knots.len() {
        let (r0, f0) = knots[i - 1];
        let (r1, f1) = knots[i];
        if f1 > f0 + SHAPE_TOLERANCE {
            return Err((i, format!("f increases from {f0} to {f1}")));
        }
        if i + 1 < knots.len() {
            let (r2, f2) = knots[i + 1];
            let s0 = (f1 - f0) / (r1 - r0);
            let s1 = (f2 - f1) / (r2 - r1);
            if s1 > s0 + SHAPE_TOLERANCE * (1.0 + s0.abs()) {
                return Err((i + 1, format!("concavity violated: slope {s1} follows slope {s0}")));
            }
        }
    }
    Ok(())
}

/// Parse the `r,f` profile text format: one pair per line, optional `r,f`
/// header, blank lines and `#` comments ignored. `f` may be `inf`/`-inf`.
pub fn parse_profile(text: &str, width: Option<f64>) -> Result<RadialProfile> {
    let mut knots = Vec::new();
    let mut lines = Vec::new();
    let mut seen_data = false;
    for (no, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_data && line.replace(' ', "").eq_ignore_ascii_case("r,f") {
            seen_data = true;
            continue;
        }
        seen_data = true;
        let mut parts = line.split(',').map(str::trim);
        let (Some(r), Some(f), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Profile {
                line: no + 1,
                message: format!("expected `r,f`, got `{line}`"),
            });
        };
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Profile {
                line: no + 1,
                message: format!("bad number `{s}`: {e}"),
            })
        };
        knots.push((parse(r)?, parse(f)?));
        lines.push(no + 1);
    }
    if knots.is_empty() {
        return Err(Error::Profile {
            line: 0,
            message: "no data lines".into(),
        });
    }
    let knots: Vec<(f64, f64)> = knots.into_iter().map(|(r, f)| (r, clamp_infinite(f))).collect();
    if let Err((i, message)) = validate_knots(&knots) {
        return Err(Error::Profile {
            line: lines.get(i).copied().unwrap_or(0),
            message,
        });
    }
    RadialProfile::sampled(knots, width)
}

/// Render a sampled profile in the `r,f` text format.
pub fn format_profile(knots: &[(f64, f64)]) -> String {
    let mut out = String::from("r,f\n");
    for (r, f) in knots {
        out.push_str(&format!("{r:.16e},{f:.16e}\n"));
    }
    out
}

fn quad_opts() -> QuadOptions {
    // Integrands are nonnegative, so a relative target also bounds the absolute error.
    QuadOptions::relative(1e-12)
}

/// `gamma_3(A(x)) = 1 - exp(-x^2/2) + int_x^w t exp(-t^2/2) Phi(f(t)) dt`.
pub fn measure_gamma3(profile: &RadialProfile, x: f64) -> Result<f64> {
    let x = profile.check_x(x)?;
    let q = integrate_pieces(
        |t| t * (-0.5 * t * t).exp() * raw::cdf(profile.value(t)),
        &profile.breakpoints(x),
        quad_opts(),
    )?;
    Ok(-(-0.5 * x * x).exp_m1() + q.value)
}

// exp(x^2/2) (1 - gamma_3(A(x))) = exp(-(w^2-x^2)/2) + int_x^w t exp(-(t^2-x^2)/2) T(f(t)) dt.
fn scaled_comeasure(profile: &RadialProfile, x: f64) -> Result<f64> {
    let w = profile.width;
    let q = integrate_pieces(
        |t| t * (-0.5 * (t - x) * (t + x)).exp() * raw::tail(profile.value(t)),
        &profile.breakpoints(x),
        quad_opts(),
    )?;
    Ok((-0.5 * (w - x) * (w + x)).exp() + q.value)
}

// 1 - exp(x^2/2) (1 - gamma_3(A(x))) = int_x^w t exp(-(t^2-x^2)/2) Phi(f(t)) dt.
fn scaled_excess(profile: &RadialProfile, x: f64) -> Result<f64> {
    let q = integrate_pieces(
        |t| t * (-0.5 * (t - x) * (t + x)).exp() * raw::cdf(profile.value(t)),
        &profile.breakpoints(x),
        quad_opts(),
    )?;
    Ok(q.value)
}

/// `(a(x)^2 - x^2, exp(x^2/2)(1 - gamma_3(A(x))))`. The gap comes from
/// whichever of the two complementary integrals is smaller, so it keeps
/// relative precision both when `A(x)` is nearly the cylinder of radius `x`
/// and when its measure is nearly 1.
fn radius_gap(profile: &RadialProfile, x: f64) -> Result<(f64, f64)> {
    let excess = scaled_excess(profile, x)?;
    if excess < 0.5 {
        Ok((-2.0 * (-excess).ln_1p(), 1.0 - excess))
    } else {
        let sc = scaled_comeasure(profile, x)?;
        Ok((-2.0 * sc.ln(), sc))
    }
}

/// `1 - gamma_3(A(x))`, summed from positive parts so it keeps relative
/// precision when the measure is within rounding of 1.
pub fn comeasure_gamma3(profile: &RadialProfile, x: f64) -> Result<f64> {
    let x = profile.check_x(x)?;
    Ok((-0.5 * x * x).exp() * scaled_comeasure(profile, x)?)
}

/// Perimeter of the graph part `{|z| > x, t = f(|z|)}`:
/// `(1/sqrt(2 pi)) int_x^w t exp(-(t^2 + f^2)/2) sqrt(1 + f'^2) dt`.
/// The lateral wall is separate, see [`lateral_wall`].
pub fn perimeter_b2(profile: &RadialProfile, x: f64) -> Result<f64> {
    let x = profile.check_x(x)?;
    let q = integrate_pieces(
        |t| {
            let f = profile.value(t);
            let fp = profile.slope(t);
            t * (-0.5 * (t * t + f * f)).exp() * (1.0 + fp * fp).sqrt()
        },
        &profile.breakpoints(x),
        quad_opts(),
    )?;
    Ok(q.value / SQRT_2PI)
}

/// Wall `{|z| = w, t <= f(w-)}`: `w exp(-w^2/2) Phi(f(w-))`.
pub fn lateral_wall(profile: &RadialProfile) -> f64 {
    let w = profile.width;
    w * (-0.5 * w * w).exp() * raw::cdf(profile.edge_value())
}

/// Perimeter of `{|z| = x, t >= f(x)}`: `x exp(-x^2/2) T(f(x))`.
pub fn perimeter_b1(profile: &RadialProfile, x: f64) -> Result<f64> {
    let x = profile.check_x(x)?;
    Ok(x * (-0.5 * x * x).exp() * raw::tail(profile.value(x)))
}

/// Gaussian perimeter of `A` itself: graph plus lateral wall.
pub fn gaussian_perimeter(profile: &RadialProfile) -> Result<f64> {
    Ok(perimeter_b2(profile, 0.0)? + lateral_wall(profile))
}

/// `p = sqrt(-2 ln(1 - m))`, the radius of the R^3 cylinder of measure `m`.
pub fn cylinder_radius_from_measure(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!("measure must lie in [0, 1), got {m}")));
    }
    Ok((-2.0 * (-m).ln_1p()).sqrt())
}

/// `{(z, t) : |z| <= p}` in R^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cylinder3 {
    pub radius: f64,
}

impl Cylinder3 {
    pub fn new(radius: f64) -> Result<Self> {
        let radius = require_finite("radius", radius)?;
        if radius < 0.0 {
            return Err(Error::Domain(format!("radius must be nonnegative, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn with_measure(m: f64) -> Result<Self> {
        Self::new(cylinder_radius_from_measure(m)?)
    }

    pub fn measure(&self) -> f64 {
        -(-0.5 * self.radius * self.radius).exp_m1()
    }

    pub fn comeasure(&self) -> f64 {
        (-0.5 * self.radius * self.radius).exp()
    }

    /// `p exp(-p^2/2)`.
    pub fn perimeter(&self) -> f64 {
        self.radius * self.comeasure()
    }
}

/// Snapshot of the truncation machinery at one `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationRecord {
    pub x: f64,
    /// `f(x)`.
    pub f: f64,
    /// `a(x)`, radius of the cylinder matching `A(x)`.
    pub radius: f64,
    /// `a(x)^2 - x^2`.
    pub radius_gap: f64,
    /// `L(x)`.
    pub l_value: f64,
    /// `L'(x)` from the closed-form derivative.
    pub l_slope: f64,
    /// `sqrt(w^2 - x^2) - (a^2 - x^2) sqrt(2 pi) exp(f^2/2) T(f)`.
    pub room_margin: f64,
    /// `-2 ln(T(f) + Phi(f) exp(-(w^2 - x^2)/2))`, an upper bound on `a^2 - x^2`.
    pub gap_upper_bound: f64,
}

fn truncation_record(profile: &RadialProfile, x: f64, wall: f64) -> Result<TruncationRecord> {
    let w = profile.width;
    let f = profile.value(x);
    let fp = profile.slope(x);
    let tf = raw::tail(f);
    let (radius_gap, sc) = radius_gap(profile, x)?;
    let radius = (x * x + radius_gap).max(0.0).sqrt();
    let ex = (-0.5 * x * x).exp();
    let comeasure = ex * sc;
    let graph = perimeter_b2(profile, x)?;
    let l_value = w * (graph + wall) + x * x * ex * tf - radius * radius * comeasure;

    let density_f = (-0.5 * f * f).exp() / SQRT_2PI;
    let l_slope = -w * x * ex * density_f * (1.0 + fp * fp).sqrt()
        + ex * (2.0 * x * tf - x * x * density_f * fp - x * x * x * tf)
        - (2.0 - radius * radius) * x * ex * tf;

    let room = ((w - x) * (w + x)).max(0.0).sqrt();
    // gap * sqrt(2 pi) exp(f^2/2) T(f) in log space: the exponential factor
    // overflows where f is very negative, while the gap there is tiny.
    let room_needed = if radius_gap <= 0.0 {
        0.0
    } else {
        (radius_gap.ln() + SQRT_2PI.ln() + 0.5 * f * f + raw::ln_tail(f)).exp()
    };
    let gap_upper_bound = -2.0 * (tf + raw::cdf(f) * (-0.5 * (w - x) * (w + x)).exp()).ln();
    Ok(TruncationRecord {
        x,
        f,
        radius,
        radius_gap,
        l_value,
        l_slope,
        room_margin: room - room_needed,
        gap_upper_bound,
    })
}

/// Evaluate the truncation machinery on a sorted grid in `[0, w]`.
/// Grid points are evaluated in parallel and returned in grid order.
pub fn truncation_scan(profile: &RadialProfile, grid: &[f64]) -> Result<Vec<TruncationRecord>> {
    if grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Domain("scan grid must be strictly increasing".into()));
    }
    for &x in grid {
        profile.check_x(x)?;
    }
    let wall = lateral_wall(profile);
    grid.par_iter()
        .map(|&x| truncation_record(profile, x, wall))
        .collect()
}

/// `n` uniform points on `[0, w]`, both ends included.
pub fn uniform_grid(width: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                width
            } else {
                width * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Central difference of `a(x)` against the identity
/// `a'(x) a(x) exp(-a(x)^2/2) = x exp(-x^2/2) T(f(x))`.
/// Returns `(finite_difference, identity)`.
pub fn radius_derivative_check(profile: &RadialProfile, x: f64, step: f64) -> Result<(f64, f64)> {
    let x = profile.check_x(x)?;
    if x - step < 0.0 || x + step > profile.width {
        return Err(Error::Domain(format!(
            "difference stencil around {x} leaves [0, {}]",
            profile.width
        )));
    }
    let radius = |s: f64| -> Result<f64> {
        let (gap, _) = radius_gap(profile, s)?;
        Ok((s * s + gap).sqrt())
    };
    let fd = (radius(x + step)? - radius(x - step)?) / (2.0 * step);
    let sc = scaled_comeasure(profile, x)?;
    let a = radius(x)?;
    // exp(-a^2/2) = exp(-x^2/2) * sc
    let identity = x * raw::tail(profile.value(x)) / (a * sc);
    Ok((fd, identity))
}

/// Aggregate view of a truncation scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSummary {
    pub width: f64,
    /// `gamma_3(A)`.
    pub measure: f64,
    /// Radius `p` of the matched cylinder.
    pub cylinder_radius: f64,
    /// `L` at the first grid point (`x = 0` for full scans).
    pub l_start: f64,
    /// `L` at the last grid point (`x = w` for full scans).
    pub l_end: f64,
    /// `w per(A) - p per(P)` computed directly, independent of the scan.
    pub direct_difference: f64,
    /// Largest `L(x_{i+1}) - L(x_i)`; nonpositive when `L` is nonincreasing.
    pub max_l_increase: f64,
    /// Largest `L'` over grid points strictly inside `[0, w)`.
    pub max_l_slope: f64,
    /// Largest increase of `a^2 - x^2` between neighbours.
    pub max_gap_increase: f64,
    /// Largest `(a^2 - x^2) - gap_upper_bound`.
    pub max_gap_bound_excess: f64,
    /// Smallest `room_margin` at grid points with `x < w`.
    pub min_room_margin: f64,
    /// Largest `|L|` over the scan, the scale for tolerances.
    pub l_scale: f64,
}

pub fn summarize_scan(profile: &RadialProfile, records: &[TruncationRecord]) -> Result<ScanSummary> {
    if records.is_empty() {
        return Err(Error::Input("empty scan".into()));
    }
    let w = profile.width;
    let comeasure = comeasure_gamma3(profile, 0.0)?;
    let measure = measure_gamma3(profile, 0.0)?;
    let cylinder_radius = (-2.0 * comeasure.ln()).sqrt();
    let cyl_perimeter = cylinder_radius * comeasure;
    let direct_difference = w * gaussian_perimeter(profile)? - cylinder_radius * cyl_perimeter;

    let mut s = ScanSummary {
        width: w,
        measure,
        cylinder_radius,
        l_start: records[0].l_value,
        l_end: records[records.len() - 1].l_value,
        direct_difference,
        max_l_increase: f64::NEG_INFINITY,
        max_l_slope: f64::NEG_INFINITY,
        max_gap_increase: f64::NEG_INFINITY,
        max_gap_bound_excess: f64::NEG_INFINITY,
        min_room_margin: f64::INFINITY,
        l_scale: 0.0,
    };
    for (i, r) in records.iter().enumerate() {
        s.l_scale = s.l_scale.max(r.l_value.abs());
        s.max_gap_bound_excess = s.max_gap_bound_excess.max(r.radius_gap - r.gap_upper_bound);
        if r.x < w {
            s.max_l_slope = s.max_l_slope.max(r.l_slope);
            s.min_room_margin = s.min_room_margin.min(r.room_margin);
        }
        if i > 0 {
            let prev = &records[i - 1];
            s.max_l_increase = s.max_l_increase.max(r.l_value - prev.l_value);
            s.max_gap_increase = s.max_gap_increase.max(r.radius_gap - prev.radius_gap);
        }
    }
    Ok(s)
}

/// `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogScaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl LogScaled {
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + self.log_scale
    }
}

/// The frustum `{|z| <= w, t <= y}` with `exp(-w^2/2) = T(y)` against its matched cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrustumComparison {
    pub y: f64,
    pub width: f64,
    pub cylinder_radius: f64,
    /// `gamma_3(A) = Phi(y) (1 - exp(-w^2/2)) = Phi(y)^2`.
    pub measure: f64,
    /// `w per(A)`.
    pub lhs: LogScaled,
    /// `p per(P)`.
    pub rhs: LogScaled,
    /// `lhs < rhs`: the isoperimetric comparison is reversed.
    pub reversed: bool,
    /// `1 - ln(sqrt(2 pi) g(y))`.
    pub condition_lhs: f64,
    /// `-2 (1 + Phi(y)) ln(1 + Phi(y))`.
    pub condition_rhs: f64,
    pub sufficient_condition_holds: bool,
}

impl FrustumComparison {
    /// `ln(rhs / lhs)`: positive when the comparison is reversed.
    pub fn reversal_gap(&self) -> f64 {
        (self.rhs.mantissa / self.lhs.mantissa).ln()
    }

    pub fn condition_gap(&self) -> f64 {
        self.condition_rhs - self.condition_lhs
    }
}

/// Both sides in log space, `exp(-w^2/2) = T(y)` being the common scale.
pub fn frustum_comparison(y: f64) -> Result<FrustumComparison> {
    let y = require_finite("y", y)?;
    if y <= 0.0 {
        return Err(Error::Domain(format!("y must be positive, got {y}")));
    }
    let scaled = raw::scaled_tail(y);
    // ln(sqrt(2 pi) g(y)) = -ln(exp(y^2/2) T(y))
    let ln_sqrt2pi_g = -scaled.ln();
    let w2 = y * y + 2.0 * ln_sqrt2pi_g;
    let w = w2.sqrt();
    let g = raw::inverse_mills(y);
    let phi = raw::cdf(y);
    let log_scale = raw::ln_tail(y);
    let ln_1p_phi = phi.ln_1p();
    let p2 = w2 - 2.0 * ln_1p_phi;
    let lhs = LogScaled {
        mantissa: phi * (w2 + w * g),
        log_scale,
    };
    let rhs = LogScaled {
        mantissa: (1.0 + phi) * p2,
        log_scale,
    };
    let condition_lhs = 1.0 - ln_sqrt2pi_g;
    let condition_rhs = -2.0 * (1.0 + phi) * ln_1p_phi;
    Ok(FrustumComparison {
        y,
        width: w,
        cylinder_radius: p2.sqrt(),
        measure: phi * phi,
        lhs,
        rhs,
        reversed: lhs.mantissa < rhs.mantissa,
        condition_lhs,
        condition_rhs,
        sufficient_condition_holds: condition_lhs < condition_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frustum_measure(w: f64, y: f64) -> f64 {
        raw::cdf(y) * -(-0.5 * w * w).exp_m1()
    }

    fn frustum_perimeter(w: f64, y: f64) -> f64 {
        let e = (-0.5 * w * w).exp();
        w * e * raw::cdf(y) + (-0.5 * y * y).exp() / SQRT_2PI * (1.0 - e)
    }

    #[test]
    fn tall_frustum_is_a_cylinder() {
        for &w in &[0.3, 1.0, 2.5] {
            let p = RadialProfile::frustum(w, 40.0).unwrap();
            let m = measure_gamma3(&p, 0.0).unwrap();
            assert!((m - (1.0 - (-0.5 * w * w).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn frustum_measure_and_perimeter_closed_forms() {
        for &(w, y) in &[(1.0, 0.2), (2.0, -0.5), (1.7, 1.3), (3.0, 2.0)] {
            let p = RadialProfile::frustum(w, y).unwrap();
            assert!((measure_gamma3(&p, 0.0).unwrap() - frustum_measure(w, y)).abs() < 1e-10);
            let per = gaussian_perimeter(&p).unwrap();
            assert!((per - frustum_perimeter(w, y)).abs() < 1e-10);
        }
    }

    #[test]
    fn measure_at_full_width_is_the_cylinder() {
        let p = RadialProfile::cone(2.0, 0.4, -1.1).unwrap();
        let m = measure_gamma3(&p, 2.0).unwrap();
        assert!((m - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(perimeter_b2(&p, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn measure_and_comeasure_sum_to_one() {
        let p = RadialProfile::cone(2.5, 1.0, -0.9).unwrap();
        for &x in &[0.0, 0.7, 1.9, 2.5] {
            let s = measure_gamma3(&p, x).unwrap() + comeasure_gamma3(&p, x).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_cone_approaches_frustum() {
        let frustum = gaussian_perimeter(&RadialProfile::frustum(1.5, 0.3).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for &m in &[-1e-2, -1e-4, -1e-6] {
            let cone = gaussian_perimeter(&RadialProfile::cone(1.5, 0.3, m).unwrap()).unwrap();
            let d = (cone - frustum).abs();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn b1_perimeter_limits() {
        let p = RadialProfile::frustum(2.0, 0.0).unwrap();
        assert_eq!(perimeter_b1(&p, 0.0).unwrap(), 0.0);
        let x: f64 = 1.2;
        assert!((perimeter_b1(&p, x).unwrap() - 0.5 * x * (-0.5 * x * x).exp()).abs() < 1e-16);
        let deep = RadialProfile::frustum(2.0, -45.0).unwrap();
        assert!((perimeter_b1(&deep, x).unwrap() - x * (-0.5 * x * x).exp()).abs() < 1e-15);
        assert!(perimeter_b1(&p, 2.5).is_err());
    }

    #[test]
    fn cylinder_radius_inverse() {
        assert_eq!(cylinder_radius_from_measure(0.0).unwrap(), 0.0);
        let r = cylinder_radius_from_measure(-(-0.5f64).exp_m1()).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert!(cylinder_radius_from_measure(1.0).is_err());
        assert!(cylinder_radius_from_measure(-0.1).is_err());
        let c = crate::special::constants().c;
        assert!((cylinder_radius_from_measure(c).unwrap() - 1.445_282_562_331_712_8).abs() < 1e-12);
    }

    #[test]
    fn scan_endpoints() {
        let p = RadialProfile::frustum(1.0, 0.2).unwrap();
        let grid = uniform_grid(1.0, 65);
        let recs = truncation_scan(&p, &grid).unwrap();
        let s = summarize_scan(&p, &recs).unwrap();
        assert!(s.l_end.abs() < 1e-10, "L(w) = {}", s.l_end);
        assert!((s.l_start - s.direct_difference).abs() < 1e-9);
        assert!(s.l_start >= 0.0);
        assert!((recs[0].radius - s.cylinder_radius).abs() < 1e-12);
        let sup = recs.iter().map(|r| r.radius_gap).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(sup, recs[0].radius_gap);
    }

    #[test]
    fn l_slope_matches_finite_differences() {
        let p = RadialProfile::cone(2.0, 1.0, -1.0).unwrap();
        let h = 1e-5;
        for &x in &[0.3, 0.9, 1.6] {
            let recs = truncation_scan(&p, &[x - h, x, x + h]).unwrap();
            let fd = (recs[2].l_value - recs[0].l_value) / (2.0 * h);
            assert!((fd - recs[1].l_slope).abs() < 1e-6, "x = {x}: {fd} vs {}", recs[1].l_slope);
        }
    }

    #[test]
    fn radius_identity_holds() {
        let p = RadialProfile::cone(2.0, 0.8, -0.7).unwrap();
        for &x in &[0.2, 1.0, 1.8] {
            let (fd, id) = radius_derivative_check(&p, x, 1e-5).unwrap();
            assert!(((fd - id) / id).abs() < 1e-4);
        }
    }

    #[test]
    fn frustum_comparison_small_and_large_y() {
        let small = frustum_comparison(1.0).unwrap();
        assert!(!small.reversed);
        assert!(small.lhs.mantissa > small.rhs.mantissa);
        assert!((small.measure - 0.707_860_981_737_141).abs() < 1e-12);
        let big = frustum_comparison(18.0).unwrap();
        assert!(big.sufficient_condition_holds);
        assert!(big.reversed);
        assert!(big.lhs.value() > 0.0 && big.lhs.value() < 1e-60);
        for &y in &[0.5, 3.0, 18.0, 60.0] {
            let c = frustum_comparison(y).unwrap();
            let lhs = -(-0.5 * c.cylinder_radius.powi(2)).exp_m1();
            assert!((lhs - raw::cdf(y) * (1.0 - raw::tail(y))).abs() < 1e-12);
        }
        assert!(frustum_comparison(0.0).is_err());
    }

    #[test]
    fn frustum_comparison_matches_quadrature_route() {
        for &y in &[0.5, 1.0, 2.5] {
            let c = frustum_comparison(y).unwrap();
            let p = RadialProfile::frustum(c.width, y).unwrap();
            let lhs = c.width * gaussian_perimeter(&p).unwrap();
            assert!(((lhs - c.lhs.value()) / lhs).abs() < 1e-9);
            let m = measure_gamma3(&p, 0.0).unwrap();
            assert!((cylinder_radius_from_measure(m).unwrap() - c.cylinder_radius).abs() < 1e-9);
        }
    }

    #[test]
    fn parse_accepts_header_and_reports_lines() {
        let text = "r,f\n0,1\n0.5,0.9\n1.0,0.5\n";
        let p = parse_profile(text, None).unwrap();
        assert_eq!(p.width(), 1.0);
        assert!((p.value(0.25) - 0.95).abs() < 1e-15);
        assert_eq!(p.slope(0.5), -0.8);

        let bad_r = "r,f\n0,1\n0.5,0.9\n0.4,0.5\n";
        match parse_profile(bad_r, None) {
            Err(Error::Profile { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let convex = "0,1\n0.5,0.2\n1.0,0.0\n";
        match parse_profile(convex, None) {
            Err(Error::Profile { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("concavity"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_profile("0,1\n1,2\n", None).is_err());
        assert!(parse_profile("0,1\n1,x\n", None).is_err());
        assert!(parse_profile("0,1\n1,0.5\n", Some(0.5)).is_err());
    }

    #[test]
    fn sampled_extension_past_last_knot() {
        let p = RadialProfile::sampled(vec![(0.0, 1.0), (1.0, 0.5)], Some(2.0)).unwrap();
        assert!((p.edge_value() - 0.0).abs() < 1e-15);
        assert!(p.has_wall());
        let (inc, convex) = p.shape_violations(&uniform_grid(2.0, 50));
        assert!(inc <= 0.0 && convex <= 1e-12);
    }
}
