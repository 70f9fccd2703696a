//! Convex rotationally symmetric sets in C^n under the standard Gaussian measure.
//!
//! Points of C^n are stored as `2n` reals `(Re z_1, Im z_1, Re z_2, ...)`, each
//! coordinate standard normal under the measure.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{require_finite, Error, Result};
use crate::rng::CounterRng;
use crate::roots;
use crate::special::{constants, gamma_p_int, raw, INFINITE_CLAMP};
use crate::symmetrized::RadialProfile;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Samples per parallel block; block sums are combined in block order.
const BLOCK: u64 = 4096;

pub type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `{||z|| <= r}`.
    Ball { radius: f64 },
    /// `{|z_k| <= r_k for all k}`.
    Polydisc { radii: Vec<f64> },
    /// `{|<z, v>| <= p}`, `v` of unit length.
    Cylinder { radius: f64, axis: Vec<Complex64> },
    /// A caller-supplied convex rotationally symmetric set.
    Oracle { membership: Membership, inradius: f64 },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ball { radius } => f.debug_struct("Ball").field("radius", radius).finish(),
            Self::Polydisc { radii } => f.debug_struct("Polydisc").field("radii", radii).finish(),
            Self::Cylinder { radius, axis } => f
                .debug_struct("Cylinder")
                .field("radius", radius)
                .field("axis", axis)
                .finish(),
            Self::Oracle { inradius, .. } => {
                f.debug_struct("Oracle").field("inradius", inradius).finish_non_exhaustive()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComplexSetSpec {
    n: usize,
    family: Family,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    let x = require_finite(name, x)?;
    if x <= 0.0 {
        return Err(Error::Domain(format!("{name} must be positive, got {x}")));
    }
    Ok(x)
}

fn check_dimension(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(n)
}

impl ComplexSetSpec {
    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        Ok(Self {
            n: check_dimension(n)?,
            family: Family::Ball {
                radius: positive("radius", radius)?,
            },
        })
    }

    pub fn polydisc(radii: Vec<f64>) -> Result<Self> {
        let n = check_dimension(radii.len())?;
        for &r in &radii {
            positive("polydisc radius", r)?;
        }
        Ok(Self {
            n,
            family: Family::Polydisc { radii },
        })
    }

    /// Cylinder along the first axis.
    pub fn cylinder(n: usize, radius: f64) -> Result<Self> {
        let n = check_dimension(n)?;
        let mut axis = vec![Complex64::new(0.0, 0.0); n];
        axis[0] = Complex64::new(1.0, 0.0);
        Self::cylinder_along(radius, axis)
    }

    /// Cylinder along `axis`, normalized to unit length.
    pub fn cylinder_along(radius: f64, axis: Vec<Complex64>) -> Result<Self> {
        let n = check_dimension(axis.len())?;
        let norm = axis.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("cylinder axis must be a nonzero finite vector".into()));
        }
        Ok(Self {
            n,
            family: Family::Cylinder {
                radius: positive("radius", radius)?,
                axis: axis.into_iter().map(|v| v / norm).collect(),
            },
        })
    }

    /// `membership` receives `2n` reals and must be safe to call concurrently.
    pub fn oracle<F>(n: usize, inradius: f64, membership: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        let inradius = require_finite("inradius", inradius)?;
        if inradius < 0.0 {
            return Err(Error::Domain(format!("inradius must be nonnegative, got {inradius}")));
        }
        Ok(Self {
            n: check_dimension(n)?,
            family: Family::Oracle {
                membership: Arc::new(membership),
                inradius,
            },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn label(&self) -> &'static str {
        match self.family {
            Family::Ball { .. } => "ball",
            Family::Polydisc { .. } => "polydisc",
            Family::Cylinder { .. } => "cylinder",
            Family::Oracle { .. } => "oracle",
        }
    }

    /// Largest `r` with the open ball of radius `r` inside the set.
    pub fn inradius(&self) -> f64 {
        match &self.family {
            Family::Ball { radius } => *radius,
            Family::Polydisc { radii } => radii.iter().copied().fold(f64::INFINITY, f64::min),
            Family::Cylinder { radius, .. } => *radius,
            Family::Oracle { inradius, .. } => *inradius,
        }
    }

    /// Minkowski gauge: `z` lies in `tA` iff `gauge(z) <= t`. `None` for oracles.
    pub fn gauge(&self, z: &[f64]) -> Option<f64> {
        match &self.family {
            Family::Ball { radius } => Some(z.iter().map(|x| x * x).sum::<f64>().sqrt() / radius),
            Family::Polydisc { radii } => Some(
                radii
                    .iter()
                    .enumerate()
                    .map(|(k, r)| z[2 * k].hypot(z[2 * k + 1]) / r)
                    .fold(0.0, f64::max),
            ),
            Family::Cylinder { radius, axis } => {
                let dot: Complex64 = axis
                    .iter()
                    .enumerate()
                    .map(|(k, v)| Complex64::new(z[2 * k], z[2 * k + 1]) * v.conj())
                    .sum();
                Some(dot.norm() / radius)
            }
            Family::Oracle { .. } => None,
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        match &self.family {
            Family::Oracle { membership, .. } => membership(z),
            _ => self.gauge(z).expect("built-in family") <= 1.0,
        }
    }

    /// `(nu(tA), 1 - nu(tA))`, each half with full relative precision.
    pub fn measure_pair(&self, t: f64) -> Result<(f64, f64)> {
        let t = require_finite("t", t)?;
        if t < 0.0 {
            return Err(Error::Domain(format!("dilation must be nonnegative, got {t}")));
        }
        match &self.family {
            Family::Ball { radius } => {
                let x = t * radius;
                Ok(gamma_p_int(self.n as u32, 0.5 * x * x))
            }
            Family::Polydisc { radii } => {
                let mut measure = 1.0;
                let mut ln_measure = 0.0;
                for r in radii {
                    let x = t * r;
                    let m = -(-0.5 * x * x).exp_m1();
                    measure *= m;
                    ln_measure += m.ln();
                }
                Ok((measure, -ln_measure.exp_m1()))
            }
            Family::Cylinder { radius, .. } => Ok(cylinder_pair(t * radius)),
            Family::Oracle { .. } => Err(Error::Unsupported(
                "closed-form measure of an oracle set; use Monte Carlo".into(),
            )),
        }
    }

    /// `nu(tA)` in closed form.
    pub fn measure_closed_form(&self, t: f64) -> Result<f64> {
        Ok(self.measure_pair(t)?.0)
    }

    /// Fraction of `pairs` random points whose membership changes under a random rotation `e^{i theta}`.
    pub fn rotation_violations(&self, pairs: u64, seed: u64) -> u64 {
        let rng = CounterRng::new(seed, 0x726f_7461);
        let dim = 2 * self.n;
        (0..pairs)
            .into_par_iter()
            .map(|i| {
                let mut z = vec![0.0; dim];
                rng.fill_normals(i, &mut z);
                let scale = 3.0 * rng.split(1).uniform(i);
                let theta = std::f64::consts::TAU * rng.split(2).uniform(i);
                let rot = Complex64::from_polar(1.0, theta);
                z.iter_mut().for_each(|x| *x *= scale);
                let mut w = z.clone();
                for k in 0..self.n {
                    let v = Complex64::new(z[2 * k], z[2 * k + 1]) * rot;
                    w[2 * k] = v.re;
                    w[2 * k + 1] = v.im;
                }
                u64::from(self.contains(&z) != self.contains(&w))
            })
            .sum()
    }

    /// Convex combinations of member pairs that fall outside the set, out of
    /// up to `segments` tested segments. Returns `(violations, tested)`.
    pub fn convexity_violations(&self, segments: u64, seed: u64) -> (u64, u64) {
        let rng = CounterRng::new(seed, 0x636f_6e76);
        let dim = 2 * self.n;
        let draw = |i: u64| {
            let mut z = vec![0.0; dim];
            rng.fill_normals(i, &mut z);
            let scale = 2.0 * rng.split(1).uniform(i);
            z.iter_mut().for_each(|x| *x *= scale);
            z
        };
        (0..segments)
            .into_par_iter()
            .map(|i| {
                let a = draw(2 * i);
                let b = draw(2 * i + 1);
                if !(self.contains(&a) && self.contains(&b)) {
                    return (0, 0);
                }
                let lambda = rng.split(3).uniform(i);
                let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
                (u64::from(!self.contains(&c)), 1)
            })
            .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1))
    }
}

fn cylinder_pair(radius: f64) -> (f64, f64) {
    let x = 0.5 * radius * radius;
    (-(-x).exp_m1(), (-x).exp())
}

/// `a - b` for two probabilities given with complements, subtracting whichever
/// halves are smaller so nearly-equal large measures keep their precision.
fn measure_difference(a: (f64, f64), b: (f64, f64)) -> f64 {
    if a.0 > 0.5 && b.0 > 0.5 {
        b.1 - a.1
    } else {
        a.0 - b.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub t: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// 99% normal-approximation half width.
    pub half_width: f64,
    pub samples: u64,
}

impl McEstimate {
    fn from_hits(t: f64, hits: u64, samples: u64) -> Self {
        let p = hits as f64 / samples as f64;
        let std_error = (p * (1.0 - p) / samples as f64).sqrt();
        Self {
            t,
            estimate: p,
            std_error,
            half_width: Z_99 * std_error,
            samples,
        }
    }
}

fn block_ranges(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(BLOCK))
        .map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(samples)))
        .collect()
}

fn check_grid(ts: &[f64]) -> Result<()> {
    for &t in ts {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("dilations must be finite and nonnegative, got {t}")));
        }
    }
    Ok(())
}

/// Monte Carlo `nu(tA)` for every `t` in `ts` from one shared sample, so the
/// estimated curve is nondecreasing in `t`. `t = 0` gives `(0, 0)`: the
/// dilate is the origin alone, a null set.
pub fn mc_curve(set: &ComplexSetSpec, ts: &[f64], opts: McOptions) -> Result<Vec<McEstimate>> {
    if opts.samples == 0 {
        return Err(Error::Input("Monte Carlo needs at least one sample".into()));
    }
    check_grid(ts)?;
    let rng = CounterRng::new(opts.seed, 0);
    let dim = 2 * set.n;
    let blocks = block_ranges(opts.samples);
    if let Family::Oracle { membership, .. } = &set.family {
        return Ok(ts
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    return McEstimate::from_hits(t, 0, opts.samples);
                }
                let hits: u64 = blocks
                    .par_iter()
                    .map(|&(lo, hi)| {
                        let mut z = vec![0.0; dim];
                        let mut hits = 0u64;
                        for i in lo..hi {
                            rng.fill_normals(i, &mut z);
                            z.iter_mut().for_each(|x| *x /= t);
                            hits += u64::from(membership(&z));
                        }
                        hits
                    })
                    .collect::<Vec<u64>>()
                    .into_iter()
                    .sum();
                McEstimate::from_hits(t, hits, opts.samples)
            })
            .collect());
    }
    let mut gauges: Vec<f64> = blocks
        .par_iter()
        .flat_map_iter(|&(lo, hi)| {
            let mut z = vec![0.0; dim];
            (lo..hi)
                .map(|i| {
                    rng.fill_normals(i, &mut z);
                    set.gauge(&z).expect("built-in family")
                })
                .collect::<Vec<f64>>()
        })
        .collect();
    gauges.par_sort_unstable_by(f64::total_cmp);
    Ok(ts
        .iter()
        .map(|&t| {
            let hits = if t == 0.0 {
                0
            } else {
                gauges.partition_point(|&g| g <= t) as u64
            };
            McEstimate::from_hits(t, hits, opts.samples)
        })
        .collect())
}

/// Monte Carlo `nu(tA)` with its 99% half width.
pub fn mc_measure(set: &ComplexSetSpec, t: f64, opts: McOptions) -> Result<(f64, f64)> {
    let e = mc_curve(set, &[t], opts)?[0];
    Ok((e.estimate, e.half_width))
}

/// Radius of the cylinder with the same measure as `set`.
pub fn matched_cylinder(set: &ComplexSetSpec) -> Result<f64> {
    if let Family::Cylinder { radius, .. } = set.family {
        return Ok(radius);
    }
    let (_, co) = set.measure_pair(1.0)?;
    radius_from_comeasure(co)
}

fn radius_from_comeasure(co: f64) -> Result<f64> {
    if co <= 0.0 {
        return Err(Error::Degenerate(
            "set has full measure; no finite cylinder matches it".into(),
        ));
    }
    Ok((-2.0 * co.ln()).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `t <= 1`: the cylinder dilate should be at least as heavy.
    Shrink,
    /// `1 <= t <= t0`: the set's dilate should be at least as heavy.
    Expand,
    /// Outside the proven range; the margin is reported for the open conjecture.
    Conjecture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Monte Carlo margin within three combined standard errors of zero.
    Inconclusive,
    ConjectureDataPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilationRow {
    pub t: f64,
    pub regime: Regime,
    pub nu_set: f64,
    pub nu_cylinder: f64,
    /// Combined standard error of the margin; 0 in closed form.
    pub sigma: f64,
    /// Oriented so that `>= 0` is the expected direction of the regime.
    pub margin: f64,
    pub verdict: Verdict,
    /// `l(t) = 1 + K (t - 1)` for `t >= 1`.
    pub dilated_t: Option<f64>,
    pub nu_set_dilated: Option<f64>,
    /// `nu(l(t) A) - nu(tP)`.
    pub dilated_margin: Option<f64>,
    pub dilated_verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationComparison {
    pub family: &'static str,
    pub n: usize,
    pub mode: MeasureMode,
    pub measure: f64,
    pub cylinder_radius: f64,
    /// Solves `nu(t0 A) = c`, present when `nu(A) < c` and the inradius is positive.
    pub t0: Option<f64>,
    pub rows: Vec<DilationRow>,
}

impl DilationComparison {
    /// No row contradicts a proven statement.
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| {
            r.verdict != Verdict::Fail && r.dilated_verdict != Some(Verdict::Fail)
        })
    }

    /// Smallest margin among rows with a pass/fail verdict, over both curves.
    pub fn min_margin(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for r in &self.rows {
            let mut consider = |m: f64, v: Verdict| {
                if matches!(v, Verdict::Pass | Verdict::Fail) && best.is_none_or(|b| m < b.1) {
                    best = Some((r.t, m));
                }
            };
            consider(r.margin, r.verdict);
            if let (Some(m), Some(v)) = (r.dilated_margin, r.dilated_verdict) {
                consider(m, v);
            }
        }
        best
    }
}

fn judge(margin: f64, sigma: f64, tolerance: f64) -> Verdict {
    if sigma > 0.0 && margin.abs() < 3.0 * sigma {
        Verdict::Inconclusive
    } else if margin >= -tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Compare `nu(tA)` with `nu(tP)` along `t_grid`, plus the weak dilation
/// curve `nu(l(t) A)` for `t >= 1`. Monte Carlo mode uses one shared sample
/// for every dilation.
pub fn dilation_compare(
    set: &ComplexSetSpec,
    t_grid: &[f64],
    mc: Option<McOptions>,
    tolerance: f64,
) -> Result<DilationComparison> {
    check_grid(t_grid)?;
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("t grid must be strictly increasing".into()));
    }
    let k = constants();
    let closed = !matches!(set.family, Family::Oracle { .. });

    let dilated: Vec<Option<f64>> = t_grid
        .iter()
        .map(|&t| (t >= 1.0).then(|| k.dilation_factor(t)))
        .collect();

    // Measures of tA as (m, 1 - m, sigma) for each grid point and each dilated point.
    let (base, cylinder_radius, radius_sigma, measure) = match mc {
        None => {
            let p = matched_cylinder(set)?;
            (None, p, 0.0, set.measure_pair(1.0)?.0)
        }
        Some(opts) => {
            let mut ts: Vec<f64> = t_grid.to_vec();
            ts.extend(dilated.iter().flatten());
            ts.push(1.0);
            let est = mc_curve(set, &ts, opts)?;
            let unit = est[est.len() - 1];
            let (p, m, sigma_m) = if closed {
                (matched_cylinder(set)?, set.measure_pair(1.0)?.0, 0.0)
            } else {
                (radius_from_comeasure(1.0 - unit.estimate)?, unit.estimate, unit.std_error)
            };
            (Some(est), p, sigma_m, m)
        }
    };

    let t0 = if measure < k.c && set.inradius() > 0.0 {
        let f = |t: f64| -> f64 {
            match (&base, mc) {
                (Some(_), Some(opts)) if !closed => mc_curve(set, &[t], opts)
                    .map(|e| e[0].estimate - k.c)
                    .unwrap_or(f64::NAN),
                _ => set.measure_pair(t).map(|m| m.0 - k.c).unwrap_or(f64::NAN),
            }
        };
        Some(roots::solve_increasing(f, 1.0, 2.0, 64)?)
    } else {
        None
    };

    let set_pair = |idx: usize, t: f64| -> Result<((f64, f64), f64)> {
        match &base {
            None => Ok((set.measure_pair(t)?, 0.0)),
            Some(est) => {
                let e = est[idx];
                Ok(((e.estimate, 1.0 - e.estimate), e.std_error))
            }
        }
    };
    // The matched radius carries Monte Carlo error for oracles: delta method on
    // nu(tP) = 1 - (1 - m)^{t^2}.
    let cylinder_sigma = |t: f64| -> f64 {
        if radius_sigma == 0.0 {
            return 0.0;
        }
        let t2 = t * t;
        t2 * (1.0 - measure).powf(t2 - 1.0) * radius_sigma
    };

    let proven = measure <= k.c;
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut dilated_idx = t_grid.len();
    for (i, &t) in t_grid.iter().enumerate() {
        let (a, sigma_a) = set_pair(i, t)?;
        let cyl = cylinder_pair(t * cylinder_radius);
        let sigma = sigma_a + cylinder_sigma(t);
        let (regime, margin) = if t < 1.0 {
            let regime = if proven { Regime::Shrink } else { Regime::Conjecture };
            (regime, measure_difference(cyl, a))
        } else {
            let regime = match t0 {
                Some(t0) if t <= t0 => Regime::Expand,
                _ => Regime::Conjecture,
            };
            (regime, measure_difference(a, cyl))
        };
        let verdict = match regime {
            Regime::Conjecture => Verdict::ConjectureDataPoint,
            _ => judge(margin, sigma, tolerance),
        };
        let mut row = DilationRow {
            t,
            regime,
            nu_set: a.0,
            nu_cylinder: cyl.0,
            sigma,
            margin,
            verdict,
            dilated_t: None,
            nu_set_dilated: None,
            dilated_margin: None,
            dilated_verdict: None,
        };
        if let Some(lt) = dilated[i] {
            let (d, sigma_d) = set_pair(dilated_idx, lt)?;
            dilated_idx += 1;
            let m = measure_difference(d, cyl);
            row.dilated_t = Some(lt);
            row.nu_set_dilated = Some(d.0);
            row.dilated_margin = Some(m);
            row.dilated_verdict = Some(judge(m, sigma_d + cylinder_sigma(t), tolerance));
        }
        rows.push(row);
    }
    Ok(DilationComparison {
        family: set.label(),
        n: set.n,
        mode: if mc.is_some() {
            MeasureMode::MonteCarlo
        } else {
            MeasureMode::ClosedForm
        },
        measure,
        cylinder_radius,
        t0,
        rows,
    })
}

/// Slice measure and its complement at radius `r` for the built-in families.
fn slice_pair(set: &ComplexSetSpec, r: f64) -> (f64, f64) {
    match &set.family {
        Family::Ball { radius } => {
            if r >= *radius {
                return (0.0, 1.0);
            }
            let x = 0.5 * (radius - r) * (radius + r);
            gamma_p_int(set.n as u32 - 1, x)
        }
        Family::Polydisc { radii } => {
            let axis = polydisc_axis(radii);
            if r > radii[axis] {
                return (0.0, 1.0);
            }
            let mut measure = 1.0;
            let mut ln_measure = 0.0;
            for (k, r_k) in radii.iter().enumerate() {
                if k != axis {
                    let m = -(-0.5 * r_k * r_k).exp_m1();
                    measure *= m;
                    ln_measure += m.ln();
                }
            }
            (measure, -ln_measure.exp_m1())
        }
        // Rotate the axis onto the first coordinate: every slice inside radius p is everything.
        Family::Cylinder { radius, .. } => {
            if r > *radius {
                (0.0, 1.0)
            } else {
                (1.0, 0.0)
            }
        }
        Family::Oracle { .. } => unreachable!("oracle slices are sampled"),
    }
}

// Symmetrize along the narrowest disc so the profile lives on [0, inradius).
fn polydisc_axis(radii: &[f64]) -> usize {
    radii
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty")
}

/// Least concave nonincreasing majorant of `(r_i, f_i)`, for noisy slice estimates.
fn concave_nonincreasing_majorant(knots: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
    for &p in knots {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let eval = |r: f64| -> f64 {
        let j = hull.partition_point(|h| h.0 <= r).clamp(1, hull.len().max(2) - 1);
        if hull.len() == 1 {
            return hull[0].1;
        }
        let (a, b) = (hull[j - 1], hull[j]);
        a.1 + (b.1 - a.1) * (r - a.0) / (b.0 - a.0)
    };
    let peak = hull.iter().map(|h| h.1).fold(f64::NEG_INFINITY, f64::max);
    let peak_r = hull.iter().find(|h| h.1 == peak).map(|h| h.0).unwrap_or(0.0);
    knots
        .iter()
        .map(|&(r, _)| (r, if r <= peak_r { peak } else { eval(r) }))
        .collect()
}

/// Ehrhard symmetrization: `f(r) = Phi^{-1}(nu_{n-1}(slice at |z_1| = r))`
/// sampled on `r_grid`, a strictly increasing grid starting at 0 inside
/// `[0, w)`. The profile runs to `w` with the last slope. Oracle sets need
/// `mc` and their slice estimates are replaced by the least concave
/// nonincreasing majorant.
pub fn ehrhard_profile(
    set: &ComplexSetSpec,
    r_grid: &[f64],
    mc: Option<McOptions>,
) -> Result<RadialProfile> {
    let w = set.inradius();
    if w <= 0.0 {
        return Err(Error::Degenerate("set has zero inradius".into()));
    }
    if r_grid.first() != Some(&0.0) {
        return Err(Error::Input("radial grid must start at 0".into()));
    }
    if r_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Input("radial grid must be strictly increasing".into()));
    }
    if let Some(&last) = r_grid.last() {
        if last >= w {
            return Err(Error::Input(format!(
                "radial grid must stay below the inradius {w}, got {last}"
            )));
        }
    }
    let pairs: Vec<(f64, f64)> = match (&set.family, mc) {
        (Family::Oracle { membership, .. }, Some(opts)) => {
            if opts.samples == 0 {
                return Err(Error::Input("Monte Carlo needs at least one sample".into()));
            }
            r_grid
                .par_iter()
                .enumerate()
                .map(|(i, &r)| oracle_slice(membership, set.n, r, opts, i as u64))
                .collect()
        }
        (Family::Oracle { .. }, None) => {
            return Err(Error::Unsupported(
                "oracle slices need Monte Carlo options".into(),
            ))
        }
        _ => r_grid.iter().map(|&r| slice_pair(set, r)).collect(),
    };
    let mut clamped = 0usize;
    let mut knots: Vec<(f64, f64)> = r_grid
        .iter()
        .zip(&pairs)
        .map(|(&r, &(p, q))| {
            let f = raw::quantile(p, q);
            if f.abs() >= INFINITE_CLAMP {
                clamped += 1;
            }
            (r, f.clamp(-INFINITE_CLAMP, INFINITE_CLAMP))
        })
        .collect();
    if clamped > 0 {
        log::warn!(
            "{clamped} of {} slice values saturated and were clamped to ±{INFINITE_CLAMP}",
            knots.len()
        );
    }
    if matches!(set.family, Family::Oracle { .. }) {
        let majorant = concave_nonincreasing_majorant(&knots);
        let shift = knots
            .iter()
            .zip(&majorant)
            .map(|(a, b)| b.1 - a.1)
            .fold(0.0, f64::max);
        if shift > 0.0 {
            log::warn!("slice estimates lifted by up to {shift:.3e} to restore concavity");
        }
        knots = majorant;
    }
    RadialProfile::sampled(knots, Some(w))
}

// Stratum for one slice radius: own stream, sample count doubled (up to 16x)
// while fewer than 100 hits are seen.
fn oracle_slice(membership: &Membership, n: usize, r: f64, opts: McOptions, stratum: u64) -> (f64, f64) {
    let rng = CounterRng::new(opts.seed, 1 + stratum);
    let dim = 2 * (n - 1);
    let mut z = vec![0.0; 2 * n];
    let mut rest = vec![0.0; dim];
    let mut hits = 0u64;
    let mut drawn = 0u64;
    let mut budget = opts.samples;
    loop {
        while drawn < budget {
            rng.fill_normals(drawn, &mut rest);
            z[0] = r;
            z[1] = 0.0;
            z[2..].copy_from_slice(&rest);
            hits += u64::from(membership(&z));
            drawn += 1;
        }
        if (hits >= 100 && drawn - hits >= 100) || budget >= 16 * opts.samples {
            break;
        }
        budget *= 2;
    }
    let p = hits as f64 / drawn as f64;
    (p, (drawn - hits) as f64 / drawn as f64)
}
