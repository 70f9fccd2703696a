use gdl::complex::{mc_curve, ComplexSetSpec, McOptions};
use gdl::grid::{Axis, Spacing};
use gdl::rng::CounterRng;
use gdl::special::{gamma_p_int, raw};
use gdl::symmetrized::{
    comeasure_gamma3, format_profile, measure_gamma3, parse_profile, truncation_scan, uniform_grid, Cylinder3,
    RadialProfile,
};
use proptest::prelude::*;

fn spacing() -> impl Strategy<Value = Spacing> {
    prop_oneof![Just(Spacing::Uniform), Just(Spacing::Geometric)]
}

/// Concave nonincreasing knots: start height plus cumulative nonincreasing slopes.
fn concave_knots() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (
        -2.0..3.0f64,
        prop::collection::vec((0.05..0.5f64, 0.0..2.0f64), 1..12),
    )
        .prop_map(|(f0, steps)| {
            let mut knots = vec![(0.0, f0)];
            let mut slope = 0.0;
            let (mut r, mut f) = (0.0, f0);
            for (dr, drop) in steps {
                slope -= drop;
                r += dr;
                f += slope * dr;
                knots.push((r, f));
            }
            knots
        })
}

fn simple_profile() -> impl Strategy<Value = RadialProfile> {
    prop_oneof![
        (0.1..4.0f64, -4.0..4.0f64).prop_map(|(w, y)| RadialProfile::frustum(w, y).unwrap()),
        (0.1..4.0f64, -3.0..3.0f64, -5.0..0.0f64).prop_map(|(w, h, m)| RadialProfile::cone(w, h, m).unwrap()),
        concave_knots().prop_map(|k| RadialProfile::sampled(k, None).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grids_are_strictly_increasing(
        lo in 0.01..5.0f64,
        span in 0.01..20.0f64,
        count in 2usize..600,
        spacing in spacing(),
        pins in prop::collection::vec(0.0..1.0f64, 0..4),
    ) {
        let mut axis = Axis::new("x", lo, lo + span, count, spacing).unwrap();
        for p in pins {
            axis = axis.pin(lo + p * span);
        }
        let pts = axis.points();
        prop_assert_eq!(pts.len(), count);
        prop_assert_eq!(pts[0], lo);
        prop_assert_eq!(pts[count - 1], lo + span);
        prop_assert!(pts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cdf_and_tail_are_complementary(x in -38.0..38.0f64) {
        let (p, q) = (raw::cdf(x), raw::tail(x));
        prop_assert!((p + q - 1.0).abs() <= 2e-16);
        prop_assert_eq!(raw::tail(-x), p);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn inverse_mills_sandwich(y in 1e-3..1e3f64) {
        let g = raw::inverse_mills(y);
        prop_assert!(y < g);
        prop_assert!(g < (y * y + 2.0).sqrt());
    }

    #[test]
    fn komatsu_lower_bound(t in -10.0..30.0f64) {
        let lower = ((t * t + 4.0).sqrt() - t) / (2.0 * gdl::special::SQRT_2PI);
        prop_assert!(raw::scaled_tail(t) >= lower * (1.0 - 1e-14));
    }

    #[test]
    fn tail_log_ratio_is_increasing(y in -30.0..30.0f64, dy in 1e-3..2.0f64) {
        prop_assert!(raw::tail_log_ratio(y + dy) > raw::tail_log_ratio(y));
    }

    #[test]
    fn quantile_round_trip(y in -30.0..30.0f64) {
        let back = raw::quantile(raw::cdf(y), raw::tail(y));
        prop_assert!((back - y).abs() <= 1e-9 * (1.0 + y.abs()), "{y} -> {back}");
        if y >= 0.0 {
            prop_assert_eq!(raw::inverse_tail(raw::tail(y)), back);
        }
    }

    #[test]
    fn incomplete_gamma_halves_sum_to_one(n in 1u32..12, x in 0.0..60.0f64) {
        let (p, q) = gamma_p_int(n, x);
        prop_assert!((p + q - 1.0).abs() <= 1e-14);
        prop_assert!(p >= 0.0 && q >= 0.0);
    }

    #[test]
    fn measure_plus_comeasure_is_one(p in simple_profile(), frac in 0.0..=1.0f64) {
        let x = frac * p.width();
        let m = measure_gamma3(&p, x).unwrap();
        let co = comeasure_gamma3(&p, x).unwrap();
        prop_assert!((m + co - 1.0).abs() <= 1e-12, "{m} + {co}");
        prop_assert!(m > 0.0 && m < 1.0);
    }

    #[test]
    fn truncation_grows_the_set(p in simple_profile()) {
        let grid = uniform_grid(p.width(), 9);
        let recs = truncation_scan(&p, &grid).unwrap();
        for w in recs.windows(2) {
            // A(x) only gains mass as x grows, so its matched cylinder widens.
            prop_assert!(w[1].radius >= w[0].radius - 1e-10);
        }
        prop_assert!(recs.iter().all(|r| r.radius >= r.x - 1e-9));
    }

    #[test]
    fn sampled_profiles_keep_shape(knots in concave_knots(), probes in prop::collection::vec(0.0..1.0f64, 2..20)) {
        let p = RadialProfile::sampled(knots.clone(), None).unwrap();
        let w = p.width();
        let mut rs: Vec<f64> = probes.iter().map(|u| u * w).collect();
        rs.sort_by(f64::total_cmp);
        for pair in rs.windows(2) {
            prop_assert!(p.value(pair[1]) <= p.value(pair[0]) + 1e-12);
        }
        let (mono, concave) = p.shape_violations(&uniform_grid(w, 64));
        prop_assert!(mono <= 1e-12 && concave <= 1e-10, "{mono} {concave}");
        let back = parse_profile(&format_profile(&knots), None).unwrap();
        prop_assert_eq!(back.knots().unwrap(), &knots[..]);
    }

    #[test]
    fn cylinder_measure_round_trip(m in 1e-6..0.999f64) {
        let cyl = Cylinder3::with_measure(m).unwrap();
        prop_assert!((cyl.measure() - m).abs() <= 1e-13);
        prop_assert!((cyl.measure() + cyl.comeasure() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn uniforms_stay_open(seed in any::<u64>(), stream in any::<u64>(), index in any::<u64>()) {
        let u = CounterRng::new(seed, stream).uniform(index);
        prop_assert!(u > 0.0 && u < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mc_curves_are_monotone_under_common_numbers(
        radii in prop::collection::vec(0.2..2.5f64, 2..4),
        ball in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let set = if ball {
            ComplexSetSpec::ball(radii.len(), radii[0]).unwrap()
        } else {
            ComplexSetSpec::polydisc(radii).unwrap()
        };
        let ts: Vec<f64> = (0..24).map(|i| 0.125 * i as f64).collect();
        let opts = McOptions { samples: 4000, seed };
        let curve = mc_curve(&set, &ts, opts).unwrap();
        prop_assert_eq!(curve[0].estimate, 0.0);
        for w in curve.windows(2) {
            prop_assert!(w[1].estimate >= w[0].estimate);
        }
        prop_assert_eq!(mc_curve(&set, &ts, opts).unwrap(), curve);
    }
}
