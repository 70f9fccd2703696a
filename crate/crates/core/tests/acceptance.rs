//! Acceptance gate: one line per criterion, nonzero exit if any fails.

#![allow(clippy::excessive_precision)]

use std::process::Command;
use std::time::{Duration, Instant};

use gdl::complex::{dilation_compare, ComplexSetSpec, McOptions, Regime, Verdict};
use gdl::special::{compute_constants, raw};
use gdl::symmetrized::{frustum_comparison, RadialProfile};
use gdl::verification::{run_check, scan_report, search_frustum_reversal, truncation_battery, CheckConfig, CheckReport};
use gdl::Result;

// Independent high-precision references.
const H_REF: f64 = 0.724_206_665_597_033_041_89;
const C_REF: f64 = 0.648_104_436_669_330_970_14;
const S0_REF: f64 = 0.930_918_810_676_740_533_61;
const REMARK1_REF: f64 = 8.505_614_312_773_498_5e-3;
const CONDITION_THRESHOLD_REF: f64 = 17.293_556_208_703_78;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn check(name: &str) -> Result<CheckReport> {
    run_check(name, &CheckConfig::default())
}

fn margin(r: &CheckReport, component: &str) -> f64 {
    r.component(component).map_or(f64::NAN, |c| c.min_margin)
}

fn passes(r: &CheckReport, component: &str) -> bool {
    r.component(component).is_some_and(|c| c.pass)
}

fn constants_criterion() -> Result<Outcome> {
    let k = compute_constants()?;
    let g_star = raw::radius_measure_ratio(k.u_star);
    let fixed_point = (raw::tail_log_ratio(k.h) - g_star).abs();
    let level = (1.0 - 2.0 * raw::tail(k.s0) - k.c).abs();
    let refs = [(k.h, H_REF), (k.c, C_REF), (k.s0, S0_REF)];
    let worst_ref = refs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        k.h > 0.7 && k.c > 0.64 && fixed_point <= 1e-12 && level <= 1e-12 && worst_ref <= 1e-12,
        format!(
            "H={:.12} c={:.12} s0={:.12} |F(H)-G(u*)|={fixed_point:.1e} |1-2T(s0)-c|={level:.1e} ref err {worst_ref:.1e}",
            k.h, k.c, k.s0
        ),
    )
}

fn constant_chain_criterion() -> Result<Outcome> {
    let r = check("remark1")?;
    let m = margin(&r, "G(u_star) - F(0.7)");
    outcome(
        r.pass && m > 0.0 && (m - REMARK1_REF).abs() <= 1e-12,
        format!("margin {m:.10e} (reference {REMARK1_REF:.10e})"),
    )
}

fn radius_bound_criterion() -> Result<Outcome> {
    let small = check("lemma3-i")?;
    let large = check("lemma3-ii")?;
    let (a, b) = (margin(&small, "margin"), margin(&large, "margin"));
    outcome(
        a >= -1e-10 && b >= -1e-10 && small.grid_size() == 160_000 && large.grid_size() == 160_000,
        format!("case i min {a:.3e}, case ii min {b:.3e} on 400x400 grids"),
    )
}

fn tail_bounds_criterion() -> Result<Outcome> {
    let r = check("lemma1")?;
    let names = ["komatsu", "komatsu_scaled", "quadratic_form", "log_ratio_increasing"];
    let ok = names.iter().all(|n| passes(&r, n) && margin(&r, n) > 0.0);
    outcome(
        ok,
        format!(
            "komatsu {:.3e}, quadratic {:.3e}, F increments {:.3e}",
            margin(&r, "komatsu"),
            margin(&r, "quadratic_form"),
            margin(&r, "log_ratio_increasing")
        ),
    )
}

fn exp_quadratic_criterion() -> Result<Outcome> {
    let r = check("lemma2")?;
    let control = margin(&r, "control_u1");
    outcome(
        passes(&r, "exp_vs_quadratic") && margin(&r, "exp_vs_quadratic") > 0.0 && control < 0.0,
        format!("min {:.6e} on [u*, 20], control u=1 gives {control:.4e}", margin(&r, "exp_vs_quadratic")),
    )
}

fn tail_cdf_criterion() -> Result<Outcome> {
    let r = check("latole-lemma5")?;
    let max = r.details["grid_max"].as_f64().unwrap_or(f64::NAN);
    let at = r.details["argmax"].as_f64().unwrap_or(f64::NAN);
    let sup = (std::f64::consts::PI / 8.0).sqrt();
    outcome(
        r.pass && (max - sup).abs() <= 1e-10 && passes(&r, "argmax_near_zero"),
        format!("grid max {max:.15} vs sqrt(pi/8) {sup:.15} at y={at}"),
    )
}

fn truncation_criterion() -> Result<Outcome> {
    let r = check("thm2-l-scan")?;
    let battery = truncation_battery()?;
    let proven = battery.iter().filter(|b| !b.control && !b.degenerate).count();
    let identity = r
        .components
        .iter()
        .filter(|c| c.name.ends_with("radius identity"))
        .map(|c| 1e-4 - c.min_margin)
        .fold(0.0, f64::max);
    outcome(
        r.pass && proven >= 5,
        format!(
            "{proven} profiles, min L(0) {:.3e}, worst radius identity rel err {identity:.1e}",
            margin(&r, "L(0) >= 0")
        ),
    )
}

fn frustum_criterion() -> Result<Outcome> {
    let search = search_frustum_reversal(10.0, 25.0, &CheckConfig::default())?;
    let threshold = search.condition_threshold.unwrap_or(f64::NAN);
    let at18 = frustum_comparison(18.0)?;
    let small = frustum_comparison(0.2)?;
    let c = gdl::special::constants().c;
    let (control, _) = scan_report(&RadialProfile::frustum(small.width, 0.2)?, 512, None)?;
    let l0 = margin(&control, "L(0) >= 0");
    outcome(
        (17.0..=18.0).contains(&threshold)
            && (threshold - CONDITION_THRESHOLD_REF).abs() <= 1e-9
            && at18.reversed
            && small.measure < c
            && l0 >= 0.0,
        format!(
            "threshold y={threshold:.10}, ln lhs - ln rhs at 18 = {:.4e}, y=0.2 control L(0)={l0:.4e}",
            at18.lhs.ln() - at18.rhs.ln()
        ),
    )
}

fn dilation_criterion() -> Result<Outcome> {
    let pl = check("thm3-pl")?;
    let tail = check("thm3-tail")?;
    let fst = check("thm3-fst")?;
    outcome(
        pl.pass
            && passes(&pl, "boundary_t2")
            && tail.pass
            && margin(&tail, "log_margin") >= -1e-12
            && passes(&fst, "gap_at_t2")
            && passes(&fst, "gap_dt"),
        format!(
            "tail log-margin min {:.3e}, F(s,2) min {:.3e}, dF/dt min {:.3e}",
            margin(&tail, "log_margin"),
            margin(&fst, "gap_at_t2"),
            margin(&fst, "gap_dt")
        ),
    )
}

fn complex_criterion() -> Result<Outcome> {
    let sets = [
        ComplexSetSpec::ball(2, 1.0)?,
        ComplexSetSpec::ball(2, 2.0)?,
        ComplexSetSpec::ball(3, 1.8)?,
        ComplexSetSpec::polydisc(vec![0.8, 1.2])?,
        ComplexSetSpec::polydisc(vec![1.0, 1.5, 2.0])?,
        ComplexSetSpec::polydisc(vec![0.6, 0.9, 1.4])?,
    ];
    let c = gdl::special::constants().c;
    let closed_grid: Vec<f64> = (0..=100).map(|i| 0.05 * i as f64).collect();
    let mc_grid: Vec<f64> = (1..=20).map(|i| 0.25 * i as f64).collect();
    let mut ok = true;
    let (mut worst_proven, mut worst_dilated, mut worst_z) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for (i, set) in sets.iter().enumerate() {
        let closed = dilation_compare(set, &closed_grid, None, 1e-10)?;
        ok &= closed.measure <= c && closed.t0.is_some() && closed.pass();
        for r in &closed.rows {
            if r.regime != Regime::Conjecture {
                worst_proven = worst_proven.min(r.margin);
            }
            if let Some(m) = r.dilated_margin {
                worst_dilated = worst_dilated.min(m);
            }
        }
        let opts = McOptions {
            samples: 1_000_000,
            seed: 1 + i as u64,
        };
        let mc = dilation_compare(set, &mc_grid, Some(opts), 1e-10)?;
        ok &= mc.rows.iter().all(|r| r.verdict != Verdict::Fail);
        for r in &mc.rows {
            let exact = set.measure_closed_form(r.t)?;
            if r.sigma > 0.0 {
                worst_z = worst_z.max((r.nu_set - exact).abs() / r.sigma);
            }
        }
    }
    ok &= worst_proven >= -1e-10 && worst_dilated >= -1e-10 && worst_z <= 3.0;
    outcome(
        ok,
        format!(
            "{} sets: proven-range min margin {worst_proven:.3e}, dilated curve min {worst_dilated:.3e}, MC max |z| {worst_z:.2}",
            sets.len()
        ),
    )
}

fn determinism_criterion() -> Result<Outcome> {
    let commands: [&[&str]; 7] = [
        &["constants"],
        &["verify", "lemma3-ii", "--rows"],
        &["verify", "thm2-l-scan"],
        &["remark2"],
        &["scan-L", "--cone", "2,1,-2"],
        &["compare", "--family", "ball", "--n", "3", "--params", "1.8", "--t-grid", "0:5:21", "--mc", "--samples", "200000", "--seed", "4"],
        &["symmetrize", "--family", "polydisc", "--params", "0.8,1.2", "--r-grid", "0:0.8:256"],
    ];
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_gdl"))
            .args(args)
            .args(["--format", "json"])
            .output()
            .map(|o| o.stdout)
    };
    let mut identical = 0;
    for args in commands {
        let (a, b) = (run(args)?, run(args)?);
        if !a.is_empty() && a == b {
            identical += 1;
        }
    }
    outcome(
        identical == commands.len(),
        format!("{identical}/{} commands byte-identical across reruns", commands.len()),
    )
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 11] = [
        ("constants", Duration::from_secs(1), constants_criterion),
        ("constant chain", Duration::from_secs(1), constant_chain_criterion),
        ("radius bound grids", Duration::from_secs(30), radius_bound_criterion),
        ("tail lower bounds", Duration::from_secs(5), tail_bounds_criterion),
        ("exp vs quadratic", Duration::from_secs(1), exp_quadratic_criterion),
        ("tail-cdf product max", Duration::from_secs(5), tail_cdf_criterion),
        ("truncation scans", Duration::from_secs(60), truncation_criterion),
        ("frustum counterexample", Duration::from_secs(5), frustum_criterion),
        ("dilation suite", Duration::from_secs(10), dilation_criterion),
        ("complex-set spot checks", Duration::from_secs(120), complex_criterion),
        ("determinism", Duration::from_secs(120), determinism_criterion),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = run();
        let elapsed = started.elapsed();
        let in_time = elapsed <= *budget;
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "[{}] {:>2} {name:<24} {:>9.1} ms (budget {} s{})  {detail}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64() * 1e3,
            budget.as_secs(),
            if in_time { "" } else { ", exceeded" },
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
