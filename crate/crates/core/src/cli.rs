//! Command-line front end.
//!
//! Exit codes: 0 when every asserted check passes, 1 when one fails (or a
//! computation breaks down), 2 for usage and input errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::complex::{dilation_compare, ehrhard_profile, ComplexSetSpec, DilationComparison, McOptions};
use crate::error::{Error, Result};
use crate::report::{self, check_envelope, check_table, json_err, Envelope, Table};
use crate::special::constants;
use crate::symmetrized::{
    format_profile, gaussian_perimeter, measure_gamma3, parse_profile, RadialProfile, TruncationRecord,
};
use crate::verification::{run_check, scan_report, search_frustum_reversal, CheckConfig, CheckReport, CHECK_NAMES, SCAN_POINTS};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "gdl", version, about = "Gaussian dilation inequalities: constants, checks, scans and comparisons")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Write output here (atomically) instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Margin tolerance override.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Include per-grid-point rows in JSON output.
    #[arg(long, global = true)]
    pub rows: bool,
    /// Include wall-clock timings (output is then no longer reproducible byte for byte).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Ball,
    Polydisc,
    Cylinder,
}

#[derive(Debug, Args)]
pub struct SetArgs {
    /// Set family.
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Complex dimension (inferred from the radii for polydiscs).
    #[arg(long)]
    pub n: Option<usize>,
    /// Radius, or comma-separated radii for a polydisc.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub params: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the constants H, c, s0 and K.
    Constants,
    /// Run a named check.
    Verify {
        /// One of the check names.
        name: String,
        /// Axis override AXIS=MIN:MAX:COUNT[:uniform|geometric]; repeatable.
        #[arg(long = "grid", value_name = "AXIS=MIN:MAX:COUNT[:SPACING]")]
        grid: Vec<String>,
    },
    /// Locate the frustum counterexample.
    #[command(name = "remark2")]
    FrustumSearch {
        #[arg(long, default_value_t = 10.0)]
        y_min: f64,
        #[arg(long, default_value_t = 25.0)]
        y_max: f64,
        /// Grid points on [y-min, y-max].
        #[arg(long, default_value_t = 400)]
        count: usize,
    },
    /// Truncation scan of one profile.
    #[command(name = "scan-L", alias = "scan-l")]
    ScanL {
        /// Sampled profile file with `r,f` lines.
        #[arg(long, conflicts_with_all = ["frustum", "cone"])]
        profile: Option<PathBuf>,
        /// Width for a sampled profile when it should extend past the last knot.
        #[arg(long, requires = "profile")]
        width: Option<f64>,
        /// Frustum `w,y`.
        #[arg(long, value_name = "W,Y", allow_hyphen_values = true, conflicts_with = "cone")]
        frustum: Option<String>,
        /// Cone `w,h,m`.
        #[arg(long, value_name = "W,H,M", allow_hyphen_values = true)]
        cone: Option<String>,
        /// Scan points on [0, w].
        #[arg(long, default_value_t = SCAN_POINTS)]
        points: usize,
    },
    /// Compare dilations of a set with its matched cylinder.
    Compare {
        #[command(flatten)]
        set: SetArgs,
        /// `MIN:MAX:COUNT` (uniform) or a comma-separated list.
        #[arg(long)]
        t_grid: String,
        /// Use Monte Carlo for the set's measures.
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Ehrhard symmetrization of a set into an `r,f` profile.
    Symmetrize {
        #[command(flatten)]
        set: SetArgs,
        /// `MIN:MAX:COUNT`, half-open: COUNT points from MIN (= 0) up to, not including, MAX.
        #[arg(long)]
        r_grid: String,
    },
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) | Error::Quadrature { .. } => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

struct Output {
    text: String,
    pass: bool,
}

fn execute(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    if let Some(t) = g.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Input(format!("tolerance must be positive, got {t}")));
        }
    }
    let out = match &cli.command {
        Command::Constants => constants_output(g)?,
        Command::Verify { name, grid } => verify_output(g, name, grid)?,
        Command::FrustumSearch { y_min, y_max, count } => frustum_output(g, *y_min, *y_max, *count)?,
        Command::ScanL {
            profile,
            width,
            frustum,
            cone,
            points,
        } => {
            let frustum = frustum.as_deref().map(|s| number_list(s, "--frustum")).transpose()?;
            let cone = cone.as_deref().map(|s| number_list(s, "--cone")).transpose()?;
            scan_output(g, profile.as_ref(), *width, frustum.as_deref(), cone.as_deref(), *points)?
        }
        Command::Compare {
            set,
            t_grid,
            mc,
            samples,
            seed,
        } => compare_output(g, set, t_grid, *mc, *samples, *seed)?,
        Command::Symmetrize { set, r_grid } => symmetrize_output(g, set, r_grid)?,
    };
    report::emit(&out.text, g.output.as_deref())?;
    Ok(if out.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn base_config(g: &Global, command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), command.into());
    m.insert("tolerance".into(), g.tolerance.into());
    m.insert(
        "format".into(),
        match g.format {
            Format::Text => "text",
            Format::Json => "json",
            Format::Csv => "csv",
        }
        .into(),
    );
    m
}

fn constants_output(g: &Global) -> Result<Output> {
    let k = constants();
    let margins = k.invariant_margins();
    let pass = k.invariants_hold();
    let (worst_name, worst) = margins
        .iter()
        .copied()
        .fold(("", f64::INFINITY), |acc, m| if m.1 < acc.1 { m } else { acc });
    let text = match g.format {
        Format::Text => {
            let mut s = format!(
                "H  = {}\nc  = {}\ns0 = {}\nu* = {}\nK  = {}\n",
                k.h, k.c, k.s0, k.u_star, k.k
            );
            for (name, m) in &margins {
                s.push_str(&format!("  {name:<30} {}  margin {m:.6e}\n", if *m > 0.0 { "pass" } else { "FAIL" }));
            }
            s
        }
        Format::Csv => {
            let mut t = Table::new(&["name", "value"]);
            for (name, v) in [("H", k.h), ("c", k.c), ("s0", k.s0), ("u_star", k.u_star), ("K", k.k)] {
                t.push(vec![name.into(), v.into()]);
            }
            t.to_csv()?
        }
        Format::Json => {
            let mut extra = Map::new();
            extra.insert("H".into(), k.h.into());
            extra.insert("c".into(), k.c.into());
            extra.insert("s0".into(), k.s0.into());
            extra.insert("u_star".into(), k.u_star.into());
            extra.insert("K".into(), k.k.into());
            let details: Map<String, Value> = margins.iter().map(|(n, m)| (n.to_string(), Value::from(*m))).collect();
            let env = Envelope {
                name: "constants",
                config: Value::Object(base_config(g, "constants")),
                pass,
                min_margin: Some(worst),
                argmin: json!({ "invariant": worst_name }),
                elapsed_ms: None,
                rows: None,
                extra,
                details: json!({ "invariant_margins": details }),
            };
            report::to_json(&env.to_value())?
        }
    };
    Ok(Output { text, pass })
}

fn check_output(g: &Global, report: &CheckReport, config: Map<String, Value>) -> Result<Output> {
    let text = match g.format {
        Format::Text => report::check_text(report, g.timings),
        Format::Csv => check_table(report).to_csv()?,
        Format::Json => {
            let env = check_envelope(report, Value::Object(config), g.rows, g.timings)?;
            report::to_json(&env.to_value())?
        }
    };
    Ok(Output { text, pass: report.pass })
}

fn verify_output(g: &Global, name: &str, grid: &[String]) -> Result<Output> {
    let mut overrides = BTreeMap::new();
    for spec in grid {
        let (axis, range) = spec.split_once('=').ok_or_else(|| {
            Error::Input(format!("grid override `{spec}` must look like AXIS=MIN:MAX:COUNT[:spacing]"))
        })?;
        if overrides.insert(axis.trim().to_string(), range.trim().to_string()).is_some() {
            return Err(Error::Input(format!("axis `{axis}` overridden twice")));
        }
    }
    if !CHECK_NAMES.contains(&name) {
        return Err(Error::Input(format!("unknown check `{name}`; known: {}", CHECK_NAMES.join(", "))));
    }
    let cfg = CheckConfig {
        grid: overrides.clone(),
        tolerance: g.tolerance,
    };
    let report = run_check(name, &cfg)?;
    let mut config = base_config(g, "verify");
    config.insert("check".into(), name.into());
    config.insert("grid".into(), serde_json::to_value(&overrides).map_err(json_err)?);
    check_output(g, &report, config)
}

fn frustum_output(g: &Global, y_min: f64, y_max: f64, count: usize) -> Result<Output> {
    let cfg = CheckConfig {
        grid: [("y".to_string(), format!("{y_min}:{y_max}:{count}"))].into_iter().collect(),
        tolerance: g.tolerance,
    };
    let search = search_frustum_reversal(y_min, y_max, &cfg)?;
    let mut config = base_config(g, "remark2");
    config.insert("y_min".into(), y_min.into());
    config.insert("y_max".into(), y_max.into());
    config.insert("count".into(), count.into());
    if g.format == Format::Text {
        let mut text = report::check_text(&search.report, g.timings);
        let show = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_else(|| "none".into());
        text.push_str(&format!(
            "located y* = {}\nsufficient condition from y = {}\ndirect reversal from y = {}\n",
            show(search.located_y),
            show(search.condition_threshold),
            show(search.reversal_threshold)
        ));
        return Ok(Output {
            text,
            pass: search.report.pass,
        });
    }
    check_output(g, &search.report, config)
}

fn number_list(s: &str, flag: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad number `{v}` in {flag}: {e}")))
        })
        .collect()
}

fn scan_table(recs: &[TruncationRecord]) -> Table {
    let mut t = Table::new(&["x", "f", "a", "a2_minus_x2", "L", "L_prime", "room_margin", "gap_upper_bound"]);
    for r in recs {
        t.push(vec![
            r.x.into(),
            r.f.into(),
            r.radius.into(),
            r.radius_gap.into(),
            r.l_value.into(),
            r.l_slope.into(),
            r.room_margin.into(),
            r.gap_upper_bound.into(),
        ]);
    }
    t
}

fn scan_output(
    g: &Global,
    file: Option<&PathBuf>,
    width: Option<f64>,
    frustum: Option<&[f64]>,
    cone: Option<&[f64]>,
    points: usize,
) -> Result<Output> {
    let mut config = base_config(g, "scan-L");
    let profile = match (file, frustum, cone) {
        (Some(path), None, None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
            config.insert("profile".into(), path.display().to_string().into());
            config.insert("width".into(), width.into());
            parse_profile(&text, width)?
        }
        (None, Some(&[w, y]), None) => {
            config.insert("frustum".into(), json!([w, y]));
            RadialProfile::frustum(w, y)?
        }
        (None, None, Some(&[w, h, m])) => {
            config.insert("cone".into(), json!([w, h, m]));
            RadialProfile::cone(w, h, m)?
        }
        _ => {
            return Err(Error::Input(
                "give exactly one of --profile FILE, --frustum W,Y or --cone W,H,M".into(),
            ))
        }
    };
    config.insert("points".into(), points.into());
    let (report, recs) = scan_report(&profile, points, g.tolerance)?;
    let table = scan_table(&recs);
    let text = match g.format {
        Format::Text => {
            let mut s = report::check_text(&report, g.timings);
            if g.rows {
                s.push_str(&table.to_csv()?);
            }
            s
        }
        Format::Csv => table.to_csv()?,
        Format::Json => {
            let mut env = check_envelope(&report, Value::Object(config), false, g.timings)?;
            env.rows = Some(table.to_json_rows());
            report::to_json(&env.to_value())?
        }
    };
    Ok(Output { text, pass: report.pass })
}

fn build_set(args: &SetArgs) -> Result<ComplexSetSpec> {
    let p = &args.params;
    match args.family {
        FamilyArg::Polydisc => {
            if let Some(n) = args.n {
                if n != p.len() {
                    return Err(Error::Input(format!("--n {n} but {} polydisc radii", p.len())));
                }
            }
            ComplexSetSpec::polydisc(p.clone())
        }
        family => {
            let n = args
                .n
                .ok_or_else(|| Error::Input("--n is required for balls and cylinders".into()))?;
            let [r] = p[..] else {
                return Err(Error::Input(format!("expected one radius, got {}", p.len())));
            };
            if family == FamilyArg::Ball {
                ComplexSetSpec::ball(n, r)
            } else {
                ComplexSetSpec::cylinder(n, r)
            }
        }
    }
}

fn set_config(config: &mut Map<String, Value>, set: &ComplexSetSpec, args: &SetArgs) {
    config.insert("family".into(), set.label().into());
    config.insert("n".into(), set.n().into());
    config.insert("params".into(), json!(args.params));
}

/// `MIN:MAX:COUNT` (uniform, both ends) or a comma-separated list.
fn parse_t_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Input(format!("bad number `{s}` in t grid: {e}")))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(Error::Input(format!("t grid `{spec}` must be MIN:MAX:COUNT")));
        };
        let axis = crate::grid::Axis::uniform(
            "t",
            num(lo)?,
            num(hi)?,
            count
                .trim()
                .parse()
                .map_err(|e| Error::Input(format!("bad count `{count}`: {e}")))?,
        )?;
        Ok(axis.points())
    } else {
        spec.split(',').map(num).collect()
    }
}

fn comparison_table(cmp: &DilationComparison) -> Table {
    let mut t = Table::new(&[
        "t",
        "regime",
        "nu_set",
        "nu_cylinder",
        "sigma",
        "margin",
        "verdict",
        "dilated_t",
        "nu_set_dilated",
        "dilated_margin",
        "dilated_verdict",
    ]);
    for r in &cmp.rows {
        t.push(vec![
            r.t.into(),
            tag(&r.regime).into(),
            r.nu_set.into(),
            r.nu_cylinder.into(),
            r.sigma.into(),
            r.margin.into(),
            tag(&r.verdict).into(),
            r.dilated_t.into(),
            r.nu_set_dilated.into(),
            r.dilated_margin.into(),
            r.dilated_verdict.map(|v| Value::from(tag(&v))).unwrap_or(Value::Null),
        ]);
    }
    t
}

fn tag<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

fn compare_output(g: &Global, args: &SetArgs, t_grid: &str, mc: bool, samples: u64, seed: u64) -> Result<Output> {
    let set = build_set(args)?;
    let ts = parse_t_grid(t_grid)?;
    let opts = mc.then_some(McOptions { samples, seed });
    let tol = g.tolerance.unwrap_or(crate::verification::LINEAR_TOLERANCE);
    let cmp = dilation_compare(&set, &ts, opts, tol)?;
    let pass = cmp.pass();
    let table = comparison_table(&cmp);
    let mut config = base_config(g, "compare");
    set_config(&mut config, &set, args);
    config.insert("t_grid".into(), t_grid.into());
    config.insert("mc".into(), mc.into());
    if mc {
        config.insert("samples".into(), samples.into());
        config.insert("seed".into(), seed.into());
    }
    let text = match g.format {
        Format::Csv => table.to_csv()?,
        Format::Text => {
            let mut s = format!(
                "compare {} n={}: {}  measure = {}  cylinder radius = {}  t0 = {}\n",
                cmp.family,
                cmp.n,
                if pass { "PASS" } else { "FAIL" },
                cmp.measure,
                cmp.cylinder_radius,
                cmp.t0.map(|t| t.to_string()).unwrap_or_else(|| "none".into())
            );
            for r in &cmp.rows {
                s.push_str(&format!(
                    "  t={:<10.6} {:<10} margin {:>13.6e}  {}",
                    r.t,
                    tag(&r.regime),
                    r.margin,
                    tag(&r.verdict)
                ));
                if let (Some(lt), Some(m), Some(v)) = (r.dilated_t, r.dilated_margin, r.dilated_verdict) {
                    s.push_str(&format!("   l(t)={lt:.6} margin {m:.6e} {}", tag(&v)));
                }
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let (argmin, min_margin) = match cmp.min_margin() {
                Some((t, m)) => (json!({ "t": t }), Some(m)),
                None => (json!({}), None),
            };
            let env = Envelope {
                name: "compare",
                config: Value::Object(config),
                pass,
                min_margin,
                argmin,
                elapsed_ms: None,
                rows: Some(table.to_json_rows()),
                extra: Map::new(),
                details: json!({
                    "mode": if mc { "monte_carlo" } else { "closed_form" },
                    "measure": cmp.measure,
                    "cylinder_radius": cmp.cylinder_radius,
                    "t0": cmp.t0,
                    "c": constants().c,
                }),
            };
            report::to_json(&env.to_value())?
        }
    };
    Ok(Output { text, pass })
}

fn parse_r_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(Error::Input(format!("r grid `{spec}` must be MIN:MAX:COUNT")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Input(format!("bad number `{s}` in r grid: {e}")))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|e| Error::Input(format!("bad count `{count}`: {e}")))?;
    if lo != 0.0 || !(hi > lo) || count < 2 {
        return Err(Error::Input(format!(
            "r grid needs MIN = 0 < MAX and COUNT >= 2, got `{spec}`"
        )));
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / count as f64).collect())
}

fn symmetrize_output(g: &Global, args: &SetArgs, r_grid: &str) -> Result<Output> {
    let set = build_set(args)?;
    let rs = parse_r_grid(r_grid)?;
    let profile = ehrhard_profile(&set, &rs, None)?;
    let knots = profile.knots().expect("sampled profile");
    let measure = measure_gamma3(&profile, 0.0)?;
    let perimeter = gaussian_perimeter(&profile)?;
    let exact = set.measure_closed_form(1.0)?;
    let mut config = base_config(g, "symmetrize");
    set_config(&mut config, &set, args);
    config.insert("r_grid".into(), r_grid.into());
    let text = match g.format {
        Format::Text | Format::Csv => {
            let mut s = format!(
                "# ehrhard profile of {} n={} params={:?}\n# width {}\n# gamma3 {} (set measure {})\n",
                set.label(),
                set.n(),
                args.params,
                report::number(profile.width()),
                report::number(measure),
                report::number(exact)
            );
            s.push_str(&format_profile(knots));
            s
        }
        Format::Json => {
            let mut t = Table::new(&["r", "f"]);
            for &(r, f) in knots {
                t.push(vec![r.into(), f.into()]);
            }
            let env = Envelope {
                name: "symmetrize",
                config: Value::Object(config),
                pass: true,
                min_margin: None,
                argmin: json!({}),
                elapsed_ms: None,
                rows: Some(t.to_json_rows()),
                extra: Map::new(),
                details: json!({
                    "width": profile.width(),
                    "gamma3": measure,
                    "set_measure": exact,
                    "measure_error": measure - exact,
                    "gaussian_perimeter": perimeter,
                }),
            };
            report::to_json(&env.to_value())?
        }
    };
    Ok(Output { text, pass: true })
}
