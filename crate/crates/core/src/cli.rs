//! Command-line front end and the experiment drivers behind its subcommands.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numerical or I/O
//! failure, 3 a diagnostic or condition check reported FAIL.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{keys_help, parse_config_file, RunConfig};
use crate::costs::{check_conditions, CostSpec, Region, RadialNorm};
use crate::diagnostics::{displacement_profile, semiconcavity_check, superdiff_growth_check, DiagnosticReport};
use crate::duality::{c_conjugate, extend_potentials, ExtendedPotentials};
use crate::error::{Error, Result};
use crate::lowerbounds::{gadget_csv, gadget_sweep, median, median_slope, QFamily};
use crate::measures::{parse_vec, DiscreteMeasure, GroundTruthPair};
use crate::points::Points;
use crate::rates::{estimate_delta, fit_slope, RateReport};
use crate::report::{fmt_f64, unix_now, write_atomic, OutputSet, RunManifest};
use crate::rng;
use crate::solver::{solve_assignment, solve_general, TransportPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Semiconcavity,
    Displacement,
    Superdiff,
}

#[derive(Debug, Parser)]
#[command(name = "ot-rates", version, about = "Exact discrete optimal transport and convergence-rate experiments")]
pub struct Cli {
    /// Experiment config (INI, one [experiment] section).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; overrides the config. Never changes results.
    #[arg(long, global = true, env = "OT_RATES_THREADS")]
    pub threads: Option<usize>,
    /// Directory for data files and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal plan between two point sets (headerless CSV `x1,...,xd[,weight]`).
    Solve {
        #[arg(long)]
        points_a: PathBuf,
        #[arg(long)]
        points_b: PathBuf,
        #[arg(long)]
        cost: String,
        /// The last column of each file is a weight.
        #[arg(long)]
        weighted: bool,
        /// Plan output (`i,j,mass`); defaults to `<out-dir>/plan.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional dual potentials output (`side,index,value`).
        #[arg(long)]
        duals: Option<PathBuf>,
    },
    /// Evaluate `x -> min_j c(x, y_j) - lambda_j` at query points.
    Transform {
        /// Headerless CSV `y1,...,yd,lambda`.
        #[arg(long)]
        anchors: PathBuf,
        #[arg(long)]
        cost: String,
        /// Headerless CSV `x1,...,xd`.
        #[arg(long)]
        query: PathBuf,
        /// Output `x1,...,xd,value`; defaults to `<out-dir>/values.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo error estimates over the sample-size grid, with a slope fit.
    Rate,
    /// Regularity diagnostics on empirical potentials and plans.
    Diagnose {
        #[arg(long, value_enum)]
        check: Check,
    },
    /// Random-bijection lower-bound gadget.
    Lowerbound {
        /// Packing sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        /// `uniform`, `dirichlet:<a>`, `spike:<mass>` or `split:<tv>`.
        #[arg(long, default_value = "split:0.25")]
        q: String,
        /// Shift, comma separated; its length sets the dimension.
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        #[arg(long)]
        cost: String,
        /// Seeds per packing size.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
    },
    /// Sampled check of a structural condition of a cost.
    Costcheck {
        #[arg(long)]
        cost: String,
        #[arg(long)]
        dim: usize,
        /// H0, H1, H3 or H4.
        #[arg(long)]
        condition: String,
        /// Radius of the centred ball sampled by the check.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
}

/// The clap command with the config-key listing appended to `--help`.
pub fn command() -> clap::Command {
    Cli::command().after_long_help(keys_help()).after_help(keys_help())
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ot-rates: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let started = unix_now();
    match &cli.command {
        Command::Solve { points_a, points_b, cost, weighted, out, duals } => {
            cmd_solve(cli, points_a, points_b, cost, *weighted, out.as_deref(), duals.as_deref())
        }
        Command::Transform { anchors, cost, query, out } => cmd_transform(cli, anchors, cost, query, out.as_deref()),
        Command::Rate => cmd_rate(cli, started),
        Command::Diagnose { check } => cmd_diagnose(cli, *check, started),
        Command::Lowerbound { m, q, z0, cost, seeds } => cmd_lowerbound(cli, m, q, z0, cost, *seeds, started),
        Command::Costcheck { cost, dim, condition, radius, budget } => {
            cmd_costcheck(cli, cost, *dim, condition, *radius, *budget)
        }
    }
}

// ---------------------------------------------------------------------------
// Inputs

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::usage(format!("`{}`: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::usage(format!("`{}` line {}: not a list of finite numbers", path.display(), k + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::usage(format!("`{}` has no rows", path.display())));
    }
    Ok(rows)
}

/// Splits `x1..xd,w` rows into points and weights.
fn split_weighted(rows: Vec<Vec<f64>>, path: &Path) -> Result<(Points, Vec<f64>)> {
    if rows[0].len() < 2 {
        return Err(Error::usage(format!("`{}`: weighted rows need a coordinate and a weight", path.display())));
    }
    let mut pts = Vec::with_capacity(rows.len());
    let mut w = Vec::with_capacity(rows.len());
    for mut r in rows {
        w.push(r.pop().unwrap_or(f64::NAN));
        pts.push(r);
    }
    Ok((Points::from_rows(&pts)?, w))
}

fn out_path(cli: &Cli, explicit: Option<&Path>, name: &str) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| cli.out_dir.join(name))
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::usage("this subcommand needs --config <file>"))?;
    let mut cfg = parse_config_file(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn commit_with_manifest(
    cli: &Cli,
    outputs: OutputSet,
    subcommand: &str,
    resolved_config: String,
    master_seed: u64,
    started: f64,
) -> Result<()> {
    let digests = outputs.commit()?;
    let manifest = RunManifest {
        subcommand: subcommand.into(),
        resolved_config,
        master_seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: unix_now(),
        outputs: digests,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&cli.out_dir.join("manifest.json"), text.as_bytes())
}

// ---------------------------------------------------------------------------
// solve / transform / costcheck

fn cmd_solve(
    cli: &Cli,
    a: &Path,
    b: &Path,
    cost: &str,
    weighted: bool,
    out: Option<&Path>,
    duals: Option<&Path>,
) -> Result<i32> {
    let (ra, rb) = (read_rows(a)?, read_rows(b)?);
    let plan = if weighted {
        let (pa, wa) = split_weighted(ra, a)?;
        let (pb, wb) = split_weighted(rb, b)?;
        let cost = CostSpec::parse(cost, pa.dim())?;
        solve_general(&DiscreteMeasure::new(pa, wa)?, &DiscreteMeasure::new(pb, wb)?, &cost)?
    } else {
        let (pa, pb) = (Points::from_rows(&ra)?, Points::from_rows(&rb)?);
        if pa.len() != pb.len() {
            return Err(Error::usage(format!(
                "{} and {} points without weights; pass --weighted with a weight column",
                pa.len(),
                pb.len()
            )));
        }
        let cost = CostSpec::parse(cost, pa.dim())?;
        solve_assignment(&pa, &pb, &cost)?
    };
    let mut outputs = OutputSet::default();
    outputs.add(out_path(cli, out, "plan.csv"), plan_csv(&plan));
    if let Some(p) = duals {
        outputs.add(p, duals_csv(&plan));
    }
    outputs.commit()?;
    println!("value={}", fmt_f64(plan.value));
    Ok(EXIT_OK)
}

pub fn plan_csv(plan: &TransportPlan) -> String {
    let mut s = String::from("i,j,mass\n");
    for &(i, j, m) in &plan.entries {
        s.push_str(&format!("{i},{j},{}\n", fmt_f64(m)));
    }
    s
}

fn duals_csv(plan: &TransportPlan) -> String {
    let mut s = String::from("side,index,value\n");
    for (i, v) in plan.dual_mu.iter().enumerate() {
        s.push_str(&format!("mu,{i},{}\n", fmt_f64(*v)));
    }
    for (j, v) in plan.dual_nu.iter().enumerate() {
        s.push_str(&format!("nu,{j},{}\n", fmt_f64(*v)));
    }
    s
}

fn cmd_transform(cli: &Cli, anchors: &Path, cost: &str, query: &Path, out: Option<&Path>) -> Result<i32> {
    let (ys, lambda) = split_weighted(read_rows(anchors)?, anchors)?;
    let cost = CostSpec::parse(cost, ys.dim())?;
    let handle = c_conjugate(&ys, &lambda, &cost)?;
    let q = Points::from_rows(&read_rows(query)?)?;
    let mut s = String::new();
    for x in q.iter() {
        let v = handle.evaluate(x)?;
        let coords: Vec<String> = x.iter().map(|c| fmt_f64(*c)).collect();
        s.push_str(&format!("{},{}\n", coords.join(","), fmt_f64(v)));
    }
    let mut outputs = OutputSet::default();
    outputs.add(out_path(cli, out, "values.csv"), s);
    outputs.commit()?;
    Ok(EXIT_OK)
}

fn cmd_costcheck(cli: &Cli, cost: &str, dim: usize, condition: &str, radius: f64, budget: usize) -> Result<i32> {
    let cost = CostSpec::parse(cost, dim)?;
    let condition = condition.parse()?;
    let report = check_conditions(&cost, condition, &Region::centered_ball(dim, radius), budget, cli.seed.unwrap_or(0))?;
    let line = serde_json::to_string(&report).expect("report serializes");
    match cli.format {
        Format::Csv => println!("{line}"),
        Format::Text => println!(
            "{} {:?}: max_violation={} tolerance={} samples={}",
            if report.pass { "PASS" } else { "FAIL" },
            report.condition,
            fmt_f64(report.max_violation),
            fmt_f64(report.tolerance),
            report.samples
        ),
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

// ---------------------------------------------------------------------------
// rate

pub const PLOT_SCRIPT: &str = "\
set datafile separator ','
set logscale xy
set xlabel 'n'
set ylabel 'mean absolute error'
set key top right
plot 'summary.csv' skip 1 using 1:2:3 with yerrorbars title 'delta_hat', \\
     'summary.csv' skip 1 using 1:2 with lines notitle
";

/// The files written by `rate`, keyed by file name.
pub fn rate_outputs(report: &RateReport) -> Result<Vec<(&'static str, String)>> {
    if report.per_n.is_empty() {
        return Err(Error::usage("refusing to write an empty report"));
    }
    Ok(vec![
        ("samples.csv", report.samples_csv()),
        ("summary.csv", report.summary_csv()),
        ("signed.csv", report.signed_csv()),
        ("slope.txt", report.slope_txt()),
        ("plot.gp", PLOT_SCRIPT.to_string()),
    ])
}

/// Runs the rate experiment described by `cfg`, including the slope fit.
pub fn run_rate(cfg: &RunConfig) -> Result<RateReport> {
    let report = estimate_delta(&cfg.experiment()?)?;
    if report.per_n.len() >= 2 && report.per_n.iter().all(|p| p.delta_hat > 0.0) {
        fit_slope(&report, cfg.bootstrap, rng::derive_seed(cfg.seed, &[u64::MAX]))
    } else {
        Ok(report)
    }
}

fn cmd_rate(cli: &Cli, started: f64) -> Result<i32> {
    let cfg = load_config(cli)?;
    for w in &cfg.ground_truth()?.warnings {
        eprintln!("warning: {w}");
    }
    let report = run_rate(&cfg)?;
    if let Some(c) = report.certificate.filter(|c| c.certified < c.solves) {
        eprintln!(
            "warning: {} of {} plans failed the optimality check (worst relative gap {})",
            c.solves - c.certified,
            c.solves,
            fmt_f64(c.worst_relative_gap)
        );
    }
    let mut outputs = OutputSet::default();
    for (name, body) in rate_outputs(&report)? {
        outputs.add(cli.out_dir.join(name), body);
    }
    commit_with_manifest(cli, outputs, "rate", cfg.to_ini(), cfg.seed, started)?;
    match cli.format {
        Format::Csv => print!("{}", report.summary_csv()),
        Format::Text => {
            println!("{:>8}  {:>24}  {:>24}  {:>5}", "n", "delta_hat", "se", "reps");
            for p in &report.per_n {
                println!("{:>8}  {:>24}  {:>24}  {:>5}", p.n, fmt_f64(p.delta_hat), fmt_f64(p.se), p.reps);
            }
            if let Some(s) = report.slope {
                println!("slope {} (95% CI {} .. {})", fmt_f64(s.slope), fmt_f64(s.ci_lo), fmt_f64(s.ci_hi));
            }
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// diagnose

/// Samples one empirical pair, solves it and extends the duals.
pub fn diagnostic_plan(
    pair: &GroundTruthPair,
    n: usize,
    seed: u64,
    keys: &[u64],
) -> Result<(Points, Points, TransportPlan, ExtendedPotentials)> {
    let with_side = |side: u64| {
        let mut k = keys.to_vec();
        k.push(side);
        k
    };
    let x = pair.mu.sample_with(n, &mut rng::stream(seed, &with_side(0)));
    let y = pair.nu.sample_with(n, &mut rng::stream(seed, &with_side(1)));
    let plan = solve_assignment(&x, &y, &pair.cost)?;
    let ext = extend_potentials(&plan, &x, &y, &pair.cost, None)?;
    Ok((x, y, plan, ext))
}

const DIAG_SEMICONCAVITY: u64 = 1;
const DIAG_DISPLACEMENT: u64 = 2;
const DIAG_SUPERDIFF: u64 = 3;

/// Semiconcavity of the target-generated potential on `diag_plans` plans, two
/// reports per plan.
pub fn diagnose_semiconcavity(cfg: &RunConfig) -> Result<Vec<DiagnosticReport>> {
    let pair = cfg.ground_truth()?;
    let d = cfg.mu.dim();
    let region = Region::centered_ball(d, cfg.region_radius);
    let per_plan = (0..cfg.diag_plans)
        .into_par_iter()
        .map(|k| -> Result<Vec<DiagnosticReport>> {
            let keys = [cfg.experiment_id, DIAG_SEMICONCAVITY, k as u64];
            let (x, y, _, ext) = diagnostic_plan(&pair, cfg.diag_n, cfg.seed, &keys)?;
            let reach = cfg.region_radius.max(x.max_norm()).max(y.max_norm());
            let lambda = pair.cost.lambda_on_ball(2.0 * reach);
            let out = semiconcavity_check(&ext.phi_hat, lambda, &region, cfg.triples, rng::derive_seed(cfg.seed, &keys))?;
            Ok(out
                .reports()
                .into_iter()
                .map(|r| {
                    let mut r = r.clone();
                    if let Some(w) = r.witness.as_mut() {
                        w["plan"] = json!(k);
                    }
                    r
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_plan.into_iter().flatten().collect())
}

/// Median over plans of the largest `||y|| / (||x|| + 1)` per sample size; FAIL
/// if the median at the largest size exceeds twice the one at the smallest.
pub fn diagnose_displacement(cfg: &RunConfig) -> Result<DiagnosticReport> {
    let pair = cfg.ground_truth()?;
    if cfg.displacement_grid.len() < 2 || cfg.diag_plans == 0 {
        return Err(Error::usage("displacement needs at least two sizes and one plan"));
    }
    let tasks: Vec<(usize, usize)> = cfg
        .displacement_grid
        .iter()
        .flat_map(|&n| (0..cfg.diag_plans).map(move |k| (n, k)))
        .collect();
    let ratios = tasks
        .par_iter()
        .map(|&(n, k)| -> Result<f64> {
            let keys = [cfg.experiment_id, DIAG_DISPLACEMENT, n as u64, k as u64];
            let x = pair.mu.sample_with(n, &mut rng::stream(cfg.seed, &[keys[0], keys[1], keys[2], keys[3], 0]));
            let y = pair.nu.sample_with(n, &mut rng::stream(cfg.seed, &[keys[0], keys[1], keys[2], keys[3], 1]));
            let plan = solve_assignment(&x, &y, &pair.cost)?;
            Ok(displacement_profile(&plan, &x, &y)?.max_ratio)
        })
        .collect::<Result<Vec<f64>>>()?;
    let medians: Vec<f64> = ratios.chunks(cfg.diag_plans).map(|c| median(&mut c.to_vec())).collect();
    let growth = medians[medians.len() - 1] / medians[0];
    let mut report = DiagnosticReport::new("displacement", (growth - 2.0).max(0.0), 0.0, tasks.len());
    report.pass = growth <= 2.0;
    Ok(report.with_witness(json!({
        "n": cfg.displacement_grid,
        "median_max_ratio": medians,
        "growth": growth,
    })))
}

/// A priori bound on `|phi_hat|` over the ball of radius `r`.
fn phi_hat_bound(ext: &ExtendedPotentials, cost: &CostSpec, r: f64) -> f64 {
    let d = cost.dim() as f64;
    let norm_factor = match cost.radial_norm() {
        RadialNorm::Lr(q) => d.powf((1.0 / q - 0.5).max(0.0)),
        RadialNorm::Euclidean => 1.0,
    };
    let ymax = ext.phi_hat.anchors().max_norm();
    let gmax = ext.g.iter().copied().fold(0.0, f64::max);
    (cost.omega(norm_factor * (r + ymax)) + gmax).max(4.0)
}

/// Growth of the superdifferential of the target-generated potential.
pub fn diagnose_superdiff(cfg: &RunConfig) -> Result<Vec<DiagnosticReport>> {
    let pair = cfg.ground_truth()?;
    (0..cfg.diag_plans)
        .into_par_iter()
        .map(|k| {
            let keys = [cfg.experiment_id, DIAG_SUPERDIFF, k as u64];
            let (_, _, _, ext) = diagnostic_plan(&pair, cfg.diag_n, cfg.seed, &keys)?;
            let bound = phi_hat_bound(&ext, &pair.cost, cfg.superdiff_r);
            let mut r = superdiff_growth_check(
                &ext.phi_hat,
                cfg.superdiff_r,
                bound,
                cfg.probes,
                rng::derive_seed(cfg.seed, &keys),
                None,
            )?;
            if let Some(w) = r.witness.as_mut() {
                w["plan"] = json!(k);
            }
            Ok(r)
        })
        .collect()
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn cmd_diagnose(cli: &Cli, check: Check, started: f64) -> Result<i32> {
    let cfg = load_config(cli)?;
    let reports = with_pool(cfg.threads, || match check {
        Check::Semiconcavity => diagnose_semiconcavity(&cfg),
        Check::Displacement => diagnose_displacement(&cfg).map(|r| vec![r]),
        Check::Superdiff => diagnose_superdiff(&cfg),
    })??;
    let name = match check {
        Check::Semiconcavity => "semiconcavity",
        Check::Displacement => "displacement",
        Check::Superdiff => "superdiff",
    };
    let mut jsonl = String::new();
    for r in &reports {
        jsonl.push_str(&r.to_json_line());
        jsonl.push('\n');
    }
    let mut outputs = OutputSet::default();
    outputs.add(cli.out_dir.join(format!("{name}.jsonl")), jsonl);
    commit_with_manifest(cli, outputs, "diagnose", cfg.to_ini(), cfg.seed, started)?;
    let pass = reports.iter().all(|r| r.pass);
    let worst = reports.iter().map(|r| r.max_violation).fold(0.0, f64::max);
    match cli.format {
        Format::Csv => println!(
            "{} {name}: reports={} max_violation={}",
            if pass { "PASS" } else { "FAIL" },
            reports.len(),
            fmt_f64(worst)
        ),
        Format::Text => {
            for r in &reports {
                println!("{}", r.status_line());
            }
        }
    }
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

// ---------------------------------------------------------------------------
// lowerbound

fn cmd_lowerbound(cli: &Cli, ms: &[usize], q: &str, z0: &str, cost: &str, seeds: usize, started: f64) -> Result<i32> {
    let family = QFamily::parse(q)?;
    let z0 = parse_vec(z0)?;
    let cost = CostSpec::parse(cost, z0.len())?;
    if seeds == 0 {
        return Err(Error::usage("--seeds must be positive"));
    }
    let master = cli.seed.unwrap_or(0);
    let seed_list: Vec<u64> = (0..seeds as u64).map(|k| rng::derive_seed(master, &[k])).collect();
    let results = with_pool(cli.threads.unwrap_or(0), || gadget_sweep(ms, family, &z0, &cost, &seed_list))??;
    let mut outputs = OutputSet::default();
    outputs.add(cli.out_dir.join("gadget.csv"), gadget_csv(&results));
    let resolved = format!(
        "m = {}\nq = {}\nz0 = {}\ncost = {}\nseeds = {seeds}\n",
        ms.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
        family.describe(),
        z0.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","),
        cost.describe()
    );
    commit_with_manifest(cli, outputs, "lowerbound", resolved, master, started)?;
    let mut distinct = ms.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    for &m in &distinct {
        let mut v: Vec<f64> = results.iter().filter(|r| r.m == m).map(|r| r.value_minus_h).collect();
        println!("m={m} median_value_minus_h={}", fmt_f64(median(&mut v)));
    }
    if distinct.len() >= 2 {
        match median_slope(&results) {
            Ok(s) => println!("slope={}", fmt_f64(s)),
            Err(e) => eprintln!("no slope: {e}"),
        }
    }
    Ok(EXIT_OK)
}
