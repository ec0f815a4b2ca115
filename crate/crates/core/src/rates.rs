//! Monte-Carlo estimation of the expected empirical transport error over a
//! grid of sample sizes, log-log slope fits with bootstrap intervals, and
//! regime comparisons.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, GroundTruthPair};
use crate::report::fmt_f64;
use crate::rng;
use crate::solver::{check_plan, solve_assignment};

pub const DEFAULT_N_GRID: [usize; 5] = [128, 256, 512, 1024, 2048];
pub const DEFAULT_REPS: usize = 100;
pub const DEFAULT_BOOTSTRAP: usize = 1000;

/// Largest tolerated fraction of failed replications.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    CostUnits,
    /// Errors measured as `|T^{1/p} - exact^{1/p}|`; needs `exact^{1/p} >= delta0 > 0`.
    Wasserstein { p: f64, delta0: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub pair: GroundTruthPair,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub metric: Metric,
    /// Worker budget; 0 lets the pool decide. Never affects results.
    pub threads: usize,
    pub experiment_id: u64,
}

impl ExperimentConfig {
    pub fn new(pair: GroundTruthPair) -> Self {
        ExperimentConfig {
            pair,
            n_grid: DEFAULT_N_GRID.to_vec(),
            reps: DEFAULT_REPS,
            master_seed: 0,
            metric: Metric::CostUnits,
            threads: 0,
            experiment_id: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::usage("n_grid must be a nonempty list of positive sizes"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("n_grid must be strictly increasing"));
        }
        if self.reps < 2 {
            return Err(Error::usage("reps must be at least 2"));
        }
        if let Metric::Wasserstein { p, delta0 } = self.metric {
            check_wasserstein(self.pair.exact_value, p, delta0)?;
        }
        Ok(())
    }
}

fn check_wasserstein(exact: f64, p: f64, delta0: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::usage(format!("Wasserstein order must be >= 1, got {p}")));
    }
    if exact <= 0.0 {
        return Err(Error::usage(
            "Wasserstein units need a positive population cost; the conversion bound degenerates at 0",
        ));
    }
    if !(delta0 > 0.0) || exact.powf(1.0 / p) < delta0 {
        return Err(Error::usage(format!(
            "Wasserstein units need exact^(1/p) = {} >= delta0 = {delta0} > 0",
            exact.powf(1.0 / p)
        )));
    }
    Ok(())
}

/// One Monte-Carlo replication; `estimate` is NaN when the solve failed.
#[derive(Clone, Debug, PartialEq)]
pub struct Replication {
    pub n: usize,
    pub rep: usize,
    pub estimate: f64,
    pub abs_error: f64,
}

impl Replication {
    pub fn failed(&self) -> bool {
        self.estimate.is_nan()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerN {
    pub n: usize,
    pub delta_hat: f64,
    pub se: f64,
    /// Successful replications.
    pub reps: usize,
    /// Mean of the signed error (auxiliary; no sign is asserted).
    pub signed_mean: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bootstrap: usize,
}

/// Worst optimality certificate over every solve of an experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateSummary {
    pub solves: usize,
    /// Solves whose plan passes `PlanCheck::is_optimal`.
    pub certified: usize,
    /// Largest `|primal - dual| / (1 + |value|)`.
    pub worst_relative_gap: f64,
    pub worst_infeasibility: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub exact_value: f64,
    pub metric: Metric,
    pub per_n: Vec<PerN>,
    pub samples: Vec<Replication>,
    pub slope: Option<SlopeFit>,
    pub baseline_slope: Option<f64>,
    /// Present when the report comes from actual solves.
    pub certificate: Option<CertificateSummary>,
}

impl RateReport {
    /// Builds a report from per-replication estimates (grouped by `n`).
    pub fn from_estimates(exact_value: f64, metric: Metric, samples: Vec<Replication>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::usage("a rate report needs at least one replication"));
        }
        let mut grid: Vec<usize> = samples.iter().map(|s| s.n).collect();
        grid.dedup();
        let mut per_n = Vec::with_capacity(grid.len());
        for &n in &grid {
            let ok: Vec<&Replication> = samples.iter().filter(|s| s.n == n && !s.failed()).collect();
            if ok.is_empty() {
                return Err(Error::numerical(format!("every replication failed at n = {n}")));
            }
            let errs: Vec<f64> = ok.iter().map(|s| s.abs_error).collect();
            let (delta_hat, se) = crate::measures::mean_and_se(&errs);
            let signed: Vec<f64> = ok.iter().map(|s| s.estimate - exact_value).collect();
            per_n.push(PerN {
                n,
                delta_hat,
                se,
                reps: ok.len(),
                signed_mean: signed.iter().sum::<f64>() / signed.len() as f64,
            });
        }
        Ok(RateReport { exact_value, metric, per_n, samples, slope: None, baseline_slope: None, certificate: None })
    }

    /// Synthetic report from per-`n` lists of absolute errors.
    pub fn from_errors(grid: &[usize], errors: &[Vec<f64>]) -> Result<Self> {
        if grid.len() != errors.len() {
            return Err(Error::usage("one error list per grid point is required"));
        }
        let samples = grid
            .iter()
            .zip(errors)
            .flat_map(|(&n, errs)| {
                errs.iter()
                    .enumerate()
                    .map(move |(rep, &e)| Replication { n, rep, estimate: e, abs_error: e })
            })
            .collect();
        Self::from_estimates(0.0, Metric::CostUnits, samples)
    }

    pub fn grid(&self) -> Vec<usize> {
        self.per_n.iter().map(|p| p.n).collect()
    }

    fn errors_by_n(&self) -> Vec<Vec<f64>> {
        self.per_n
            .iter()
            .map(|p| {
                self.samples
                    .iter()
                    .filter(|s| s.n == p.n && !s.failed())
                    .map(|s| s.abs_error)
                    .collect()
            })
            .collect()
    }

    pub fn samples_csv(&self) -> String {
        let mut out = String::from("n,rep,estimate,abs_error\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", s.n, s.rep, fmt_f64(s.estimate), fmt_f64(s.abs_error)));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("n,delta_hat,se,reps\n");
        for p in &self.per_n {
            out.push_str(&format!("{},{},{},{}\n", p.n, fmt_f64(p.delta_hat), fmt_f64(p.se), p.reps));
        }
        out
    }

    /// Mean signed error per `n`.
    pub fn signed_csv(&self) -> String {
        let mut out = String::from("n,signed_mean\n");
        for p in &self.per_n {
            out.push_str(&format!("{},{}\n", p.n, fmt_f64(p.signed_mean)));
        }
        out
    }

    pub fn slope_txt(&self) -> String {
        match self.slope {
            Some(s) => format!(
                "slope,ci_lo,ci_hi,B\n{},{},{},{}\n",
                fmt_f64(s.slope),
                fmt_f64(s.ci_lo),
                fmt_f64(s.ci_hi),
                s.bootstrap
            ),
            None => "slope,ci_lo,ci_hi,B\nNaN,NaN,NaN,0\n".to_string(),
        }
    }
}

/// Runs the Monte-Carlo experiment. Replication `(n, r)` draws `X` and `Y`
/// from independent streams keyed by `(experiment_id, n, r, side)`.
pub fn estimate_delta(config: &ExperimentConfig) -> Result<RateReport> {
    config.validate()?;
    let tasks: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.reps).map(move |r| (n, r)))
        .collect();
    let pair = &config.pair;
    // (estimate, relative gap, infeasibility, certified)
    let run = |&(n, rep): &(usize, usize)| -> (f64, f64, f64, bool) {
        let keys = |side: u64| [config.experiment_id, n as u64, rep as u64, side];
        let x = pair.mu.sample_with(n, &mut rng::stream(config.master_seed, &keys(0)));
        let y = pair.nu.sample_with(n, &mut rng::stream(config.master_seed, &keys(1)));
        let plan = match solve_assignment(&x, &y, &pair.cost) {
            Ok(plan) if plan.value.is_finite() => plan,
            _ => return (f64::NAN, f64::NAN, f64::NAN, false),
        };
        let (Ok(mu), Ok(nu)) = (DiscreteMeasure::uniform(x), DiscreteMeasure::uniform(y)) else {
            return (f64::NAN, f64::NAN, f64::NAN, false);
        };
        let check = check_plan(&plan, &mu, &nu, &pair.cost);
        let gap = check.duality_gap / (1.0 + plan.value.abs());
        (plan.value, gap, check.infeasibility, check.is_optimal(plan.value))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(f64, f64, f64, bool)> = pool.install(|| tasks.par_iter().map(run).collect());
    let solved: Vec<_> = results.iter().filter(|r| !r.0.is_nan()).collect();
    let certificate = CertificateSummary {
        solves: solved.len(),
        certified: solved.iter().filter(|r| r.3).count(),
        worst_relative_gap: solved.iter().map(|r| r.1).fold(0.0, f64::max),
        worst_infeasibility: solved.iter().map(|r| r.2).fold(0.0, f64::max),
    };
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();

    let failed = values.iter().filter(|v| v.is_nan()).count();
    if failed as f64 > MAX_FAILURE_FRACTION * tasks.len() as f64 {
        return Err(Error::numerical(format!(
            "{failed} of {} replications failed; aborting the experiment",
            tasks.len()
        )));
    }
    let samples = tasks
        .iter()
        .zip(values)
        .map(|(&(n, rep), estimate)| Replication {
            n,
            rep,
            estimate,
            abs_error: (estimate - pair.exact_value).abs(),
        })
        .collect();
    let report = RateReport::from_estimates(pair.exact_value, Metric::CostUnits, samples)?;
    let mut report = match config.metric {
        Metric::CostUnits => report,
        Metric::Wasserstein { p, delta0 } => to_wasserstein_units(&report, p, delta0)?,
    };
    report.certificate = Some(certificate);
    Ok(report)
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn log_slope(grid: &[usize], delta: &[f64]) -> f64 {
    let x: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = delta.iter().map(|d| d.ln()).collect();
    ols_slope(&x, &y)
}

/// Slopes of bootstrap replicates; resamples with a zero mean are skipped.
fn bootstrap_slopes(report: &RateReport, b: usize, seed: u64, stream: u64) -> Vec<f64> {
    let grid = report.grid();
    let errors = report.errors_by_n();
    let mut out = Vec::with_capacity(b);
    for k in 0..b {
        let mut rng = rng::stream(seed, &[stream, k as u64]);
        let deltas: Vec<f64> = errors
            .iter()
            .map(|e| (0..e.len()).map(|_| e[rng.random_range(0..e.len())]).sum::<f64>() / e.len() as f64)
            .collect();
        if deltas.iter().all(|d| *d > 0.0) {
            out.push(log_slope(&grid, &deltas));
        }
    }
    out
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn percentile_ci(mut v: Vec<f64>) -> Option<(f64, f64)> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some((quantile(&v, 0.025), quantile(&v, 0.975)))
}

/// OLS slope of `log delta_hat` on `log n` with a 95% percentile bootstrap interval.
pub fn fit_slope(report: &RateReport, bootstrap: usize, seed: u64) -> Result<RateReport> {
    if report.per_n.len() < 2 {
        return Err(Error::usage("a slope needs at least two grid points"));
    }
    if let Some(p) = report.per_n.iter().find(|p| !(p.delta_hat > 0.0)) {
        return Err(Error::usage(format!(
            "delta_hat is zero at n = {}; a log-log slope is undefined",
            p.n
        )));
    }
    if bootstrap == 0 {
        return Err(Error::usage("bootstrap resample count must be positive"));
    }
    let delta: Vec<f64> = report.per_n.iter().map(|p| p.delta_hat).collect();
    let slope = log_slope(&report.grid(), &delta);
    let (lo, hi) = percentile_ci(bootstrap_slopes(report, bootstrap, seed, 0)).unwrap_or((slope, slope));
    let mut out = report.clone();
    // The percentile interval is widened if needed so it always contains the point estimate.
    out.slope = Some(SlopeFit { slope, ci_lo: lo.min(slope), ci_hi: hi.max(slope), bootstrap });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeComparison {
    pub difference: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl RegimeComparison {
    pub fn excludes_zero(&self) -> bool {
        self.ci_lo > 0.0 || self.ci_hi < 0.0
    }
}

/// `a.slope - b.slope` with a percentile interval from independent bootstraps.
pub fn compare_regimes(a: &RateReport, b: &RateReport, bootstrap: usize, seed: u64) -> Result<RegimeComparison> {
    let (sa, sb) = match (a.slope, b.slope) {
        (Some(sa), Some(sb)) => (sa, sb),
        _ => return Err(Error::usage("both reports need fitted slopes")),
    };
    let difference = sa.slope - sb.slope;
    let ba = bootstrap_slopes(a, bootstrap, seed, 1);
    let bb = bootstrap_slopes(b, bootstrap, seed, 2);
    let diffs: Vec<f64> = ba.iter().zip(&bb).map(|(x, y)| x - y).collect();
    let (lo, hi) = percentile_ci(diffs).unwrap_or((difference, difference));
    Ok(RegimeComparison { difference, ci_lo: lo.min(difference), ci_hi: hi.max(difference) })
}

/// Re-expresses per-replication errors as `|T^{1/p} - exact^{1/p}|`.
pub fn to_wasserstein_units(report: &RateReport, p: f64, delta0: f64) -> Result<RateReport> {
    check_wasserstein(report.exact_value, p, delta0)?;
    let root = report.exact_value.powf(1.0 / p);
    let samples = report
        .samples
        .iter()
        .map(|s| Replication {
            abs_error: (s.estimate.max(0.0).powf(1.0 / p) - root).abs(),
            ..s.clone()
        })
        .collect();
    let mut out = RateReport::from_estimates(report.exact_value, Metric::Wasserstein { p, delta0 }, samples)?;
    // Signed errors stay in cost units; only the absolute errors change scale.
    for (dst, src) in out.per_n.iter_mut().zip(&report.per_n) {
        dst.signed_mean = src.signed_mean;
    }
    out.certificate = report.certificate;
    Ok(out)
}
