//! Monte-Carlo estimate of the mean absolute error of the empirical transport
//! cost for a location pair of uniform balls, and its log-log slope.
//!
//! Run with `--release`; pass `full` to use the default grid and 100 reps.

use ot_rates::costs::CostSpec;
use ot_rates::measures::{ground_truth_location, SamplerSpec};
use ot_rates::rates::{estimate_delta, fit_slope, ExperimentConfig};

fn main() -> ot_rates::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let d = 5;
    let mu = SamplerSpec::ball(vec![0.0; d], 0.25)?;
    let mut z0 = vec![0.0; d];
    z0[0] = 0.5;
    let pair = ground_truth_location(&mu, &z0, &CostSpec::quadratic(d))?;
    println!("exact value {}", pair.exact_value);

    let mut cfg = ExperimentConfig::new(pair);
    cfg.master_seed = 2024;
    if !full {
        cfg.n_grid = vec![32, 64, 128, 256];
        cfg.reps = 20;
    }
    let report = fit_slope(&estimate_delta(&cfg)?, 1000, 1)?;
    print!("{}", report.summary_csv());
    let s = report.slope.expect("slope was fitted");
    println!("slope {:.3} (95% CI {:.3} .. {:.3})", s.slope, s.ci_lo, s.ci_hi);
    Ok(())
}
