//! Separated versus identical supports under the distance cost: the error
//! decays faster when the supports are apart.

use ot_rates::costs::CostSpec;
use ot_rates::measures::{ground_truth_location, identical_pair, SamplerSpec};
use ot_rates::rates::{compare_regimes, estimate_delta, fit_slope, ExperimentConfig};

fn main() -> ot_rates::Result<()> {
    let d = 5;
    let cost = CostSpec::power(1.0, 2.0, d)?;
    let ball = SamplerSpec::ball(vec![0.0; d], 0.25)?;
    let mut z0 = vec![0.0; d];
    z0[0] = 1.0;

    let run = |pair| -> ot_rates::Result<_> {
        let mut cfg = ExperimentConfig::new(pair);
        cfg.n_grid = vec![32, 64, 128, 256];
        cfg.reps = 20;
        fit_slope(&estimate_delta(&cfg)?, 500, 3)
    };
    let apart = run(ground_truth_location(&ball, &z0, &cost)?)?;
    let same = run(identical_pair(&ball, &cost)?)?;
    println!("separated slope {:.3}", apart.slope.unwrap().slope);
    println!("identical slope {:.3}", same.slope.unwrap().slope);
    let cmp = compare_regimes(&apart, &same, 500, 4)?;
    println!(
        "difference {:.3} (95% CI {:.3} .. {:.3}), excludes zero: {}",
        cmp.difference,
        cmp.ci_lo,
        cmp.ci_hi,
        cmp.excludes_zero()
    );
    Ok(())
}
