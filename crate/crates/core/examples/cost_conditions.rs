//! Cost families and sampled certificates of their structural conditions.

use ot_rates::costs::{check_conditions, Condition, CostSpec, Region};

fn main() -> ot_rates::Result<()> {
    let costs = [
        CostSpec::quadratic(3),
        CostSpec::power(1.0, 2.0, 3)?,
        CostSpec::power(3.0, 1.0, 3)?,
        CostSpec::smooth_approx(1.5, 0.1, 3)?,
    ];
    for cost in &costs {
        let meta = cost.meta();
        println!(
            "{}: alpha={} growth_p={} kappa={}",
            cost.describe(),
            meta.alpha,
            meta.growth_p,
            meta.kappa
        );
        for (cond, region) in [
            (Condition::H0, Region::centered_ball(3, 2.0)),
            (Condition::H1, Region::centered_ball(3, 1.0)),
            (Condition::H3, Region::centered_ball(3, 50.0)),
            (Condition::H4, Region::centered_ball(3, 1.0)),
        ] {
            match check_conditions(cost, cond, &region, 2000, 7) {
                Ok(r) => println!("  {:?}: pass={} max_violation={:e}", cond, r.pass, r.max_violation),
                Err(e) => println!("  {:?}: {e}", cond),
            }
        }
    }

    // The smooth surrogate stays within 2 eps of |z|^p for p < 2.
    let s = CostSpec::smooth_approx(1.5, 1e-2, 1)?;
    for t in [0.0, 0.01, 0.5, 5.0] {
        println!("h({t}) = {:.6}   |t|^1.5 = {:.6}", s.h(&[t]), f64::powf(t, 1.5));
    }
    Ok(())
}
