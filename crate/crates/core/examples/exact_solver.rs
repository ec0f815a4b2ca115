//! Exact transport between two small point clouds: the assignment solver for
//! uniform weights, network simplex for general weights, and the optimality
//! certificate that comes with every plan.

use ot_rates::costs::CostSpec;
use ot_rates::measures::{sample, DiscreteMeasure, SamplerSpec};
use ot_rates::points::Points;
use ot_rates::solver::{brute_force, check_plan, solve_assignment, solve_general};

fn main() -> ot_rates::Result<()> {
    let cost = CostSpec::power(1.5, 2.0, 2)?;
    let ball = SamplerSpec::ball(vec![0.0, 0.0], 0.5)?;
    let mu = sample(&ball, 7, 1)?;
    let nu = sample(&SamplerSpec::translate(ball, vec![0.4, 0.0])?, 7, 2)?;

    let plan = solve_assignment(&mu.points, &nu.points, &cost)?;
    let brute = brute_force(&mu.points, &nu.points, &cost)?;
    println!("assignment value {:.12}  brute force {:.12}", plan.value, brute.value);
    println!("matching {:?}", plan.matching().expect("uniform plans are permutations"));

    let check = check_plan(&plan, &mu, &nu, &cost);
    println!(
        "marginal error {:e}, duality gap {:e}, dual infeasibility {:e}",
        check.marginal_error, check.duality_gap, check.infeasibility
    );

    // Unequal sizes and weights go through network simplex.
    let a = DiscreteMeasure::new(Points::from_rows(&[[0.0, 0.0], [1.0, 0.0]])?, vec![0.7, 0.3])?;
    let b = DiscreteMeasure::new(
        Points::from_rows(&[[0.0, 1.0], [1.0, 1.0], [2.0, 2.0]])?,
        vec![0.2, 0.5, 0.3],
    )?;
    let plan = solve_general(&a, &b, &CostSpec::quadratic(2))?;
    println!("weighted value {}", plan.value);
    for (i, j, m) in &plan.entries {
        println!("  {i} -> {j}: {m}");
    }
    Ok(())
}
