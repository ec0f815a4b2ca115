//! Dual potentials: c-conjugates of finitely generated functions, the
//! double-conjugate identity, and the extension of empirical duals to
//! bounded potentials on the whole space.

use ot_rates::costs::CostSpec;
use ot_rates::duality::{c_conjugate, check_extension, double_conjugate_check, extend_potentials, Potential};
use ot_rates::measures::{sample, SamplerSpec};
use ot_rates::points::Points;
use ot_rates::solver::solve_assignment;

fn main() -> ot_rates::Result<()> {
    let cost = CostSpec::quadratic(2);

    // phi(x) = min_j |x - y_j|^2 - lambda_j is c-concave, so phi^cc = phi.
    let anchors = Points::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])?;
    let phi = c_conjugate(&anchors, &[0.0, 0.3, -0.2], &cost)?;
    let probes = sample(&SamplerSpec::cube(vec![0.5, 0.5], 1.0)?, 50, 3)?.points;
    println!("phi(0.5, 0.5) = {}", phi.evaluate(&[0.5, 0.5])?);
    println!("max |phi^cc - phi| on probes: {:e}", double_conjugate_check(&phi, &probes)?);

    // Extend the duals of an optimal plan.
    let ball = SamplerSpec::ball(vec![0.0, 0.0], 0.25)?;
    let x = sample(&ball, 64, 5)?.points;
    let y = sample(&SamplerSpec::translate(ball, vec![0.5, 0.0])?, 64, 6)?.points;
    let plan = solve_assignment(&x, &y, &cost)?;
    let ext = extend_potentials(&plan, &x, &y, &cost, None)?;
    println!("cap {}, shift {}", ext.cap, ext.shift);
    println!("phi at the origin {}, psi at (0.5, 0) {}", ext.phi.eval(&[0.0, 0.0]), ext.psi.evaluate(&[0.5, 0.0])?);

    let check = check_extension(&ext, &plan, &x, &y, &probes, &probes);
    println!("worst extension violation {:e}", check.max());
    Ok(())
}
