//! c-transforms of finitely generated potentials and the bounded extension of
//! empirical Kantorovich potentials to all of R^d.

use rand::seq::index;
use rand::Rng;

use crate::costs::CostSpec;
use crate::error::{Error, Result};
use crate::points::Points;
use crate::rng;
use crate::solver::TransportPlan;

/// Ties in [`superdifferential_probe`] are resolved within this tolerance.
pub const PROBE_TOLERANCE: f64 = 1e-9;

/// Anything that can be evaluated pointwise on R^d.
pub trait Potential {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
}

/// Wraps a closure as a [`Potential`].
pub struct FnPotential<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> Potential for FnPotential<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// `f(x) = min_j { c(x, y_j) - lambda_j }`, optionally truncated at `cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialHandle {
    anchors: Points,
    values: Vec<f64>,
    cost: CostSpec,
    cap: Option<f64>,
}

impl PotentialHandle {
    pub fn new(anchors: Points, values: Vec<f64>, cost: CostSpec, cap: Option<f64>) -> Result<Self> {
        if anchors.is_empty() || anchors.len() != values.len() {
            return Err(Error::usage("a potential needs at least one anchor and one value per anchor"));
        }
        if anchors.dim() != cost.dim() {
            return Err(Error::usage("anchor dimension does not match the cost"));
        }
        Ok(PotentialHandle { anchors, values, cost, cap })
    }

    pub fn anchors(&self) -> &Points {
        &self.anchors
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    /// Untruncated minimum and the first anchor attaining it.
    pub fn argmin(&self, x: &[f64]) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut at = 0;
        for (j, y) in self.anchors.iter().enumerate() {
            let v = self.cost.c(x, y) - self.values[j];
            if v < best {
                best = v;
                at = j;
            }
        }
        (best, at)
    }

    /// Checked evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.anchors.dim() {
            return Err(Error::usage("query point has the wrong dimension"));
        }
        Ok(self.eval(x))
    }
}

impl Potential for PotentialHandle {
    fn dim(&self) -> usize {
        self.anchors.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let v = self.argmin(x).0;
        match self.cap {
            Some(cap) => v.min(cap),
            None => v,
        }
    }
}

/// Conjugate `f^c(y) = min_i { c(x_i, y) - f(x_i) }` of a function known at finitely many points.
pub fn c_conjugate(points: &Points, values: &[f64], cost: &CostSpec) -> Result<PotentialHandle> {
    PotentialHandle::new(points.clone(), values.to_vec(), cost.clone(), None)
}

/// Largest `|h^cc(x) - h(x)|` over the test points, with both conjugations
/// discretized on the anchor set together with the test points.
pub fn double_conjugate_check(h: &PotentialHandle, test_points: &Points) -> Result<f64> {
    if test_points.dim() != h.dim() && !test_points.is_empty() {
        return Err(Error::usage("test points have the wrong dimension"));
    }
    if test_points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::usage("test points must be finite"));
    }
    let mut grid = h.anchors.clone();
    for t in test_points.iter() {
        grid.push(t)?;
    }
    let h_on_grid: Vec<f64> = grid.iter().map(|s| h.eval(s)).collect();
    let hc: Vec<f64> = grid
        .iter()
        .map(|y| {
            grid.iter()
                .zip(&h_on_grid)
                .map(|(s, hs)| h.cost.c(s, y) - hs)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for x in test_points.iter() {
        let hcc = grid
            .iter()
            .zip(&hc)
            .map(|(y, v)| h.cost.c(x, y) - v)
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((hcc - h.eval(x)).abs());
    }
    Ok(worst)
}

/// Anchor indices attaining the defining minimum of `phi` at `x` within [`PROBE_TOLERANCE`].
pub fn superdifferential_probe(phi: &PotentialHandle, x: &[f64]) -> Result<Vec<usize>> {
    if x.len() != phi.dim() {
        return Err(Error::usage("probe point has the wrong dimension"));
    }
    let vals: Vec<f64> = phi
        .anchors
        .iter()
        .zip(&phi.values)
        .map(|(y, l)| phi.cost.c(x, y) - l)
        .collect();
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(vals
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= min + PROBE_TOLERANCE)
        .map(|(j, _)| j)
        .collect())
}

/// Largest sampled violation of c-cyclical monotonicity, clipped below at 0.
///
/// Each trial draws between 2 and `k` distinct pairs and compares the
/// matched cost with every nontrivial cyclic shift of the sources.
pub fn cyclical_monotonicity_check(
    pairs: &[(Vec<f64>, Vec<f64>)],
    cost: &CostSpec,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::usage("cycle length must be at least 2"));
    }
    if pairs.len() < 2 {
        return Ok(0.0);
    }
    let mut rng = rng::seeded(seed);
    let mut worst: f64 = 0.0;
    let kmax = k.min(pairs.len());
    for _ in 0..trials {
        let len = rng.random_range(2..=kmax);
        let idx = index::sample(&mut rng, pairs.len(), len).into_vec();
        let matched: f64 = idx.iter().map(|&i| cost.c(&pairs[i].0, &pairs[i].1)).sum();
        for shift in 1..len {
            let shifted: f64 = (0..len)
                .map(|j| cost.c(&pairs[idx[(j + shift) % len]].0, &pairs[idx[j]].1))
                .sum();
            worst = worst.max(matched - shifted);
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Extension of empirical potentials

/// `phi(x) = max_i [ omega((rho_i - N(x - x_i))_+) - cap ]`, where each term is
/// the exact c-transform of the single capped anchor `min(c(x_i, .) - f_i, cap)`.
/// It agrees with the c-transform of the full capped potential on the source
/// atoms and lies below it elsewhere, so feasibility holds everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceExtension {
    centers: Points,
    values: Vec<f64>,
    radii: Vec<f64>,
    cost: CostSpec,
    cap: f64,
}

impl Potential for SourceExtension {
    fn dim(&self) -> usize {
        self.centers.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut best = -self.cap;
        let mut diff = vec![0.0; x.len()];
        for (i, c) in self.centers.iter().enumerate() {
            for ((d, a), b) in diff.iter_mut().zip(x).zip(c) {
                *d = a - b;
            }
            let r = self.cost.norm(&diff);
            let v = if r == 0.0 {
                self.values[i]
            } else if r >= self.radii[i] {
                -self.cap
            } else {
                self.cost.omega(self.radii[i] - r) - self.cap
            };
            best = best.max(v);
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedPotentials {
    /// Source potential on the atoms, `f = dual_mu - a <= 0`.
    pub f: Vec<f64>,
    /// Target potential on the atoms, `g = dual_nu + a >= 0`.
    pub g: Vec<f64>,
    /// The shift `a = max dual_mu`.
    pub shift: f64,
    pub cap: f64,
    /// Extension of `f` to R^d with values in `[-cap, 0]`.
    pub phi: SourceExtension,
    /// `min_i { c(x_i, y) - f_i }` capped at `cap`; c-concave, values in `[0, cap]`.
    pub psi: PotentialHandle,
    /// Uncapped c-concave potential `min_j { c(x, y_j) - g_j }` generated by the targets.
    pub phi_hat: PotentialHandle,
}

/// Default cap: `kappa (2 R)^p` with `R` the largest point norm.
pub fn default_cap(x: &Points, y: &Points, cost: &CostSpec) -> f64 {
    let r = x.max_norm().max(y.max_norm());
    cost.meta().kappa * (2.0 * r).powf(cost.meta().growth_p)
}

/// Extends the duals of an optimal plan to bounded potentials on R^d.
pub fn extend_potentials(
    plan: &TransportPlan,
    x: &Points,
    y: &Points,
    cost: &CostSpec,
    cap: Option<f64>,
) -> Result<ExtendedPotentials> {
    if plan.dual_mu.len() != x.len() || plan.dual_nu.len() != y.len() {
        return Err(Error::usage("plan duals do not match the point sets"));
    }
    let mut row = vec![0.0; x.len()];
    let mut col = vec![0.0; y.len()];
    let mut support_max: f64 = 0.0;
    for &(i, j, m) in &plan.entries {
        if i >= x.len() || j >= y.len() {
            return Err(Error::usage(format!("plan entry ({i}, {j}) is out of range")));
        }
        row[i] += m;
        col[j] += m;
        support_max = support_max.max(cost.c(x.row(i), y.row(j)));
    }
    let gap = (plan.value - plan.dual_value(&row, &col)).abs();
    if gap > 1e-8 * (1.0 + plan.value.abs()) {
        return Err(Error::numerical(format!("duality gap {gap:e} is too large to normalize the duals")));
    }
    let shift = plan.dual_mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = plan.dual_mu.iter().map(|v| v - shift).collect();
    let g: Vec<f64> = plan.dual_nu.iter().map(|v| v + shift).collect();
    let g_min = g.iter().copied().fold(f64::INFINITY, f64::min);
    if g_min < -1e-9 {
        return Err(Error::numerical(format!(
            "normalized target potential is negative ({g_min:e}); duals are not a conjugate pair"
        )));
    }
    let g: Vec<f64> = g.into_iter().map(|v| v.max(0.0)).collect();
    let needed = support_max
        .max(g.iter().copied().fold(0.0, f64::max))
        .max(-f.iter().copied().fold(0.0, f64::min));
    let cap = match cap {
        Some(c) if c < support_max => {
            return Err(Error::usage(format!(
                "cap {c} is below the largest support cost {support_max}"
            )))
        }
        Some(c) if c < needed => {
            return Err(Error::usage(format!("cap {c} is below the potential range {needed}")))
        }
        Some(c) => c,
        None => default_cap(x, y, cost).max(needed),
    };
    let radii = f.iter().map(|fi| cost.omega_inv(cap + fi)).collect();
    Ok(ExtendedPotentials {
        phi: SourceExtension { centers: x.clone(), values: f.clone(), radii, cost: cost.clone(), cap },
        psi: PotentialHandle::new(x.clone(), f.clone(), cost.clone(), Some(cap))?,
        phi_hat: PotentialHandle::new(y.clone(), g.clone(), cost.clone(), None)?,
        f,
        g,
        shift,
        cap,
    })
}

/// Worst violations of the four extension properties on the given evaluation points.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionCheck {
    /// `max (phi(x) + psi(y) - c(x, y))_+` over evaluation pairs.
    pub feasibility: f64,
    /// `max |phi(x_i) - f_i|` and `|psi(y_j) - g_j|`.
    pub restriction: f64,
    /// `|int phi dmu + int psi dnu - value|`.
    pub value_gap: f64,
    /// Largest excursion of `phi` outside `[-cap, 0]` or `psi` outside `[0, cap]`.
    pub bound: f64,
}

impl ExtensionCheck {
    pub fn max(&self) -> f64 {
        self.feasibility.max(self.restriction).max(self.value_gap).max(self.bound)
    }
}

pub fn check_extension(
    ext: &ExtendedPotentials,
    plan: &TransportPlan,
    x: &Points,
    y: &Points,
    eval_x: &Points,
    eval_y: &Points,
) -> ExtensionCheck {
    let cost = ext.psi.cost();
    let phi_x: Vec<f64> = eval_x.iter().map(|p| ext.phi.eval(p)).collect();
    let psi_y: Vec<f64> = eval_y.iter().map(|p| ext.psi.eval(p)).collect();
    let mut feasibility: f64 = 0.0;
    for (a, pa) in eval_x.iter().zip(&phi_x) {
        for (b, pb) in eval_y.iter().zip(&psi_y) {
            feasibility = feasibility.max(pa + pb - cost.c(a, b));
        }
    }
    let phi_atoms: Vec<f64> = x.iter().map(|p| ext.phi.eval(p)).collect();
    let psi_atoms: Vec<f64> = y.iter().map(|p| ext.psi.eval(p)).collect();
    let restriction = phi_atoms
        .iter()
        .zip(&ext.f)
        .chain(psi_atoms.iter().zip(&ext.g))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut row = vec![0.0; x.len()];
    let mut col = vec![0.0; y.len()];
    for &(i, j, m) in &plan.entries {
        row[i] += m;
        col[j] += m;
    }
    let integral: f64 = row.iter().zip(&phi_atoms).map(|(w, v)| w * v).sum::<f64>()
        + col.iter().zip(&psi_atoms).map(|(w, v)| w * v).sum::<f64>();
    let out = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
    let bound = phi_x
        .iter()
        .chain(&phi_atoms)
        .map(|&v| out(v, -ext.cap, 0.0))
        .chain(psi_y.iter().chain(&psi_atoms).map(|&v| out(v, 0.0, ext.cap)))
        .fold(0.0, f64::max);
    ExtensionCheck { feasibility, restriction, value_gap: (integral - plan.value).abs(), bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::Region;
    use crate::measures::{sample, SamplerSpec};
    use crate::solver::{solve_assignment, solve_general};
    use proptest::prelude::*;
    use rand::Rng;

    fn cloud(n: usize, d: usize, seed: u64) -> Points {
        sample(&SamplerSpec::ball(vec![0.0; d], 1.0).unwrap(), n, seed).unwrap().points
    }

    fn region_points(region: &Region, n: usize, seed: u64) -> Points {
        let mut rng = rng::seeded(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| region.sample(&mut rng)).collect();
        Points::from_rows(&rows).unwrap()
    }

    #[test]
    fn single_anchor_conjugate_is_the_cost() {
        let c = CostSpec::quadratic(2);
        let y0 = Points::from_rows(&[[0.3, -0.4]]).unwrap();
        let h = c_conjugate(&y0, &[0.0], &c).unwrap();
        assert_eq!(h.eval(&[1.0, 1.0]), c.c(&[1.0, 1.0], &[0.3, -0.4]));
        assert_eq!(double_conjugate_check(&h, &y0).unwrap(), 0.0);
    }

    #[test]
    fn additive_equivariance() {
        let c = CostSpec::power(1.5, 2.0, 3).unwrap();
        let pts = cloud(20, 3, 1);
        let vals: Vec<f64> = (0..20).map(|k| k as f64 * 0.01).collect();
        let shifted: Vec<f64> = vals.iter().map(|v| v + 0.25).collect();
        let a = c_conjugate(&pts, &vals, &c).unwrap();
        let b = c_conjugate(&pts, &shifted, &c).unwrap();
        for q in cloud(50, 3, 2).iter() {
            assert!((a.eval(q) - 0.25 - b.eval(q)).abs() < 1e-15);
        }
    }

    #[test]
    fn conjugate_of_solver_duals() {
        let x = cloud(40, 2, 3);
        let y = cloud(40, 2, 4);
        let c = CostSpec::quadratic(2);
        let plan = solve_assignment(&x, &y, &c).unwrap();
        let fc = c_conjugate(&y, &plan.dual_nu, &c).unwrap();
        for (i, j, _) in &plan.entries {
            assert!(fc.eval(x.row(*i)) >= plan.dual_mu[*i] - 1e-9);
            assert!((fc.eval(x.row(*i)) - plan.dual_mu[*i]).abs() < 1e-9);
            let _ = j;
        }
    }

    #[test]
    fn double_conjugation_random_handles() {
        let c = CostSpec::quadratic(3);
        let anchors = cloud(100, 3, 5);
        let mut rng = rng::seeded(6);
        let vals: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tests = cloud(100, 3, 7);
        let h = c_conjugate(&anchors, &vals, &c).unwrap();
        assert!(double_conjugate_check(&h, &tests).unwrap() <= 1e-9);
        let capped = PotentialHandle::new(anchors, vals, c, Some(0.5)).unwrap();
        assert!(double_conjugate_check(&capped, &tests).unwrap() <= 1e-9);
    }

    #[test]
    fn probe_ties_and_matches() {
        let c = CostSpec::quadratic(1);
        let anchors = Points::from_rows(&[[-1.0], [1.0]]).unwrap();
        let h = c_conjugate(&anchors, &[0.0, 0.0], &c).unwrap();
        assert_eq!(superdifferential_probe(&h, &[0.0]).unwrap(), vec![0, 1]);
        let single = c_conjugate(&Points::from_rows(&[[2.0]]).unwrap(), &[1.0], &c).unwrap();
        assert_eq!(superdifferential_probe(&single, &[5.0]).unwrap(), vec![0]);

        let x = cloud(30, 2, 8);
        let y = cloud(30, 2, 9);
        let c2 = CostSpec::quadratic(2);
        let plan = solve_assignment(&x, &y, &c2).unwrap();
        let ext = extend_potentials(&plan, &x, &y, &c2, None).unwrap();
        for &(i, j, _) in &plan.entries {
            let probe = superdifferential_probe(&ext.phi_hat, x.row(i)).unwrap();
            assert!(probe.contains(&j));
            for k in probe {
                let via = c2.c(x.row(i), y.row(k)) - ext.g[k];
                assert!((via - ext.phi_hat.eval(x.row(i))).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn cyclical_monotonicity_examples() {
        let c = CostSpec::quadratic(1);
        let crossing = vec![(vec![0.0], vec![1.0]), (vec![1.0], vec![0.0])];
        assert_eq!(cyclical_monotonicity_check(&crossing, &c, 2, 10, 0).unwrap(), 2.0);
        let repeated = vec![(vec![0.3], vec![0.7]); 5];
        assert_eq!(cyclical_monotonicity_check(&repeated, &c, 5, 100, 0).unwrap(), 0.0);
        assert!(cyclical_monotonicity_check(&crossing, &c, 1, 10, 0).is_err());
    }

    #[test]
    fn extension_single_atom_is_exact() {
        let c = CostSpec::smooth_approx(1.5, 1e-2, 2).unwrap();
        let x = Points::from_rows(&[[0.2, 0.1]]).unwrap();
        let y = Points::from_rows(&[[-0.3, 0.4]]).unwrap();
        let plan = solve_assignment(&x, &y, &c).unwrap();
        let ext = extend_potentials(&plan, &x, &y, &c, None).unwrap();
        assert_eq!(ext.phi.eval(x.row(0)), ext.f[0]);
        assert_eq!(ext.f[0], 0.0);
    }

    #[test]
    fn extension_closed_form_for_quadratic() {
        // For c2 each term is (sqrt(f_i + cap) - |x - x_i|)_+^2 - cap.
        let c = CostSpec::quadratic(1);
        let x = Points::from_rows(&[[0.0]]).unwrap();
        let ext = SourceExtension {
            centers: x,
            values: vec![0.0],
            radii: vec![1.0],
            cost: c,
            cap: 1.0,
        };
        for t in [0.25, 0.5, 0.9, 1.5] {
            let expected = ((1.0f64 - t).max(0.0)).powi(2) - 1.0;
            assert!((ext.eval(&[t]) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn small_cap_refused() {
        let x = cloud(5, 2, 1);
        let y = cloud(5, 2, 2).translated(&[3.0, 0.0]);
        let c = CostSpec::quadratic(2);
        let plan = solve_assignment(&x, &y, &c).unwrap();
        assert!(extend_potentials(&plan, &x, &y, &c, Some(0.1)).is_err());
    }

    fn extension_holds(x: &Points, y: &Points, plan: &TransportPlan, c: &CostSpec, seed: u64) {
        let ext = extend_potentials(plan, x, y, c, None).unwrap();
        let r = x.max_norm().max(y.max_norm()) + 1.0;
        let region = Region::Box { lo: vec![-r; x.dim()], hi: vec![r; x.dim()] };
        let ex = region_points(&region, 100, seed);
        let ey = region_points(&region, 100, seed + 1);
        let check = check_extension(&ext, plan, x, y, &ex, &ey);
        assert!(check.max() <= 1e-9, "{check:?} for {}", c.describe());
    }

    #[test]
    fn extension_clauses_hold() {
        for (k, c) in [
            CostSpec::quadratic(2),
            CostSpec::power(1.0, 2.0, 2).unwrap(),
            CostSpec::power(3.0, 1.0, 2).unwrap(),
            CostSpec::smooth_approx(1.5, 1e-2, 2).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let x = cloud(30, 2, 10 + k as u64);
            let y = cloud(30, 2, 20 + k as u64).translated(&[0.5, 0.0]);
            let plan = solve_assignment(&x, &y, c).unwrap();
            extension_holds(&x, &y, &plan, c, k as u64);
            let mu = crate::measures::DiscreteMeasure::new(x.clone(), {
                let mut w: Vec<f64> = (0..30).map(|i| 1.0 + (i % 3) as f64).collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                w
            })
            .unwrap();
            let nu = crate::measures::DiscreteMeasure::uniform(y.clone()).unwrap();
            let plan = solve_general(&mu, &nu, c).unwrap();
            extension_holds(&x, &y, &plan, c, 100 + k as u64);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn conjugation_is_order_reversing(seed in 0u64..500, k in 0usize..10, bump in 0.0f64..1.0) {
            let c = CostSpec::quadratic(2);
            let pts = cloud(10, 2, seed);
            let vals = vec![0.0; 10];
            let mut raised = vals.clone();
            raised[k] += bump;
            let a = c_conjugate(&pts, &vals, &c).unwrap();
            let b = c_conjugate(&pts, &raised, &c).unwrap();
            for q in cloud(20, 2, seed + 1).iter() {
                prop_assert!(b.eval(q) <= a.eval(q));
            }
        }

        #[test]
        fn triple_conjugate_equals_single(seed in 0u64..500) {
            let c = CostSpec::power(1.5, 2.0, 2).unwrap();
            let pts = cloud(15, 2, seed);
            let mut rng = rng::seeded(seed);
            let vals: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fc = c_conjugate(&pts, &vals, &c).unwrap();
            // f^cc sampled on a grid, then conjugated again.
            let grid = cloud(60, 2, seed + 9);
            let mut all = pts.clone();
            for g in grid.iter() { all.push(g).unwrap(); }
            let fcc_vals: Vec<f64> = all.iter().map(|x| {
                all.iter().map(|y| c.c(x, y) - fc.eval(y)).fold(f64::INFINITY, f64::min)
            }).collect();
            let fccc = c_conjugate(&all, &fcc_vals, &c).unwrap();
            for q in grid.iter() {
                prop_assert!((fccc.eval(q) - fc.eval(q)).abs() <= 1e-9);
            }
        }
    }
}
