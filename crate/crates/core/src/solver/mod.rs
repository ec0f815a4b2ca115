//! Exact discrete optimal transport with dual potentials.
//!
//! Equal-size uniform problems go through a shortest-augmenting-path
//! assignment solver; general weights go through a network simplex on the
//! bipartite flow LP. A brute-force permutation search serves as an oracle.
//!
//! All returned duals are cleaned up by one c-transform pass in each
//! direction (`g <- f^c`, then `f <- g^c` over the finite supports), which
//! removes rounding noise and makes `(dual_mu, dual_nu)` a conjugate pair.
//! They are then shifted so that `sum(dual_nu) = 0`.

mod assignment;
mod brute;
mod network_simplex;

use crate::costs::CostSpec;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::points::Points;

pub use brute::MAX_BRUTE_FORCE;

/// Above this size cost entries are recomputed on demand instead of stored.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Assignment,
    NetworkSimplex,
    BruteForce,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    /// Positive-mass entries `(i, j, mass)`, sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, f64)>,
    pub value: f64,
    pub dual_mu: Vec<f64>,
    pub dual_nu: Vec<f64>,
    pub method: Method,
}

impl TransportPlan {
    /// For a permutation plan, the target index matched to each source index.
    pub fn matching(&self) -> Option<Vec<usize>> {
        let n = self.dual_mu.len();
        if self.entries.len() != n || self.dual_nu.len() != n {
            return None;
        }
        let mut out = vec![usize::MAX; n];
        for &(i, j, _) in &self.entries {
            if out[i] != usize::MAX {
                return None;
            }
            out[i] = j;
        }
        Some(out)
    }

    /// Dual objective `sum w_i f_i + sum v_j g_j`.
    pub fn dual_value(&self, mu_weights: &[f64], nu_weights: &[f64]) -> f64 {
        let a: f64 = mu_weights.iter().zip(&self.dual_mu).map(|(w, f)| w * f).sum();
        let b: f64 = nu_weights.iter().zip(&self.dual_nu).map(|(w, g)| w * g).sum();
        a + b
    }
}

/// Optimality certificate of a plan against its marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanCheck {
    pub marginal_error: f64,
    pub min_mass: f64,
    pub duality_gap: f64,
    /// Largest `|f_i + g_j - c_ij|` over support entries.
    pub slackness: f64,
    /// Largest `(f_i + g_j - c_ij)_+` over all pairs.
    pub infeasibility: f64,
}

impl PlanCheck {
    /// The tolerances used throughout: gap `1e-8 (1 + |v|)`, marginals `1e-10`,
    /// slackness `1e-8`, feasibility `1e-9`.
    pub fn is_optimal(&self, value: f64) -> bool {
        self.marginal_error <= 1e-10
            && self.min_mass >= 0.0
            && self.duality_gap <= 1e-8 * (1.0 + value.abs())
            && self.slackness <= 1e-8
            && self.infeasibility <= 1e-9
    }
}

pub fn check_plan(plan: &TransportPlan, mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> PlanCheck {
    let mut rows = vec![0.0; mu.len()];
    let mut cols = vec![0.0; nu.len()];
    let mut min_mass = f64::INFINITY;
    let mut slackness: f64 = 0.0;
    for &(i, j, m) in &plan.entries {
        rows[i] += m;
        cols[j] += m;
        min_mass = min_mass.min(m);
        let c = cost.c(mu.points.row(i), nu.points.row(j));
        slackness = slackness.max((plan.dual_mu[i] + plan.dual_nu[j] - c).abs());
    }
    let marginal_error = rows
        .iter()
        .zip(&mu.weights)
        .chain(cols.iter().zip(&nu.weights))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut infeasibility: f64 = 0.0;
    for i in 0..mu.len() {
        let x = mu.points.row(i);
        for j in 0..nu.len() {
            let v = plan.dual_mu[i] + plan.dual_nu[j] - cost.c(x, nu.points.row(j));
            infeasibility = infeasibility.max(v);
        }
    }
    PlanCheck {
        marginal_error,
        min_mass,
        duality_gap: (plan.value - plan.dual_value(&mu.weights, &nu.weights)).abs(),
        slackness,
        infeasibility,
    }
}

/// Read access to an `m x n` cost matrix.
pub(crate) trait CostMatrix: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn get(&self, i: usize, j: usize) -> f64;
}

pub(crate) struct DenseCost {
    n_cols: usize,
    data: Vec<f64>,
}

impl CostMatrix for DenseCost {
    fn rows(&self) -> usize {
        if self.n_cols == 0 {
            0
        } else {
            self.data.len() / self.n_cols
        }
    }
    fn cols(&self) -> usize {
        self.n_cols
    }
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }
}

pub(crate) struct LazyCost<'a> {
    x: &'a Points,
    y: &'a Points,
    cost: &'a CostSpec,
}

impl CostMatrix for LazyCost<'_> {
    fn rows(&self) -> usize {
        self.x.len()
    }
    fn cols(&self) -> usize {
        self.y.len()
    }
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.cost.c(self.x.row(i), self.y.row(j))
    }
}

fn assign<C: CostMatrix>(c: &C) -> TransportPlan {
    let (perm, f, g) = assignment::lapjv(c);
    permutation_plan(c, &perm, f, g, Method::Assignment)
}

fn lazy_checked<'a>(x: &'a Points, y: &'a Points, cost: &'a CostSpec) -> Result<LazyCost<'a>> {
    let c = LazyCost { x, y, cost };
    for i in 0..x.len() {
        if let Some(j) = (0..y.len()).find(|&j| !c.get(i, j).is_finite()) {
            return Err(Error::numerical(format!("non-finite cost entry at ({i}, {j})")));
        }
    }
    Ok(c)
}

fn mean(p: &Points) -> Vec<f64> {
    let mut m = vec![0.0; p.dim()];
    for row in p.iter() {
        m.iter_mut().zip(row).for_each(|(a, b)| *a += b);
    }
    m.iter_mut().for_each(|a| *a /= p.len() as f64);
    m
}

/// For the squared Euclidean cost, translating either cloud only adds
/// separable terms, so the matching can be computed on centred clouds. This
/// keeps the column reduction from piling every column onto a few rows when
/// the supports are far apart. Returns `(perm, f)` for the original clouds.
fn centred_matching(x: &Points, y: &Points, cost: &CostSpec) -> Result<(Vec<usize>, Vec<f64>)> {
    let (mx, my) = (mean(x), mean(y));
    let neg = |m: &[f64]| m.iter().map(|v| -v).collect::<Vec<f64>>();
    let (xc, yc) = (x.translated(&neg(&mx)), y.translated(&neg(&my)));
    let delta: Vec<f64> = mx.iter().zip(&my).map(|(a, b)| a - b).collect();
    let dd: f64 = delta.iter().map(|v| v * v).sum();
    let (perm, mut f, _) = if x.len() <= DENSE_LIMIT {
        assignment::lapjv(&dense_cost(&xc, &yc, cost)?)
    } else {
        assignment::lapjv(&lazy_checked(&xc, &yc, cost)?)
    };
    // c(x, y) = c(xc, yc) + 2<xc, delta> + |delta|^2 - 2<yc, delta>.
    for (fi, row) in f.iter_mut().zip(xc.iter()) {
        *fi += 2.0 * row.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>() + dd;
    }
    Ok((perm, f))
}

pub(crate) fn dense_cost(x: &Points, y: &Points, cost: &CostSpec) -> Result<DenseCost> {
    let mut data = Vec::with_capacity(x.len() * y.len());
    for xi in x.iter() {
        for yj in y.iter() {
            data.push(cost.c(xi, yj));
        }
    }
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::numerical(format!(
            "non-finite cost entry at ({}, {})",
            pos / y.len(),
            pos % y.len()
        )));
    }
    Ok(DenseCost { n_cols: y.len(), data })
}

fn check_inputs(x: &Points, y: &Points, cost: &CostSpec) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::usage("transport needs nonempty point sets"));
    }
    if x.dim() != cost.dim() || y.dim() != cost.dim() {
        return Err(Error::usage(format!(
            "point dimensions ({}, {}) do not match the cost dimension {}",
            x.dim(),
            y.dim(),
            cost.dim()
        )));
    }
    Ok(())
}

/// One c-transform sweep in each direction, then the `sum(g) = 0` shift.
fn tighten_duals<C: CostMatrix>(c: &C, f: &mut [f64], g: &mut [f64]) {
    let (m, n) = (c.rows(), c.cols());
    for (j, gj) in g.iter_mut().enumerate() {
        *gj = (0..m).map(|i| c.get(i, j) - f[i]).fold(f64::INFINITY, f64::min);
    }
    for (i, fi) in f.iter_mut().enumerate() {
        *fi = (0..n).map(|j| c.get(i, j) - g[j]).fold(f64::INFINITY, f64::min);
    }
    let shift = g.iter().sum::<f64>() / n as f64;
    g.iter_mut().for_each(|v| *v -= shift);
    f.iter_mut().for_each(|v| *v += shift);
}

fn permutation_plan<C: CostMatrix>(c: &C, perm: &[usize], mut f: Vec<f64>, mut g: Vec<f64>, method: Method) -> TransportPlan {
    let n = perm.len();
    let w = 1.0 / n as f64;
    tighten_duals(c, &mut f, &mut g);
    let value = perm.iter().enumerate().map(|(i, &j)| c.get(i, j)).sum::<f64>() / n as f64;
    TransportPlan {
        entries: perm.iter().enumerate().map(|(i, &j)| (i, j, w)).collect(),
        value,
        dual_mu: f,
        dual_nu: g,
        method,
    }
}

/// Optimal matching between two equal-size uniform point clouds.
pub fn solve_assignment(x: &Points, y: &Points, cost: &CostSpec) -> Result<TransportPlan> {
    check_inputs(x, y, cost)?;
    if x.len() != y.len() {
        return Err(Error::usage(format!(
            "assignment needs equal sizes, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if cost.is_quadratic() && n > 1 {
        let (perm, f) = centred_matching(x, y, cost)?;
        let g = vec![0.0; n];
        return Ok(if n <= DENSE_LIMIT {
            permutation_plan(&dense_cost(x, y, cost)?, &perm, f, g, Method::Assignment)
        } else {
            permutation_plan(&lazy_checked(x, y, cost)?, &perm, f, g, Method::Assignment)
        });
    }
    if n <= DENSE_LIMIT {
        Ok(assign(&dense_cost(x, y, cost)?))
    } else {
        Ok(assign(&lazy_checked(x, y, cost)?))
    }
}

/// Optimal coupling between general discrete measures.
pub fn solve_general(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<TransportPlan> {
    check_inputs(&mu.points, &nu.points, cost)?;
    for (name, m) in [("mu", mu), ("nu", nu)] {
        let total: f64 = m.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 || m.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::usage(format!("{name} weights must be nonnegative and sum to 1 (sum {total})")));
        }
    }
    let c = dense_cost(&mu.points, &nu.points, cost)?;
    let sol = network_simplex::solve(&c, &mu.weights, &nu.weights)?;
    let (mut f, mut g) = (sol.dual_mu, sol.dual_nu);
    tighten_duals(&c, &mut f, &mut g);
    let value = sol.entries.iter().map(|&(i, j, m)| m * c.get(i, j)).sum();
    Ok(TransportPlan { entries: sol.entries, value, dual_mu: f, dual_nu: g, method: Method::NetworkSimplex })
}

/// Exhaustive search over all permutations; `n <= 9`.
pub fn brute_force(x: &Points, y: &Points, cost: &CostSpec) -> Result<TransportPlan> {
    check_inputs(x, y, cost)?;
    if x.len() != y.len() {
        return Err(Error::usage("brute force needs equal sizes"));
    }
    if x.len() > MAX_BRUTE_FORCE {
        return Err(Error::usage(format!(
            "brute force is limited to n <= {MAX_BRUTE_FORCE}, got {}",
            x.len()
        )));
    }
    let c = dense_cost(x, y, cost)?;
    let (perm, f, g) = brute::solve(&c);
    Ok(permutation_plan(&c, &perm, f, g, Method::BruteForce))
}

/// Cost of a fixed plan under another cost function.
pub fn plan_cost_under(plan: &TransportPlan, x: &Points, y: &Points, alt_cost: &CostSpec) -> Result<f64> {
    check_inputs(x, y, alt_cost)?;
    let mut total = 0.0;
    for &(i, j, m) in &plan.entries {
        if i >= x.len() || j >= y.len() {
            return Err(Error::usage(format!("plan entry ({i}, {j}) is out of range")));
        }
        total += m * alt_cost.c(x.row(i), y.row(j));
    }
    Ok(total)
}
