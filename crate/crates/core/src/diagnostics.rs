//! Sampled checks of structural properties of optimal potentials and plans.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::costs::Region;
use crate::duality::{superdifferential_probe, Potential, PotentialHandle};
use crate::error::{Error, Result};
use crate::points::{norm2, Points};
use crate::rng;
use crate::solver::TransportPlan;

pub const SEMICONCAVITY_TOLERANCE: f64 = 1e-8;
pub const LIPSCHITZ_SLACK: f64 = 1e-6;
pub const DEFAULT_TRIPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub name: String,
    pub max_violation: f64,
    pub witness: Option<serde_json::Value>,
    pub samples_used: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl DiagnosticReport {
    pub fn new(name: impl Into<String>, max_violation: f64, tolerance: f64, samples_used: usize) -> Self {
        DiagnosticReport {
            name: name.into(),
            max_violation,
            witness: None,
            samples_used,
            tolerance,
            pass: max_violation <= tolerance,
        }
    }

    pub fn with_witness(mut self, witness: serde_json::Value) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::usage(format!("bad report line: {e}")))
    }

    pub fn status_line(&self) -> String {
        format!(
            "{} {}: max_violation={} tolerance={} samples={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            crate::report::fmt_f64(self.max_violation),
            crate::report::fmt_f64(self.tolerance),
            self.samples_used
        )
    }
}

/// Results of [`semiconcavity_check`]: midpoint concavity and the Lipschitz bound.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiconcavityOutcome {
    pub midpoint: DiagnosticReport,
    pub lipschitz: DiagnosticReport,
}

impl SemiconcavityOutcome {
    pub fn pass(&self) -> bool {
        self.midpoint.pass && self.lipschitz.pass
    }

    pub fn reports(&self) -> [&DiagnosticReport; 2] {
        [&self.midpoint, &self.lipschitz]
    }
}

/// Midpoint concavity of `x -> phi(x) - (lambda/2)||x||^2` on random pairs in the
/// region, and its difference quotients against `2 lambda`.
pub fn semiconcavity_check<P: Potential + ?Sized>(
    phi: &P,
    lambda: f64,
    region: &Region,
    triples: usize,
    seed: u64,
) -> Result<SemiconcavityOutcome> {
    region.validate()?;
    if region.dim() != phi.dim() {
        return Err(Error::usage("region dimension does not match the potential"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::usage("lambda must be nonnegative"));
    }
    let shifted = |x: &[f64]| phi.eval(x) - 0.5 * lambda * x.iter().map(|v| v * v).sum::<f64>();
    let mut rng = rng::seeded(seed);
    let mut mid_worst = 0.0f64;
    let mut mid_at: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut ratio_worst = 0.0f64;
    let mut ratio_at: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..triples {
        let a = region.sample(&mut rng);
        let b = region.sample(&mut rng);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
        let (fa, fb, fm) = (shifted(&a), shifted(&b), shifted(&mid));
        let v = 0.5 * (fa + fb) - fm;
        if v > mid_worst {
            mid_worst = v;
            mid_at = Some((a.clone(), b.clone()));
        }
        let gap = norm2(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>());
        if gap > 0.0 {
            let q = (fa - fb).abs() / gap;
            if q > ratio_worst {
                ratio_worst = q;
                ratio_at = Some((a, b));
            }
        }
    }
    let bound = 2.0 * lambda;
    let midpoint = DiagnosticReport::new("semiconcavity.midpoint", mid_worst, SEMICONCAVITY_TOLERANCE, triples)
        .with_witness(json!({ "lambda": lambda, "pair": mid_at }));
    let lipschitz = DiagnosticReport::new(
        "semiconcavity.lipschitz",
        (ratio_worst - bound).max(0.0),
        LIPSCHITZ_SLACK,
        triples,
    )
    .with_witness(json!({ "max_ratio": ratio_worst, "bound": bound, "pair": ratio_at }));
    Ok(SemiconcavityOutcome { midpoint, lipschitz })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementProfile {
    pub max_ratio: f64,
    /// Nearest-rank quantiles at 0%, 10%, ..., 100%.
    pub deciles: Vec<f64>,
    pub entries: usize,
}

/// Distribution of `||y|| / (||x|| + 1)` over the positive-mass entries of a plan.
pub fn displacement_profile(plan: &TransportPlan, x: &Points, y: &Points) -> Result<DisplacementProfile> {
    let mut ratios = Vec::with_capacity(plan.entries.len());
    for &(i, j, m) in &plan.entries {
        if i >= x.len() || j >= y.len() {
            return Err(Error::usage(format!("plan entry ({i}, {j}) is out of range")));
        }
        if m > 0.0 {
            ratios.push(norm2(y.row(j)) / (norm2(x.row(i)) + 1.0));
        }
    }
    if ratios.is_empty() {
        return Err(Error::usage("plan has no positive-mass entries"));
    }
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let deciles = (0..=10)
        .map(|k| {
            let rank = ((k as f64 / 10.0) * n as f64).ceil() as usize;
            ratios[rank.clamp(1, n) - 1]
        })
        .collect();
    Ok(DisplacementProfile { max_ratio: ratios[n - 1], deciles, entries: n })
}

/// Default constant in the superdifferential growth bound: `kappa 2^{p+1}`.
pub fn default_growth_constant(growth_p: f64, kappa: f64) -> f64 {
    kappa * 2f64.powf(growth_p + 1.0)
}

/// Growth of the superdifferential of `phi` on `B_{0, r/2}` relative to
/// `r^{p-1} + bound`, where `bound` must dominate `|phi|` on `B_{0, r}`.
pub fn superdiff_growth_check(
    phi: &PotentialHandle,
    r: f64,
    bound: f64,
    probes: usize,
    seed: u64,
    constant: Option<f64>,
) -> Result<DiagnosticReport> {
    if r < 4.0 || bound < 4.0 {
        return Err(Error::usage(format!(
            "the growth bound is only claimed for r >= 4 and potential bound >= 4 (got r={r}, bound={bound})"
        )));
    }
    if probes == 0 {
        return Err(Error::usage("need at least one probe"));
    }
    let d = phi.dim();
    let p = phi.cost().meta().growth_p;
    let kappa = phi.cost().meta().kappa;
    let tolerance = constant.unwrap_or_else(|| default_growth_constant(p, kappa));
    let mut rng = rng::seeded(seed);

    let outer = Region::centered_ball(d, r);
    let mut sup_phi = 0.0f64;
    for _ in 0..probes {
        sup_phi = sup_phi.max(phi.eval(&outer.sample(&mut rng)).abs());
    }
    let hypothesis_holds = sup_phi <= bound;

    let denom = r.powf(p - 1.0) + bound;
    let mut nested = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_at: Option<(Vec<f64>, Vec<f64>)> = None;
    for frac in [0.125, 0.25, 0.5] {
        let region = Region::centered_ball(d, frac * r);
        let mut stat = 0.0f64;
        for _ in 0..probes {
            let x = region.sample(&mut rng);
            for j in superdifferential_probe(phi, &x)? {
                let y = phi.anchors().row(j);
                let s = norm2(y).powf(p - 1.0) / denom;
                if s > stat {
                    stat = s;
                }
                if s > worst {
                    worst = s;
                    worst_at = Some((x.clone(), y.to_vec()));
                }
            }
        }
        nested.push(json!({ "radius": frac * r, "statistic": stat }));
    }
    let stats: Vec<f64> = nested.iter().map(|v| v["statistic"].as_f64().unwrap_or(0.0)).collect();
    let mut report = DiagnosticReport::new("superdiff_growth", worst, tolerance, 4 * probes).with_witness(json!({
        "sup_abs_phi": sup_phi,
        "bound": bound,
        "hypothesis_holds": hypothesis_holds,
        "nested": nested,
        "grows_with_radius": stats.windows(2).any(|w| w[1] > w[0]),
        "worst": worst_at,
    }));
    report.pass = report.pass && hypothesis_holds;
    Ok(report)
}
