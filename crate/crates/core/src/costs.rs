//! Translation-invariant convex costs `c(x, y) = h(x - y)`.
//!
//! Two families are provided:
//!
//! * `power_lr(p, r)`: `h(z) = ||z||_r^p` with `p, r >= 1`;
//! * `smooth_power(p, eps)`: `h(z) = (||z||^2 + eps^{2/p})^{p/2} - eps`, a smooth
//!   surrogate for `||z||^p` that stays within `2 eps` of it everywhere.
//!
//! Every cost is radial in some norm `N` (`h = omega(N(z))`), which the duality
//! module uses to build closed-form c-transforms of capped potentials.
//! Regularity metadata (Hölder exponent, growth exponent, radial constant,
//! lower Taylor reference) is attached at construction and consumed by the
//! diagnostics. The condition checkers here are sampling certificates, not proofs.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::points::norm2;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostFamily {
    PowerLr { p: f64, r: f64 },
    SmoothPower { p: f64, eps: f64 },
}

/// Reference point and constant for the lower Taylor bound
/// `h(z) - h(z0) - <grad h(z0), z - z0> >= lambda ||z - z0||^alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerTaylor {
    pub z0: Vec<f64>,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityMeta {
    /// Hölder exponent of the cost, in (0, 2].
    pub alpha: f64,
    /// Growth exponent `p`.
    pub growth_p: f64,
    /// Two-sided constant bounding `omega'(t) / t^{p-1}` for `t > 1`.
    pub kappa: f64,
    /// Curvature scale of the smooth surrogate, proportional to `eps^{1 - 2/p}`.
    pub lambda_eps: Option<f64>,
    pub lower: Option<LowerTaylor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostSpec {
    family: CostFamily,
    dim: usize,
    meta: RegularityMeta,
}

/// Which norm the cost is radial in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialNorm {
    Lr(f64),
    Euclidean,
}

impl CostSpec {
    /// `h(z) = ||z||_r^p`.
    pub fn power(p: f64, r: f64, dim: usize) -> Result<Self> {
        if !(p.is_finite() && r.is_finite() && p >= 1.0 && r >= 1.0) {
            return Err(Error::usage(format!("power cost needs p >= 1 and r >= 1, got p={p}, r={r}")));
        }
        check_dim(dim)?;
        let kappa = if r == 2.0 {
            p.max(1.0)
        } else {
            // Not Euclidean-radial; only used to size caps, via norm equivalence.
            p.max(1.0) * lr_equivalence(r, dim).powf(p)
        };
        let lower = if r == 2.0 && p <= 2.0 {
            Some(LowerTaylor { z0: vec![0.0; dim], lambda: 1.0 })
        } else {
            None
        };
        Ok(CostSpec {
            family: CostFamily::PowerLr { p, r },
            dim,
            meta: RegularityMeta {
                alpha: 2f64.min(p).min(r),
                growth_p: p,
                kappa,
                lambda_eps: None,
                lower,
            },
        })
    }

    /// The quadratic cost `||x - y||^2`.
    pub fn quadratic(dim: usize) -> Self {
        Self::power(2.0, 2.0, dim).expect("valid parameters")
    }

    /// Smooth surrogate `h_{p,eps}` of `||z||^p`.
    pub fn smooth_approx(p: f64, eps: f64, dim: usize) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::usage(format!("smooth cost needs p > 1, got {p}")));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::usage(format!("smooth cost needs eps in (0, 1], got {eps}")));
        }
        check_dim(dim)?;
        let a = 2f64.powf(p / 2.0 - 1.0) * p;
        let b = 2f64.powf(1.0 - p / 2.0) * p;
        Ok(CostSpec {
            family: CostFamily::SmoothPower { p, eps },
            dim,
            meta: RegularityMeta {
                alpha: 2.0,
                growth_p: p,
                kappa: a.max(b).max(1.0),
                lambda_eps: Some(p * (1.0 + (p - 2.0).abs()) * eps.powf(1.0 - 2.0 / p)),
                lower: None,
            },
        })
    }

    /// Parses `power:p=<f>,r=<f>` or `smooth:p=<f>,eps=<f>`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let spec = spec.trim().trim_matches('"');
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::usage(format!("cost `{spec}`: expected `<family>:<params>`")))?;
        let mut p = None;
        let mut second = None;
        let second_key = match kind.trim() {
            "power" => "r",
            "smooth" => "eps",
            other => {
                return Err(Error::usage(format!(
                    "cost `{spec}`: unknown family `{other}` (expected `power` or `smooth`)"
                )))
            }
        };
        for tok in rest.split(',') {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("cost `{spec}`: bad token `{tok}`")))?;
            let val: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::usage(format!("cost `{spec}`: bad number in token `{tok}`")))?;
            match k.trim() {
                "p" => p = Some(val),
                k if k == second_key => second = Some(val),
                _ => return Err(Error::usage(format!("cost `{spec}`: unknown parameter in token `{tok}`"))),
            }
        }
        let p = p.ok_or_else(|| Error::usage(format!("cost `{spec}`: missing `p`")))?;
        let second =
            second.ok_or_else(|| Error::usage(format!("cost `{spec}`: missing `{second_key}`")))?;
        match kind.trim() {
            "power" => Self::power(p, second, dim),
            _ => Self::smooth_approx(p, second, dim),
        }
    }

    /// Canonical string form, accepted by [`CostSpec::parse`].
    pub fn describe(&self) -> String {
        match self.family {
            CostFamily::PowerLr { p, r } => format!("power:p={p},r={r}"),
            CostFamily::SmoothPower { p, eps } => format!("smooth:p={p},eps={eps}"),
        }
    }

    /// Replaces the lower Taylor reference used by the H4 check.
    pub fn with_lower_taylor(mut self, z0: Vec<f64>, lambda: f64) -> Result<Self> {
        if z0.len() != self.dim {
            return Err(Error::usage("lower Taylor reference has wrong dimension"));
        }
        self.meta.lower = Some(LowerTaylor { z0, lambda });
        Ok(self)
    }

    pub fn family(&self) -> CostFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn meta(&self) -> &RegularityMeta {
        &self.meta
    }

    /// Same family in a different dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        let lower = self.meta.lower.is_some();
        let mut out = match self.family {
            CostFamily::PowerLr { p, r } => Self::power(p, r, dim)?,
            CostFamily::SmoothPower { p, eps } => Self::smooth_approx(p, eps, dim)?,
        };
        if !lower {
            out.meta.lower = None;
        }
        Ok(out)
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.family, CostFamily::PowerLr { p, r } if p == 2.0 && r == 2.0)
    }

    pub fn radial_norm(&self) -> RadialNorm {
        match self.family {
            CostFamily::PowerLr { r, .. } if r != 2.0 => RadialNorm::Lr(r),
            _ => RadialNorm::Euclidean,
        }
    }

    /// The norm `N` with `h = omega(N(z))`.
    #[inline]
    pub fn norm(&self, z: &[f64]) -> f64 {
        match self.radial_norm() {
            RadialNorm::Euclidean => norm2(z),
            RadialNorm::Lr(r) => lr_norm(z, r),
        }
    }

    /// Radial profile `omega`.
    #[inline]
    pub fn omega(&self, t: f64) -> f64 {
        match self.family {
            CostFamily::PowerLr { p, .. } => pow_fast(t, p),
            CostFamily::SmoothPower { p, eps } => smooth_profile_sq(t * t, p, eps),
        }
    }

    /// Derivative of the radial profile.
    pub fn omega_prime(&self, t: f64) -> f64 {
        match self.family {
            CostFamily::PowerLr { p, .. } => {
                if p == 1.0 {
                    1.0
                } else {
                    p * t.powf(p - 1.0)
                }
            }
            CostFamily::SmoothPower { p, eps } => {
                let e = eps.powf(2.0 / p);
                p * t * (t * t + e).powf(p / 2.0 - 1.0)
            }
        }
    }

    /// Inverse of the radial profile on `[0, inf)`.
    pub fn omega_inv(&self, v: f64) -> f64 {
        let v = v.max(0.0);
        match self.family {
            CostFamily::PowerLr { p, .. } => {
                if p == 1.0 {
                    v
                } else if p == 2.0 {
                    v.sqrt()
                } else {
                    v.powf(1.0 / p)
                }
            }
            CostFamily::SmoothPower { p, eps } => {
                if p == 2.0 {
                    return v.sqrt();
                }
                let e = eps.powf(2.0 / p);
                (e * ((2.0 / p) * (v / eps).ln_1p()).exp_m1()).max(0.0).sqrt()
            }
        }
    }

    /// `h(z)` without dimension checks.
    #[inline]
    pub fn h(&self, z: &[f64]) -> f64 {
        match self.family {
            CostFamily::PowerLr { p, r } => {
                if r == 2.0 {
                    let s: f64 = z.iter().map(|v| v * v).sum();
                    if p == 2.0 {
                        s
                    } else if p == 1.0 {
                        s.sqrt()
                    } else {
                        s.powf(p / 2.0)
                    }
                } else {
                    pow_fast(lr_norm(z, r), p)
                }
            }
            CostFamily::SmoothPower { p, eps } => {
                smooth_profile_sq(z.iter().map(|v| v * v).sum(), p, eps)
            }
        }
    }

    /// `c(x, y) = h(x - y)` without dimension checks.
    #[inline]
    pub fn c(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self.family {
            CostFamily::PowerLr { p, r } if r == 2.0 => {
                let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                if p == 2.0 {
                    s
                } else if p == 1.0 {
                    s.sqrt()
                } else {
                    s.powf(p / 2.0)
                }
            }
            CostFamily::SmoothPower { p, eps } => {
                let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                smooth_profile_sq(s, p, eps)
            }
            _ => {
                let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                self.h(&z)
            }
        }
    }

    pub fn eval_h(&self, z: &[f64]) -> Result<f64> {
        self.check(z)?;
        Ok(self.h(z))
    }

    pub fn eval_cost(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.c(x, y))
    }

    /// Gradient of `h`; refuses non-differentiable points.
    pub fn grad_h(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check(z)?;
        match self.family {
            CostFamily::PowerLr { p, r } => {
                if r < 2.0 {
                    if let Some(l) = z.iter().position(|&v| v == 0.0) {
                        return Err(Error::Domain(format!(
                            "l_r norm with r={r} < 2 has a kink where coordinate {l} vanishes"
                        )));
                    }
                }
                let n = lr_norm(z, r);
                if n == 0.0 {
                    if p <= 1.0 {
                        return Err(Error::Domain(format!("||z||^{p} has a kink at z = 0")));
                    }
                    return Ok(vec![0.0; z.len()]);
                }
                let scale = p * n.powf(p - r);
                Ok(z.iter().map(|&v| scale * v * v.abs().powf(r - 2.0)).collect())
            }
            CostFamily::SmoothPower { p, eps } => {
                let e = eps.powf(2.0 / p);
                let s: f64 = z.iter().map(|v| v * v).sum();
                let scale = p * (s + e).powf(p / 2.0 - 1.0);
                Ok(z.iter().map(|v| scale * v).collect())
            }
        }
    }

    /// Upper estimate of `1 v ||h||_{C^alpha(B_{0,R})}` (sup norm plus gradient
    /// bound plus Hölder seminorm of the top derivative), with safety factor 2.
    pub fn lambda_on_ball(&self, radius: f64) -> f64 {
        let d = self.dim as f64;
        match self.family {
            CostFamily::PowerLr { p, r } => {
                let m = lr_equivalence(r, self.dim) * radius;
                let sup = m.powf(p);
                // |h(a) - h(b)| <= p M^{p-1} N(a - b) <= p M^{p-1} c_r ||a - b||.
                let lip = p * m.powf(p - 1.0) * lr_equivalence(r, self.dim);
                let top = if p >= 2.0 && r >= 2.0 {
                    // Trace of the (PSD) Hessian, bounded coordinatewise.
                    d * p * ((p - r).abs() + r - 1.0) * m.powf(p - 2.0)
                } else if p > 1.0 && r > 1.0 {
                    4.0 * d * p * m.max(1.0).powf(p)
                } else {
                    0.0
                };
                2.0 * (sup + lip + top).max(1.0)
            }
            CostFamily::SmoothPower { p, eps } => {
                let e = eps.powf(2.0 / p);
                let sup = self.omega(radius);
                let lip = self.omega_prime(radius);
                let curv_at = if p < 2.0 { 0.0 } else { radius };
                let hess = p * (1.0 + (p - 2.0).abs()) * (curv_at * curv_at + e).powf(p / 2.0 - 1.0);
                2.0 * (sup + lip + hess).max(1.0)
            }
        }
    }

    fn check(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::usage(format!(
                "vector has dimension {}, cost expects {}",
                z.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// `max ||z||_r / ||z||_2` over R^d.
fn lr_equivalence(r: f64, dim: usize) -> f64 {
    if r >= 2.0 {
        1.0
    } else {
        (dim as f64).powf(1.0 / r - 0.5)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::usage("dimension must be positive"))
    } else {
        Ok(())
    }
}

#[inline]
fn pow_fast(t: f64, p: f64) -> f64 {
    if p == 1.0 {
        t
    } else if p == 2.0 {
        t * t
    } else if p == 3.0 {
        t * t * t
    } else {
        t.powf(p)
    }
}

#[inline]
pub fn lr_norm(z: &[f64], r: f64) -> f64 {
    if r == 2.0 {
        norm2(z)
    } else if r == 1.0 {
        z.iter().map(|v| v.abs()).sum()
    } else {
        z.iter().map(|v| v.abs().powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// `(s + eps^{2/p})^{p/2} - eps` written as `eps * expm1(p/2 * ln1p(s / eps^{2/p}))`,
/// which is exactly zero at `s = 0` and avoids cancellation for small `s`.
#[inline]
fn smooth_profile_sq(s: f64, p: f64, eps: f64) -> f64 {
    if p == 2.0 {
        return s;
    }
    let e = eps.powf(2.0 / p);
    eps * ((p / 2.0) * (s / e).ln_1p()).exp_m1()
}

// ---------------------------------------------------------------------------
// Sampling regions and condition checks

/// A sampling region for certificates.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Self {
        Region::Ball { center: vec![0.0; dim], radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return Err(Error::usage("ball region needs a center and a positive radius"));
                }
            }
            Region::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::usage("box region needs lo < hi in every coordinate"));
                }
            }
        }
        Ok(())
    }

    /// Largest Euclidean norm of a point in the region.
    pub fn max_norm(&self) -> f64 {
        match self {
            Region::Ball { center, radius } => norm2(center) + radius,
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Region::Ball { center, radius } => {
                let d = center.len();
                let dir = crate::measures::gaussian_direction(rng, d);
                let u: f64 = rng.random();
                let rho = radius * u.powf(1.0 / d as f64);
                center.iter().zip(&dir).map(|(c, v)| c + rho * v).collect()
            }
            Region::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    H0,
    H1,
    H3,
    H4,
}

impl std::str::FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "H0" => Ok(Condition::H0),
            "H1" => Ok(Condition::H1),
            "H3" => Ok(Condition::H3),
            "H4" => Ok(Condition::H4),
            _ => Err(Error::usage(format!("unknown condition `{s}` (expected H0, H1, H3 or H4)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub pass: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    /// Points (or radii, as 1-vectors) attaining the worst violations.
    pub witnesses: Vec<Vec<f64>>,
    pub samples: usize,
}

/// Sampled certificate for one structural condition of the cost.
pub fn check_conditions(
    cost: &CostSpec,
    condition: Condition,
    region: &Region,
    budget: usize,
    seed: u64,
) -> Result<ConditionReport> {
    region.validate()?;
    if budget == 0 {
        return Err(Error::usage("budget must be at least 1"));
    }
    if region.dim() != cost.dim() {
        return Err(Error::usage("region dimension does not match the cost"));
    }
    let mut rng = rng::seeded(seed);
    let mut worst = Worst::default();
    let tolerance;
    match condition {
        Condition::H0 => {
            let mut scale: f64 = 1.0;
            for _ in 0..budget {
                let a = region.sample(&mut rng);
                let b = region.sample(&mut rng);
                let ha = cost.h(&a);
                let hb = cost.h(&b);
                let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
                let neg: Vec<f64> = a.iter().map(|v| -v).collect();
                scale = scale.max(ha.abs()).max(hb.abs());
                let v = (cost.h(&mid) - 0.5 * (ha + hb))
                    .max(-ha)
                    .max((ha - cost.h(&neg)).abs())
                    .max(0.0);
                worst.offer(v, &a);
            }
            let zero = cost.h(&vec![0.0; cost.dim()]).abs();
            worst.offer(zero, &vec![0.0; cost.dim()]);
            tolerance = 1e-12 * scale;
        }
        Condition::H1 => {
            let alpha = cost.meta().alpha;
            let bound = cost.lambda_on_ball(region.max_norm());
            for _ in 0..budget {
                let a = region.sample(&mut rng);
                let b = region.sample(&mut rng);
                let gap = norm2(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
                if gap == 0.0 {
                    continue;
                }
                let q = if alpha <= 1.0 {
                    (cost.h(&a) - cost.h(&b)).abs() / gap.powf(alpha)
                } else {
                    let (ga, gb) = match (cost.grad_h(&a), cost.grad_h(&b)) {
                        (Ok(ga), Ok(gb)) => (ga, gb),
                        _ => continue,
                    };
                    let dg: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x - y).collect();
                    norm2(&dg) / gap.powf(alpha - 1.0)
                };
                worst.offer(q - bound, &a);
            }
            tolerance = 0.0;
        }
        Condition::H3 => {
            if cost.radial_norm() != RadialNorm::Euclidean {
                return Err(Error::usage(
                    "H3 is inapplicable: an l_r power cost with r != 2 is not Euclidean-radial",
                ));
            }
            let p = cost.meta().growth_p;
            if p <= 1.0 {
                return Err(Error::usage("H3 is inapplicable for growth exponent p <= 1"));
            }
            let rmax = region.max_norm();
            if rmax <= 1.0 {
                return Err(Error::usage("H3 concerns radii > 1; the region must reach beyond the unit ball"));
            }
            let kappa = cost.meta().kappa;
            for k in 1..=budget {
                let t = 1.0 + (rmax - 1.0) * k as f64 / budget as f64;
                let q = cost.omega_prime(t) / t.powf(p - 1.0);
                worst.offer((1.0 / kappa - q).max(q - kappa), &[t]);
            }
            tolerance = 1e-12 * kappa;
        }
        Condition::H4 => {
            let lower = cost.meta().lower.clone().ok_or_else(|| {
                Error::usage("H4 is inapplicable: no lower Taylor reference recorded for this cost")
            })?;
            let alpha = cost.meta().alpha;
            let h0 = cost.h(&lower.z0);
            let g0 = if alpha > 1.0 { Some(cost.grad_h(&lower.z0)?) } else { None };
            let mut scale: f64 = 1.0;
            for _ in 0..budget {
                let z = region.sample(&mut rng);
                let dz: Vec<f64> = z.iter().zip(&lower.z0).map(|(a, b)| a - b).collect();
                let mut lhs = cost.h(&z) - h0;
                if let Some(g) = &g0 {
                    lhs -= g.iter().zip(&dz).map(|(a, b)| a * b).sum::<f64>();
                }
                let rhs = lower.lambda * norm2(&dz).powf(alpha);
                scale = scale.max(rhs.abs());
                worst.offer(rhs - lhs, &z);
            }
            tolerance = 1e-12 * scale;
        }
    }
    let max_violation = worst.value.max(0.0);
    Ok(ConditionReport {
        condition,
        pass: max_violation <= tolerance,
        max_violation,
        tolerance,
        witnesses: worst.witness.into_iter().collect(),
        samples: budget,
    })
}

#[derive(Default)]
struct Worst {
    value: f64,
    witness: Option<Vec<f64>>,
}

impl Worst {
    fn offer(&mut self, v: f64, at: &[f64]) {
        if self.witness.is_none() || v > self.value {
            self.value = v;
            self.witness = Some(at.to_vec());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn fd_grad(cost: &CostSpec, z: &[f64], step: f64) -> Vec<f64> {
        (0..z.len())
            .map(|l| {
                let mut a = z.to_vec();
                let mut b = z.to_vec();
                a[l] += step;
                b[l] -= step;
                (cost.h(&a) - cost.h(&b)) / (2.0 * step)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num = norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
        num / norm2(b).max(1e-300)
    }

    #[test]
    fn basic_values() {
        let c2 = CostSpec::quadratic(3);
        assert_eq!(c2.eval_cost(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let c31 = CostSpec::power(3.0, 1.0, 3).unwrap();
        assert_eq!(c31.eval_cost(&[1.0, 0.0, 0.0], &[0.0; 3]).unwrap(), 1.0);
        let s = CostSpec::smooth_approx(1.5, 0.01, 2).unwrap();
        assert_eq!(s.eval_h(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(c2.eval_cost(&[1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn gradient_special_points() {
        let c2 = CostSpec::quadratic(3);
        assert_eq!(c2.grad_h(&[1.0, 0.0, 0.0]).unwrap(), vec![2.0, 0.0, 0.0]);
        let s = CostSpec::smooth_approx(1.5, 0.1, 2).unwrap();
        assert_eq!(s.grad_h(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let c1 = CostSpec::power(1.0, 2.0, 2).unwrap();
        assert!(matches!(c1.grad_h(&[0.0, 0.0]), Err(Error::Domain(_))));
        let l1 = CostSpec::power(2.0, 1.5, 2).unwrap();
        assert!(matches!(l1.grad_h(&[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn gradient_matches_central_differences() {
        // Oracle: central differences with step 1e-5.
        let mut rng = rng::seeded(3);
        let costs = [
            CostSpec::power(1.5, 2.0, 4).unwrap(),
            CostSpec::power(3.0, 2.5, 4).unwrap(),
            CostSpec::power(2.0, 1.5, 4).unwrap(),
            CostSpec::smooth_approx(1.5, 1e-2, 4).unwrap(),
            CostSpec::smooth_approx(3.0, 1e-4, 4).unwrap(),
        ];
        for cost in &costs {
            for _ in 0..200 {
                let z: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
                let g = cost.grad_h(&z).unwrap();
                let fd = fd_grad(cost, &z, 1e-5);
                assert!(rel_err(&fd, &g) < 1e-6, "{} at {z:?}", cost.describe());
            }
        }
    }

    #[test]
    fn smooth_is_exact_for_p2() {
        let s = CostSpec::smooth_approx(2.0, 0.5, 3).unwrap();
        let z = [0.3, -1.2, 2.0];
        assert_eq!(s.h(&z), z.iter().map(|v| v * v).sum::<f64>());
    }

    #[test]
    fn smooth_sup_error_within_two_eps() {
        for &eps in &[1e-2, 1e-4] {
            let s = CostSpec::smooth_approx(1.5, eps, 3).unwrap();
            let region = Region::centered_ball(3, 5.0);
            let mut rng = rng::seeded(11);
            for _ in 0..10_000 {
                let z = region.sample(&mut rng);
                let exact = norm2(&z).powf(1.5);
                assert!((s.h(&z) - exact).abs() <= 2.0 * eps);
            }
        }
    }

    #[test]
    fn smooth_error_grows_with_radius_above_two() {
        // For p > 2 the gap (t^2 + e)^{p/2} - t^p grows like (p/2) e t^{p-2}.
        let eps = 1e-2;
        let s = CostSpec::smooth_approx(3.0, eps, 1).unwrap();
        let e = eps.powf(2.0 / 3.0);
        let expected = (25.0 + e).powf(1.5) - eps - 125.0;
        assert!((s.h(&[5.0]) - 125.0 - expected).abs() < 1e-9);
        assert!(expected > 2.0 * eps);
        assert!((s.h(&[0.1]) - 1e-3).abs() <= 2.0 * eps);
    }

    #[test]
    fn omega_prime_matches_radial_differences() {
        let s = CostSpec::smooth_approx(1.5, 1e-2, 1).unwrap();
        for k in 1..100 {
            let t = 0.05 * k as f64;
            let step = 1e-6;
            let fd = (s.omega(t + step) - s.omega(t - step)) / (2.0 * step);
            assert!((fd - s.omega_prime(t)).abs() <= 1e-6 * s.omega_prime(t).abs().max(1.0));
        }
    }

    #[test]
    fn omega_inverse_roundtrip() {
        for cost in [
            CostSpec::quadratic(2),
            CostSpec::power(1.0, 2.0, 2).unwrap(),
            CostSpec::power(3.0, 1.0, 2).unwrap(),
            CostSpec::smooth_approx(1.5, 1e-2, 2).unwrap(),
            CostSpec::smooth_approx(3.0, 1e-4, 2).unwrap(),
        ] {
            for k in 0..50 {
                let t = 0.1 * k as f64;
                let back = cost.omega_inv(cost.omega(t));
                assert!((back - t).abs() <= 1e-9 * (1.0 + t), "{} t={t} back={back}", cost.describe());
            }
        }
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        let c = CostSpec::parse("power:p=3,r=1", 2).unwrap();
        assert_eq!(c.family(), CostFamily::PowerLr { p: 3.0, r: 1.0 });
        assert_eq!(CostSpec::parse(&c.describe(), 2).unwrap(), c);
        let s = CostSpec::parse("\"smooth:p=1.5,eps=0.01\"", 2).unwrap();
        assert_eq!(s.family(), CostFamily::SmoothPower { p: 1.5, eps: 0.01 });
        let err = CostSpec::parse("power:p=2,q=1", 2).unwrap_err().to_string();
        assert!(err.contains("q=1"), "{err}");
        assert!(CostSpec::parse("power:p=0.5,r=2", 2).is_err());
        assert!(CostSpec::parse("smooth:p=1.5,eps=2", 2).is_err());
        assert!(CostSpec::parse("cubic:p=3", 2).is_err());
    }

    #[test]
    fn alpha_metadata() {
        for &(p, r) in &[(1.0, 2.0), (1.5, 3.0), (3.0, 1.2), (2.5, 2.5), (4.0, 3.0)] {
            let c = CostSpec::power(p, r, 3).unwrap();
            assert_eq!(c.meta().alpha, 2f64.min(p).min(r));
            assert!(c.meta().kappa >= 1.0);
        }
    }

    #[test]
    fn condition_checks() {
        let c2 = CostSpec::quadratic(3);
        let r = check_conditions(&c2, Condition::H0, &Region::centered_ball(3, 2.0), 2000, 1).unwrap();
        assert!(r.pass && r.max_violation <= r.tolerance);
        let c3 = CostSpec::power(3.0, 2.0, 2).unwrap();
        assert_eq!(c3.meta().kappa, 3.0);
        let r = check_conditions(&c3, Condition::H3, &Region::centered_ball(2, 50.0), 1000, 1).unwrap();
        assert!(r.pass);
        let s = CostSpec::smooth_approx(1.5, 0.1, 2).unwrap();
        let r = check_conditions(&s, Condition::H3, &Region::centered_ball(2, 50.0), 5000, 1).unwrap();
        assert!(r.pass, "{r:?}");
        let l1 = CostSpec::power(2.0, 1.0, 2).unwrap();
        assert!(check_conditions(&l1, Condition::H3, &Region::centered_ball(2, 5.0), 10, 1).is_err());
        assert!(check_conditions(&c3, Condition::H4, &Region::centered_ball(2, 5.0), 10, 1).is_err());
        let c15 = CostSpec::power(1.5, 2.0, 3).unwrap();
        let r = check_conditions(&c15, Condition::H4, &Region::centered_ball(3, 3.0), 2000, 1).unwrap();
        assert!(r.pass, "{r:?}");
        let shifted = CostSpec::quadratic(3).with_lower_taylor(vec![0.5, 0.0, -0.2], 1.0).unwrap();
        let r = check_conditions(&shifted, Condition::H4, &Region::centered_ball(3, 3.0), 2000, 1).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn holder_estimate_dominates_samples() {
        let families = [
            CostSpec::quadratic(5),
            CostSpec::power(1.0, 2.0, 5).unwrap(),
            CostSpec::power(1.5, 2.0, 5).unwrap(),
            CostSpec::power(3.0, 1.0, 5).unwrap(),
            CostSpec::power(3.0, 3.0, 5).unwrap(),
            CostSpec::power(2.0, 1.5, 5).unwrap(),
            CostSpec::smooth_approx(1.5, 1e-2, 5).unwrap(),
            CostSpec::smooth_approx(3.0, 1e-4, 5).unwrap(),
        ];
        for cost in &families {
            for radius in [0.5, 1.0, 2.0] {
                let box_region = Region::Box { lo: vec![-radius / 3.0; 5], hi: vec![radius / 3.0; 5] };
                for region in [Region::centered_ball(5, radius), box_region] {
                    let r = check_conditions(cost, Condition::H1, &region, 3000, 5).unwrap();
                    assert!(r.pass, "{} {r:?}", cost.describe());
                }
            }
        }
    }

    #[test]
    fn kappa_for_smooth_is_max_of_both_forms() {
        let s = CostSpec::smooth_approx(3.0, 0.1, 1).unwrap();
        assert_eq!(s.meta().kappa, 2f64.powf(0.5) * 3.0);
        let lam_a = CostSpec::smooth_approx(1.5, 1e-2, 1).unwrap().meta().lambda_eps.unwrap();
        let lam_b = CostSpec::smooth_approx(1.5, 1e-4, 1).unwrap().meta().lambda_eps.unwrap();
        // Lambda_eps scales like eps^{1 - 2/p}.
        let expected = 100f64.powf(2.0 / 1.5 - 1.0);
        assert!((lam_b / lam_a - expected).abs() < 1e-9 * expected);
    }

    proptest! {
        #[test]
        fn structural_invariants(
            z in proptest::collection::vec(-3.0f64..3.0, 3),
            w in proptest::collection::vec(-3.0f64..3.0, 3),
            fam in 0usize..5,
        ) {
            let cost = match fam {
                0 => CostSpec::quadratic(3),
                1 => CostSpec::power(1.0, 2.0, 3).unwrap(),
                2 => CostSpec::power(3.0, 1.0, 3).unwrap(),
                3 => CostSpec::power(2.5, 1.7, 3).unwrap(),
                _ => CostSpec::smooth_approx(1.5, 1e-2, 3).unwrap(),
            };
            let neg: Vec<f64> = z.iter().map(|v| -v).collect();
            let hz = cost.h(&z);
            let hw = cost.h(&w);
            prop_assert!(hz >= 0.0);
            prop_assert!((hz - cost.h(&neg)).abs() <= 1e-12 * (1.0 + hz));
            let mid: Vec<f64> = z.iter().zip(&w).map(|(a, b)| 0.5 * (a + b)).collect();
            prop_assert!(cost.h(&mid) <= 0.5 * (hz + hw) + 1e-12 * (1.0 + hz + hw));
        }
    }
}
