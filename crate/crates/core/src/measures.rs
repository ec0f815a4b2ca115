//! Samplers, discrete measures and ground-truth pairs with known
//! population transport cost.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::costs::CostSpec;
use crate::error::{Error, Result};
use crate::points::{norm2, Points};
use crate::rng;

/// Eigenvalue floor used when taking symmetric matrix square roots.
const EIGEN_FLOOR: f64 = 1e-12;

/// Finitely supported probability measure.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    pub points: Points,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Points, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::usage(format!(
                "measure needs one weight per point ({} points, {} weights)",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::usage(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::usage(format!("weights sum to {total}, expected 1")));
        }
        Ok(DiscreteMeasure { points, weights })
    }

    pub fn uniform(points: Points) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::usage("uniform measure needs at least one point"));
        }
        let w = 1.0 / n as f64;
        Ok(DiscreteMeasure { points, weights: vec![w; n] })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SamplerSpec {
    UniformBall { center: Vec<f64>, radius: f64 },
    UniformCube { center: Vec<f64>, half_width: f64 },
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    PointMass { x: Vec<f64> },
    Translate { inner: Box<SamplerSpec>, z0: Vec<f64> },
}

impl SamplerSpec {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = SamplerSpec::UniformBall { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn cube(center: Vec<f64>, half_width: f64) -> Result<Self> {
        let s = SamplerSpec::UniformCube { center, half_width };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let s = SamplerSpec::Gaussian { mean, cov };
        s.validate()?;
        Ok(s)
    }

    pub fn point_mass(x: Vec<f64>) -> Result<Self> {
        let s = SamplerSpec::PointMass { x };
        s.validate()?;
        Ok(s)
    }

    pub fn translate(inner: SamplerSpec, z0: Vec<f64>) -> Result<Self> {
        let s = SamplerSpec::Translate { inner: Box::new(inner), z0 };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        match self {
            SamplerSpec::UniformBall { center, .. } | SamplerSpec::UniformCube { center, .. } => center.len(),
            SamplerSpec::Gaussian { mean, .. } => mean.len(),
            SamplerSpec::PointMass { x } => x.len(),
            SamplerSpec::Translate { inner, .. } => inner.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::usage("sampler dimension must be positive"));
        }
        match self {
            SamplerSpec::UniformBall { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(Error::usage(format!("ball radius must be positive, got {radius}")))
            }
            SamplerSpec::UniformCube { half_width, .. } if !(*half_width > 0.0 && half_width.is_finite()) => {
                Err(Error::usage(format!("cube half-width must be positive, got {half_width}")))
            }
            SamplerSpec::Gaussian { cov, .. } => {
                let m = cov_matrix(cov, d)?;
                let eig = SymmetricEigen::new(m);
                if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
                    return Err(Error::usage("covariance is not positive definite"));
                }
                Ok(())
            }
            SamplerSpec::Translate { inner, z0 } => {
                if z0.len() != inner.dim() {
                    return Err(Error::usage("translation vector has wrong dimension"));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// Equivalent sampler without `Translate` wrappers (same law; samples may differ by rounding).
    pub fn flatten(&self) -> SamplerSpec {
        match self {
            SamplerSpec::Translate { inner, z0 } => {
                let add = |v: &Vec<f64>| v.iter().zip(z0).map(|(a, b)| a + b).collect::<Vec<_>>();
                match inner.flatten() {
                    SamplerSpec::UniformBall { center, radius } => {
                        SamplerSpec::UniformBall { center: add(&center), radius }
                    }
                    SamplerSpec::UniformCube { center, half_width } => {
                        SamplerSpec::UniformCube { center: add(&center), half_width }
                    }
                    SamplerSpec::Gaussian { mean, cov } => SamplerSpec::Gaussian { mean: add(&mean), cov },
                    SamplerSpec::PointMass { x } => SamplerSpec::PointMass { x: add(&x) },
                    SamplerSpec::Translate { .. } => unreachable!("flatten removes translations"),
                }
            }
            other => other.clone(),
        }
    }

    /// Radius of the smallest centered ball containing the support, if bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self.flatten() {
            SamplerSpec::UniformBall { center, radius } => Some(norm2(&center) + radius),
            SamplerSpec::UniformCube { center, half_width } => {
                Some(norm2(&center) + half_width * (center.len() as f64).sqrt())
            }
            SamplerSpec::PointMass { x } => Some(norm2(&x)),
            _ => None,
        }
    }

    /// True for a compact sampler whose support leaves the unit ball.
    pub fn exceeds_unit_ball(&self) -> bool {
        self.support_radius().is_some_and(|r| r > 1.0)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Points {
        let d = self.dim();
        let mut out = Points::with_capacity(d, n);
        match self {
            SamplerSpec::UniformBall { center, radius } => {
                for _ in 0..n {
                    let dir = gaussian_direction(rng, d);
                    let u: f64 = rng.random();
                    let rho = radius * u.powf(1.0 / d as f64);
                    let x: Vec<f64> = center.iter().zip(&dir).map(|(c, v)| c + rho * v).collect();
                    out.push(&x).expect("dimension");
                }
            }
            SamplerSpec::UniformCube { center, half_width } => {
                for _ in 0..n {
                    let x: Vec<f64> = center
                        .iter()
                        .map(|c| c + half_width * (2.0 * rng.random::<f64>() - 1.0))
                        .collect();
                    out.push(&x).expect("dimension");
                }
            }
            SamplerSpec::Gaussian { mean, cov } => {
                let root = sym_sqrt(&cov_matrix(cov, d).expect("validated"));
                for _ in 0..n {
                    let xi = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
                    let y = &root * xi;
                    let x: Vec<f64> = mean.iter().zip(y.iter()).map(|(m, v)| m + v).collect();
                    out.push(&x).expect("dimension");
                }
            }
            SamplerSpec::PointMass { x } => {
                for _ in 0..n {
                    out.push(x).expect("dimension");
                }
            }
            SamplerSpec::Translate { inner, z0 } => {
                return inner.sample_with(n, rng).translated(z0);
            }
        }
        out
    }

    /// Parses the config syntax. `translate:mu;z0=...` refers to `mu`, which must be supplied.
    pub fn parse(text: &str, mu: Option<&SamplerSpec>) -> Result<Self> {
        let text = text.trim().trim_matches('"');
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::usage(format!("sampler `{text}`: expected `<kind>:<params>`")))?;
        let mut fields: Vec<(&str, &str)> = Vec::new();
        let mut base: Option<&str> = None;
        for tok in rest.split(';') {
            let tok = tok.trim();
            match tok.split_once('=') {
                Some((k, v)) => fields.push((k.trim(), v.trim())),
                None if kind == "translate" && base.is_none() => base = Some(tok),
                None => return Err(Error::usage(format!("sampler `{text}`: bad token `{tok}`"))),
            }
        }
        let get = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::usage(format!("sampler `{text}`: missing `{key}`")))
        };
        let allow = |keys: &[&str]| -> Result<()> {
            for (k, _) in &fields {
                if !keys.contains(k) {
                    return Err(Error::usage(format!("sampler `{text}`: unknown parameter `{k}`")));
                }
            }
            Ok(())
        };
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::usage(format!("sampler `{text}`: bad number `{v}`")))
        };
        match kind.trim() {
            "ball" => {
                allow(&["c", "r"])?;
                SamplerSpec::ball(parse_vec(get("c")?)?, num(get("r")?)?)
            }
            "cube" => {
                allow(&["c", "h"])?;
                SamplerSpec::cube(parse_vec(get("c")?)?, num(get("h")?)?)
            }
            "point" => {
                allow(&["x"])?;
                SamplerSpec::point_mass(parse_vec(get("x")?)?)
            }
            "gauss" => {
                allow(&["m", "cov"])?;
                let mean = parse_vec(get("m")?)?;
                let cov = parse_cov(get("cov")?, mean.len())?;
                SamplerSpec::gaussian(mean, cov)
            }
            "translate" => {
                allow(&["z0"])?;
                match base {
                    Some("mu") => {}
                    other => {
                        return Err(Error::usage(format!(
                            "sampler `{text}`: translate must reference `mu`, got `{}`",
                            other.unwrap_or("")
                        )))
                    }
                }
                let inner = mu
                    .ok_or_else(|| Error::usage("`translate:mu` used where `mu` is not defined"))?
                    .clone();
                SamplerSpec::translate(inner, parse_vec(get("z0")?)?)
            }
            other => Err(Error::usage(format!(
                "sampler `{text}`: unknown kind `{other}` (expected ball, cube, gauss, point or translate)"
            ))),
        }
    }

    /// Canonical config string.
    pub fn describe(&self) -> String {
        match self {
            SamplerSpec::UniformBall { center, radius } => format!("ball:c={};r={radius}", join(center)),
            SamplerSpec::UniformCube { center, half_width } => {
                format!("cube:c={};h={half_width}", join(center))
            }
            SamplerSpec::PointMass { x } => format!("point:x={}", join(x)),
            SamplerSpec::Gaussian { mean, cov } => {
                let d = mean.len();
                let identity = (0..d).all(|i| (0..d).all(|j| cov[i][j] == if i == j { 1.0 } else { 0.0 }));
                let cov_s = if identity {
                    "I".to_string()
                } else {
                    format!("full:{}", join(&cov.iter().flatten().copied().collect::<Vec<_>>()))
                };
                format!("gauss:m={};cov={cov_s}", join(mean))
            }
            SamplerSpec::Translate { z0, .. } => format!("translate:mu;z0={}", join(z0)),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::usage(format!("bad number `{}` in vector `{s}`", t.trim())))
        })
        .collect()
}

/// `I`, `<s>I`, `diag:a,b,...` or `full:<row-major entries>`.
fn parse_cov(s: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    let diag = |v: Vec<f64>| -> Vec<Vec<f64>> {
        (0..d).map(|i| (0..d).map(|j| if i == j { v[i] } else { 0.0 }).collect()).collect()
    };
    if let Some(rest) = s.strip_suffix('I') {
        let scale = if rest.is_empty() {
            1.0
        } else {
            rest.trim_end_matches('*')
                .parse::<f64>()
                .map_err(|_| Error::usage(format!("bad covariance scale in `{s}`")))?
        };
        return Ok(diag(vec![scale; d]));
    }
    if let Some(rest) = s.strip_prefix("diag:") {
        let v = parse_vec(rest)?;
        if v.len() != d {
            return Err(Error::usage(format!("diagonal covariance needs {d} entries")));
        }
        return Ok(diag(v));
    }
    if let Some(rest) = s.strip_prefix("full:") {
        let v = parse_vec(rest)?;
        if v.len() != d * d {
            return Err(Error::usage(format!("full covariance needs {} entries", d * d)));
        }
        return Ok(v.chunks(d).map(|r| r.to_vec()).collect());
    }
    Err(Error::usage(format!("covariance `{s}`: expected I, <s>I, diag:... or full:...")))
}

fn cov_matrix(cov: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if cov.len() != d || cov.iter().any(|r| r.len() != d) {
        return Err(Error::usage(format!("covariance must be {d}x{d}")));
    }
    let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
    let asym = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs())
        .fold(0.0, f64::max);
    if asym > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::usage("covariance is not symmetric"));
    }
    Ok(m)
}

/// Symmetric square root via eigendecomposition, flooring eigenvalues at 1e-12.
pub(crate) fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Uniform direction on the unit sphere, from a normalized Gaussian vector.
pub(crate) fn gaussian_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm2(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `n` i.i.d. draws with uniform weights, deterministic in `(s, n, seed)`.
pub fn sample(s: &SamplerSpec, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::usage("sample size must be at least 1"));
    }
    s.validate()?;
    let mut rng = rng::seeded(seed);
    DiscreteMeasure::uniform(s.sample_with(n, &mut rng))
}

// ---------------------------------------------------------------------------
// Ground-truth pairs

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    LocationFamily,
    GaussianQuadratic,
    IdenticalPair,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthPair {
    pub mu: SamplerSpec,
    pub nu: SamplerSpec,
    pub cost: CostSpec,
    pub exact_value: f64,
    pub provenance: Provenance,
    /// Non-fatal notes, e.g. a compact support leaving the unit ball.
    pub warnings: Vec<String>,
}

fn support_warnings(specs: &[&SamplerSpec]) -> Vec<String> {
    specs
        .iter()
        .filter(|s| s.exceeds_unit_ball())
        .map(|s| format!("support of `{}` leaves the unit ball; values are not rescaled", s.describe()))
        .collect()
}

/// `nu = mu + z0`; the translation coupling is optimal for convex `h`, so the value is `h(z0)`.
pub fn ground_truth_location(mu: &SamplerSpec, z0: &[f64], cost: &CostSpec) -> Result<GroundTruthPair> {
    mu.validate()?;
    if z0.len() != mu.dim() || cost.dim() != mu.dim() {
        return Err(Error::usage("location pair: dimensions of mu, z0 and cost must agree"));
    }
    // Both cost families are convex by construction; the Jensen argument needs nothing more.
    let nu = SamplerSpec::translate(mu.clone(), z0.to_vec())?;
    Ok(GroundTruthPair {
        warnings: support_warnings(&[mu, &nu]),
        exact_value: cost.h(z0),
        mu: mu.clone(),
        nu,
        cost: cost.clone(),
        provenance: Provenance::LocationFamily,
    })
}

/// Quadratic transport cost between two Gaussians.
pub fn ground_truth_gaussian_w2(
    m1: &[f64],
    cov1: &[Vec<f64>],
    m2: &[f64],
    cov2: &[Vec<f64>],
) -> Result<GroundTruthPair> {
    let d = m1.len();
    if m2.len() != d {
        return Err(Error::usage("Gaussian means have different dimensions"));
    }
    let mu = SamplerSpec::gaussian(m1.to_vec(), cov1.to_vec())?;
    let nu = SamplerSpec::gaussian(m2.to_vec(), cov2.to_vec())?;
    let s1 = cov_matrix(cov1, d)?;
    let s2 = cov_matrix(cov2, d)?;
    let r2 = sym_sqrt(&s2);
    let cross = sym_sqrt(&(&r2 * &s1 * &r2));
    let mean_term: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b) * (a - b)).sum();
    let exact = mean_term + s1.trace() + s2.trace() - 2.0 * cross.trace();
    Ok(GroundTruthPair {
        mu,
        nu,
        cost: CostSpec::quadratic(d),
        exact_value: exact.max(0.0),
        provenance: Provenance::GaussianQuadratic,
        warnings: Vec::new(),
    })
}

/// Two independent samples from the same law; the population cost is zero.
pub fn identical_pair(mu: &SamplerSpec, cost: &CostSpec) -> Result<GroundTruthPair> {
    mu.validate()?;
    if cost.dim() != mu.dim() {
        return Err(Error::usage("identical pair: dimensions of mu and cost must agree"));
    }
    Ok(GroundTruthPair {
        warnings: support_warnings(&[mu]),
        mu: mu.clone(),
        nu: mu.clone(),
        cost: cost.clone(),
        exact_value: 0.0,
        provenance: Provenance::IdenticalPair,
    })
}

/// Uniform balls of radius `eps` around `x0` and `y0`.
pub fn lb_construction(x0: &[f64], y0: &[f64], eps: f64, cost: &CostSpec) -> Result<GroundTruthPair> {
    if x0.len() != y0.len() {
        return Err(Error::usage("ball centers have different dimensions"));
    }
    let mu = SamplerSpec::ball(x0.to_vec(), eps)?;
    let z0: Vec<f64> = y0.iter().zip(x0).map(|(a, b)| a - b).collect();
    ground_truth_location(&mu, &z0, cost)
}

// ---------------------------------------------------------------------------
// Concentration metadata

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationMeta {
    pub sigma: f64,
    pub beta: f64,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationCertificate {
    /// Analytic certificate, when one is known for the sampler.
    pub meta: Option<ConcentrationMeta>,
    /// Monte-Carlo estimate of `E exp((||X|| / sigma)^beta / 2)` at the certified scale.
    pub integral: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Analytic sub-Weibull certificate plus a Monte-Carlo check of the defining integral.
pub fn concentration_certificate(s: &SamplerSpec, trials: usize, seed: u64) -> Result<ConcentrationCertificate> {
    if trials < 2 {
        return Err(Error::usage("need at least two Monte-Carlo trials"));
    }
    s.validate()?;
    let flat = s.flatten();
    let meta = match &flat {
        SamplerSpec::Gaussian { mean, cov } => {
            let d = mean.len();
            let m = cov_matrix(cov, d)?;
            let eig = SymmetricEigen::new(m.clone());
            let lmin = eig.eigenvalues.min();
            let inv = m.try_inverse().ok_or_else(|| Error::numerical("covariance is singular"))?;
            let gamma2 = (&inv * DVector::from_column_slice(mean)).norm();
            Some(ConcentrationMeta {
                sigma: gaussian_sigma(&eig, mean),
                beta: 2.0,
                gamma1: Some(1.0 / lmin),
                gamma2: Some(gamma2),
            })
        }
        SamplerSpec::PointMass { x } => {
            let r = norm2(x);
            let sigma = if r == 0.0 { 1.0 } else { r / (2.0 * std::f64::consts::LN_2).sqrt() };
            Some(ConcentrationMeta { sigma, beta: 2.0, gamma1: None, gamma2: None })
        }
        _ => flat.support_radius().map(|r| ConcentrationMeta {
            sigma: if r > 0.0 { r } else { 1.0 },
            beta: 2.0,
            gamma1: None,
            gamma2: None,
        }),
    };
    let (sigma, beta) = meta.as_ref().map(|m| (m.sigma, m.beta)).unwrap_or((1.0, 2.0));
    let pts = sample(s, trials, seed)?.points;
    let vals: Vec<f64> = pts.iter().map(|x| (0.5 * (norm2(x) / sigma).powf(beta)).exp()).collect();
    let (mean, se) = mean_and_se(&vals);
    Ok(ConcentrationCertificate { meta, integral: mean, std_error: se, trials })
}

/// Smallest `sigma` with `E exp(||X||^2 / (2 sigma^2)) <= 2` for `X ~ N(m, Sigma)`,
/// from the closed-form moment generating function of a Gaussian quadratic form.
fn gaussian_sigma(eig: &SymmetricEigen<f64, nalgebra::Dyn>, mean: &[f64]) -> f64 {
    let rotated = eig.eigenvectors.transpose() * DVector::from_column_slice(mean);
    let log_mgf = |t: f64| -> f64 {
        eig.eigenvalues
            .iter()
            .zip(rotated.iter())
            .map(|(&l, &m)| {
                let a = 1.0 - 2.0 * t * l;
                -0.5 * a.ln() + t * m * m / a
            })
            .sum()
    };
    let lmax = eig.eigenvalues.max();
    let (mut lo, mut hi) = (0.0, 0.5 / lmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_mgf(mid) <= std::f64::consts::LN_2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    1.0 / (2.0 * lo).sqrt()
}

pub(crate) fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
