//! Lower-bound constructions: lattice packings of a ball and the random
//! bijection gadget whose transport value is sandwiched by divergences of a
//! reweighting `q` from the uniform distribution.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::costs::CostSpec;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::points::Points;
use crate::report::fmt_f64;
use crate::rng;
use crate::solver::solve_general;

/// Radius of the default packing ball, centered at the origin.
pub const GADGET_RADIUS: f64 = 0.5;

const MAX_LATTICE_NODES: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PackingSet {
    pub points: Points,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Lattice pitch; every pairwise distance is at least this.
    pub separation: f64,
    /// `separation * m^{1/d}`, the construction's grid constant.
    pub grid_constant: f64,
}

fn lattice_nodes(center: &[f64], radius: f64, k: usize, limit: usize) -> Points {
    let d = center.len();
    let pitch = 2.0 * radius / k as f64;
    let offsets: Vec<f64> = (0..k).map(|i| -radius + (i as f64 + 0.5) * pitch).collect();
    let mut out = Points::new(d);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut sq = 0.0;
        for a in 0..d {
            sq += offsets[idx[a]] * offsets[idx[a]];
        }
        if sq <= radius * radius * (1.0 + 1e-12) {
            for a in 0..d {
                x[a] = center[a] + offsets[idx[a]];
            }
            out.push(&x).expect("dimension matches");
            if out.len() == limit {
                return out;
            }
        }
        // Lexicographic odometer.
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < k {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// The first `m` nodes, in lexicographic order, of the coarsest cell-centred
/// lattice in the ball that has at least `m` nodes.
pub fn packing_set(center: &[f64], radius: f64, m: usize) -> Result<PackingSet> {
    let d = center.len();
    if m == 0 || d == 0 {
        return Err(Error::usage("packing needs m >= 1 and a positive dimension"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::usage(format!("packing radius must be positive, got {radius}")));
    }
    let mut k = 1usize;
    loop {
        let total = (k as f64).powi(d as i32);
        if total > MAX_LATTICE_NODES as f64 {
            return Err(Error::usage(format!("m = {m} needs too fine a lattice in dimension {d}")));
        }
        let points = lattice_nodes(center, radius, k, m);
        if points.len() == m {
            let separation = 2.0 * radius / k as f64;
            return Ok(PackingSet {
                points,
                center: center.to_vec(),
                radius,
                separation,
                grid_constant: separation * (m as f64).powf(1.0 / d as f64),
            });
        }
        k += 1;
    }
}

/// Reweightings of the uniform distribution on `[m]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QFamily {
    Uniform,
    /// Symmetric Dirichlet with concentration `alpha` (random per seed).
    Dirichlet(f64),
    /// Atom 0 gets `mass`, the rest share `1 - mass` evenly.
    Spike(f64),
    /// First half of the atoms get `(1 + 2 tv)/m`, second half `(1 - 2 tv)/m`;
    /// for even `m` this has total variation exactly `tv` and chi-square `4 tv^2`.
    Split(f64),
}

impl QFamily {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "uniform" {
            return Ok(QFamily::Uniform);
        }
        let (name, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::usage(format!("q family `{text}`: expected uniform, dirichlet:<a>, spike:<mass> or split:<tv>")))?;
        let v: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("q family `{text}`: `{arg}` is not a number")))?;
        let fam = match name.trim() {
            "dirichlet" => QFamily::Dirichlet(v),
            "spike" => QFamily::Spike(v),
            "split" => QFamily::Split(v),
            other => return Err(Error::usage(format!("unknown q family `{other}`"))),
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            QFamily::Uniform => true,
            QFamily::Dirichlet(a) => a > 0.0 && a.is_finite(),
            QFamily::Spike(s) => (0.0..=1.0).contains(&s),
            QFamily::Split(t) => (0.0..=0.5).contains(&t),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::usage(format!("q family parameter out of range: {self:?}")))
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            QFamily::Uniform => "uniform".into(),
            QFamily::Dirichlet(a) => format!("dirichlet:{}", fmt_f64(a)),
            QFamily::Spike(s) => format!("spike:{}", fmt_f64(s)),
            QFamily::Split(t) => format!("split:{}", fmt_f64(t)),
        }
    }

    /// A distribution on `[m]`; only the Dirichlet family uses `seed`.
    pub fn draw(&self, m: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        if m == 0 {
            return Err(Error::usage("q needs m >= 1"));
        }
        let u = 1.0 / m as f64;
        let q = match *self {
            QFamily::Uniform => vec![u; m],
            QFamily::Dirichlet(alpha) => {
                let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::usage(e.to_string()))?;
                let mut rng = rng::stream(seed, &[m as u64, 1]);
                let g: Vec<f64> = (0..m).map(|_| gamma.sample(&mut rng)).collect();
                let total: f64 = g.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::numerical("Dirichlet draw underflowed"));
                }
                g.iter().map(|x| x / total).collect()
            }
            QFamily::Spike(mass) => {
                if m == 1 {
                    vec![1.0]
                } else {
                    let rest = (1.0 - mass) / (m - 1) as f64;
                    (0..m).map(|j| if j == 0 { mass } else { rest }).collect()
                }
            }
            QFamily::Split(tv) => {
                let half = m / 2;
                (0..m)
                    .map(|j| {
                        if j < half {
                            (1.0 + 2.0 * tv) * u
                        } else if j >= m - half {
                            (1.0 - 2.0 * tv) * u
                        } else {
                            u
                        }
                    })
                    .collect()
            }
        };
        Ok(q)
    }
}

/// `(TV(q, u), chi2(q, u))` against the uniform distribution on `[m]`.
pub fn divergences(q: &[f64]) -> (f64, f64) {
    let m = q.len() as f64;
    let u = 1.0 / m;
    let tv = 0.5 * q.iter().map(|x| (x - u).abs()).sum::<f64>();
    let chi2 = m * q.iter().map(|x| (x - u) * (x - u)).sum::<f64>();
    (tv, chi2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetResult {
    pub m: usize,
    pub q: Vec<f64>,
    pub tv: f64,
    pub chi2: f64,
    pub value: f64,
    pub value_minus_h: f64,
    pub seed: u64,
}

/// Gadget on the default packing of the ball of radius [`GADGET_RADIUS`].
pub fn minimax_gadget(m: usize, q: &[f64], z0: &[f64], cost: &CostSpec, seed: u64) -> Result<GadgetResult> {
    let packing = packing_set(&vec![0.0; cost.dim()], GADGET_RADIUS, m)?;
    minimax_gadget_on(&packing, q, z0, cost, seed)
}

/// Transport value between `{(F(j), q_j)}` and `{(F(j) + z0, 1/m)}` for a
/// seeded uniformly random bijection `F` from `[m]` onto the packing.
pub fn minimax_gadget_on(
    packing: &PackingSet,
    q: &[f64],
    z0: &[f64],
    cost: &CostSpec,
    seed: u64,
) -> Result<GadgetResult> {
    let m = packing.points.len();
    if q.len() != m {
        return Err(Error::usage(format!("q has {} entries but the packing has {m} points", q.len())));
    }
    if z0.len() != cost.dim() || packing.points.dim() != cost.dim() {
        return Err(Error::usage("z0, packing and cost dimensions differ"));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng::stream(seed, &[m as u64, 0]));
    let sites = packing.points.permuted(&perm);
    let mu = DiscreteMeasure::new(sites.clone(), q.to_vec())?;
    let nu = DiscreteMeasure::uniform(sites.translated(z0))?;
    let plan = solve_general(&mu, &nu, cost)?;
    let (tv, chi2) = divergences(q);
    Ok(GadgetResult {
        m,
        q: q.to_vec(),
        tv,
        chi2,
        value: plan.value,
        value_minus_h: plan.value - cost.h(z0),
        seed,
    })
}

/// Gadgets over `seeds` for each `m`; results ordered by `(m, seed)`.
pub fn gadget_sweep(ms: &[usize], family: QFamily, z0: &[f64], cost: &CostSpec, seeds: &[u64]) -> Result<Vec<GadgetResult>> {
    let tasks: Vec<(usize, u64)> = ms.iter().flat_map(|&m| seeds.iter().map(move |&s| (m, s))).collect();
    tasks
        .par_iter()
        .map(|&(m, seed)| {
            let q = family.draw(m, seed)?;
            minimax_gadget(m, &q, z0, cost, seed)
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Log-log slope of the median `value_minus_h` against `m`.
pub fn median_slope(results: &[GadgetResult]) -> Result<f64> {
    let mut ms: Vec<usize> = results.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    if ms.len() < 2 {
        return Err(Error::usage("a slope needs at least two values of m"));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &m in &ms {
        let mut v: Vec<f64> = results.iter().filter(|r| r.m == m).map(|r| r.value_minus_h).collect();
        let med = median(&mut v);
        if !(med > 0.0) {
            return Err(Error::usage(format!("median value_minus_h is not positive at m = {m}")));
        }
        x.push((m as f64).ln());
        y.push(med.ln());
    }
    Ok(crate::rates::ols_slope(&x, &y))
}

pub fn gadget_csv(results: &[GadgetResult]) -> String {
    let mut out = String::from("m,seed,tv,chi2,value_minus_h\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.m,
            r.seed,
            fmt_f64(r.tv),
            fmt_f64(r.chi2),
            fmt_f64(r.value_minus_h)
        ));
    }
    out
}
