//! INI-style experiment configuration: `key = value` lines under a single
//! `[experiment]` header. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use crate::costs::CostSpec;
use crate::error::{Error, Result};
use crate::measures::{
    ground_truth_gaussian_w2, ground_truth_location, identical_pair, GroundTruthPair, SamplerSpec,
};
use crate::rates::{ExperimentConfig, Metric};
use crate::report::fmt_f64;

pub const SECTION: &str = "experiment";

/// One accepted key, its default (`None` when required or optional without a
/// default) and a one-line description.
pub struct KeySpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const KEYS: &[KeySpec] = &[
    KeySpec { name: "cost", default: None, help: "cost, `power:p=<f>,r=<f>` or `smooth:p=<f>,eps=<f>` (required)" },
    KeySpec { name: "mu", default: None, help: "source sampler, e.g. `ball:c=0,0;r=0.25` or `gauss:m=0,0;cov=I` (required)" },
    KeySpec { name: "nu", default: None, help: "target sampler; `translate:mu;z0=...` or a Gaussian (with a quadratic cost)" },
    KeySpec { name: "pair", default: None, help: "ground truth: `location:z0=...`, `identical`, or `gaussian` (inferred from nu if absent)" },
    KeySpec { name: "n_grid", default: Some("128,256,512,1024,2048"), help: "strictly increasing sample sizes" },
    KeySpec { name: "reps", default: Some("100"), help: "replications per sample size" },
    KeySpec { name: "seed", default: Some("0"), help: "master seed" },
    KeySpec { name: "metric", default: Some("cost"), help: "`cost` or `wasserstein:p=<f>,delta0=<f>`" },
    KeySpec { name: "threads", default: Some("0"), help: "worker threads, 0 for all cores; never changes results" },
    KeySpec { name: "bootstrap", default: Some("1000"), help: "bootstrap resamples for the slope interval" },
    KeySpec { name: "experiment_id", default: Some("0"), help: "stream key separating experiments that share a seed" },
    KeySpec { name: "diag_n", default: Some("256"), help: "sample size for diagnostic plans" },
    KeySpec { name: "diag_plans", default: Some("20"), help: "number of diagnostic plans" },
    KeySpec { name: "triples", default: Some("10000"), help: "random pairs per semiconcavity check" },
    KeySpec { name: "region_radius", default: Some("1"), help: "radius of the centred ball used by semiconcavity checks" },
    KeySpec { name: "probes", default: Some("1000"), help: "probe points per superdifferential growth check" },
    KeySpec { name: "superdiff_r", default: Some("4"), help: "outer radius of the superdifferential growth check (>= 4)" },
    KeySpec { name: "displacement_grid", default: Some("128,512,2048"), help: "sample sizes for the displacement profile" },
];

/// How the population value of the pair is known.
#[derive(Clone, Debug, PartialEq)]
pub enum PairSpec {
    Location { z0: Vec<f64> },
    Identical,
    /// Quadratic cost between `mu` and this Gaussian target.
    Gaussian { nu: SamplerSpec },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub cost: CostSpec,
    pub mu: SamplerSpec,
    pub pair: PairSpec,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub metric: Metric,
    pub threads: usize,
    pub bootstrap: usize,
    pub experiment_id: u64,
    pub diag_n: usize,
    pub diag_plans: usize,
    pub triples: usize,
    pub region_radius: f64,
    pub probes: usize,
    pub superdiff_r: f64,
    pub displacement_grid: Vec<usize>,
}

impl RunConfig {
    pub fn ground_truth(&self) -> Result<GroundTruthPair> {
        match &self.pair {
            PairSpec::Location { z0 } => ground_truth_location(&self.mu, z0, &self.cost),
            PairSpec::Identical => identical_pair(&self.mu, &self.cost),
            PairSpec::Gaussian { nu } => {
                if !self.cost.is_quadratic() {
                    return Err(Error::usage("the Gaussian closed form needs cost = power:p=2,r=2"));
                }
                match (&self.mu, nu) {
                    (
                        SamplerSpec::Gaussian { mean: m1, cov: c1 },
                        SamplerSpec::Gaussian { mean: m2, cov: c2 },
                    ) => ground_truth_gaussian_w2(m1, c1, m2, c2),
                    _ => Err(Error::usage("pair = gaussian needs Gaussian mu and nu")),
                }
            }
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            pair: self.ground_truth()?,
            n_grid: self.n_grid.clone(),
            reps: self.reps,
            master_seed: self.seed,
            metric: self.metric,
            threads: self.threads,
            experiment_id: self.experiment_id,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text with every key materialized; parses back to `self`.
    pub fn to_ini(&self) -> String {
        let mut out = format!("[{SECTION}]\n");
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("cost", self.cost.describe());
        put("mu", self.mu.describe());
        match &self.pair {
            PairSpec::Location { z0 } => put("pair", format!("location:z0={}", join_f(z0))),
            PairSpec::Identical => put("pair", "identical".into()),
            PairSpec::Gaussian { nu } => {
                put("nu", nu.describe());
                put("pair", "gaussian".into());
            }
        }
        put("n_grid", join_u(&self.n_grid));
        put("reps", self.reps.to_string());
        put("seed", self.seed.to_string());
        put(
            "metric",
            match self.metric {
                Metric::CostUnits => "cost".into(),
                Metric::Wasserstein { p, delta0 } => format!("wasserstein:p={},delta0={}", fmt_f64(p), fmt_f64(delta0)),
            },
        );
        put("threads", self.threads.to_string());
        put("bootstrap", self.bootstrap.to_string());
        put("experiment_id", self.experiment_id.to_string());
        put("diag_n", self.diag_n.to_string());
        put("diag_plans", self.diag_plans.to_string());
        put("triples", self.triples.to_string());
        put("region_radius", fmt_f64(self.region_radius));
        put("probes", self.probes.to_string());
        put("superdiff_r", fmt_f64(self.superdiff_r));
        put("displacement_grid", join_u(&self.displacement_grid));
        out
    }
}

fn join_f(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn join_u(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Nearest accepted key by edit distance.
pub fn nearest_key(name: &str) -> &'static str {
    KEYS.iter()
        .min_by_key(|k| strsim::levenshtein(name, k.name))
        .map(|k| k.name)
        .expect("key registry is nonempty")
}

/// Help text listing every accepted key.
pub fn keys_help() -> String {
    let mut out = String::from("Config keys (INI, one [experiment] section):\n");
    for k in KEYS {
        let default = k.default.map(|d| format!(" [default: {d}]")).unwrap_or_default();
        let _ = writeln!(out, "  {:<18} {}{}", k.name, k.help, default);
    }
    out
}

pub fn parse_config_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io_at(path, e))?;
    parse_config(&text)
}

struct Entry {
    line: usize,
    key: &'static str,
    value: String,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut header_line = None;
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        let err = |msg: String| Error::Config { line, msg };
        if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            if name.trim() != SECTION {
                return Err(err(format!("unknown section `[{}]`; only [{SECTION}] is accepted", name.trim())));
            }
            if header_line.is_some() {
                return Err(err(format!("duplicate [{SECTION}] section")));
            }
            header_line = Some(line);
            continue;
        }
        if header_line.is_none() {
            return Err(err(format!("`{s}` appears before the [{SECTION}] header")));
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{s}`")))?;
        let k = k.trim();
        let spec = KEYS.iter().find(|spec| spec.name == k).ok_or_else(|| {
            err(format!("unknown key `{k}`; did you mean `{}`?", nearest_key(k)))
        })?;
        if entries.iter().any(|e| e.key == spec.name) {
            return Err(err(format!("duplicate key `{k}`")));
        }
        let v = v.trim();
        let v = v.strip_prefix('"').and_then(|r| r.strip_suffix('"')).unwrap_or(v);
        entries.push(Entry { line, key: spec.name, value: v.to_string() });
    }
    let header_line = header_line.ok_or(Error::Config { line: 1, msg: format!("missing [{SECTION}] section") })?;

    let find = |key: &str| entries.iter().find(|e| e.key == key);
    let required = |key: &str| {
        find(key).ok_or_else(|| Error::Config { line: header_line, msg: format!("missing required key `{key}`") })
    };
    let with_line = |e: &Entry, r: Error| match r {
        Error::Config { .. } => r,
        other => Error::Config { line: e.line, msg: format!("`{}`: {}", e.key, strip_kind(&other)) },
    };
    // Typed lookup of `key`, falling back to the registry default.
    fn value_of<'a>(entries: &'a [Entry], key: &str) -> (Option<usize>, &'a str) {
        match entries.iter().find(|e| e.key == key) {
            Some(e) => (Some(e.line), e.value.as_str()),
            None => (
                None,
                KEYS.iter().find(|k| k.name == key).and_then(|k| k.default).expect("defaulted key"),
            ),
        }
    }
    let typed = |key: &str| -> (usize, String) {
        let (line, v) = value_of(&entries, key);
        (line.unwrap_or(header_line), v.to_string())
    };
    let parse_usize = |key: &str| -> Result<usize> {
        let (line, v) = typed(key);
        v.parse().map_err(|_| Error::Config { line, msg: format!("`{key}`: `{v}` is not a nonnegative integer") })
    };
    let parse_u64 = |key: &str| -> Result<u64> {
        let (line, v) = typed(key);
        v.parse().map_err(|_| Error::Config { line, msg: format!("`{key}`: `{v}` is not a 64-bit seed") })
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        let (line, v) = typed(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Config { line, msg: format!("`{key}`: `{v}` is not a finite number") })
    };
    let parse_grid = |key: &str| -> Result<Vec<usize>> {
        let (line, v) = typed(key);
        v.split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Config { line, msg: format!("`{key}`: `{v}` is not a comma-separated list of integers") })
    };

    let mu_e = required("mu")?;
    let mu = SamplerSpec::parse(&mu_e.value, None).map_err(|e| with_line(mu_e, e))?;
    let cost_e = required("cost")?;
    let cost = CostSpec::parse(&cost_e.value, mu.dim()).map_err(|e| with_line(cost_e, e))?;
    let nu = match find("nu") {
        Some(e) => Some((e, SamplerSpec::parse(&e.value, Some(&mu)).map_err(|err| with_line(e, err))?)),
        None => None,
    };
    let pair = match find("pair") {
        Some(e) => {
            let v = e.value.trim();
            let p = if v == "identical" {
                PairSpec::Identical
            } else if v == "gaussian" {
                match &nu {
                    Some((_, nu)) => PairSpec::Gaussian { nu: nu.clone() },
                    None => return Err(Error::Config { line: e.line, msg: "pair = gaussian needs a `nu` key".into() }),
                }
            } else if let Some(z) = v.strip_prefix("location:z0=") {
                PairSpec::Location { z0: crate::measures::parse_vec(z).map_err(|err| with_line(e, err))? }
            } else {
                return Err(Error::Config {
                    line: e.line,
                    msg: format!("`pair`: `{v}` is not location:z0=..., identical or gaussian"),
                });
            };
            if let Some((ne, nu)) = &nu {
                let implied = match &p {
                    PairSpec::Location { z0 } => SamplerSpec::Translate { inner: Box::new(mu.clone()), z0: z0.clone() },
                    PairSpec::Identical => mu.clone(),
                    PairSpec::Gaussian { nu } => nu.clone(),
                };
                if *nu != implied {
                    return Err(Error::Config { line: ne.line, msg: "`nu` contradicts `pair`".into() });
                }
            }
            p
        }
        None => match &nu {
            None => {
                return Err(Error::Config { line: header_line, msg: "one of `nu` or `pair` is required".into() })
            }
            Some((_, SamplerSpec::Translate { inner, z0 })) if **inner == mu => PairSpec::Location { z0: z0.clone() },
            Some((_, g @ SamplerSpec::Gaussian { .. })) if matches!(mu, SamplerSpec::Gaussian { .. }) => {
                PairSpec::Gaussian { nu: g.clone() }
            }
            Some((_, other)) if *other == mu => PairSpec::Identical,
            Some((e, _)) => {
                return Err(Error::Config {
                    line: e.line,
                    msg: "no closed-form value for this (mu, nu); use translate:mu, an identical law, or Gaussians".into(),
                })
            }
        },
    };

    let metric = {
        let (line, v) = typed("metric");
        parse_metric(&v).map_err(|msg| Error::Config { line, msg })?
    };
    let cfg = RunConfig {
        cost,
        mu,
        pair,
        n_grid: parse_grid("n_grid")?,
        reps: parse_usize("reps")?,
        seed: parse_u64("seed")?,
        metric,
        threads: parse_usize("threads")?,
        bootstrap: parse_usize("bootstrap")?,
        experiment_id: parse_u64("experiment_id")?,
        diag_n: parse_usize("diag_n")?,
        diag_plans: parse_usize("diag_plans")?,
        triples: parse_usize("triples")?,
        region_radius: parse_f64("region_radius")?,
        probes: parse_usize("probes")?,
        superdiff_r: parse_f64("superdiff_r")?,
        displacement_grid: parse_grid("displacement_grid")?,
    };
    // Surface dimension and ground-truth problems with a line number.
    if let Err(e) = cfg.ground_truth() {
        let line = find("pair").or(find("nu")).map(|e| e.line).unwrap_or(header_line);
        return Err(Error::Config { line, msg: strip_kind(&e) });
    }
    Ok(cfg)
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Usage(m) | Error::Domain(m) | Error::Numerical(m) => m.clone(),
        other => other.to_string(),
    }
}

fn parse_metric(v: &str) -> std::result::Result<Metric, String> {
    let v = v.trim();
    if v == "cost" {
        return Ok(Metric::CostUnits);
    }
    let rest = v
        .strip_prefix("wasserstein:")
        .ok_or_else(|| format!("`metric`: `{v}` is not `cost` or `wasserstein:p=<f>,delta0=<f>`"))?;
    let mut p = None;
    let mut delta0 = None;
    for tok in rest.split(',') {
        let (k, x) = tok.split_once('=').ok_or_else(|| format!("`metric`: bad token `{tok}`"))?;
        let x: f64 = x.trim().parse().map_err(|_| format!("`metric`: `{x}` is not a number"))?;
        match k.trim() {
            "p" => p = Some(x),
            "delta0" => delta0 = Some(x),
            other => return Err(format!("`metric`: unknown parameter `{other}`")),
        }
    }
    match (p, delta0) {
        (Some(p), Some(delta0)) => Ok(Metric::Wasserstein { p, delta0 }),
        _ => Err("`metric`: wasserstein needs both p and delta0".into()),
    }
}
