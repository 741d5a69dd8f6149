//! Experiment configuration: a TOML file with flat sections, overridden by
//! command-line flags, resolved into a single [`Experiment`].

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hill_core::{Potential, Weight};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Potential used when neither the config file nor the flags name one.
pub const DEFAULT_POTENTIAL: &str = "power-law:amp=0.008,exp=-1,band=24";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub spec: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub s: Option<f64>,
    pub weight: Option<String>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub suite: Option<String>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub perturb_gap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub oracle: Option<f64>,
    pub drift: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow!("config {}: {e}", path.display()))
    }
}

/// Values given on the command line; each one overrides the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub potential: Option<String>,
    pub k: Option<usize>,
    pub s: Option<f64>,
    pub weight: Option<String>,
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub suite: Option<String>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub perturb_gap: Option<f64>,
}

/// Fully resolved settings. Its JSON form is what the config hash covers.
#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub potential: String,
    pub s: f64,
    pub weight: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: Option<f64>,
    pub t: f64,
    pub dt: Option<f64>,
    pub seed: u64,
    pub suite: String,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub perturb_gap: f64,
    pub oracle_tol: f64,
    pub drift_tol: f64,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Experiment {
    pub fn resolve(file: FileConfig, o: Overrides) -> Result<Self> {
        let exp = Experiment {
            potential: o.potential.or(file.potential.spec).unwrap_or_else(|| DEFAULT_POTENTIAL.to_string()),
            s: o.s.or(file.model.s).unwrap_or(0.0),
            weight: o.weight.or(file.model.weight).unwrap_or_else(|| "trivial".to_string()),
            k: o.k.or(file.model.k).unwrap_or(64),
            m: file.model.m,
            t: o.t.or(file.run.t).unwrap_or(0.01),
            dt: o.dt.or(file.run.dt),
            seed: o.seed.or(file.run.seed).unwrap_or(0),
            suite: o.suite.or(file.run.suite).unwrap_or_else(|| "all".to_string()),
            n_min: o.n_min.or(file.run.n_min),
            n_max: o.n_max.or(file.run.n_max),
            perturb_gap: o.perturb_gap.or(file.run.perturb_gap).unwrap_or(0.0),
            oracle_tol: file.tolerances.oracle.unwrap_or(1e-6),
            drift_tol: file.tolerances.drift.unwrap_or(1e-6),
            out: o.out.or(file.run.out).unwrap_or_else(|| PathBuf::from("out")),
        };
        exp.check()?;
        Ok(exp)
    }

    fn check(&self) -> Result<()> {
        if !self.s.is_finite() {
            bail!("model.s: must be finite, got {}", self.s);
        }
        if self.k < 16 {
            bail!("model.K: must be at least 16, got {}", self.k);
        }
        if let Some(m) = self.m {
            if !(m > 0.0 && m.is_finite()) {
                bail!("model.m: must be positive, got {m}");
            }
        }
        if !self.t.is_finite() {
            bail!("run.t: must be finite, got {}", self.t);
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                bail!("run.dt: must be positive, got {dt}");
            }
        }
        if let (Some(a), Some(b)) = (self.n_min, self.n_max) {
            if a == 0 || a > b {
                bail!("run.n_min: need 1 <= n_min <= n_max, got {a} and {b}");
            }
        }
        if !(self.perturb_gap.is_finite() && self.perturb_gap > -1.0) {
            bail!("run.perturb_gap: must be a finite relative change above -1, got {}", self.perturb_gap);
        }
        for (name, v) in [("tolerances.oracle", self.oracle_tol), ("tolerances.drift", self.drift_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name}: must be positive, got {v}");
            }
        }
        self.weight()?;
        self.potential()?;
        Ok(())
    }

    /// Reduction commands need `s` in `(-1/2, 0]`.
    pub fn check_reduction_class(&self) -> Result<()> {
        if !(self.s > -0.5 && self.s <= 0.0) {
            bail!("model.s: reduction needs s in (-1/2, 0], got {}", self.s);
        }
        Ok(())
    }

    pub fn weight(&self) -> Result<Weight> {
        parse_weight(&self.weight).map_err(|e| anyhow!("model.weight: {e}"))
    }

    pub fn potential(&self) -> Result<Potential> {
        let w = parse_weight(&self.weight).unwrap_or_default();
        parse_potential(&self.potential, self.s, &w, self.seed).map_err(|e| anyhow!("potential.spec: {e}"))
    }

    /// Lowercase hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&serde_json::to_value(self).expect("config serializes")).expect("json");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `trivial`, `poly:A` or `capped:A:EPS`.
pub fn parse_weight(spec: &str) -> Result<Weight> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let num = |s: &str| -> Result<f64> { s.trim().parse::<f64>().map_err(|_| anyhow!("'{s}' is not a number")) };
    let w = match parts.as_slice() {
        ["trivial"] => Weight::Trivial,
        ["poly", a] => Weight::polynomial(num(a)?)?,
        ["capped", a, eps] => hill_core::seq::cap_weight(&Weight::polynomial(num(a)?)?, num(eps)?)?,
        _ => bail!("unknown weight '{spec}' (expected trivial, poly:A or capped:A:EPS)"),
    };
    Ok(w)
}

fn params(body: &str) -> Result<Vec<(&str, &str)>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| anyhow!("expected key=value, got '{kv}'"))
        })
        .collect()
}

fn lookup<T: std::str::FromStr>(ps: &[(&str, &str)], key: &str, default: Option<T>) -> Result<T> {
    match ps.iter().find(|(k, _)| *k == key) {
        Some((_, v)) => v.parse::<T>().map_err(|_| anyhow!("parameter {key}: cannot parse '{v}'")),
        None => default.ok_or_else(|| anyhow!("missing parameter {key}")),
    }
}

fn only_keys(ps: &[(&str, &str)], allowed: &[&str]) -> Result<()> {
    match ps.iter().find(|(k, _)| !allowed.contains(k)) {
        Some((k, _)) => bail!("unknown parameter '{k}' (allowed: {})", allowed.join(", ")),
        None => Ok(()),
    }
}

/// Potential families, with indices `n` referring to the coefficient
/// `q_{2n}`:
///
/// - `zero`
/// - `single-mode:c=C` with `C` real or complex (`0.05`, `0.05+0.01i`)
/// - `power-law:amp=A,exp=E,band=B`
/// - `random:m=M,band=B` (uses `s`, the weight and the seed)
/// - `coeffs:1=0.3+0.1i,-1=0.3-0.1i,2=0.2`
pub fn parse_potential(spec: &str, s: f64, w: &Weight, seed: u64) -> Result<Potential> {
    let spec = spec.trim();
    let (family, body) = spec.split_once(':').unwrap_or((spec, ""));
    let q = match family {
        "zero" => {
            only_keys(&params(body)?, &[])?;
            Potential::zero(4)
        }
        "single-mode" => {
            let ps = params(body)?;
            only_keys(&ps, &["c"])?;
            Potential::single_mode(lookup::<Complex64>(&ps, "c", None)?)
        }
        "power-law" => {
            let ps = params(body)?;
            only_keys(&ps, &["amp", "exp", "band"])?;
            let band: usize = lookup(&ps, "band", None)?;
            if band == 0 {
                bail!("parameter band: must be positive");
            }
            Potential::power_law(lookup(&ps, "amp", None)?, lookup(&ps, "exp", None)?, band)
        }
        "random" => {
            let ps = params(body)?;
            only_keys(&ps, &["m", "band"])?;
            let band: usize = lookup(&ps, "band", None)?;
            let m: f64 = lookup(&ps, "m", None)?;
            if band == 0 || !(m > 0.0) {
                bail!("random potential needs band >= 1 and m > 0");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Potential::random_real(&mut rng, m, s, w, band)
        }
        "coeffs" => {
            let ps = params(body)?;
            let pairs = ps
                .iter()
                .map(|(k, v)| {
                    let n: i64 = k.parse().map_err(|_| anyhow!("index '{k}' is not an integer"))?;
                    if n == 0 {
                        bail!("index 0 is the mean, which must vanish");
                    }
                    let c: Complex64 = v.parse().map_err(|_| anyhow!("coefficient '{v}' is not a complex number"))?;
                    Ok((n, c))
                })
                .collect::<Result<Vec<_>>>()?;
            if pairs.is_empty() {
                bail!("coeffs needs at least one index=value pair");
            }
            Potential::from_modes(pairs)?
        }
        other => bail!("unknown family '{other}' (expected zero, single-mode, power-law, random or coeffs)"),
    };
    Ok(q)
}
