//! Flat `key = value` configuration. File values come first, CLI overrides
//! are applied afterwards in order; see `docs/config.md` for the keys.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::J2Rule;
use crate::model::ModelParams;
use crate::structure::ClassParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SminTail,
    CorankCensus,
    ZeroProb,
    PartitionCheck,
    ExpansionAudit,
    BoundsAudit,
    T23Anticoncentration,
    NetAudit,
    DistanceDiagnostic,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::SminTail,
        Experiment::CorankCensus,
        Experiment::ZeroProb,
        Experiment::PartitionCheck,
        Experiment::ExpansionAudit,
        Experiment::BoundsAudit,
        Experiment::T23Anticoncentration,
        Experiment::NetAudit,
        Experiment::DistanceDiagnostic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SminTail => "smin-tail",
            Experiment::CorankCensus => "corank-census",
            Experiment::ZeroProb => "zero-prob",
            Experiment::PartitionCheck => "partition-check",
            Experiment::ExpansionAudit => "expansion-audit",
            Experiment::BoundsAudit => "bounds-audit",
            Experiment::T23Anticoncentration => "t23-anticoncentration",
            Experiment::NetAudit => "net-audit",
            Experiment::DistanceDiagnostic => "distance-diagnostic",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// A deterministic matrix used in place of the Bernoulli sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedInput {
    Identity,
    Zeros,
    Ones,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelParams,
    pub class_params: ClassParams,
    pub trials: u64,
    /// Thread count; results do not depend on it, so it is not serialized.
    #[serde(skip, default = "one")]
    pub workers: usize,
    pub t_grid: Vec<f64>,
    /// Where the result goes; not part of the result itself.
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
    pub checkpoint_every: u64,
    pub fixed: Option<FixedInput>,
    pub tolerance_sigma: f64,
    pub c_hg: f64,
    pub c_rgz: f64,
    pub c_norm: f64,
    /// Monte Carlo samples for `P(Omega_RC^c)` when no exact route applies.
    pub rc_mc_samples: u64,
    pub audit_m1: usize,
    pub audit_j1: usize,
    pub audit_j2: usize,
    pub audit_r: f64,
    /// Conditioned samples for the expansion-lemma audit.
    pub audit_trials: u64,
    pub tail_m1: usize,
    pub tail_sizes: Vec<usize>,
    pub tail_t: f64,
    pub tail_trials: u64,
    pub d_trials: usize,
    pub j2_rule: J2Rule,
    pub net_point_cap: usize,
}

fn one() -> usize {
    1
}

/// 29 points, `10^-14 ..= 1`, half a decade apart.
pub fn default_t_grid() -> Vec<f64> {
    (0..29).map(|k| 10f64.powf(-14.0 + 0.5 * k as f64)).collect()
}

fn cfg_err(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key} = {value}`: {why}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| cfg_err(key, value, e))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// `0.01`, `log` (= ln(n)/n) or `1.5log`.
pub fn parse_p(value: &str, n: usize) -> Result<f64> {
    let v = value.trim();
    if let Some(c) = v.strip_suffix("log") {
        let c = c.trim().trim_end_matches('*');
        let c: f64 = if c.is_empty() { 1.0 } else { parse("p", c)? };
        return Ok(c * (n as f64).ln() / n as f64);
    }
    parse("p", v)
}

/// Read `key = value` lines; `#` starts a comment.
pub fn read_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    read_pairs(&std::fs::read_to_string(path)?)
}

impl ExperimentConfig {
    /// Build from ordered pairs; later pairs win. `experiment`, `n` and `p`
    /// are required.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let last = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let experiment: Experiment = last("experiment")
            .ok_or_else(|| Error::Config("missing `experiment`".into()))?
            .parse()?;
        let n: usize = parse("n", last("n").ok_or_else(|| Error::Config("missing `n`".into()))?)?;
        let p = parse_p(last("p").ok_or_else(|| Error::Config("missing `p`".into()))?, n)?;
        let beta: usize = last("beta").map(|v| parse("beta", v)).transpose()?.unwrap_or(1);
        let seed: u64 = last("seed").map(|v| parse("seed", v)).transpose()?.unwrap_or(0);
        let model = ModelParams::new(n, p, beta, seed).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = Self::new(experiment, model);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn new(experiment: Experiment, model: ModelParams) -> Self {
        Self {
            experiment,
            model,
            class_params: ClassParams::defaults(model.beta),
            trials: 1000,
            workers: 1,
            t_grid: default_t_grid(),
            output_path: None,
            checkpoint_every: 10_000,
            fixed: None,
            tolerance_sigma: 3.0,
            c_hg: 2.0,
            c_rgz: 1.0,
            c_norm: 3.0,
            rc_mc_samples: 100_000,
            audit_m1: 400,
            audit_j1: 8,
            audit_j2: 24,
            audit_r: 12.0,
            audit_trials: 100_000,
            tail_m1: 200,
            tail_sizes: vec![10, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3],
            tail_t: 6.0,
            tail_trials: 100_000,
            d_trials: 64,
            j2_rule: J2Rule::Plain,
            net_point_cap: 1_000_000,
        }
    }

    /// Apply one key. Model keys are consumed by [`Self::from_pairs`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let cp = &mut self.class_params;
        match key {
            "experiment" | "n" | "p" | "beta" | "seed" => {}
            "trials" => self.trials = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "t_grid" => self.t_grid = parse_list(key, value)?,
            "out" | "output_path" => self.output_path = Some(PathBuf::from(value)),
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            "fixed" => {
                self.fixed = match value {
                    "none" => None,
                    "identity" => Some(FixedInput::Identity),
                    "zeros" => Some(FixedInput::Zeros),
                    "ones" => Some(FixedInput::Ones),
                    _ => return Err(cfg_err(key, value, "expected none|identity|zeros|ones")),
                }
            }
            "tolerance_sigma" => self.tolerance_sigma = parse(key, value)?,
            "c_hg" => self.c_hg = parse(key, value)?,
            "c_rgz" => {
                self.c_rgz = parse(key, value)?;
                cp.c_rgz = self.c_rgz;
            }
            "c_norm" => self.c_norm = parse(key, value)?,
            "rc_mc_samples" => self.rc_mc_samples = parse(key, value)?,
            "audit_m1" => self.audit_m1 = parse(key, value)?,
            "audit_j1" => self.audit_j1 = parse(key, value)?,
            "audit_j2" => self.audit_j2 = parse(key, value)?,
            "audit_r" => self.audit_r = parse(key, value)?,
            "tail_m1" => self.tail_m1 = parse(key, value)?,
            "tail_sizes" => self.tail_sizes = parse_list(key, value)?,
            "tail_t" => self.tail_t = parse(key, value)?,
            "tail_trials" => self.tail_trials = parse(key, value)?,
            "audit_trials" => self.audit_trials = parse(key, value)?,
            "d_trials" => self.d_trials = parse(key, value)?,
            "j2_rule" => {
                self.j2_rule = match value {
                    "plain" => J2Rule::Plain,
                    "third" => J2Rule::Third,
                    _ => return Err(cfg_err(key, value, "expected plain|third")),
                }
            }
            "net_point_cap" => self.net_point_cap = parse(key, value)?,
            "gamma" => cp.gamma = parse(key, value)?,
            "c_t1" => cp.c_t1 = parse(key, value)?,
            "c_t2" => cp.c_t2 = parse(key, value)?,
            "r" => cp.r = parse(key, value)?,
            "delta" => cp.delta = parse(key, value)?,
            "rho" => cp.rho = parse(key, value)?,
            "phi" => cp.phi = parse(key, value)?,
            "phi0" => cp.phi0 = parse(key, value)?,
            "k_threshold" => cp.k_threshold = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.trials < 1 {
            return bad("trials must be at least 1");
        }
        if self.workers < 1 {
            return bad("workers must be at least 1");
        }
        if self.checkpoint_every < 1 {
            return bad("checkpoint_every must be at least 1");
        }
        if self.t_grid.iter().any(|t| !(*t >= 0.0)) || self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("t_grid must be nonnegative and increasing");
        }
        if !(self.tolerance_sigma > 0.0) {
            return bad("tolerance_sigma must be positive");
        }
        self.class_params
            .validate(self.model.beta)
            .map_err(|e| Error::Config(e.to_string()))
    }
}
