//! Experiment orchestration, persistence and reporting.

pub mod checkpoint;
pub mod config;
pub mod experiments;
pub mod report;
pub mod stats;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{default_t_grid, Experiment, ExperimentConfig, FixedInput};

use crate::error::{Error, Result};
use crate::model::{hex, MatrixSample};
use crate::spectral::rank::certified_rank;

pub const RESULT_FORMAT: u32 = 1;

/// One compared statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub name: String,
    pub n: usize,
    pub p: f64,
    pub beta: usize,
    pub empirical: f64,
    pub stderr: f64,
    pub prediction: Option<f64>,
    pub bound: Option<f64>,
    /// The rule used for `pass`, e.g. `3 sigma` or `<= bound`.
    pub tolerance: String,
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `(x, y, yerr)` columns for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yerr: Vec<f64>,
}

/// The deterministic implication: at least `beta` zero rows or columns
/// forces corank at least `beta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorankCheck {
    pub matrices: u64,
    pub antecedent: u64,
    pub exceptions: u64,
}

impl CorankCheck {
    pub fn merge(self, o: Self) -> Self {
        Self {
            matrices: self.matrices + o.matrices,
            antecedent: self.antecedent + o.antecedent,
            exceptions: self.exceptions + o.exceptions,
        }
    }
}

/// Check the implication on one matrix. `known_corank` avoids recomputing
/// an exact corank that the experiment already has.
pub fn corank_guard(a: &MatrixSample, beta: usize, known_corank: Option<usize>) -> CorankCheck {
    let antecedent = a.zero_rows() >= beta || a.zero_cols() >= beta;
    let mut c = CorankCheck {
        matrices: 1,
        ..Default::default()
    };
    if antecedent {
        c.antecedent = 1;
        let corank = known_corank.unwrap_or_else(|| a.n() - certified_rank(a).0);
        if corank < beta {
            c.exceptions = 1;
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub purpose: String,
    pub seed: u64,
    pub first_stream: u64,
    pub count: u64,
}

/// Every `(seed, stream)` range consumed, plus a chained SHA-256 over the
/// content hashes of the sampled matrices in stream order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLedger {
    pub entries: Vec<LedgerEntry>,
    pub matrices: u64,
    pub matrix_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub format: u32,
    pub config: ExperimentConfig,
    pub records: Vec<StatRecord>,
    pub series: Vec<Series>,
    pub corank_check: CorankCheck,
    pub seed_ledger: SeedLedger,
}

impl RunResult {
    /// No record failed and the corank implication had no exceptions.
    pub fn passed(&self) -> bool {
        self.corank_check.exceptions == 0 && self.records.iter().all(|r| r.pass != Some(false))
    }

    pub fn record(&self, name: &str) -> Option<&StatRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// What a kernel returns for one trial.
pub(crate) struct TrialOut<O> {
    pub out: O,
    /// Content hash of the sampled matrix, if one was sampled.
    pub hash: Option<String>,
    pub corank: CorankCheck,
}

pub(crate) struct Finished {
    pub records: Vec<StatRecord>,
    pub series: Vec<Series>,
    /// Streams consumed outside the per-trial loop.
    pub extra_ledger: Vec<LedgerEntry>,
}

/// Per-trial work plus an order-independent accumulator. Trials are keyed
/// by stream id, so any scheduling gives the same outputs; outputs are
/// folded in stream order so floating sums are reproducible too.
pub(crate) trait Kernel: Sync {
    type Out: Send;
    type Acc: Serialize + DeserializeOwned;

    /// Number of trial units (defaults to `trials`).
    fn units(&self) -> u64;
    fn init(&self) -> Self::Acc;
    fn trial(&self, stream: u64) -> Result<TrialOut<Self::Out>>;
    fn absorb(&self, acc: &mut Self::Acc, out: Self::Out);
    fn finish(&self, acc: &Self::Acc) -> Result<Finished>;
    fn unit_purpose(&self) -> &'static str {
        "trial"
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Progress {
    pub done: u64,
    pub acc: serde_json::Value,
    pub digest: String,
    pub matrices: u64,
    pub corank: CorankCheck,
    pub complete: bool,
}

/// Execution options that do not change the result.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub checkpoint: Option<PathBuf>,
    /// Stop (leaving a checkpoint) once this many units are done.
    pub stop_after: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Complete(RunResult),
    /// Stopped early by `stop_after`; the checkpoint holds `done` units.
    Interrupted { done: u64 },
    /// Resumed a checkpoint that had already finished.
    AlreadyComplete(RunResult),
}

impl RunOutcome {
    pub fn result(&self) -> Option<&RunResult> {
        match self {
            RunOutcome::Complete(r) | RunOutcome::AlreadyComplete(r) => Some(r),
            RunOutcome::Interrupted { .. } => None,
        }
    }
}

fn chain(digest: &mut [u8; 32], hash: &str) {
    let mut h = Sha256::new();
    h.update(*digest);
    h.update(hash.as_bytes());
    digest.copy_from_slice(&h.finalize());
}

fn parse_digest(s: &str) -> Result<[u8; 32]> {
    let mut out = [0u8; 32];
    if s.len() != 64 {
        return Err(Error::Checkpoint("bad digest length".into()));
    }
    for (i, b) in out.iter_mut().enumerate() {
        *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
            .map_err(|_| Error::Checkpoint("bad digest".into()))?;
    }
    Ok(out)
}

fn drive<K: Kernel>(k: &K, cfg: &ExperimentConfig, opts: &RunOptions, start: Option<Progress>) -> Result<RunOutcome> {
    let units = k.units();
    let (mut done, mut acc, mut digest, mut matrices, mut corank) = match start {
        Some(pr) => (
            pr.done,
            serde_json::from_value::<K::Acc>(pr.acc)?,
            parse_digest(&pr.digest)?,
            pr.matrices,
            pr.corank,
        ),
        None => (0, k.init(), [0u8; 32], 0, CorankCheck::default()),
    };
    let chunk = cfg.checkpoint_every.max(1);
    let save = |done: u64, acc: &K::Acc, digest: &[u8; 32], matrices: u64, corank: CorankCheck, complete: bool| -> Result<()> {
        if let Some(path) = &opts.checkpoint {
            let pr = Progress {
                done,
                acc: serde_json::to_value(acc)?,
                digest: hex(digest),
                matrices,
                corank,
                complete,
            };
            checkpoint::write(path, cfg, &pr)?;
        }
        Ok(())
    };
    while done < units {
        if let Some(limit) = opts.stop_after {
            if done >= limit {
                save(done, &acc, &digest, matrices, corank, false)?;
                return Ok(RunOutcome::Interrupted { done });
            }
        }
        let hi = (done + chunk).min(units);
        let outs: Vec<TrialOut<K::Out>> = (done..hi)
            .into_par_iter()
            .map(|s| k.trial(s))
            .collect::<Result<_>>()?;
        for t in outs {
            if let Some(h) = &t.hash {
                chain(&mut digest, h);
                matrices += 1;
            }
            corank = corank.merge(t.corank);
            k.absorb(&mut acc, t.out);
        }
        done = hi;
        if done < units {
            save(done, &acc, &digest, matrices, corank, false)?;
        }
    }
    let fin = k.finish(&acc)?;
    save(done, &acc, &digest, matrices, corank, true)?;
    let mut entries = vec![LedgerEntry {
        purpose: k.unit_purpose().into(),
        seed: cfg.model.seed,
        first_stream: 0,
        count: units,
    }];
    entries.extend(fin.extra_ledger);
    let mut records = fin.records;
    if matrices > 0 {
        let r = corank.exceptions;
        records.push(StatRecord {
            name: "corank_implication_exceptions".into(),
            n: cfg.model.n,
            p: cfg.model.p,
            beta: cfg.model.beta,
            empirical: r as f64,
            stderr: 0.0,
            prediction: Some(0.0),
            bound: Some(0.0),
            tolerance: "exact".into(),
            pass: Some(r == 0),
            note: Some(format!("{} of {} matrices met the antecedent", corank.antecedent, corank.matrices)),
        });
    }
    Ok(RunOutcome::Complete(RunResult {
        format: RESULT_FORMAT,
        config: cfg.clone(),
        records,
        series: fin.series,
        corank_check: corank,
        seed_ledger: SeedLedger {
            entries,
            matrices,
            matrix_digest: (matrices > 0).then(|| hex(&digest)),
        },
    }))
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn dispatch(cfg: &ExperimentConfig, opts: &RunOptions, start: Option<Progress>) -> Result<RunOutcome> {
    with_pool(cfg.workers, || experiments::run_kernel(cfg, opts, start))
}

/// Run an experiment to completion (no checkpoint).
pub fn run(cfg: &ExperimentConfig) -> Result<RunResult> {
    match run_with(cfg, &RunOptions::default())? {
        RunOutcome::Complete(r) | RunOutcome::AlreadyComplete(r) => Ok(r),
        RunOutcome::Interrupted { .. } => unreachable!("no stop requested"),
    }
}

pub fn run_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    dispatch(cfg, opts, None)
}

/// Continue from a checkpoint. `expect`, when given, must match the stored
/// configuration (worker count and output path excepted).
pub fn resume(path: &Path, expect: Option<&ExperimentConfig>, workers: usize, stop_after: Option<u64>) -> Result<(ExperimentConfig, RunOutcome)> {
    let (mut cfg, pr) = checkpoint::read(path)?;
    if let Some(e) = expect {
        if serde_json::to_value(e)? != serde_json::to_value(&cfg)? {
            return Err(Error::Config("configuration differs from the checkpoint".into()));
        }
        cfg.output_path = e.output_path.clone();
    }
    cfg.workers = workers.max(1);
    let opts = RunOptions {
        checkpoint: Some(path.to_path_buf()),
        stop_after,
    };
    if pr.complete {
        return match dispatch(&cfg, &RunOptions::default(), Some(pr))? {
            RunOutcome::Complete(r) => Ok((cfg, RunOutcome::AlreadyComplete(r))),
            other => Ok((cfg, other)),
        };
    }
    let out = dispatch(&cfg, &opts, Some(pr))?;
    Ok((cfg, out))
}

/// The configuration stored in a checkpoint.
pub fn checkpoint_config(path: &Path) -> Result<ExperimentConfig> {
    Ok(checkpoint::read(path)?.0)
}

/// Regenerate every sampled matrix named in the ledger and compare the
/// chained digest.
pub fn replay_ledger(result: &RunResult) -> Result<bool> {
    let Some(expected) = &result.seed_ledger.matrix_digest else {
        return Ok(true);
    };
    let hashes = with_pool(result.config.workers, || experiments::replay_hashes(&result.config))?;
    let mut digest = [0u8; 32];
    for h in &hashes {
        chain(&mut digest, h);
    }
    Ok(&hex(&digest) == expected && hashes.len() as u64 == result.seed_ledger.matrices)
}
