//! The nine experiment kernels, plus the deterministic grids and case
//! generators they use.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{proportion, Tally};
use super::{
    corank_guard, drive, ExperimentConfig, Finished, FixedInput, Kernel, LedgerEntry, Progress, RunOptions,
    RunOutcome, Series, StatRecord, TrialOut,
};
use crate::error::{precondition, Result};
use crate::expansion::{check_events, expansion_lemma_audit, expansion_tail_experiment, DAuditConfig, EventTally, EVENT_NAMES};
use crate::harness::config::Experiment;
use crate::model::{sample_bernoulli, stream_rng, MatrixSample};
use crate::probability::{
    binomial_tail, hypergeometric_tail, indiv_q_value, levy_sorted, prob_omega_rc_complement,
    prob_zero_rowcol_asymptotic, prob_zero_rowcol_exact, rogozin_bound_weighted, RcMethod, TailSide,
    EXACT_ZERO_MAX_N,
};
use crate::spectral::rank::certified_rank;
use crate::spectral::{column_distance, fast_order_statistic, singular_values};
use crate::structure::{
    classifier_for, net_cover_check, sample_t2_prime, ClassTag, Classifier, CoverTarget, GrowthFunction, Witness,
};

/// Seed offsets for streams used outside the per-trial matrices.
const VECTOR_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
const RC_SEED: u64 = 0x5851_f42d_4c95_7f2d;
const AUDIT_SEED: u64 = 0x2545_f491_4f6c_dd1d;
const TAIL_SEED: u64 = 0x1405_7b7e_f767_814f;
const EVENT_SEED: u64 = 0xd6e8_feb8_6659_fd93;

fn aux_seed(seed: u64, offset: u64) -> u64 {
    seed ^ offset
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
}

impl Ctx<'_> {
    fn matrix(&self, stream: u64) -> MatrixSample {
        let n = self.cfg.model.n;
        match self.cfg.fixed {
            Some(FixedInput::Identity) => MatrixSample::identity(n),
            Some(FixedInput::Zeros) => MatrixSample::zeros(n),
            Some(FixedInput::Ones) => MatrixSample::ones(n),
            None => sample_bernoulli(&self.cfg.model, stream),
        }
    }

    fn rec(&self, name: impl Into<String>, empirical: f64, stderr: f64) -> StatRecord {
        StatRecord {
            name: name.into(),
            n: self.cfg.model.n,
            p: self.cfg.model.p,
            beta: self.cfg.model.beta,
            empirical,
            stderr,
            prediction: None,
            bound: None,
            tolerance: "none".into(),
            pass: None,
            note: None,
        }
    }

    fn sigma(&self) -> f64 {
        self.cfg.tolerance_sigma
    }

    /// `P(Omega_RC^c)` with the streams it used, if any.
    fn rc_prediction(&self) -> Result<(f64, f64, Option<LedgerEntry>)> {
        let m = &self.cfg.model;
        if self.cfg.fixed.is_some() {
            return Ok((f64::NAN, 0.0, None));
        }
        let seed = aux_seed(m.seed, RC_SEED);
        let rc = prob_omega_rc_complement(m.n, m.p, m.beta, self.cfg.rc_mc_samples, seed)?;
        Ok(match rc.method {
            RcMethod::Exact => (rc.value, 0.0, None),
            RcMethod::MonteCarlo { samples, stderr } => (
                rc.value,
                stderr,
                Some(LedgerEntry {
                    purpose: "omega-rc-monte-carlo".into(),
                    seed,
                    first_stream: 0,
                    count: samples,
                }),
            ),
        })
    }

    fn hashed<O>(&self, a: &MatrixSample, out: O, known_corank: Option<usize>) -> TrialOut<O> {
        TrialOut {
            out,
            hash: Some(a.content_hash()),
            corank: corank_guard(a, self.cfg.model.beta, known_corank),
        }
    }
}

fn plain<O>(out: O) -> TrialOut<O> {
    TrialOut {
        out,
        hash: None,
        corank: Default::default(),
    }
}

/// Upper-tail check: `empirical <= bound`.
fn upper(mut r: StatRecord, bound: f64) -> StatRecord {
    r.bound = Some(bound);
    r.tolerance = "<= bound".into();
    r.pass = Some(r.empirical <= bound);
    r
}

// ---------------------------------------------------------------- smin-tail

/// Fixed probe threshold for the tail-dominance comparison.
const T_STAR: f64 = 1e-12;

struct SminTail<'a>(Ctx<'a>);

#[derive(Serialize, Deserialize)]
struct SminAcc {
    le: Vec<u64>,
    le_star: u64,
    zero: u64,
    trials: u64,
}

impl Kernel for SminTail<'_> {
    type Out = (f64, Option<usize>);
    type Acc = SminAcc;

    fn units(&self) -> u64 {
        self.0.cfg.trials
    }

    fn init(&self) -> SminAcc {
        SminAcc {
            le: vec![0; self.0.cfg.t_grid.len()],
            le_star: 0,
            zero: 0,
            trials: 0,
        }
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<Self::Out>> {
        let a = self.0.matrix(stream);
        let f = fast_order_statistic(&a, self.0.cfg.model.beta)?;
        Ok(self.0.hashed(&a, (f.value, f.corank), f.corank))
    }

    fn absorb(&self, acc: &mut SminAcc, (s, _): Self::Out) {
        acc.trials += 1;
        for (c, &t) in acc.le.iter_mut().zip(&self.0.cfg.t_grid) {
            *c += (s <= t) as u64;
        }
        acc.le_star += (s <= T_STAR) as u64;
        acc.zero += (s == 0.0) as u64;
    }

    fn finish(&self, acc: &SminAcc) -> Result<Finished> {
        let c = &self.0;
        let mut records = Vec::new();
        let mut series = Series {
            name: "P(s <= t)".into(),
            x: c.cfg.t_grid.clone(),
            y: vec![],
            yerr: vec![],
        };
        for (&t, &k) in c.cfg.t_grid.iter().zip(&acc.le) {
            let (e, se) = proportion(k, acc.trials);
            series.y.push(e);
            series.yerr.push(se);
            records.push(c.rec(format!("P(s_min <= {t:e})"), e, se));
        }
        let (zero, zse) = proportion(acc.zero, acc.trials);
        records.push(c.rec("P(s_min = 0)", zero, zse));
        let (e, se) = proportion(acc.le_star, acc.trials);
        let mut r = c.rec(format!("tail_dominance(t={T_STAR:e})"), e, se);
        let (omega, ose, entry) = c.rc_prediction()?;
        if omega.is_finite() {
            let k = c.sigma();
            r.prediction = Some(omega);
            r.bound = Some(2.5 * omega);
            r.tolerance = format!("omega - {k} sigma <= empirical <= 2.5 omega");
            r.pass = Some(e + k * (se * se + ose * ose).sqrt() >= omega && e <= 2.5 * omega);
            r.note = Some(format!("prediction is P(Omega_RC^c) for beta = {}", c.cfg.model.beta));
        }
        records.push(r);
        Ok(Finished {
            records,
            series: vec![series],
            extra_ledger: entry.into_iter().collect(),
        })
    }
}

// ---------------------------------------------------------- corank-census

struct CorankCensus<'a>(Ctx<'a>);

impl Kernel for CorankCensus<'_> {
    type Out = usize;
    type Acc = Vec<u64>;

    fn units(&self) -> u64 {
        self.0.cfg.trials
    }

    fn init(&self) -> Vec<u64> {
        vec![0; self.0.cfg.model.n + 1]
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<usize>> {
        let a = self.0.matrix(stream);
        let corank = a.n() - certified_rank(&a).0;
        Ok(self.0.hashed(&a, corank, Some(corank)))
    }

    fn absorb(&self, acc: &mut Vec<u64>, corank: usize) {
        acc[corank] += 1;
    }

    fn finish(&self, acc: &Vec<u64>) -> Result<Finished> {
        let c = &self.0;
        let total: u64 = acc.iter().sum();
        let beta = c.cfg.model.beta;
        let mut records = Vec::new();
        for (k, &h) in acc.iter().enumerate() {
            if h > 0 || k <= beta {
                let (e, se) = proportion(h, total);
                records.push(c.rec(format!("P(corank = {k})"), e, se));
            }
        }
        let ge: u64 = acc[beta..].iter().sum();
        let (e, se) = proportion(ge, total);
        let mut r = c.rec(format!("P(corank >= {beta})"), e, se);
        let (omega, ose, entry) = c.rc_prediction()?;
        if omega.is_finite() {
            let k = c.sigma();
            r.prediction = Some(omega);
            r.tolerance = format!("empirical >= omega - {k} sigma");
            r.pass = Some(e + k * (se * se + ose * ose).sqrt() >= omega);
            r.note = Some(format!(
                "ratio to P(Omega_RC^c) = {}",
                if omega > 0.0 { e / omega } else { f64::NAN }
            ));
        }
        records.push(r);
        let series = Series {
            name: "P(corank = k)".into(),
            x: (0..acc.len()).map(|k| k as f64).collect(),
            y: acc.iter().map(|&h| proportion(h, total).0).collect(),
            yerr: acc.iter().map(|&h| proportion(h, total).1).collect(),
        };
        Ok(Finished {
            records,
            series: vec![series],
            extra_ledger: entry.into_iter().collect(),
        })
    }
}

// --------------------------------------------------------------- zero-prob

struct ZeroProb<'a>(Ctx<'a>);

impl Kernel for ZeroProb<'_> {
    type Out = (bool, bool);
    type Acc = (Tally, Tally);

    fn units(&self) -> u64 {
        self.0.cfg.trials
    }

    fn init(&self) -> Self::Acc {
        Default::default()
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<(bool, bool)>> {
        let a = self.0.matrix(stream);
        let (zr, zc) = (a.zero_rows(), a.zero_cols());
        let beta = self.0.cfg.model.beta;
        Ok(self.0.hashed(&a, (zr > 0 || zc > 0, zr.max(zc) >= beta), None))
    }

    fn absorb(&self, acc: &mut Self::Acc, (z, rc): (bool, bool)) {
        acc.0 = acc.0.merge(Tally::one(z));
        acc.1 = acc.1.merge(Tally::one(rc));
    }

    fn finish(&self, acc: &Self::Acc) -> Result<Finished> {
        let c = &self.0;
        let m = &c.cfg.model;
        let k = c.sigma();
        let mut records = Vec::new();
        let (e, se) = acc.0.estimate();
        let mut r = c.rec("P(zero row or column)", e, se);
        if c.cfg.fixed.is_none() && m.n <= EXACT_ZERO_MAX_N {
            let exact = prob_zero_rowcol_exact(m.n, m.p)?;
            r.prediction = Some(exact);
            r.tolerance = format!("|empirical - exact| <= {k} sigma");
            r.pass = Some((e - exact).abs() <= k * se);
        }
        records.push(r);
        let mut r = c.rec("zero_rowcol_asymptotic", prob_zero_rowcol_asymptotic(m.n, m.p), 0.0);
        r.note = Some("1 - (1 - (1-p)^n)^(2n)".into());
        records.push(r);
        let (e, se) = acc.1.estimate();
        let mut r = c.rec(format!("P(Omega_RC^c), beta = {}", m.beta), e, se);
        let (omega, ose, entry) = c.rc_prediction()?;
        if omega.is_finite() {
            r.prediction = Some(omega);
            r.tolerance = format!("|empirical - prediction| <= {k} sigma");
            r.pass = Some((e - omega).abs() <= k * (se * se + ose * ose).sqrt());
        }
        records.push(r);
        Ok(Finished {
            records,
            series: vec![],
            extra_ledger: entry.into_iter().collect(),
        })
    }
}

// --------------------------------------------------------- partition-check

pub const FAMILIES: [&str; 4] = ["uniform", "sparse-spiky", "near-constant", "power-law"];

/// Test vector from family `trial % 4`.
pub fn family_vector(family: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
    match family {
        0 => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        1 => {
            let mut x: Vec<f64> = (0..n).map(|_| 1e-3 * rng.random_range(-1.0..1.0)).collect();
            let k = rng.random_range(1..=(n / 10).max(1));
            for _ in 0..k {
                let i = rng.random_range(0..n);
                x[i] = sign(rng) * 10f64.powf(rng.random_range(0.0..6.0));
            }
            x
        }
        2 => {
            let level = sign(rng) * 10f64.powf(rng.random_range(-3.0..3.0));
            let flips = rng.random_range(0..=(n / 50));
            let mut x: Vec<f64> = (0..n).map(|_| level * (1.0 + 0.01 * rng.random_range(-1.0..1.0))).collect();
            for _ in 0..flips {
                let i = rng.random_range(0..n);
                x[i] = -x[i];
            }
            x
        }
        _ => {
            let alpha = rng.random_range(0.0..3.0);
            let mut x: Vec<f64> = (1..=n).map(|i| sign(rng) * (i as f64).powf(-alpha)).collect();
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                x.swap(i, j);
            }
            x
        }
    }
}

struct PartitionCheck<'a> {
    c: Ctx<'a>,
    clf: Classifier,
}

#[derive(Serialize, Deserialize)]
struct PartitionAcc {
    per_family: [Tally; 4],
    /// zero, steep, gradual, r-vector, counterexample
    kinds: [u64; 5],
    first_failure: Option<String>,
}

impl Kernel for PartitionCheck<'_> {
    type Out = (usize, usize, Option<String>);
    type Acc = PartitionAcc;

    fn units(&self) -> u64 {
        self.c.cfg.trials
    }

    fn init(&self) -> PartitionAcc {
        PartitionAcc {
            per_family: Default::default(),
            kinds: [0; 5],
            first_failure: None,
        }
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<Self::Out>> {
        let fam = (stream % 4) as usize;
        let mut rng = stream_rng(aux_seed(self.c.cfg.model.seed, VECTOR_SEED), stream);
        let x = family_vector(fam, self.c.cfg.model.n, &mut rng);
        let w = self.clf.partition_witness(&x);
        let kind = match &w {
            Witness::Zero => 0,
            Witness::Steep { .. } => 1,
            Witness::Gradual { .. } => 2,
            Witness::Rvector { .. } => 3,
            Witness::Counterexample { .. } => 4,
        };
        let why = match w {
            Witness::Counterexample { reason } => Some(format!("stream {stream} ({}): {reason}", FAMILIES[fam])),
            _ => None,
        };
        Ok(plain((fam, kind, why)))
    }

    fn absorb(&self, acc: &mut PartitionAcc, (fam, kind, why): Self::Out) {
        acc.per_family[fam] = acc.per_family[fam].merge(Tally::one(kind != 4));
        acc.kinds[kind] += 1;
        if acc.first_failure.is_none() {
            acc.first_failure = why;
        }
    }

    fn finish(&self, acc: &PartitionAcc) -> Result<Finished> {
        let mut records = Vec::new();
        for (name, t) in FAMILIES.iter().zip(&acc.per_family) {
            let (e, se) = t.estimate();
            let mut r = self.c.rec(format!("partition_success[{name}]"), e, se);
            r.prediction = Some(1.0);
            r.tolerance = "exact (every vector classified)".into();
            r.pass = Some(t.hits == t.trials);
            records.push(r);
        }
        for (name, &k) in ["zero", "steep", "gradual", "r-vector", "counterexample"].iter().zip(&acc.kinds) {
            records.push(self.c.rec(format!("witness_count[{name}]"), k as f64, 0.0));
        }
        if let Some(f) = &acc.first_failure {
            if let Some(last) = records.last_mut() {
                last.note = Some(f.clone());
            }
        }
        Ok(Finished {
            records,
            series: vec![],
            extra_ledger: vec![LedgerEntry {
                purpose: "test-vectors".into(),
                seed: aux_seed(self.c.cfg.model.seed, VECTOR_SEED),
                first_stream: 0,
                count: self.c.cfg.trials,
            }],
        })
    }

    fn unit_purpose(&self) -> &'static str {
        "vector"
    }
}

// --------------------------------------------------------- expansion-audit

struct ExpansionAudit<'a>(Ctx<'a>);

impl Kernel for ExpansionAudit<'_> {
    type Out = EventTally;
    type Acc = EventTally;

    fn units(&self) -> u64 {
        self.0.cfg.trials
    }

    fn init(&self) -> EventTally {
        EventTally::default()
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<EventTally>> {
        let c = &self.0;
        let m = &c.cfg.model;
        let a = c.matrix(stream);
        let audit = DAuditConfig {
            trials_per_range: c.cfg.d_trials,
            seed: aux_seed(m.seed, EVENT_SEED),
            j2_rule: c.cfg.j2_rule,
            ..Default::default()
        };
        let rep = check_events(&a, m.p, &c.cfg.class_params, m.beta, c.cfg.c_norm, &audit, stream)?;
        Ok(c.hashed(&a, EventTally::one(&rep), None))
    }

    fn absorb(&self, acc: &mut EventTally, out: EventTally) {
        *acc = acc.merge(out);
    }

    fn finish(&self, acc: &EventTally) -> Result<Finished> {
        let c = &self.0;
        let m = &c.cfg.model;
        let mut records = Vec::new();
        for (name, t) in EVENT_NAMES.iter().zip(&acc.counts) {
            if t.trials == 0 {
                continue;
            }
            let (e, se) = t.estimate();
            records.push(c.rec(format!("P({name})"), e, se));
        }
        let o1 = acc.counts[0];
        if o1.trials > 0 {
            let (e, se) = proportion(o1.trials - o1.hits, o1.trials);
            let bound = 10.0 * (-2.0 * m.p * m.n as f64).exp();
            let mut r = upper(c.rec("P(omega_1^c)", e, se), bound);
            r.note = Some("bound is 10 exp(-2pn)".into());
            records.push(r);
        }
        let b = vec![c.cfg.audit_r.round() as usize; c.cfg.audit_j2];
        let audit_seed = aux_seed(m.seed, AUDIT_SEED);
        let la = expansion_lemma_audit(c.cfg.audit_m1, c.cfg.audit_j1, &b, c.cfg.audit_r, c.cfg.audit_trials, c.cfg.c_hg, audit_seed)?;
        let mut r = upper(c.rec("expansion_lemma", la.empirical, la.stderr), la.bound);
        r.note = Some(format!(
            "m1={}, |J1|={}, |J2|={}, r={}; hypothesis r >= {:.3} {}",
            la.m1,
            la.j1,
            la.j2,
            la.r,
            la.hypothesis_rhs,
            if la.hypothesis_satisfied { "holds" } else { "violated (bound vacuous)" }
        ));
        records.push(r);
        let tail_seed = aux_seed(m.seed, TAIL_SEED);
        let te = expansion_tail_experiment(c.cfg.tail_m1, &c.cfg.tail_sizes, c.cfg.tail_trials, c.cfg.tail_t, c.cfg.c_hg, tail_seed)?;
        let mut r = upper(c.rec("expansion_overlap_tail", te.empirical, te.stderr), te.bound);
        r.note = Some(format!("m1={}, sizes={:?}, t={}", c.cfg.tail_m1, c.cfg.tail_sizes, c.cfg.tail_t));
        records.push(r);
        Ok(Finished {
            records,
            series: vec![],
            extra_ledger: vec![
                LedgerEntry {
                    purpose: "omega-d-audit".into(),
                    seed: aux_seed(m.seed, EVENT_SEED),
                    first_stream: 0,
                    count: c.cfg.trials,
                },
                LedgerEntry {
                    purpose: "expansion-lemma".into(),
                    seed: audit_seed,
                    first_stream: 0,
                    count: c.cfg.audit_trials,
                },
                LedgerEntry {
                    purpose: "overlap-tail".into(),
                    seed: tail_seed,
                    first_stream: 0,
                    count: c.cfg.tail_trials,
                },
            ],
        })
    }
}

// ------------------------------------------------------------ bounds-audit

pub const WEIGHT_TYPES: [&str; 5] = ["ones", "uniform", "linear", "geometric", "spiky"];
pub const WEIGHT_LENGTHS: [usize; 4] = [8, 32, 128, 512];
pub const ROGOZIN_P: [f64; 2] = [0.1, 0.3];
pub const LAMBDA_FACTORS: [f64; 4] = [1.01, 1.5, 3.0, 6.0];

pub fn weight_vector(kind: usize, len: usize, seed: u64) -> Vec<f64> {
    match kind {
        0 => vec![1.0; len],
        1 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ len as u64);
            (0..len).map(|_| rng.random_range(0.5..1.5)).collect()
        }
        2 => (1..=len).map(|i| i as f64 / len as f64).collect(),
        3 => (0..len).map(|i| 0.8f64.powi(i as i32)).collect(),
        _ => {
            let mut v = vec![1.0; len];
            v[0] = 4.0;
            v
        }
    }
}

/// `(weights, p)` for case `c` of the 40 Rogozin cases.
pub fn rogozin_case(c: usize, seed: u64) -> (String, Vec<f64>, f64) {
    let pi = c % ROGOZIN_P.len();
    let v = c / ROGOZIN_P.len();
    let kind = v % WEIGHT_TYPES.len();
    let len = WEIGHT_LENGTHS[v / WEIGHT_TYPES.len()];
    let p = ROGOZIN_P[pi];
    (format!("{}/{len}/p={p}", WEIGHT_TYPES[kind]), weight_vector(kind, len, seed), p)
}

pub fn rogozin_case_count() -> usize {
    WEIGHT_TYPES.len() * WEIGHT_LENGTHS.len() * ROGOZIN_P.len()
}

/// `sums` draws of `sum x_i xi_i`, `xi_i ~ Bernoulli(p)`, from one stream.
pub fn bernoulli_sums(x: &[f64], p: f64, sums: u64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let log_q = (-p).ln_1p();
    let len = x.len();
    (0..sums)
        .map(|_| {
            let mut s = 0.0;
            let mut pos = 0usize;
            loop {
                let u: f64 = 1.0 - rng.random::<f64>();
                let gap = (u.ln() / log_q).floor();
                if gap >= (len - pos) as f64 {
                    break;
                }
                pos += gap as usize;
                s += x[pos];
                pos += 1;
                if pos >= len {
                    break;
                }
            }
            s
        })
        .collect()
}

struct BoundsAudit<'a>(Ctx<'a>);

#[derive(Serialize, Deserialize)]
struct RogozinCase {
    label: String,
    /// `(lambda, Q, bound)` per grid factor.
    rows: Vec<(f64, f64, f64)>,
}

/// Binomial tail grid: points, violations and the largest `exact / bound`.
pub fn binomial_grid() -> (u64, u64, f64) {
    let ns = [10u64, 20, 30, 50, 75, 100, 150, 200, 300, 500, 1000, 2000, 5000, 10000, 20000];
    let ps = [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
    let mut pts = Vec::new();
    for &n in &ns {
        for &p in &ps {
            let pn = p * n as f64;
            let mut ups: Vec<u64> = [2.0, 2.2, 2.5, 3.0, 4.0, 5.0, 7.0, 10.0]
                .iter()
                .map(|f| (f * pn).ceil() as u64)
                .filter(|&k| k <= n)
                .collect();
            ups.dedup();
            let mut lows: Vec<u64> = [0.5, 0.45, 0.4, 0.3, 0.25, 0.15, 0.1, 0.0]
                .iter()
                .map(|f| (f * pn).floor() as u64)
                .collect();
            lows.dedup();
            pts.extend(ups.into_iter().map(|k| (n, p, k, TailSide::Upper)));
            pts.extend(lows.into_iter().map(|k| (n, p, k, TailSide::Lower)));
        }
    }
    let res: Vec<Option<(f64, f64)>> = pts
        .par_iter()
        .map(|&(n, p, k, side)| binomial_tail(n, p, k, side).ok().map(|b| (b.exact, b.bound)))
        .collect();
    grid_summary(&res)
}

/// A point fails when it errors or `exact > bound`; both may underflow to 0.
fn grid_summary(res: &[Option<(f64, f64)>]) -> (u64, u64, f64) {
    let bad = res.iter().filter(|r| !matches!(r, Some((e, b)) if e <= b)).count() as u64;
    let worst = res
        .iter()
        .flatten()
        .filter(|(_, b)| *b > 0.0)
        .map(|(e, b)| e / b)
        .fold(0.0, f64::max);
    (res.len() as u64, bad, worst)
}

pub fn hypergeometric_grid(c_hg: f64) -> (u64, u64, f64) {
    let ns = [20u64, 30, 50, 100, 200, 300, 500, 1000, 2000, 3000, 5000, 10000];
    let mfr = [0.05, 0.1, 0.25, 0.5];
    let kfr = [0.1, 0.5, 1.0];
    let ls = [1u64, 2, 3, 4, 5, 7, 10, 15, 20, 30, 50];
    let mut pts = Vec::new();
    for &n in &ns {
        for &mf in &mfr {
            let m = ((mf * n as f64) as u64).max(1);
            for &kf in &kfr {
                let k = ((kf * m as f64) as u64).max(1);
                for &l in ls.iter().filter(|&&l| l <= k.min(m)) {
                    pts.push((n, m, k, l));
                }
            }
        }
    }
    let res: Vec<Option<(f64, f64)>> = pts
        .par_iter()
        .map(|&(n, m, k, l)| {
            let h = hypergeometric_tail(n, m, k, l, c_hg).ok()?;
            Some((h.exact, h.bound?))
        })
        .collect();
    grid_summary(&res)
}

/// Growth-function contract at the configured `(n, p)`: returns
/// `(monotone violations, product violations, b_n, b_n cap)`.
pub fn growth_contract(g: &GrowthFunction, n: usize, p: f64) -> (u64, u64, f64, f64) {
    let nf = n as f64;
    let ts: Vec<f64> = (0..200).map(|i| nf.powf(i as f64 / 199.0)).collect();
    let mut bad = 0u64;
    for &t in &ts {
        let gt = g.eval(t).unwrap_or(f64::NAN);
        for a in 2..=64 {
            let a = a as f64;
            if !(g.eval(a * t).unwrap_or(f64::NAN) >= gt + a) {
                bad += 1;
            }
        }
    }
    let pp = g.partial_products(200);
    let pbad = pp.iter().filter(|&&v| !(v <= g.k3 * (1.0 + 1e-12))).count() as u64;
    let cap = nf.powf(1.3) * (p * nf).powi(7);
    (bad, pbad, g.b_n, cap)
}

impl Kernel for BoundsAudit<'_> {
    type Out = RogozinCase;
    type Acc = Vec<RogozinCase>;

    fn units(&self) -> u64 {
        rogozin_case_count() as u64
    }

    fn init(&self) -> Vec<RogozinCase> {
        Vec::new()
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<RogozinCase>> {
        let seed = self.0.cfg.model.seed;
        let (label, x, p) = rogozin_case(stream as usize, seed);
        let mut rng = stream_rng(aux_seed(seed, VECTOR_SEED), stream);
        let mut s = bernoulli_sums(&x, p, self.0.cfg.trials, &mut rng);
        s.sort_by(f64::total_cmp);
        let inf = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let rows = LAMBDA_FACTORS
            .iter()
            .map(|f| {
                let lambda = f * inf;
                let q = levy_sorted(&s, lambda);
                let b = rogozin_bound_weighted(&x, p, lambda, self.0.cfg.c_rgz)?;
                Ok((lambda, q, b))
            })
            .collect::<Result<_>>()?;
        Ok(plain(RogozinCase { label, rows }))
    }

    fn absorb(&self, acc: &mut Vec<RogozinCase>, out: RogozinCase) {
        acc.push(out);
    }

    fn finish(&self, acc: &Vec<RogozinCase>) -> Result<Finished> {
        let c = &self.0;
        let mut records = Vec::new();
        let (pts, bad, worst) = binomial_grid();
        let mut r = c.rec("binomial_tail_violations", bad as f64, 0.0);
        r.prediction = Some(0.0);
        r.tolerance = "exact <= bound at every grid point".into();
        r.pass = Some(bad == 0);
        r.note = Some(format!("{pts} grid points, max exact/bound = {worst:.4}"));
        records.push(r);
        let (pts, bad, worst) = hypergeometric_grid(c.cfg.c_hg);
        let mut r = c.rec("hypergeometric_tail_violations", bad as f64, 0.0);
        r.prediction = Some(0.0);
        r.tolerance = "exact <= bound at every grid point".into();
        r.pass = Some(bad == 0);
        r.note = Some(format!("{pts} grid points, C_hg = {}, max exact/bound = {worst:.4}", c.cfg.c_hg));
        records.push(r);

        let m = &c.cfg.model;
        match classifier_for(m.n, m.p, m.beta, c.cfg.class_params.clone()) {
            Ok(clf) => {
                let (mono, prod, bn, cap) = growth_contract(&clf.g, m.n, m.p);
                let mut r = c.rec("growth_increment_violations", mono as f64, 0.0);
                r.tolerance = "g(at) >= g(t) + a on the grid".into();
                r.pass = Some(mono == 0);
                r.note = Some(format!("lifted pieces: {}", clf.g.any_lifted()));
                records.push(r);
                let mut r = c.rec("growth_partial_product_violations", prod as f64, 0.0);
                r.tolerance = "partial products <= K3".into();
                r.pass = Some(prod == 0);
                r.note = Some(format!("K3 = {:e}", clf.g.k3));
                records.push(r);
                records.push(upper(c.rec("growth_b_n", bn, 0.0), cap));
            }
            Err(e) => {
                let mut r = c.rec("growth_contract", f64::NAN, 0.0);
                r.note = Some(format!("not evaluated: {e}"));
                records.push(r);
            }
        }

        for case in acc {
            let (lambda, q, b) = case
                .rows
                .iter()
                .copied()
                .max_by(|x, y| (x.1 / x.2).total_cmp(&(y.1 / y.2)))
                .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            let se = (q * (1.0 - q) / c.cfg.trials as f64).sqrt();
            let mut r = upper(c.rec(format!("rogozin[{}]", case.label), q, se), b);
            r.note = Some(format!("worst lambda = {lambda:.4}, C_Rgz = {}", c.cfg.c_rgz));
            records.push(r);
        }
        Ok(Finished {
            records,
            series: vec![],
            extra_ledger: vec![LedgerEntry {
                purpose: "rogozin-sums".into(),
                seed: aux_seed(m.seed, VECTOR_SEED),
                first_stream: 0,
                count: rogozin_case_count() as u64,
            }],
        })
    }

    fn unit_purpose(&self) -> &'static str {
        "rogozin-case"
    }
}

// --------------------------------------------------- t23-anticoncentration

struct T23<'a> {
    c: Ctx<'a>,
    clf: Classifier,
    q: f64,
}

#[derive(Serialize, Deserialize, Default)]
struct T23Acc {
    small: Tally,
    below_q: Tally,
    not_t2: u64,
}

impl Kernel for T23<'_> {
    type Out = (bool, bool, bool);
    type Acc = T23Acc;

    fn units(&self) -> u64 {
        self.c.cfg.trials
    }

    fn init(&self) -> T23Acc {
        T23Acc::default()
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<Self::Out>> {
        let cfg = self.c.cfg;
        let a = self.c.matrix(stream);
        let mut rng = stream_rng(aux_seed(cfg.model.seed, VECTOR_SEED), stream);
        let x = sample_t2_prime(&self.clf, &mut rng);
        let is_t2 = self.clf.classify(&x).steep() == Some(ClassTag::T2);
        let ax = a.mul_vec(&x);
        let norm = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nf = cfg.model.n as f64;
        let small = norm < nf.sqrt() / nf.ln();
        let below_q = norm < (self.q * nf / 50.0).sqrt() / 3.0;
        Ok(self.c.hashed(&a, (small, below_q, is_t2), None))
    }

    fn absorb(&self, acc: &mut T23Acc, (small, below_q, is_t2): Self::Out) {
        acc.small = acc.small.merge(Tally::one(small));
        acc.below_q = acc.below_q.merge(Tally::one(below_q));
        acc.not_t2 += (!is_t2) as u64;
    }

    fn finish(&self, acc: &T23Acc) -> Result<Finished> {
        let c = &self.c;
        let nf = c.cfg.model.n as f64;
        let mut records = Vec::new();
        let (e, se) = acc.small.estimate();
        let mut r = upper(c.rec("P(||Ax|| < sqrt(n)/log n) [T2']", e, se), 1e-3);
        r.note = Some(format!("{} of {} constructed vectors were not tagged T2", acc.not_t2, acc.small.trials));
        records.push(r);
        let (e, se) = acc.below_q.estimate();
        records.push(upper(
            c.rec("P(||Ax|| < sqrt(qn/50)/3) [T2']", e, se),
            (-self.q * nf / 40.0).exp(),
        ));
        let mut r = c.rec("T3' class", 0.0, 0.0);
        r.note = Some(if self.clf.seq.tail_inverted {
            "empty: n_{s+1} > n_{s+2}".into()
        } else {
            "not sampled".into()
        });
        records.push(r);
        Ok(Finished {
            records,
            series: vec![],
            extra_ledger: vec![LedgerEntry {
                purpose: "t2-prime-vectors".into(),
                seed: aux_seed(c.cfg.model.seed, VECTOR_SEED),
                first_stream: 0,
                count: c.cfg.trials,
            }],
        })
    }
}

// --------------------------------------------------------------- net-audit

struct NetAudit<'a> {
    c: Ctx<'a>,
    clf: Classifier,
}

impl Kernel for NetAudit<'_> {
    type Out = Vec<StatRecord>;
    type Acc = Vec<StatRecord>;

    fn units(&self) -> u64 {
        2
    }

    fn init(&self) -> Vec<StatRecord> {
        Vec::new()
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<Vec<StatRecord>>> {
        let c = &self.c;
        let (target, name) = if stream == 0 {
            (CoverTarget::T2Prime, "t2-prime")
        } else {
            (CoverTarget::T3Prime, "t3-prime")
        };
        let seed = aux_seed(c.cfg.model.seed, VECTOR_SEED).wrapping_add(stream);
        let rep = net_cover_check(&self.clf, target, c.cfg.trials as usize, seed, c.cfg.net_point_cap)?;
        let mut out = Vec::new();
        let frac = if rep.samples > 0 {
            rep.covered as f64 / rep.samples as f64
        } else {
            1.0
        };
        let mut r = c.rec(format!("net_cover[{name}]"), frac, 0.0);
        r.prediction = Some(1.0);
        r.tolerance = "every sample within eps".into();
        r.pass = Some(rep.covered == rep.samples);
        r.note = Some(format!(
            "{}: {} samples, eps = {:.4}, max distance = {:.4}, {} distinct points",
            rep.kind, rep.samples, rep.eps, rep.max_distance, rep.distinct_points
        ));
        out.push(r);
        let mut r = c.rec(format!("net_log_cardinality[{name}]"), rep.log_cardinality, 0.0);
        r.bound = Some(rep.lemma_log_bound);
        r.note = Some("constructed net vs the volumetric bound".into());
        out.push(r);
        Ok(plain(out))
    }

    fn absorb(&self, acc: &mut Vec<StatRecord>, out: Vec<StatRecord>) {
        acc.extend(out);
    }

    fn finish(&self, acc: &Vec<StatRecord>) -> Result<Finished> {
        Ok(Finished {
            records: acc.clone(),
            series: vec![],
            extra_ledger: vec![],
        })
    }

    fn unit_purpose(&self) -> &'static str {
        "net-target"
    }
}

// ----------------------------------------------------- distance-diagnostic

struct Distance<'a>(Ctx<'a>);

#[derive(Serialize, Deserialize, Default)]
struct DistAcc {
    violations: u64,
    trials: u64,
    ratio_sum: f64,
    ratio_count: u64,
}

impl Kernel for Distance<'_> {
    type Out = (bool, Option<f64>);
    type Acc = DistAcc;

    fn units(&self) -> u64 {
        self.0.cfg.trials
    }

    fn init(&self) -> DistAcc {
        DistAcc::default()
    }

    fn trial(&self, stream: u64) -> Result<TrialOut<Self::Out>> {
        let a = self.0.matrix(stream);
        let n = a.n();
        let sv = singular_values(&a)?;
        let smin = sv[n - 1];
        let scale = sv[0].max(1.0);
        let mut dmin = f64::INFINITY;
        for i in 0..n {
            dmin = dmin.min(column_distance(&a, i)?);
        }
        let tol = 1e-9 * scale;
        let ok = smin <= dmin + tol && smin * (n as f64).sqrt() + tol >= dmin;
        let ratio = (dmin > tol).then(|| smin * (n as f64).sqrt() / dmin);
        Ok(self.0.hashed(&a, (ok, ratio), None))
    }

    fn absorb(&self, acc: &mut DistAcc, (ok, ratio): Self::Out) {
        acc.trials += 1;
        acc.violations += (!ok) as u64;
        if let Some(r) = ratio {
            acc.ratio_sum += r;
            acc.ratio_count += 1;
        }
    }

    fn finish(&self, acc: &DistAcc) -> Result<Finished> {
        let c = &self.0;
        let mut r = c.rec("distance_sandwich_violations", acc.violations as f64, 0.0);
        r.prediction = Some(0.0);
        r.tolerance = "min_i dist / sqrt(n) <= s_n <= min_i dist".into();
        r.pass = Some(acc.violations == 0);
        let mean = if acc.ratio_count > 0 {
            acc.ratio_sum / acc.ratio_count as f64
        } else {
            f64::NAN
        };
        let mut m = c.rec("mean(s_n sqrt(n) / min_i dist)", mean, 0.0);
        m.note = Some(format!("{} nonsingular samples", acc.ratio_count));
        Ok(Finished {
            records: vec![r, m],
            series: vec![],
            extra_ledger: vec![],
        })
    }
}

// ---------------------------------------------------------------- dispatch

pub(crate) fn run_kernel(cfg: &ExperimentConfig, opts: &RunOptions, start: Option<Progress>) -> Result<RunOutcome> {
    let ctx = Ctx { cfg };
    let m = &cfg.model;
    let clf = || classifier_for(m.n, m.p, m.beta, cfg.class_params.clone());
    match cfg.experiment {
        Experiment::SminTail => drive(&SminTail(ctx), cfg, opts, start),
        Experiment::CorankCensus => drive(&CorankCensus(ctx), cfg, opts, start),
        Experiment::ZeroProb => drive(&ZeroProb(ctx), cfg, opts, start),
        Experiment::PartitionCheck => drive(&PartitionCheck { c: ctx, clf: clf()? }, cfg, opts, start),
        Experiment::ExpansionAudit => drive(&ExpansionAudit(ctx), cfg, opts, start),
        Experiment::BoundsAudit => drive(&BoundsAudit(ctx), cfg, opts, start),
        Experiment::T23Anticoncentration => {
            let clf = clf()?;
            let q = indiv_q_value(clf.seq.n_s() as u64, m.p)?;
            drive(&T23 { c: ctx, clf, q }, cfg, opts, start)
        }
        Experiment::NetAudit => {
            if m.n > 200 {
                return Err(precondition(format!("net-audit needs n <= 200, got {}", m.n)));
            }
            drive(&NetAudit { c: ctx, clf: clf()? }, cfg, opts, start)
        }
        Experiment::DistanceDiagnostic => drive(&Distance(ctx), cfg, opts, start),
    }
}

/// Content hashes of every matrix an experiment samples, in stream order.
pub(crate) fn replay_hashes(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let samples_matrices = matches!(
        cfg.experiment,
        Experiment::SminTail
            | Experiment::CorankCensus
            | Experiment::ZeroProb
            | Experiment::ExpansionAudit
            | Experiment::T23Anticoncentration
            | Experiment::DistanceDiagnostic
    );
    if !samples_matrices {
        return Ok(Vec::new());
    }
    let ctx = Ctx { cfg };
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|s| ctx.matrix(s).content_hash())
        .collect())
}
