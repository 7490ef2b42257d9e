//! Block decomposition around low-support columns, expansion sets, the
//! typical-sample events and the steep-image predicates.
//!
//! `I_A(J1, J2)` is implemented with the unique hit `j0` restricted to `J1`.

use rand::seq::index::sample as sample_index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Result};
use crate::harness::stats::Tally;
use crate::model::{regime_of, stream_rng, MatrixSample, Regime};
use crate::probability::operator_norm;
use crate::structure::ClassParams;

/// `J = L_A(threshold)`, `I` = rows meeting `J`, plus the three views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub n: usize,
    pub threshold: usize,
    pub j_cal: Vec<usize>,
    pub i_cal: Vec<usize>,
    in_j: Vec<bool>,
    in_i: Vec<bool>,
}

impl BlockDecomposition {
    pub fn in_j(&self, j: usize) -> bool {
        self.in_j[j]
    }

    pub fn in_i(&self, i: usize) -> bool {
        self.in_i[i]
    }

    /// Columns outside `J`.
    pub fn rest_cols(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| !self.in_j[j]).collect()
    }

    /// Rows outside `I`.
    pub fn rest_rows(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| !self.in_i[i]).collect()
    }

    /// Row indices of `supp(C_j)` inside `I` (column `j` of H or W).
    pub fn upper_support(&self, a: &MatrixSample, j: usize) -> Vec<u32> {
        a.col_support(j).iter().copied().filter(|&i| self.in_i[i as usize]).collect()
    }

    /// Row indices of `supp(C_j)` outside `I` (column `j` of D).
    pub fn lower_support(&self, a: &MatrixSample, j: usize) -> Vec<u32> {
        a.col_support(j).iter().copied().filter(|&i| !self.in_i[i as usize]).collect()
    }

    /// Dense `A_{I,J}` (rows of I, columns of J, in index order).
    pub fn h(&self, a: &MatrixSample) -> Vec<Vec<u8>> {
        self.view(a, &self.i_cal, &self.j_cal)
    }

    /// Dense `A_{I, [n] \ J}`.
    pub fn w(&self, a: &MatrixSample) -> Vec<Vec<u8>> {
        self.view(a, &self.i_cal, &self.rest_cols())
    }

    /// Dense `A_{[n] \ I, [n] \ J}`.
    pub fn d(&self, a: &MatrixSample) -> Vec<Vec<u8>> {
        self.view(a, &self.rest_rows(), &self.rest_cols())
    }

    fn view(&self, a: &MatrixSample, rows: &[usize], cols: &[usize]) -> Vec<Vec<u8>> {
        rows.iter()
            .map(|&i| cols.iter().map(|&j| a.get(i, j) as u8).collect())
            .collect()
    }

    /// `A_{[n] \ I, J}` has no ones.
    pub fn zero_block_holds(&self, a: &MatrixSample) -> bool {
        self.j_cal
            .iter()
            .all(|&j| a.col_support(j).iter().all(|&i| self.in_i[i as usize]))
    }
}

pub fn block_decomposition(a: &MatrixSample, threshold: usize) -> BlockDecomposition {
    let n = a.n();
    let mut in_j = vec![false; n];
    let mut in_i = vec![false; n];
    for (j, sup) in a.col_supports().iter().enumerate() {
        if sup.len() <= threshold {
            in_j[j] = true;
            for &i in sup {
                in_i[i as usize] = true;
            }
        }
    }
    let bd = BlockDecomposition {
        n,
        threshold,
        j_cal: (0..n).filter(|&j| in_j[j]).collect(),
        i_cal: (0..n).filter(|&i| in_i[i]).collect(),
        in_j,
        in_i,
    };
    assert!(bd.zero_block_holds(a), "zero block violated");
    bd
}

/// Rows (from `allowed`) with exactly one one among the columns `j2`,
/// that one lying in a column flagged by `in_j1`.
fn unique_hits(
    a: &MatrixSample,
    in_j1: &[bool],
    j2: &[usize],
    allowed: impl Fn(usize) -> bool,
) -> Vec<usize> {
    let n = a.n();
    let mut count = vec![0u8; n];
    let mut owner = vec![usize::MAX; n];
    for &j in j2 {
        for &i in a.col_support(j) {
            let i = i as usize;
            count[i] = count[i].saturating_add(1);
            owner[i] = j;
        }
    }
    (0..n)
        .filter(|&i| count[i] == 1 && in_j1[owner[i]] && allowed(i))
        .collect()
}

/// `I_A(J1, J2)`: rows with exactly one one in `J2`, located in `J1`.
pub fn expansion_set(a: &MatrixSample, j1: &[usize], j2: &[usize]) -> Result<Vec<usize>> {
    let n = a.n();
    let mut in_j2 = vec![false; n];
    for &j in j2 {
        if j >= n {
            return Err(invalid(format!("column {j} out of range for n = {n}")));
        }
        in_j2[j] = true;
    }
    let mut in_j1 = vec![false; n];
    for &j in j1 {
        if j >= n || !in_j2[j] {
            return Err(invalid(format!("J1 is not contained in J2 (column {j})")));
        }
        in_j1[j] = true;
    }
    let mut uniq: Vec<usize> = j2.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    Ok(unique_hits(a, &in_j1, &uniq, |_| true))
}

/// `|{ i : |(Ax)_i| >= threshold }|`.
pub fn steep_image_count(a: &MatrixSample, x: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold >= 0.0) {
        return Err(precondition(format!("threshold must be >= 0, got {threshold}")));
    }
    if x.len() != a.n() {
        return Err(invalid(format!("x has length {} for n = {}", x.len(), a.n())));
    }
    Ok(a.mul_vec(x).iter().filter(|v| v.abs() >= threshold).count())
}

/// Cap rule for `|J2|` in the second expansion range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum J2Rule {
    /// `max(floor(1/(gamma p)), pn / log^3(pn) * n1)`
    Plain,
    /// `max(floor(1/(gamma p)), pn / (3 log^3(pn)) * n1)`
    Third,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DAuditConfig {
    pub trials_per_range: usize,
    pub seed: u64,
    pub j2_rule: J2Rule,
    pub adversarial: bool,
    /// Power iterations for the two operator norms.
    pub norm_iters: usize,
}

impl Default for DAuditConfig {
    fn default() -> Self {
        Self {
            trials_per_range: 64,
            seed: 0,
            j2_rule: J2Rule::Plain,
            adversarial: true,
            norm_iters: 200,
        }
    }
}

/// One row of the expansion-event audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DRange {
    pub n1_lo: usize,
    pub n1_hi: usize,
    pub trials: usize,
    pub adversarial_trials: usize,
    /// Required: `|I_D| > need`.
    pub need: f64,
    /// Smallest `|I_D|` seen, with its `(n1, n2)`.
    pub worst: Option<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCheck {
    /// `None` when the event is not defined in this regime.
    pub holds: Option<bool>,
    pub detail: String,
}

impl EventCheck {
    fn new(holds: bool, detail: impl Into<String>) -> Self {
        Self {
            holds: Some(holds),
            detail: detail.into(),
        }
    }

    fn na() -> Self {
        Self {
            holds: None,
            detail: "not defined in this regime".into(),
        }
    }
}

pub const EVENT_NAMES: [&str; 8] = [
    "omega_1", "omega_J", "omega_W", "omega_D", "omega_row", "omega_norm", "omega_RC", "omega_0",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub regime: Regime,
    pub threshold: usize,
    pub j_size: usize,
    pub i_size: usize,
    pub omega1: EventCheck,
    pub omega_j: EventCheck,
    pub omega_w: EventCheck,
    pub omega_d: EventCheck,
    pub d_audit: Vec<DRange>,
    pub omega_row: EventCheck,
    pub omega_norm: EventCheck,
    pub omega_rc: EventCheck,
    pub omega0: EventCheck,
}

impl EventReport {
    /// Outcomes in `EVENT_NAMES` order.
    pub fn flags(&self) -> [Option<bool>; 8] {
        [
            self.omega1.holds,
            self.omega_j.holds,
            self.omega_w.holds,
            self.omega_d.holds,
            self.omega_row.holds,
            self.omega_norm.holds,
            self.omega_rc.holds,
            self.omega0.holds,
        ]
    }

    /// Intersection of the structural events (those defined in the regime).
    pub fn typical(&self) -> bool {
        [&self.omega1, &self.omega_j, &self.omega_w, &self.omega_d, &self.omega_row]
            .iter()
            .all(|e| e.holds != Some(false))
    }
}

/// Per-event frequencies across a batch; merges commute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EventTally {
    pub counts: [Tally; 8],
}

impl EventTally {
    pub fn one(r: &EventReport) -> Self {
        let mut t = Self::default();
        for (c, f) in t.counts.iter_mut().zip(r.flags()) {
            if let Some(h) = f {
                *c = Tally::one(h);
            }
        }
        t
    }

    pub fn merge(mut self, o: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(o.counts) {
            *a = a.merge(b);
        }
        self
    }
}

/// `1 <= n1 <= hi`, `|J2| <= cap(n1)` style ranges for the current regime.
fn d_ranges(n: usize, p: f64, cp: &ClassParams, rule: J2Rule, regime: Regime) -> Vec<(usize, usize, Box<dyn Fn(usize) -> usize>)> {
    let pn = p * n as f64;
    let l = pn.ln();
    let ns = (1.0 / (cp.gamma * p)).floor() as usize;
    let slope = match rule {
        J2Rule::Plain => pn / l.powi(3),
        J2Rule::Third => pn / (3.0 * l.powi(3)),
    };
    let wide = move |n1: usize| ns.max((slope * n1 as f64).floor() as usize);
    match regime {
        Regime::SmallP => {
            let e0 = (pn / (l * l)).exp().ceil() as usize;
            let lo_b = (e0 as f64 / 10.0).ceil().max(1.0) as usize;
            vec![
                (1, e0, Box::new(|n1: usize| 1000 * n1)),
                (lo_b, ns, Box::new(wide)),
            ]
        }
        Regime::LargeP => vec![(1, ns, Box::new(wide))],
    }
}

/// Evaluate every event on one sample. `p` is the model edge probability.
pub fn check_events(
    a: &MatrixSample,
    p: f64,
    cp: &ClassParams,
    beta: usize,
    c_norm: f64,
    audit: &DAuditConfig,
    stream_id: u64,
) -> Result<EventReport> {
    let n = a.n();
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("p must lie in (0, 1), got {p}")));
    }
    if beta < 1 {
        return Err(invalid("beta must be at least 1"));
    }
    let nf = n as f64;
    let pn = p * nf;
    let regime = regime_of(n, p, beta);
    let threshold = match regime {
        Regime::SmallP => cp.k_threshold,
        Regime::LargeP => (cp.phi0 * pn).floor() as usize,
    };
    let bd = block_decomposition(a, threshold);
    let sizes: Vec<usize> = a.col_supports().iter().map(Vec::len).collect();
    let max_col = sizes.iter().copied().max().unwrap_or(0);
    let phi_pn = cp.phi * pn;
    let cols_capped = max_col as f64 <= phi_pn;

    let omega1 = match regime {
        Regime::SmallP => {
            let mut hist = vec![0usize; n + 1];
            for &s in &sizes {
                hist[s] += 1;
            }
            let mut cum = 0usize;
            let mut bad = None;
            let kmax = (pn / 2.0).floor() as usize;
            for (k, &h) in hist.iter().enumerate().take(kmax + 1) {
                cum += h;
                if k == 0 {
                    continue;
                }
                let kf = k as f64;
                let cap = nf.ln().powi(2) * (std::f64::consts::E * pn / kf).powf(kf) * (-pn).exp() * nf;
                if cum as f64 >= cap && bad.is_none() {
                    bad = Some((k, cum, cap));
                }
            }
            let ok = bad.is_none() && cols_capped;
            let detail = match bad {
                Some((k, c, cap)) => format!("|L({k})| = {c} >= {cap:.3}"),
                None if !cols_capped => format!("max column support {max_col} > phi pn = {phi_pn:.3}"),
                None => format!("k <= {kmax} within caps, max column support {max_col}"),
            };
            EventCheck::new(ok, detail)
        }
        Regime::LargeP => EventCheck::new(
            bd.j_cal.len() <= beta && cols_capped,
            format!("|J| = {}, max column support {max_col}, phi pn = {phi_pn:.3}", bd.j_cal.len()),
        ),
    };

    let omega_j = match regime {
        Regime::SmallP => {
            let mut seen = vec![false; n];
            let mut clash = None;
            'outer: for &j in &bd.j_cal {
                for &i in a.col_support(j) {
                    if std::mem::replace(&mut seen[i as usize], true) {
                        clash = Some((j, i));
                        break 'outer;
                    }
                }
            }
            let ok = clash.is_none() && omega1.holds == Some(true);
            let detail = match clash {
                Some((j, i)) => format!("column {j} shares row {i} with another column of J"),
                None => "supports in J pairwise disjoint".into(),
            };
            EventCheck::new(ok, detail)
        }
        Regime::LargeP => EventCheck::na(),
    };

    let w_cap = match regime {
        Regime::SmallP => 2.0,
        Regime::LargeP => 0.5 * cp.phi0 * pn,
    };
    let worst_w = bd
        .rest_cols()
        .into_iter()
        .map(|j| (bd.upper_support(a, j).len(), j))
        .max();
    let omega_w = match worst_w {
        Some((w, j)) => EventCheck::new(w as f64 <= w_cap, format!("max |supp C_j(W)| = {w} at column {j}, cap {w_cap}")),
        None => EventCheck::new(true, "no columns outside J"),
    };

    let need = match regime {
        Regime::SmallP => cp.k_threshold as f64 / 8.0,
        Regime::LargeP => beta as f64,
    };
    let rest = bd.rest_cols();
    let mut rng = stream_rng(audit.seed, stream_id);
    let mut d_audit = Vec::new();
    let mut d_ok = true;
    let mut in_j1 = vec![false; n];
    for (lo, hi, cap) in d_ranges(n, p, cp, audit.j2_rule, regime) {
        let hi = hi.min(rest.len());
        let mut rec = DRange {
            n1_lo: lo,
            n1_hi: hi,
            trials: 0,
            adversarial_trials: 0,
            need,
            worst: None,
        };
        if lo > hi {
            d_audit.push(rec);
            continue;
        }
        let mut note = |n1: usize, n2: usize, got: usize, rec: &mut DRange| {
            if rec.worst.is_none_or(|w| got < w.2) {
                rec.worst = Some((n1, n2, got));
            }
            if got as f64 <= need {
                d_ok = false;
            }
        };
        for _ in 0..audit.trials_per_range {
            let n1 = rng.random_range(lo..=hi);
            let n2 = cap(n1).clamp(n1, rest.len());
            let picks = sample_index(&mut rng, rest.len(), n2);
            let j2: Vec<usize> = picks.iter().map(|k| rest[k]).collect();
            for &j in &j2[..n1] {
                in_j1[j] = true;
            }
            let got = unique_hits(a, &in_j1, &j2, |i| !bd.in_i(i)).len();
            for &j in &j2[..n1] {
                in_j1[j] = false;
            }
            rec.trials += 1;
            note(n1, n2, got, &mut rec);
        }
        if audit.adversarial {
            let mut by_size = rest.clone();
            by_size.sort_by_key(|&j| (bd.lower_support(a, j).len(), j));
            let mut probes = vec![lo, hi];
            probes.dedup();
            for n1 in probes {
                let n2 = cap(n1).clamp(n1, rest.len());
                let j1 = &by_size[..n1];
                let mut marked = vec![false; n];
                for &j in j1 {
                    in_j1[j] = true;
                    for &i in a.col_support(j) {
                        marked[i as usize] = true;
                    }
                }
                let mut others: Vec<(usize, usize)> = rest
                    .iter()
                    .filter(|&&j| !in_j1[j])
                    .map(|&j| (a.col_support(j).iter().filter(|&&i| marked[i as usize]).count(), j))
                    .collect();
                others.sort_by(|x, y| y.cmp(x));
                let mut j2 = j1.to_vec();
                j2.extend(others.iter().take(n2 - n1).map(|&(_, j)| j));
                let got = unique_hits(a, &in_j1, &j2, |i| !bd.in_i(i)).len();
                for &j in j1 {
                    in_j1[j] = false;
                }
                rec.adversarial_trials += 1;
                note(n1, n2, got, &mut rec);
            }
        }
        d_audit.push(rec);
    }
    let omega_d = EventCheck::new(
        d_ok,
        format!(
            "audited {} pairs, need |I_D| > {need}",
            d_audit.iter().map(|r| r.trials + r.adversarial_trials).sum::<usize>()
        ),
    );

    let max_row = (0..n).map(|i| a.row_degree(i)).max().unwrap_or(0);
    let omega_row = EventCheck::new(max_row as f64 <= phi_pn, format!("max row support {max_row}, phi pn = {phi_pn:.3}"));

    let root = pn.sqrt();
    let centered = operator_norm(a, p, audit.norm_iters);
    let full = operator_norm(a, 0.0, audit.norm_iters);
    let omega_norm = EventCheck::new(
        centered <= c_norm * root && full <= c_norm * root + pn,
        format!("||A - EA|| = {centered:.4}, ||A|| = {full:.4}, C_norm sqrt(pn) = {:.4}", c_norm * root),
    );

    let zr = a.zero_rows();
    let zc = a.zero_cols();
    let omega_rc = EventCheck::new(zr < beta && zc < beta, format!("{zr} zero rows, {zc} zero columns"));
    let omega0 = EventCheck::new(zc < beta, format!("{zc} zero columns"));

    Ok(EventReport {
        regime,
        threshold,
        j_size: bd.j_cal.len(),
        i_size: bd.i_cal.len(),
        omega1,
        omega_j,
        omega_w,
        omega_d,
        d_audit,
        omega_row,
        omega_norm,
        omega_rc,
        omega0,
    })
}

/// Proof-chain constant: the isolated row value is at least `x*_{n1} / 192`.
pub const STEEP_IMAGE_FACTOR: f64 = 1.0 / 192.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteepGuarantee {
    pub tau: f64,
    pub restricted_norm: f64,
    pub count: usize,
    pub need: f64,
    pub holds: bool,
}

/// For `x` in the `j`-th first-tier steep class: either `||A_{I,[n]} x|| >= tau`
/// or more than `k/8` rows of `Ax` reach `tau`, with
/// `tau = x*_{n_{j-1}} / 192`.
pub fn steep_guarantee(
    a: &MatrixSample,
    bd: &BlockDecomposition,
    x: &[f64],
    n_prev: usize,
    k: usize,
) -> Result<SteepGuarantee> {
    let (_, xs) = crate::model::rearrangement(x);
    if n_prev < 1 || n_prev > xs.len() {
        return Err(invalid(format!("n_(j-1) = {n_prev} out of range")));
    }
    let tau = STEEP_IMAGE_FACTOR * xs[n_prev - 1];
    let ax = a.mul_vec(x);
    let restricted_norm = bd.i_cal.iter().map(|&i| ax[i] * ax[i]).sum::<f64>().sqrt();
    let count = steep_image_count(a, x, tau)?;
    let need = k as f64 / 8.0;
    Ok(SteepGuarantee {
        tau,
        restricted_norm,
        count,
        need,
        holds: restricted_norm >= tau || count as f64 > need,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub hits: u64,
    pub trials: u64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
}

/// Monte Carlo for `P(sum X_l >= t k)` where `T_0..T_k` are uniform subsets
/// of `[m1]` with sizes `sizes[0..=k]` and `X_l = |T_0 ∪ .. ∪ T_{l-1} ∩ T_l|`.
/// The bound is `C_hg^k exp(-log(t / (6 S s / m1)) t k)`.
pub fn expansion_tail_experiment(
    m1: usize,
    sizes: &[usize],
    trials: u64,
    t: f64,
    c_hg: f64,
    seed: u64,
) -> Result<TailEstimate> {
    if sizes.len() < 2 {
        return Err(invalid("need sizes s_0, s_1, .., s_k with k >= 1"));
    }
    if let Some(&b) = sizes.iter().find(|&&b| b > m1) {
        return Err(invalid(format!("subset size {b} exceeds m1 = {m1}")));
    }
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    let k = sizes.len() - 1;
    let s = sizes[1..].iter().copied().max().unwrap_or(0) as f64;
    let big_s = sizes.iter().sum::<usize>() as f64;
    let base = 6.0 * big_s * s / m1 as f64;
    if !(t >= base.max(1.0)) {
        return Err(precondition(format!("t = {t} must be at least max(6Ss/m1, 1) = {}", base.max(1.0))));
    }
    let kf = k as f64;
    let bound = if base == 0.0 {
        0.0
    } else {
        (kf * c_hg.ln() - (t / base).ln() * t * kf).exp()
    };
    let goal = t * kf;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            let mut union = vec![false; m1];
            let mut total = 0usize;
            for (l, &sz) in sizes.iter().enumerate() {
                let set = sample_index(&mut rng, m1, sz);
                for i in set.iter() {
                    if l > 0 && union[i] {
                        total += 1;
                    }
                }
                for i in set.iter() {
                    union[i] = true;
                }
            }
            (total as f64 >= goal) as u64
        })
        .sum();
    let (_, stderr) = crate::harness::stats::wilson(hits, trials);
    Ok(TailEstimate {
        hits,
        trials,
        empirical: hits as f64 / trials as f64,
        stderr,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaAudit {
    pub m1: usize,
    pub j1: usize,
    pub j2: usize,
    pub r: f64,
    pub hits: u64,
    pub trials: u64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `#{j in J1 : b_j >= r} >= |J1|/2` and `r >= |J2| 24 ||b||^2 / m1`.
    pub hypothesis_satisfied: bool,
    pub hypothesis_rhs: f64,
}

/// Conditioned expansion audit on an `m1 x |J2|` matrix whose column `j`
/// is a uniform `b[j]`-subset; `J1` is the first `j1` columns. Estimates
/// `P(|I_A(J1, J2)| < |J1| r / 4)` against
/// `C_hg^{|J1|/2} exp(-log(r / (24 |J2| ||b||^2 / m1)) r |J1| / 8)`.
pub fn expansion_lemma_audit(
    m1: usize,
    j1: usize,
    b: &[usize],
    r: f64,
    trials: u64,
    c_hg: f64,
    seed: u64,
) -> Result<LemmaAudit> {
    let j2 = b.len();
    if j1 == 0 || j1 > j2 {
        return Err(invalid(format!("need 1 <= |J1| <= |J2|, got {j1} and {j2}")));
    }
    if let Some(&bj) = b.iter().find(|&&bj| bj > m1) {
        return Err(invalid(format!("support size {bj} exceeds m1 = {m1}")));
    }
    if !(r > 0.0) || trials == 0 {
        return Err(invalid("need r > 0 and trials >= 1"));
    }
    let binf = b.iter().copied().max().unwrap_or(0) as f64;
    let rhs = j2 as f64 * 24.0 * binf * binf / m1 as f64;
    let big = b[..j1].iter().filter(|&&bj| bj as f64 >= r).count();
    let hypothesis_satisfied = 2 * big >= j1 && r >= rhs;
    let j1f = j1 as f64;
    let bound = if rhs == 0.0 {
        0.0
    } else {
        (0.5 * j1f * c_hg.ln() - (r / rhs).ln() * r * j1f / 8.0).exp()
    };
    let goal = j1f * r / 4.0;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            let mut count = vec![0u8; m1];
            let mut owner = vec![usize::MAX; m1];
            for (j, &bj) in b.iter().enumerate() {
                for i in sample_index(&mut rng, m1, bj).iter() {
                    count[i] = count[i].saturating_add(1);
                    owner[i] = j;
                }
            }
            let size = (0..m1).filter(|&i| count[i] == 1 && owner[i] < j1).count();
            ((size as f64) < goal) as u64
        })
        .sum();
    let (_, stderr) = crate::harness::stats::wilson(hits, trials);
    Ok(LemmaAudit {
        m1,
        j1,
        j2,
        r,
        hits,
        trials,
        empirical: hits as f64 / trials as f64,
        stderr,
        bound,
        hypothesis_satisfied,
        hypothesis_rhs: rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_bernoulli, ModelParams};

    fn small() -> MatrixSample {
        MatrixSample::from_rows(&[[1u8, 0, 0], [1, 1, 0], [0, 0, 1]])
    }

    #[test]
    fn decomposition_examples() {
        let z = block_decomposition(&MatrixSample::zeros(4), 0);
        assert_eq!(z.j_cal, vec![0, 1, 2, 3]);
        assert!(z.i_cal.is_empty());
        // no columns survive, so D has no entries (4 x 0)
        assert!(z.d(&MatrixSample::zeros(4)).iter().all(Vec::is_empty));
        assert!(z.rest_cols().is_empty());
        let id = block_decomposition(&MatrixSample::identity(5), 1);
        assert_eq!(id.j_cal.len(), 5);
        assert_eq!(id.i_cal.len(), 5);
        let bd = block_decomposition(&small(), 1);
        assert_eq!(bd.j_cal, vec![1, 2]);
        assert_eq!(bd.i_cal, vec![1, 2]);
        assert_eq!(bd.h(&small()), vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(bd.w(&small()), vec![vec![1], vec![0]]);
        assert_eq!(bd.d(&small()), vec![vec![1]]);
    }

    #[test]
    fn expansion_set_examples() {
        assert_eq!(expansion_set(&small(), &[0], &[0, 1]).unwrap(), vec![0]);
        let mut z = MatrixSample::identity(4);
        z = MatrixSample::from_fn(4, |i, j| z.get(i, j) && j != 2);
        assert!(expansion_set(&z, &[2], &[2]).unwrap().is_empty());
        let id = MatrixSample::identity(6);
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(expansion_set(&id, &all, &all).unwrap(), all);
        assert!(expansion_set(&small(), &[2], &[0, 1]).is_err());
    }

    #[test]
    fn steep_image_examples() {
        let id = MatrixSample::identity(4);
        assert_eq!(steep_image_count(&id, &[0.0; 4], 0.1).unwrap(), 0);
        assert_eq!(steep_image_count(&id, &[1.0, 0.0, 0.0, 0.0], 0.5).unwrap(), 1);
        assert!(steep_image_count(&id, &[0.0; 4], -1.0).is_err());
        let a = sample_bernoulli(&ModelParams::new(30, 0.2, 1, 9).unwrap(), 0);
        for j in 0..30 {
            if a.col_support(j).is_empty() {
                continue;
            }
            let mut x = vec![0.0; 30];
            x[j] = 2.0;
            assert!(steep_image_count(&a, &x, 1.0).unwrap() >= 1);
        }
    }

    #[test]
    fn events_on_fixed_matrices() {
        let cp = ClassParams::defaults(1);
        let audit = DAuditConfig::default();
        let n = 50;
        let p = (n as f64).ln() / n as f64;
        let z = check_events(&MatrixSample::zeros(n), p, &cp, 1, 1.0, &audit, 0).unwrap();
        assert_eq!(z.omega_row.holds, Some(true));
        assert_eq!(z.omega_rc.holds, Some(false));
        assert_eq!(z.omega0.holds, Some(false));
        let id = check_events(&MatrixSample::identity(n), p, &cp, 1, 1.0, &audit, 0).unwrap();
        assert_eq!(id.omega_j.holds, Some(true));
        assert_eq!(id.omega_rc.holds, Some(true));
    }

    #[test]
    fn rc_implies_zero_event() {
        let cp = ClassParams::defaults(2);
        let audit = DAuditConfig {
            trials_per_range: 4,
            ..Default::default()
        };
        let params = ModelParams::new(60, 0.05, 2, 3).unwrap();
        for s in 0..40 {
            let a = sample_bernoulli(&params, s);
            let r = check_events(&a, 0.05, &cp, 2, 3.0, &audit, s).unwrap();
            if r.omega_rc.holds == Some(true) {
                assert_eq!(r.omega0.holds, Some(true));
            }
        }
    }

    #[test]
    fn tail_experiment_examples() {
        let e = expansion_tail_experiment(50, &[5, 0, 0, 0], 1000, 1.0, 2.0, 1).unwrap();
        assert_eq!(e.hits, 0);
        // T_0 of size 10 in [100], T_1 a single point
        let e = expansion_tail_experiment(100, &[10, 1], 200_000, 1.0, 2.0, 2).unwrap();
        assert!((e.empirical - 0.1).abs() < 4.0 * e.stderr, "{e:?}");
        assert!(expansion_tail_experiment(100, &[50, 10], 10, 1.0, 2.0, 0).is_err());
    }

    #[test]
    fn lemma_audit_flags_hypothesis() {
        let a = expansion_lemma_audit(400, 8, &[12; 24], 12.0, 2000, 2.0, 5).unwrap();
        assert!(!a.hypothesis_satisfied);
        assert!(a.bound > 1.0);
        let b = expansion_lemma_audit(20_000, 8, &[12; 24], 12.0, 2000, 2.0, 5).unwrap();
        assert!(b.hypothesis_satisfied);
        assert!(b.empirical <= b.bound);
    }
}
