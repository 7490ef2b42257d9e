//! Exact distributions, tail bounds, Lévy concentration and the Rogozin bound.
//!
//! Lévy concentration uses the closed window convention
//! `Q(X, lambda) = sup_u P(u <= X <= u + 2 lambda)` on both sides of every
//! comparison.

mod exact;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{invalid, precondition, Error, Result};
use crate::model::{sample_bernoulli, MatrixSample, ModelParams};

/// Largest `n` accepted by the exact zero row/column routines.
pub const EXACT_ZERO_MAX_N: usize = 4000;
/// Largest `n` for the exact joint zero-count law.
pub const EXACT_OMEGA_MAX_N: usize = 200;

/// Neumaier compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// `sum exp(l_i)` computed as `exp(max) * sum exp(l_i - max)`.
pub fn log_sum_exp(ls: &[f64]) -> f64 {
    let m = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + compensated_sum(ls.iter().map(|l| (l - m).exp())).ln()
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        f64::NEG_INFINITY
    } else {
        ln_binomial(n, k)
    }
}

/// `ln P(Bin(n, p) = k)`.
pub fn binomial_ln_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// `P(Bin(n, p) <= k)`.
pub fn binomial_cdf(n: u64, p: f64, k: u64) -> f64 {
    if k >= n {
        return 1.0;
    }
    let ls: Vec<f64> = (0..=k).map(|j| binomial_ln_pmf(n, p, j)).collect();
    log_sum_exp(&ls).exp().min(1.0)
}

/// `P(Bin(n, p) >= k)`.
pub fn binomial_sf(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let ls: Vec<f64> = (k..=n).map(|j| binomial_ln_pmf(n, p, j)).collect();
    log_sum_exp(&ls).exp().min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportProfile {
    /// `k -> { j : |supp(col j)| <= k }`.
    pub column_sets: BTreeMap<usize, Vec<usize>>,
    /// Same for rows.
    pub row_sets: BTreeMap<usize, Vec<usize>>,
    /// `k -> P(|supp(col)| <= k)` under Bernoulli(p).
    pub q_values: BTreeMap<usize, f64>,
}

impl SupportProfile {
    pub fn column_count(&self, k: usize) -> Option<usize> {
        self.column_sets.get(&k).map(Vec::len)
    }
}

pub fn support_profile(a: &MatrixSample, p: f64, ks: &[usize]) -> Result<SupportProfile> {
    let n = a.n();
    if let Some(&k) = ks.iter().find(|&&k| k > n) {
        return Err(precondition(format!("k = {k} exceeds n = {n}")));
    }
    let col_deg: Vec<usize> = a.col_supports().iter().map(Vec::len).collect();
    let row_deg: Vec<usize> = (0..n).map(|i| a.row_degree(i)).collect();
    let below = |deg: &[usize], k: usize| -> Vec<usize> {
        deg.iter()
            .enumerate()
            .filter(|(_, &d)| d <= k)
            .map(|(j, _)| j)
            .collect()
    };
    let mut profile = SupportProfile {
        column_sets: BTreeMap::new(),
        row_sets: BTreeMap::new(),
        q_values: BTreeMap::new(),
    };
    for &k in ks {
        profile.column_sets.insert(k, below(&col_deg, k));
        profile.row_sets.insert(k, below(&row_deg, k));
        profile.q_values.insert(k, binomial_cdf(n as u64, p, k as u64));
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroPattern {
    pub zero_rows: usize,
    pub zero_cols: usize,
    pub omega_rc_holds: bool,
}

pub fn zero_pattern_counts(a: &MatrixSample, beta: usize) -> ZeroPattern {
    let zero_rows = a.zero_rows();
    let zero_cols = a.zero_cols();
    ZeroPattern {
        zero_rows,
        zero_cols,
        omega_rc_holds: zero_rows.max(zero_cols) < beta,
    }
}

/// `1 - (1 - (1-p)^n)^{2n}` evaluated through `expm1`/`ln_1p`.
pub fn prob_zero_rowcol_asymptotic(n: usize, p: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    if p <= 0.0 {
        return 1.0;
    }
    let nf = n as f64;
    let q_n = (nf * (-p).ln_1p()).exp();
    -(2.0 * nf * (-q_n).ln_1p()).exp_m1()
}

/// Exact probability of a zero row or a zero column.
pub fn prob_zero_rowcol_exact(n: usize, p: f64) -> Result<f64> {
    if n > EXACT_ZERO_MAX_N {
        return Err(precondition(format!(
            "exact zero row/column probability supports n <= {EXACT_ZERO_MAX_N}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p = {p} outside [0, 1]")));
    }
    exact::zero_rowcol_exact(n as u64, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum RcMethod {
    Exact,
    MonteCarlo { samples: u64, stderr: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcComplement {
    pub value: f64,
    pub method: RcMethod,
}

/// `P(max(#zero rows, #zero cols) >= beta)`: exact for `n <= 200` (and for
/// `beta = 1` up to `n = 4000`),
/// otherwise a Monte Carlo estimate over `mc_samples` matrices.
pub fn prob_omega_rc_complement(
    n: usize,
    p: f64,
    beta: usize,
    mc_samples: u64,
    seed: u64,
) -> Result<RcComplement> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p = {p} outside [0, 1]")));
    }
    if n <= EXACT_OMEGA_MAX_N {
        return Ok(RcComplement {
            value: exact::omega_rc_complement_exact(n as u64, p, beta as u64)?,
            method: RcMethod::Exact,
        });
    }
    if beta > n {
        return Ok(RcComplement {
            value: 0.0,
            method: RcMethod::Exact,
        });
    }
    if beta == 1 && n <= EXACT_ZERO_MAX_N {
        return Ok(RcComplement {
            value: exact::zero_rowcol_exact(n as u64, p)?,
            method: RcMethod::Exact,
        });
    }
    let params = ModelParams::new(n, p, beta, seed)?;
    let hits: u64 = (0..mc_samples)
        .into_par_iter()
        .map(|s| {
            let a = sample_bernoulli(&params, s);
            (a.zero_rows().max(a.zero_cols()) >= beta) as u64
        })
        .sum();
    let (value, stderr) = crate::harness::stats::wilson(hits, mc_samples);
    Ok(RcComplement {
        value,
        method: RcMethod::MonteCarlo {
            samples: mc_samples,
            stderr,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailSide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub exact: f64,
    pub bound: f64,
}

/// Exact binomial tail and its elementary bound.
///
/// Upper: `P(Y >= k) <= 2 (e n p / k)^k` for `k >= 2pn`.
/// Lower: `P(Y <= k) <= 2 (e n p / (k (1-p)))^k (1-p)^n` for `k <= pn/2`.
pub fn binomial_tail(n: u64, p: f64, k: u64, side: TailSide) -> Result<TailBound> {
    if !(0.0..=0.5).contains(&p) {
        return Err(precondition(format!("binomial tail bound needs p <= 1/2, got {p}")));
    }
    let nf = n as f64;
    let kf = k as f64;
    let e = std::f64::consts::E;
    match side {
        TailSide::Upper => {
            if kf < 2.0 * p * nf {
                return Err(precondition(format!(
                    "upper tail needs k >= 2pn ({k} < {})",
                    2.0 * p * nf
                )));
            }
            let ln_b = if k == 0 { 0.0 } else { kf * (e * nf * p / kf).ln() };
            Ok(TailBound {
                exact: binomial_sf(n, p, k),
                bound: 2.0 * ln_b.exp(),
            })
        }
        TailSide::Lower => {
            if kf > 0.5 * p * nf {
                return Err(precondition(format!(
                    "lower tail needs k <= pn/2 ({k} > {})",
                    0.5 * p * nf
                )));
            }
            let ln_b = if k == 0 {
                0.0
            } else {
                kf * (e * nf * p / (kf * (1.0 - p))).ln()
            } + nf * (-p).ln_1p();
            Ok(TailBound {
                exact: binomial_cdf(n, p, k),
                bound: 2.0 * ln_b.exp(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergeometricTail {
    pub exact: f64,
    /// `C_hg (3mk/(ln))^l`, present only when `k <= m <= n/2`.
    pub bound: Option<f64>,
    /// False when `l < 3mk/n`, where the bound exceeds one anyway.
    pub informative: bool,
}

/// `P(|I ∩ [m]| >= l)` for a uniform `k`-subset `I` of `[n]`.
pub fn hypergeometric_tail(n: u64, m: u64, k: u64, l: u64, c_hg: f64) -> Result<HypergeometricTail> {
    if m > n || k > n {
        return Err(precondition(format!("need m, k <= n (n={n}, m={m}, k={k})")));
    }
    let lo = k.saturating_sub(n - m);
    let hi = k.min(m);
    let exact = if l <= lo {
        1.0
    } else if l > hi {
        0.0
    } else {
        let ln_total = ln_choose(n, k);
        let ls: Vec<f64> = (l..=hi)
            .map(|j| ln_choose(m, j) + ln_choose(n - m, k - j) - ln_total)
            .collect();
        log_sum_exp(&ls).exp().min(1.0)
    };
    let in_regime = k <= m && 2 * m <= n;
    let bound = if in_regime {
        if l == 0 {
            Some(c_hg)
        } else {
            let base = 3.0 * m as f64 * k as f64 / (l as f64 * n as f64);
            Some(c_hg * base.powf(l as f64))
        }
    } else {
        None
    };
    Ok(HypergeometricTail {
        exact,
        bound,
        informative: (l as f64) >= 3.0 * (m * k) as f64 / n as f64,
    })
}

/// Empirical `sup_u #{ u <= x_i <= u + 2 lambda } / N`.
pub fn levy_concentration(samples: &[f64], lambda: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(precondition("need at least one sample"));
    }
    if !(lambda >= 0.0) {
        return Err(precondition("lambda must be nonnegative"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(levy_sorted(&s, lambda))
}

/// Same as [`levy_concentration`] for already sorted samples.
pub fn levy_sorted(sorted: &[f64], lambda: f64) -> f64 {
    let w = 2.0 * lambda;
    let mut best = 0usize;
    let mut hi = 0usize;
    for lo in 0..sorted.len() {
        if hi < lo {
            hi = lo;
        }
        while hi < sorted.len() && sorted[hi] - sorted[lo] <= w {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    best as f64 / sorted.len() as f64
}

/// `C lambda / sqrt(sum lambda_i^2 (1 - q_i))`.
pub fn rogozin_bound(lambda: f64, lambdas: &[f64], qs: &[f64], c_rgz: f64) -> Result<f64> {
    if lambdas.len() != qs.len() {
        return Err(precondition("lambda_i and q_i lengths differ"));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(precondition("every lambda_i must be positive"));
    }
    let lmax = lambdas.iter().copied().fold(0.0, f64::max);
    if !(lambda > lmax) {
        return Err(precondition(format!("lambda = {lambda} must exceed max lambda_i = {lmax}")));
    }
    if qs.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(precondition("q_i must lie in [0, 1]"));
    }
    let denom = compensated_sum(lambdas.iter().zip(qs).map(|(l, q)| l * l * (1.0 - q)));
    if denom <= 0.0 {
        return Err(Error::Degenerate("sum lambda_i^2 (1 - q_i) is zero".into()));
    }
    Ok(c_rgz * lambda / denom.sqrt())
}

/// Specialization for `sum_{i in I} x_i xi_i` with Bernoulli(p) `xi_i`:
/// `C lambda / (sqrt(p) ||x_I||)`, valid for `lambda > ||x_I||_inf`.
pub fn rogozin_bound_weighted(x_i: &[f64], p: f64, lambda: f64, c_rgz: f64) -> Result<f64> {
    let inf = x_i.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(lambda > inf) {
        return Err(precondition(format!("lambda = {lambda} must exceed ||x_I||_inf = {inf}")));
    }
    let nrm = compensated_sum(x_i.iter().map(|v| v * v)).sqrt();
    if nrm == 0.0 || p <= 0.0 {
        return Err(Error::Degenerate("zero weight vector or p = 0".into()));
    }
    Ok(c_rgz * lambda / (p.sqrt() * nrm))
}

/// `2 m0 p (1-p)^{2 m0 - 1}`.
pub fn indiv_q_value(m0: u64, p: f64) -> Result<f64> {
    if m0 < 1 {
        return Err(precondition("m0 must be at least 1"));
    }
    if !(0.0 < p && p < 1.0) {
        return Err(precondition("p must lie in (0, 1)"));
    }
    Ok(2.0 * m0 as f64 * p * ((2 * m0 - 1) as f64 * (-p).ln_1p()).exp())
}

/// Law of the number of zero columns: Binomial(n, (1-p)^n).
pub fn zero_count_distribution(n: usize, p: f64) -> Vec<f64> {
    let q0 = if p >= 1.0 {
        0.0
    } else {
        (n as f64 * (-p).ln_1p()).exp()
    };
    (0..=n as u64)
        .map(|k| binomial_ln_pmf(n as u64, q0, k).exp())
        .collect()
}

/// Largest `lambda` on `grid`, inside `(0, 1/2)`, such that every grid point
/// up to it satisfies `n q_{floor(lambda p n)} < 1/2`.
pub fn lambda_beta_c0(n: usize, p: f64, grid: &[f64]) -> Option<f64> {
    let mut pts: Vec<f64> = grid.iter().copied().filter(|&l| l > 0.0 && l < 0.5).collect();
    pts.sort_by(f64::total_cmp);
    let pn = p * n as f64;
    let mut best = None;
    for l in pts {
        let k = (l * pn).floor() as u64;
        if n as f64 * binomial_cdf(n as u64, p, k) < 0.5 {
            best = Some(l);
        } else {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstantSource {
    Assumed,
    Calibrated { experiment: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub source: ConstantSource,
}

impl Constant {
    pub fn assumed(value: f64) -> Self {
        Self {
            value,
            source: ConstantSource::Assumed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityConstants {
    pub c_rgz: Constant,
    pub c_hg: Constant,
    pub c_norm: Constant,
}

impl Default for ProbabilityConstants {
    fn default() -> Self {
        Self {
            c_rgz: Constant::assumed(1.0),
            c_hg: Constant::assumed(2.0),
            c_norm: Constant::assumed(1.0),
        }
    }
}

/// Largest singular value of `A - shift * J` by power iteration on the
/// normal operator, where `J` is the all-ones matrix.
pub fn operator_norm(a: &MatrixSample, shift: f64, iters: usize) -> f64 {
    let n = a.n();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = a.mul_vec(x);
        if shift != 0.0 {
            let s: f64 = shift * x.iter().sum::<f64>();
            y.iter_mut().for_each(|v| *v -= s);
        }
        y
    };
    let apply_t = |y: &[f64]| -> Vec<f64> {
        let mut x = a.mul_vec_t(y);
        if shift != 0.0 {
            let s: f64 = shift * y.iter().sum::<f64>();
            x.iter_mut().for_each(|v| *v -= s);
        }
        x
    };
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as f64 + 1.0) * 0.754_877_666_246_692_8).fract())
        .collect();
    let mut best = 0.0f64;
    for _ in 0..iters {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = apply(&x);
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        best = best.max(ny);
        x = apply_t(&y);
    }
    best
}

/// Smallest `C >= 1` with `||A - EA|| < C sqrt(pn)` and
/// `||A|| < C sqrt(pn) + pn` on every one of `samples` matrices.
pub fn calibrate_c_norm(params: &ModelParams, samples: u64) -> Constant {
    let pn = params.pn();
    let root = pn.sqrt();
    let worst = (0..samples)
        .into_par_iter()
        .map(|s| {
            let a = sample_bernoulli(params, s);
            let centered = operator_norm(&a, params.p, 300);
            let full = operator_norm(&a, 0.0, 300);
            (centered / root).max((full - pn) / root)
        })
        .reduce(|| 0.0, f64::max);
    Constant {
        value: (worst * (1.0 + 1e-12)).max(1.0),
        source: ConstantSource::Calibrated {
            experiment: format!(
                "c-norm-bootstrap(n={},p={},samples={},seed={})",
                params.n, params.p, samples, params.seed
            ),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_profile_small() {
        let ones = MatrixSample::ones(4);
        let pr = support_profile(&ones, 0.5, &[3, 4]).unwrap();
        assert!(pr.column_sets[&3].is_empty());
        assert_eq!(pr.column_sets[&4], vec![0, 1, 2, 3]);
        let z = support_profile(&MatrixSample::zeros(3), 0.5, &[0]).unwrap();
        assert_eq!(z.column_sets[&0], vec![0, 1, 2]);
        let q = support_profile(&MatrixSample::zeros(2), 0.5, &[0, 1, 2]).unwrap().q_values;
        assert!((q[&0] - 0.25).abs() < 1e-15);
        assert!((q[&1] - 0.75).abs() < 1e-15);
        assert_eq!(q[&2], 1.0);
        assert!(support_profile(&ones, 0.5, &[5]).is_err());
    }

    #[test]
    fn zero_patterns() {
        let id = zero_pattern_counts(&MatrixSample::identity(4), 1);
        assert_eq!((id.zero_rows, id.zero_cols, id.omega_rc_holds), (0, 0, true));
        let z = zero_pattern_counts(&MatrixSample::zeros(3), 3);
        assert_eq!((z.zero_rows, z.zero_cols, z.omega_rc_holds), (3, 3, false));
        let a = MatrixSample::from_rows(&[[0u8, 1, 0], [0, 0, 1], [0, 1, 1]]);
        let c = zero_pattern_counts(&a, 1);
        assert_eq!((c.zero_rows, c.zero_cols), (0, 1));
    }

    #[test]
    fn asymptotic_examples() {
        assert!((prob_zero_rowcol_asymptotic(2, 0.5) - 0.68359375).abs() < 1e-15);
        assert_eq!(prob_zero_rowcol_asymptotic(10, 1.0), 0.0);
        assert!(prob_zero_rowcol_asymptotic(10, 1.0 - 1e-12) < 1e-100);
    }

    #[test]
    fn exact_examples() {
        assert!((prob_zero_rowcol_exact(2, 0.5).unwrap() - 0.5625).abs() < 1e-15);
        assert_eq!(prob_zero_rowcol_exact(6, 1.0).unwrap(), 0.0);
        assert!(prob_zero_rowcol_exact(EXACT_ZERO_MAX_N + 1, 0.5).is_err());
    }

    #[test]
    fn binomial_tail_examples() {
        let t = binomial_tail(4, 0.25, 2, TailSide::Upper).unwrap();
        assert!((t.exact - 0.26171875).abs() < 1e-15);
        assert!((t.bound - 2.0 * (std::f64::consts::E / 2.0).powi(2)).abs() < 1e-12);
        let t = binomial_tail(4, 0.25, 4, TailSide::Upper).unwrap();
        assert!((t.exact - 0.25f64.powi(4)).abs() < 1e-18);
        assert!(t.exact <= t.bound);
        assert!(binomial_tail(4, 0.25, 1, TailSide::Upper).is_err());
        assert!(binomial_tail(4, 0.6, 4, TailSide::Upper).is_err());
        assert!(binomial_tail(100, 0.1, 6, TailSide::Lower).is_err());
    }

    #[test]
    fn hypergeometric_examples() {
        let h = hypergeometric_tail(6, 2, 2, 1, 2.0).unwrap();
        assert!((h.exact - 0.6).abs() < 1e-15);
        assert_eq!(hypergeometric_tail(6, 2, 2, 3, 2.0).unwrap().exact, 0.0);
        assert_eq!(hypergeometric_tail(6, 2, 2, 0, 2.0).unwrap().exact, 1.0);
        assert!(hypergeometric_tail(10, 2, 3, 1, 2.0).unwrap().bound.is_none());
    }

    #[test]
    fn levy_examples() {
        assert_eq!(levy_concentration(&[3.0; 5], 0.0).unwrap(), 1.0);
        let two = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(levy_concentration(&two, 0.4).unwrap(), 0.5);
        assert_eq!(levy_concentration(&two, 0.5).unwrap(), 1.0);
        assert!(levy_concentration(&[], 1.0).is_err());
    }

    #[test]
    fn rogozin_examples() {
        assert!((rogozin_bound(2.0, &[1.0], &[0.0], 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(
            rogozin_bound(2.0, &[1.0, 1.0], &[1.0, 1.0], 1.0),
            Err(Error::Degenerate(_))
        ));
        assert!(rogozin_bound(1.0, &[1.0], &[0.0], 1.0).is_err());
        let w = rogozin_bound_weighted(&[1.0; 4], 0.25, 1.5, 1.0).unwrap();
        assert!((w - 1.5).abs() < 1e-15);
    }

    #[test]
    fn indiv_q_examples() {
        assert!((indiv_q_value(1, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(indiv_q_value(3, 1e-12).unwrap() < 1e-10);
        assert!(indiv_q_value(0, 0.5).is_err());
    }

    #[test]
    fn zero_count_two() {
        let d = zero_count_distribution(2, 0.5);
        let want = [9.0 / 16.0, 6.0 / 16.0, 1.0 / 16.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn operator_norm_of_ones() {
        let j = MatrixSample::ones(5);
        assert!((operator_norm(&j, 0.0, 50) - 5.0).abs() < 1e-12);
        assert!(operator_norm(&j, 1.0, 50) < 1e-12);
    }
}
