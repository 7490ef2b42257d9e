//! Net cardinality calculators and a constructive covering check.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::classify::{ClassTag, Classifier};
use super::triple_norm;
use crate::error::{invalid, precondition, Error, Result};
use crate::model::{rearrangement, stream_rng};
use crate::probability::ln_choose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NetKind {
    /// `l`-sparse vectors of norm below `a` in `R^n`.
    Basic { l: usize, n: usize, a: f64, eps: f64 },
    /// The steep-block product net, with `c_pn = C_T1 pn`.
    N1 {
        a: f64,
        eps: f64,
        c_pn: f64,
        pn: f64,
        n_s: usize,
        s: usize,
    },
    R { r: f64, n: usize },
    /// `T_i'` net for `i` in {2, 3}; `n_level` is `n_{s+i-1}`.
    T { pn: f64, n_level: usize },
}

/// Natural log of the cardinality bound for `kind`.
pub fn net_log_cardinality(kind: NetKind) -> Result<f64> {
    match kind {
        NetKind::Basic { l, n, a, eps } => {
            if !(a > 0.0 && eps > 0.0) || l == 0 || l > n {
                return Err(invalid("basic net needs a, eps > 0 and 1 <= l <= n"));
            }
            if eps >= a {
                return Ok(0.0);
            }
            Ok(l as f64 * (3.0 * a / eps * std::f64::consts::E * n as f64 / l as f64).ln())
        }
        NetKind::N1 {
            a,
            eps,
            c_pn,
            pn,
            n_s,
            s,
        } => {
            if !(a > 0.0 && eps > 0.0 && pn > 1.0 && c_pn > 0.0) {
                return Err(invalid("N1 net needs a, eps, C pn > 0 and pn > 1"));
            }
            let ns = n_s as f64;
            if eps < c_pn * a {
                Ok(2.0 * ((a / eps) * pn.powi(3)).ln() * ns)
            } else if eps < c_pn.powi(s as i32) * a {
                Ok(2.0 * pn.powi(3).ln() * ns)
            } else {
                Ok(0.0)
            }
        }
        NetKind::R { r, n } => {
            if !(r > 0.0 && r < 1.0) {
                return Err(invalid("R net needs 0 < r < 1"));
            }
            Ok(3.0 * r * n as f64 * (std::f64::consts::E / r).ln())
        }
        NetKind::T { pn, n_level } => {
            if !(pn > 1.0) {
                return Err(invalid("T net needs pn > 1"));
            }
            Ok(2.0 * pn.ln() * n_level as f64)
        }
    }
}

/// Product net for normalized second-tier steep vectors: per-block
/// coordinate grids on the top `n_s` and next `n_{s+1} - n_s` positions,
/// zero elsewhere, and a grid on the `e` direction.
#[derive(Debug, Clone)]
pub struct SteepNet {
    pub n: usize,
    pub pn: f64,
    pub eps: f64,
    n_s: usize,
    n_s1: usize,
    top_bound: f64,
    step: f64,
    e_step: f64,
}

/// A net point as grid indices: coordinates then the `e` coefficient.
pub type NetPoint = (Vec<(u32, i64)>, i64);

impl SteepNet {
    pub fn for_t2(clf: &Classifier) -> Self {
        let seq = &clf.seq;
        let pn = seq.pn();
        let c2 = clf.cp.c_t2 * pn.sqrt();
        let n = seq.n;
        let eps = (2.0 * n as f64).sqrt() / c2;
        Self {
            n,
            pn,
            eps,
            n_s: seq.n_s(),
            n_s1: seq.get(seq.s + 1).min(n),
            top_bound: (clf.cp.c_t1 * pn).powi(seq.s as i32),
            step: 1.0 / c2,
            // sqrt(pn) * e_step / 2 <= (1 - 1/sqrt 2) eps
            e_step: 0.5 * eps / pn.sqrt(),
        }
    }

    /// Log-cardinality of the full product net.
    pub fn log_cardinality(&self) -> f64 {
        let n = self.n as u64;
        let top = self.n_s as f64 * (2.0 * self.top_bound / self.step + 1.0).ln();
        let mid_len = (self.n_s1 - self.n_s) as f64;
        let mid = mid_len * (2.0 / self.step + 1.0).ln();
        let e_range = (self.n as f64).powi(3);
        ln_choose(n, self.n_s as u64)
            + ln_choose(n - self.n_s as u64, (self.n_s1 - self.n_s) as u64)
            + top
            + mid
            + (2.0 * e_range / self.e_step + 1.0).ln()
    }

    pub fn nearest(&self, x: &[f64]) -> NetPoint {
        let (sigma, _) = rearrangement(x);
        let mut coords = Vec::with_capacity(self.n_s1);
        for &i in sigma.iter().take(self.n_s1) {
            coords.push((i as u32, (x[i] / self.step).round() as i64));
        }
        coords.sort_unstable();
        let along = x.iter().sum::<f64>() / (self.n as f64).sqrt();
        (coords, (along / self.e_step).round() as i64)
    }

    pub fn point(&self, np: &NetPoint) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, k) in &np.0 {
            y[i as usize] = k as f64 * self.step;
        }
        let root = (self.n as f64).sqrt();
        let mean_part = y.iter().sum::<f64>() / root;
        let c = np.1 as f64 * self.e_step;
        let shift = (c - mean_part) / root;
        y.iter_mut().for_each(|v| *v += shift);
        y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub kind: String,
    pub n: usize,
    pub eps: f64,
    pub samples: usize,
    pub covered: usize,
    pub max_distance: f64,
    pub distinct_points: usize,
    pub log_cardinality: f64,
    pub lemma_log_bound: f64,
}

/// Class of vectors to sample for [`net_cover_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverTarget {
    T2Prime,
    T3Prime,
}

/// A random normalized second-tier steep vector: `x*_{n_s} = 1`, no
/// first-tier drop, and `x*_{n_{s+1}} < 1 / (C_T2 sqrt(pn))`.
pub fn sample_t2_prime(clf: &Classifier, rng: &mut impl Rng) -> Vec<f64> {
    let seq = &clf.seq;
    let n = seq.n;
    let n_s = seq.n_s();
    let n_s1 = seq.get(seq.s + 1).min(n);
    let pn = seq.pn();
    let low = 1.0 / (clf.cp.c_t2 * pn.sqrt());
    let mut mags = Vec::with_capacity(n);
    for _ in 0..n_s - 1 {
        mags.push(1.0 + 2.0 * rng.random::<f64>());
    }
    mags.push(1.0);
    for _ in n_s..n_s1 - 1 {
        mags.push(rng.random::<f64>());
    }
    for _ in n_s1 - 1..n {
        mags.push(0.999 * low * rng.random::<f64>());
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut x = vec![0.0; n];
    for (k, &i) in idx.iter().enumerate() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        x[i] = sign * mags[k];
    }
    x
}

/// Constructive covering check for normalized steep vectors at `n <= 200`.
/// Every sampled vector is mapped to its net point and the triple-norm
/// distance is compared with the net's `eps`. `point_cap` bounds how many
/// distinct net points are kept in memory.
pub fn net_cover_check(
    clf: &Classifier,
    target: CoverTarget,
    samples: usize,
    seed: u64,
    point_cap: usize,
) -> Result<CoverReport> {
    let n = clf.seq.n;
    if n > 200 {
        return Err(precondition(format!("net cover check is limited to n <= 200, got {n}")));
    }
    let pn = clf.seq.pn();
    match target {
        CoverTarget::T3Prime if clf.seq.tail_inverted => {
            let c2 = clf.cp.c_t2 * pn.sqrt();
            Ok(CoverReport {
                kind: "t3-prime (empty: n_{s+1} > n_{s+2})".into(),
                n,
                eps: (2.0 * n as f64).sqrt() / c2,
                samples: 0,
                covered: 0,
                max_distance: 0.0,
                distinct_points: 0,
                log_cardinality: 0.0,
                lemma_log_bound: net_log_cardinality(NetKind::T {
                    pn,
                    n_level: clf.seq.get(clf.seq.s + 2),
                })?,
            })
        }
        CoverTarget::T3Prime => Err(precondition(
            "T3' sampling is only implemented when the class is empty",
        )),
        CoverTarget::T2Prime => {
            let net = SteepNet::for_t2(clf);
            let mut rng = stream_rng(seed, 0);
            let mut seen: HashSet<NetPoint> = HashSet::new();
            let mut covered = 0usize;
            let mut max_distance = 0.0f64;
            let mut drawn = 0usize;
            while drawn < samples {
                let x = sample_t2_prime(clf, &mut rng);
                let label = clf.classify(&x);
                if label.steep() != Some(ClassTag::T2) {
                    continue;
                }
                drawn += 1;
                let np = net.nearest(&x);
                let z = net.point(&np);
                let diff: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
                let d = triple_norm(&diff, clf.seq.p, n);
                max_distance = max_distance.max(d);
                if d <= net.eps {
                    covered += 1;
                }
                seen.insert(np);
                if seen.len() > point_cap {
                    return Err(Error::NetTooLarge {
                        size: seen.len() as f64,
                        cap: point_cap,
                    });
                }
            }
            Ok(CoverReport {
                kind: "t2-prime".into(),
                n,
                eps: net.eps,
                samples,
                covered,
                max_distance,
                distinct_points: seen.len(),
                log_cardinality: net.log_cardinality(),
                lemma_log_bound: net_log_cardinality(NetKind::T {
                    pn,
                    n_level: clf.seq.get(clf.seq.s + 1),
                })?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::default_classifier;

    #[test]
    fn log_cardinality_examples() {
        let b = net_log_cardinality(NetKind::Basic { l: 2, n: 10, a: 1.0, eps: 0.5 }).unwrap();
        assert!((b - 2.0 * (30.0 * std::f64::consts::E).ln()).abs() < 1e-12);
        let z = net_log_cardinality(NetKind::Basic { l: 2, n: 10, a: 1.0, eps: 1.0 }).unwrap();
        assert_eq!(z, 0.0);
        let r = net_log_cardinality(NetKind::R { r: 0.01, n: 1000 }).unwrap();
        assert!((r - 168.15).abs() < 0.05, "{r}");
        assert!(net_log_cardinality(NetKind::Basic { l: 0, n: 10, a: 1.0, eps: 0.5 }).is_err());
    }

    #[test]
    fn grid_point_is_its_own_net_point() {
        let n = 100;
        let clf = default_classifier(n, (n as f64).ln() / n as f64, 1).unwrap();
        let net = SteepNet::for_t2(&clf);
        let mut rng = stream_rng(3, 0);
        let x = sample_t2_prime(&clf, &mut rng);
        let z = net.point(&net.nearest(&x));
        let z2 = net.point(&net.nearest(&z));
        let d: Vec<f64> = z.iter().zip(&z2).map(|(a, b)| a - b).collect();
        assert!(triple_norm(&d, clf.seq.p, n) <= net.eps);
        let zero = net.point(&net.nearest(&vec![0.0; n]));
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn t2_prime_samples_are_covered() {
        let n = 100;
        let clf = default_classifier(n, (n as f64).ln() / n as f64, 1).unwrap();
        let rep = net_cover_check(&clf, CoverTarget::T2Prime, 300, 11, 100_000).unwrap();
        assert_eq!(rep.covered, rep.samples);
        assert!(rep.max_distance <= rep.eps);
        let t3 = net_cover_check(&clf, CoverTarget::T3Prime, 10, 11, 10).unwrap();
        assert_eq!(t3.samples, 0);
        assert!(matches!(
            net_cover_check(&clf, CoverTarget::T2Prime, 50, 11, 3),
            Err(Error::NetTooLarge { .. })
        ));
    }
}
