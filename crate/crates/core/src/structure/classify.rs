use serde::{Deserialize, Serialize};

use super::growth::GrowthFunction;
use super::scale::ScaleSequence;
use super::ClassParams;
use crate::model::rearrangement;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum ClassTag {
    Zero,
    Y,
    AC { lambda: f64 },
    T1j { j: usize },
    T2,
    T3,
    Rk1 { k: usize },
    Rk2 { k: usize },
    Rkt { k: usize, t: usize, s: usize },
    V,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub tags: Vec<ClassTag>,
    /// `x*_{floor(rn)}`: the non-steep tags describe `x / scale`.
    pub scale: Option<f64>,
}

impl ClassLabel {
    pub fn has(&self, pred: impl Fn(&ClassTag) -> bool) -> bool {
        self.tags.iter().any(pred)
    }

    pub fn steep(&self) -> Option<ClassTag> {
        self.tags
            .iter()
            .copied()
            .find(|t| matches!(t, ClassTag::T1j { .. } | ClassTag::T2 | ClassTag::T3))
    }
}

/// Everything the classifier needs, precomputed once per parameter set.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub cp: ClassParams,
    pub seq: ScaleSequence,
    pub g: GrowthFunction,
    psi: Vec<f64>,
    /// `g(n / i)` for `i = 1..=n`.
    cap: Vec<f64>,
}

impl Classifier {
    pub fn new(cp: ClassParams, seq: ScaleSequence, g: GrowthFunction) -> Self {
        let n = seq.n;
        let top = cp.c_t2 * cp.c_t2 * seq.pn();
        let mut psi = vec![std::f64::consts::FRAC_1_SQRT_2];
        while 3.0 * psi[psi.len() - 1] < top {
            let next = 3.0 * psi[psi.len() - 1];
            psi.push(next);
        }
        psi.push(top);
        let cap = (1..=n)
            .map(|i| g.eval(n as f64 / i as f64).unwrap_or(f64::INFINITY))
            .collect();
        Self {
            cp,
            seq,
            g,
            psi,
            cap,
        }
    }

    /// `psi_1 .. psi_m`.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    fn rn(&self) -> usize {
        self.seq.get(self.seq.s + 2)
    }

    /// Range of `k` for the R classes: `n_s ..= floor(n / log^2(pn))`.
    pub fn r_range(&self) -> std::ops::RangeInclusive<usize> {
        let l = self.seq.pn().ln();
        let hi = (self.seq.n as f64 / (l * l)).floor() as usize;
        self.seq.n_s()..=hi.min(self.seq.n)
    }

    /// Minimal-j steep tag on the rearrangement `xs` (`xs[i-1] = x*_i`).
    pub fn steep_tag(&self, xs: &[f64]) -> Option<ClassTag> {
        let seq = &self.seq;
        let pn = seq.pn();
        let at = |k: usize| xs[k.clamp(1, xs.len()) - 1];
        for j in 1..=seq.s {
            if at(seq.get(j - 1)) > self.cp.c_t1 * pn * at(seq.get(j)) {
                return Some(ClassTag::T1j { j });
            }
        }
        let c = self.cp.c_t2 * pn.sqrt();
        if at(seq.get(seq.s)) > c * at(seq.get(seq.s + 1)) {
            return Some(ClassTag::T2);
        }
        if at(seq.get(seq.s + 1)) > c * at(seq.get(seq.s + 2)) {
            return Some(ClassTag::T3);
        }
        None
    }

    fn almost_constant(&self, y: &[f64], pivot: f64) -> Option<f64> {
        let need = y.len() - self.rn();
        for lambda in [pivot, -pivot] {
            let w = self.cp.rho * lambda.abs();
            let hits = y.iter().filter(|&&v| (v - lambda).abs() < w).count();
            if hits > need {
                return Some(lambda);
            }
        }
        None
    }

    fn spread(&self, y: &[f64]) -> bool {
        let n = y.len();
        let q = (self.cp.delta * n as f64).ceil().max(1.0) as usize;
        if q > n {
            return false;
        }
        let mut v = y.to_vec();
        v.sort_by(f64::total_cmp);
        v[q - 1] <= v[n - q] - self.cp.rho
    }

    fn under_cap(&self, ys: &[f64]) -> bool {
        ys.iter().zip(&self.cap).all(|(v, c)| v <= c)
    }

    /// All R tags for the normalized rearrangement `ys`.
    fn r_tags(&self, ys: &[f64], ac: bool, out: &mut Vec<ClassTag>, first_only: bool) {
        let n = ys.len();
        let nf = n as f64;
        let p = self.seq.p;
        let ratio_min = 2.0 * self.cp.c_rgz / p.sqrt();
        let r = self.cp.r;
        let c2 = self.cp.c_t2;
        // suffix sums of squares
        let mut suffix = vec![0.0f64; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + ys[i] * ys[i];
        }
        for k in self.r_range() {
            if k == 0 || k > n {
                continue;
            }
            let nb = suffix[k - 1].sqrt();
            let inf = ys[k - 1];
            if inf == 0.0 || nb / inf < ratio_min {
                continue;
            }
            let one = ac && (nf / 2.0).sqrt() <= nb && nb <= c2 * (p * nf * nf).sqrt();
            let two = 2.0 * nf.sqrt() / r <= nb && nb <= c2 * c2 * p * nf.powf(1.5);
            for (s, hit) in [(1usize, one), (2, two)] {
                if !hit {
                    continue;
                }
                out.push(if s == 1 { ClassTag::Rk1 { k } } else { ClassTag::Rk2 { k } });
                let level = nb / nf.sqrt();
                if let Some(t) = self.psi.windows(2).position(|w| w[0] <= level && level <= w[1]) {
                    out.push(ClassTag::Rkt { k, t: t + 1, s });
                }
                if first_only {
                    return;
                }
            }
        }
    }

    pub fn classify(&self, x: &[f64]) -> ClassLabel {
        let (_, xs) = rearrangement(x);
        if xs.first().is_none_or(|&v| v == 0.0) {
            return ClassLabel {
                tags: vec![ClassTag::Zero],
                scale: None,
            };
        }
        let mut tags = Vec::new();
        let steep = self.steep_tag(&xs);
        tags.extend(steep);
        let pivot = xs[self.rn() - 1];
        if pivot == 0.0 {
            return ClassLabel { tags, scale: None };
        }
        let y: Vec<f64> = x.iter().map(|v| v / pivot).collect();
        let ys: Vec<f64> = xs.iter().map(|v| v / pivot).collect();
        tags.push(ClassTag::Y);
        let ac = self.almost_constant(&y, 1.0);
        if let Some(lambda) = ac {
            tags.push(ClassTag::AC { lambda });
        }
        if self.under_cap(&ys) && self.spread(&y) {
            tags.push(ClassTag::V);
        }
        if steep.is_none() {
            self.r_tags(&ys, ac.is_some(), &mut tags, false);
        }
        ClassLabel {
            tags,
            scale: Some(pivot),
        }
    }

    pub fn partition_witness(&self, x: &[f64]) -> Witness {
        if x.iter().any(|v| !v.is_finite()) {
            return Witness::Counterexample {
                reason: "non-finite entry".into(),
            };
        }
        let (_, xs) = rearrangement(x);
        if xs.first().is_none_or(|&v| v == 0.0) {
            return Witness::Zero;
        }
        if let Some(tag) = self.steep_tag(&xs) {
            return Witness::Steep { tag };
        }
        let pivot = xs[self.rn() - 1];
        if pivot == 0.0 {
            return Witness::Counterexample {
                reason: "x*_{floor(rn)} = 0 but no steep tag".into(),
            };
        }
        let y: Vec<f64> = x.iter().map(|v| v / pivot).collect();
        let ys: Vec<f64> = xs.iter().map(|v| v / pivot).collect();
        if self.under_cap(&ys) && self.spread(&y) {
            return Witness::Gradual { scale: pivot };
        }
        let ac = self.almost_constant(&y, 1.0).is_some();
        let mut out = Vec::new();
        self.r_tags(&ys, ac, &mut out, true);
        match out.first() {
            Some(ClassTag::Rk1 { k }) => Witness::Rvector { scale: pivot, k: *k, s: 1 },
            Some(ClassTag::Rk2 { k }) => Witness::Rvector { scale: pivot, k: *k, s: 2 },
            _ => Witness::Counterexample {
                reason: format!(
                    "not steep, not gradual (cap {}, spread {}), no R window (ac {ac})",
                    self.under_cap(&ys),
                    self.spread(&y)
                ),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "witness", rename_all = "kebab-case")]
pub enum Witness {
    Zero,
    Steep { tag: ClassTag },
    Gradual { scale: f64 },
    Rvector { scale: f64, k: usize, s: usize },
    Counterexample { reason: String },
}

impl Witness {
    pub fn succeeded(&self) -> bool {
        !matches!(self, Witness::Counterexample { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::default_classifier;

    fn clf() -> Classifier {
        let n = 500;
        default_classifier(n, (n as f64).ln() / n as f64, 1).unwrap()
    }

    #[test]
    fn one_hot_is_first_steep() {
        let c = clf();
        let mut x = vec![0.0; 500];
        x[17] = 3.0;
        let l = c.classify(&x);
        assert_eq!(l.steep(), Some(ClassTag::T1j { j: 1 }));
        assert_eq!(c.partition_witness(&x), Witness::Steep { tag: ClassTag::T1j { j: 1 } });
    }

    #[test]
    fn constant_vector() {
        let c = clf();
        let l = c.classify(&[1.0; 500]);
        assert!(l.steep().is_none());
        assert!(l.has(|t| matches!(t, ClassTag::AC { lambda } if *lambda == 1.0)));
        assert!(!l.has(|t| matches!(t, ClassTag::V)));
        assert!(c.partition_witness(&[1.0; 500]).succeeded());
        assert!(c.partition_witness(&[-2.0; 500]).succeeded());
    }

    #[test]
    fn zero_vector() {
        let c = clf();
        assert_eq!(c.classify(&[0.0; 500]).tags, vec![ClassTag::Zero]);
        assert_eq!(c.partition_witness(&[0.0; 500]), Witness::Zero);
    }

    #[test]
    fn gradual_witness_built_from_cap() {
        let c = clf();
        let n = 500;
        let q = (c.cp.delta * n as f64).ceil() as usize;
        // 0.99 g(n/i) unclipped is steep at this size (T2), so clip at the
        // pivot and put a -1 block at the bottom for the spread
        let mut x: Vec<f64> = (1..=n)
            .map(|i| (0.99 * c.g.eval(n as f64 / i as f64).unwrap()).min(1.0))
            .collect();
        for v in x.iter_mut().skip(n - q) {
            *v = -1.0;
        }
        let l = c.classify(&x);
        assert!(l.has(|t| matches!(t, ClassTag::V)), "{l:?}");
    }

    #[test]
    fn steep_tags_are_scale_free() {
        let c = clf();
        let mut x: Vec<f64> = (0..500).map(|i| 1.0 / (1.0 + i as f64).powi(3)).collect();
        x[0] = 1e9;
        let a = c.classify(&x).steep();
        let scaled: Vec<f64> = x.iter().map(|v| v * 7.5).collect();
        assert_eq!(a, c.classify(&scaled).steep());
    }
}
