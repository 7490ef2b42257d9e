use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Error, Result};
use crate::model::{regime_of, Regime};

/// Which ladder ratio produced the interior thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ladder {
    /// ratio `pn / log^3(pn)`
    Standard,
    /// ratio `pn`, used when `pn / log^3(pn) <= 1` or the standard ladder
    /// collapses after rounding
    DeskScale,
    /// `3^j` up to `n_s`, used when `exp(pn / log^2(pn))` already reaches
    /// `n_s` (small `n`)
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSequence {
    pub regime: Regime,
    pub ladder: Ladder,
    pub t0: usize,
    pub t1: usize,
    pub s: usize,
    /// `n_0 ..= n_{s+2}`.
    pub n_j: Vec<usize>,
    /// `n_{s+1} > n_{s+2}`; the third steep class is then empty.
    pub tail_inverted: bool,
    pub n: usize,
    pub p: f64,
}

impl ScaleSequence {
    pub fn get(&self, j: usize) -> usize {
        self.n_j[j]
    }

    pub fn n_s(&self) -> usize {
        self.n_j[self.s]
    }

    pub fn pn(&self) -> f64 {
        self.p * self.n as f64
    }
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Smallest `t >= 1` with `target <= base * ratio^t`.
fn steps_to_reach(base: f64, ratio: f64, target: f64) -> usize {
    let mut t = 1usize;
    let mut v = base * ratio;
    while v < target {
        v *= ratio;
        t += 1;
    }
    t
}

fn truncated(n_s: usize) -> Result<(usize, usize, usize, Vec<usize>)> {
    if n_s < 2 {
        return Err(Error::Degenerate(format!("n_s = {n_s} leaves no room above n_0 = 1")));
    }
    let mut v = vec![1usize];
    let mut pow3 = 3usize;
    while pow3 < n_s {
        v.push(pow3);
        pow3 *= 3;
    }
    v.push(n_s);
    let s = v.len() - 1;
    Ok((s, 0, s, v))
}

pub fn scale_sequence(n: usize, p: f64, beta: usize, gamma: f64, r: f64) -> Result<ScaleSequence> {
    if n < 2 || !(p > 0.0 && p < 1.0) || beta < 1 {
        return Err(invalid(format!("need n >= 2, 0 < p < 1, beta >= 1 (n={n}, p={p}, beta={beta})")));
    }
    if !(gamma >= 1.0) {
        return Err(invalid("gamma must be at least 1"));
    }
    let nf = n as f64;
    let pn = p * nf;
    if gamma * p >= 1.0 {
        return Err(Error::Degenerate(format!(
            "gamma p = {} >= 1 makes n_s = n_0 = 1",
            gamma * p
        )));
    }
    if pn <= 1.0 {
        return Err(precondition(format!("pn = {pn} must exceed 1")));
    }
    let n_s = (1.0 / (gamma * p)).ceil();
    if n_s > nf {
        return Err(precondition("1/(gamma p) exceeds n"));
    }
    let regime = regime_of(n, p, beta);
    let log_pn = pn.ln();
    let std_ratio = pn / log_pn.powi(3);
    let n_s1 = (nf / p).sqrt().ceil() as usize;
    let n_s2 = (r * nf).floor() as usize;
    if n_s2 == 0 {
        return Err(precondition(format!("floor(r n) = 0 for r = {r}, n = {n}")));
    }

    let build = |ratio: f64| -> Option<(usize, usize, usize, Vec<usize>)> {
        if ratio <= 1.0 {
            return None;
        }
        match regime {
            Regime::SmallP => {
                let e0 = (pn / (log_pn * log_pn)).exp().ceil();
                if !(e0 < n_s) {
                    return None;
                }
                let mut t0 = 0usize;
                let mut pow3 = 1.0f64;
                while pow3 < e0 {
                    pow3 *= 3.0;
                    t0 += 1;
                }
                let t1 = steps_to_reach(e0, ratio, n_s);
                let s = t0 + t1;
                let mut v = vec![1usize];
                for j in 1..s {
                    let nj = if j < t0 {
                        3f64.powi(j as i32)
                    } else if j == t0 {
                        e0
                    } else {
                        (e0 * ratio.powi((j - t0) as i32)).ceil()
                    };
                    v.push(nj as usize);
                }
                v.push(n_s as usize);
                Some((t0, t1, s, v))
            }
            Regime::LargeP => {
                let s = if n_s <= 2.0 { 1 } else { 1 + steps_to_reach(2.0, ratio, n_s) };
                let mut v = vec![1usize];
                for j in 1..s {
                    let nj = if j == 1 { 2.0 } else { (2.0 * ratio.powi(j as i32 - 1)).ceil() };
                    v.push(nj as usize);
                }
                v.push(n_s as usize);
                Some((0, 0, s, v))
            }
        }
    };

    if regime == Regime::LargeP && p > 1.0 / (2.0 * gamma) {
        return Err(precondition(format!(
            "large-p ladder needs p <= 1/(2 gamma) = {}",
            1.0 / (2.0 * gamma)
        )));
    }

    let (ladder, (t0, t1, s, mut v)) = match build(std_ratio).filter(|b| strictly_increasing(&b.3)) {
        Some(b) => (Ladder::Standard, b),
        None => match build(pn).filter(|b| strictly_increasing(&b.3)) {
            Some(b) => (Ladder::DeskScale, b),
            None => (Ladder::Truncated, truncated(n_s as usize)?),
        },
    };
    if n_s1 <= v[s] {
        return Err(Error::Degenerate("n_{s+1} does not exceed n_s".into()));
    }
    v.push(n_s1.min(n));
    v.push(n_s2);
    Ok(ScaleSequence {
        regime,
        ladder,
        t0,
        t1,
        s,
        tail_inverted: v[s + 1] > v[s + 2],
        n_j: v,
        n,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t0_at_thousand() {
        let n = 1000;
        let p = (n as f64).ln() / n as f64;
        let seq = scale_sequence(n, p, 1, 4.0, 0.05).unwrap();
        assert_eq!(seq.regime, Regime::SmallP);
        assert_eq!(seq.t0, 2);
        assert_eq!(seq.n_j[seq.t0], 7);
        assert!(seq.s as f64 <= 1.1 * (n as f64).ln() / (p * n as f64).ln());
    }

    #[test]
    fn small_p_five_hundred() {
        let n = 500;
        let p = (n as f64).ln() / n as f64;
        let seq = scale_sequence(n, p, 1, 4.0, 0.05).unwrap();
        assert_eq!(&seq.n_j[..=seq.s], &[1, 3, 7, 21]);
        assert_eq!(seq.n_j[seq.s + 1], 201);
        assert_eq!(seq.n_j[seq.s + 2], 25);
        assert!(seq.tail_inverted);
    }

    #[test]
    fn large_p_has_two_levels() {
        let n = 2000;
        let seq = scale_sequence(n, 0.1, 1, 4.0, 0.05).unwrap();
        assert_eq!(seq.regime, Regime::LargeP);
        assert_eq!(seq.s, 2);
        assert_eq!(seq.n_j[1], 2);
        assert_eq!(seq.n_s(), 3);
    }

    #[test]
    fn degenerate_gamma_p() {
        assert!(matches!(
            scale_sequence(100, 0.3, 1, 4.0, 0.05),
            Err(Error::Degenerate(_))
        ));
        assert!(scale_sequence(100, 0.2, 1, 4.0, 0.05).is_err());
    }

    #[test]
    fn small_n_truncates() {
        let n = 100;
        let p = (n as f64).ln() / n as f64;
        let seq = scale_sequence(n, p, 1, 4.0, 0.05).unwrap();
        assert_eq!(seq.ladder, Ladder::Truncated);
        assert_eq!(&seq.n_j[..=seq.s], &[1, 3, 6]);
    }

    #[test]
    fn invariants_hold_over_grid() {
        for &n in &[200usize, 500, 1000, 4000] {
            for &c in &[1.0, 1.05, 1.5, 3.0, 10.0] {
                let p = c * (n as f64).ln() / n as f64;
                if p * 8.0 > 1.0 {
                    continue;
                }
                let seq = scale_sequence(n, p, 1, 4.0, 0.05).unwrap();
                assert_eq!(seq.n_j[0], 1);
                assert!(strictly_increasing(&seq.n_j[..=seq.s + 1]));
                assert_eq!(seq.n_s(), (1.0 / (4.0 * p)).ceil() as usize);
                assert_eq!(seq.n_j.len(), seq.s + 3);
            }
        }
    }
}
