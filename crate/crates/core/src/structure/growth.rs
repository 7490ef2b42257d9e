use serde::{Deserialize, Serialize};

use super::scale::ScaleSequence;
use crate::error::{precondition, Result};

/// One piece `coef * t^exponent` on `[start, next start)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub coef: f64,
    pub exponent: f64,
    /// The defining coefficient was raised to the left limit so that the
    /// function stays nondecreasing.
    pub lifted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFunction {
    pub n: usize,
    pub p: f64,
    pub c_t1: f64,
    pub pieces: Vec<Piece>,
    pub k3: f64,
    pub b_n: f64,
}

impl GrowthFunction {
    pub fn new(seq: &ScaleSequence, c_t1: f64) -> Self {
        let n = seq.n as f64;
        let pn = seq.pn();
        let s = seq.s;
        let mut pieces = vec![
            Piece {
                start: 1.0,
                coef: 2.0,
                exponent: 1.5,
                lifted: false,
            },
            Piece {
                start: n / seq.get(s + 1) as f64,
                coef: 2.0,
                exponent: 3.0,
                lifted: false,
            },
        ];
        for j in 0..s {
            let start = n / seq.get(s - j) as f64;
            let coef = (c_t1 * pn).powi(j as i32) * pn.powi(4) / start;
            pieces.push(Piece {
                start,
                coef,
                exponent: 1.0,
                lifted: false,
            });
        }
        // raise any piece that starts below the previous piece's left limit
        for k in 1..pieces.len() {
            let prev = pieces[k - 1];
            let left = prev.coef * pieces[k].start.powf(prev.exponent);
            let here = pieces[k].coef * pieces[k].start.powf(pieces[k].exponent);
            if here < left {
                pieces[k].coef = left / pieces[k].start.powf(pieces[k].exponent);
                pieces[k].lifted = true;
            }
        }
        let mut g = Self {
            n: seq.n,
            p: seq.p,
            c_t1,
            pieces,
            k3: 0.0,
            b_n: 0.0,
        };
        g.k3 = g.partial_products(200).last().copied().unwrap_or(1.0);
        g.b_n = (1..=seq.n)
            .map(|i| g.eval_unchecked(n / i as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        g
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        let idx = self.pieces.partition_point(|pc| pc.start <= t).max(1) - 1;
        let pc = self.pieces[idx];
        pc.coef * t.powf(pc.exponent)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return Err(precondition(format!("growth function needs t >= 1, got {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    /// `prod_{j <= J} g(2^j)^{j 2^-j}` for `J = 1..=terms`.
    pub fn partial_products(&self, terms: usize) -> Vec<f64> {
        let mut acc = 0.0f64;
        (1..=terms)
            .map(|j| {
                let t = 2f64.powi(j as i32);
                acc += j as f64 * 2f64.powi(-(j as i32)) * self.eval_unchecked(t).ln();
                acc.exp()
            })
            .collect()
    }

    pub fn any_lifted(&self) -> bool {
        self.pieces.iter().any(|p| p.lifted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::scale::scale_sequence;

    fn small_p(n: usize) -> GrowthFunction {
        let p = (n as f64).ln() / n as f64;
        GrowthFunction::new(&scale_sequence(n, p, 1, 4.0, 0.05).unwrap(), 100.0)
    }

    #[test]
    fn first_piece_values() {
        let g = small_p(500);
        assert_eq!(g.eval(1.0).unwrap(), 2.0);
        let r = g.eval(2.0).unwrap() / g.eval(1.0).unwrap();
        assert!((r - 2f64.powf(1.5)).abs() < 1e-12);
        assert!(g.eval(4.0).unwrap() >= g.eval(2.0).unwrap() + 2.0);
        assert!(g.eval(0.5).is_err());
    }

    #[test]
    fn bn_lower_bound() {
        let g = small_p(500);
        assert!(g.b_n.is_finite());
        assert!(g.b_n >= (500f64).sqrt());
    }

    #[test]
    fn monotone_and_growth_condition() {
        let g = small_p(2000);
        let ts: Vec<f64> = (0..400).map(|i| 1.0 * (2000f64).powf(i as f64 / 399.0)).collect();
        for w in ts.windows(2) {
            assert!(g.eval(w[1]).unwrap() >= g.eval(w[0]).unwrap());
        }
        for &t in &ts {
            for a in 2..=64 {
                let a = a as f64;
                assert!(g.eval(a * t).unwrap() >= g.eval(t).unwrap() + a);
            }
        }
    }

    #[test]
    fn partial_products_increase_to_k3() {
        let g = small_p(500);
        let pp = g.partial_products(200);
        assert!(pp.windows(2).all(|w| w[1] >= w[0]));
        assert!(pp.iter().all(|&v| v <= g.k3 * (1.0 + 1e-12)));
    }
}
