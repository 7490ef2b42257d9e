//! Wilson intervals and order-independent accumulators.

use serde::{Deserialize, Serialize};

/// Wilson center and half-width-derived standard error at one sigma for
/// `hits` successes out of `trials`.
pub fn wilson(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 0.0);
    }
    let n = trials as f64;
    let phat = hits as f64 / n;
    let z2 = 1.0f64;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    (center, half)
}

/// Raw proportion with its Wilson standard error.
pub fn proportion(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 0.0);
    }
    (hits as f64 / trials as f64, wilson(hits, trials).1)
}

/// Count accumulator; merging is addition, so any split of the work gives
/// the same totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub hits: u64,
    pub trials: u64,
}

impl Tally {
    pub fn one(hit: bool) -> Self {
        Self {
            hits: hit as u64,
            trials: 1,
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            hits: self.hits + other.hits,
            trials: self.trials + other.trials,
        }
    }

    pub fn estimate(&self) -> (f64, f64) {
        proportion(self.hits, self.trials)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_basics() {
        let (c, se) = wilson(50, 100);
        assert!((c - 0.5).abs() < 1e-12);
        assert!((se - 0.05 / (1.01)).abs() < 1e-3);
        let (c0, se0) = wilson(0, 1000);
        assert!(c0 > 0.0 && se0 > 0.0);
    }

    #[test]
    fn tally_merge() {
        let t = Tally::one(true).merge(Tally::one(false)).merge(Tally::default());
        assert_eq!(t, Tally { hits: 1, trials: 2 });
    }
}
