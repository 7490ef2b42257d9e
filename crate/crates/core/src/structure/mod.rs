//! Scale ladders, the growth function, vector classes, nets and the
//! triple norm.

mod classify;
mod growth;
mod nets;
mod scale;

pub use classify::{ClassLabel, ClassTag, Classifier, Witness};
pub use growth::{GrowthFunction, Piece};
pub use nets::{
    net_cover_check, net_log_cardinality, sample_t2_prime, CoverReport, CoverTarget, NetKind,
    NetPoint, SteepNet,
};
pub use scale::{scale_sequence, Ladder, ScaleSequence};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub gamma: f64,
    pub c_t1: f64,
    pub c_t2: f64,
    pub r: f64,
    pub delta: f64,
    pub rho: f64,
    pub phi: f64,
    pub phi0: f64,
    pub k_threshold: usize,
    /// Rogozin constant used by the R windows.
    pub c_rgz: f64,
}

impl ClassParams {
    pub fn defaults(beta: usize) -> Self {
        let beta = beta.max(1);
        Self {
            gamma: 4.0,
            c_t1: 100.0,
            c_t2: 100.0,
            r: 0.05,
            delta: 0.015,
            rho: 0.05,
            phi: 8.0,
            phi0: (1.0 / (2.0 * beta as f64)).min(0.2) * 0.5,
            k_threshold: (8 * beta + 1).max(32),
            c_rgz: 1.0,
        }
    }

    pub fn validate(&self, beta: usize) -> Result<()> {
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(invalid(what.to_string())) };
        check(self.gamma >= 1.0, "gamma must be >= 1")?;
        check(self.c_t1 > 1.0, "C_T1 must exceed 1")?;
        check(self.c_t2 > 1.0, "C_T2 must exceed 1")?;
        check(self.r > 0.0 && self.r < 0.1, "r must lie in (0, 1/10)")?;
        check(self.delta > 0.0 && self.delta < self.r / 3.0, "delta must lie in (0, r/3)")?;
        check(self.rho > 0.0 && self.rho < 0.1, "rho must lie in (0, 1/10)")?;
        check(self.phi > 1.0, "phi must exceed 1")?;
        check(
            self.phi0 > 0.0 && self.phi0 < 1.0 / (2.0 * beta as f64),
            "phi0 must lie in (0, 1/(2 beta))",
        )?;
        check(self.k_threshold > 8 * beta, "k threshold must exceed 8 beta")?;
        check(self.c_rgz > 0.0, "C_Rgz must be positive")?;
        Ok(())
    }
}

/// Scale ladder, growth function and classifier for `(n, p, beta)`.
pub fn classifier_for(n: usize, p: f64, beta: usize, cp: ClassParams) -> Result<Classifier> {
    cp.validate(beta)?;
    let seq = scale_sequence(n, p, beta, cp.gamma, cp.r)?;
    let g = GrowthFunction::new(&seq, cp.c_t1);
    Ok(Classifier::new(cp, seq, g))
}

pub fn default_classifier(n: usize, p: f64, beta: usize) -> Result<Classifier> {
    classifier_for(n, p, beta, ClassParams::defaults(beta))
}

/// `||x - <x,e> e|| + sqrt(pn) |<x,e>|` with `e = 1/sqrt(n)`.
pub fn triple_norm(x: &[f64], p: f64, n: usize) -> f64 {
    let root = (n as f64).sqrt();
    let along = x.iter().sum::<f64>() / root;
    let shift = along / root;
    let perp = x.iter().map(|v| (v - shift) * (v - shift)).sum::<f64>().sqrt();
    perp + (p * n as f64).sqrt() * along.abs()
}

/// `sqrt((C_T1 pn)^{2j} + n / (C_T1 pn)^2)`: bound on `||x|| / x*_{n_{j-1}}`
/// for `x` in the `j`-th first-tier steep class.
pub fn steep_norm_bound(j: usize, seq: &ScaleSequence, cp: &ClassParams) -> Result<f64> {
    if j < 1 || j > seq.s {
        return Err(invalid(format!("j = {j} outside 1..={}", seq.s)));
    }
    Ok(steep_norm_formula(j, cp.c_t1 * seq.pn(), seq.n))
}

pub fn steep_norm_formula(j: usize, c_pn: f64, n: usize) -> f64 {
    (c_pn.powi(2 * j as i32) + n as f64 / (c_pn * c_pn)).sqrt()
}
