//! Zero row/column probabilities by inclusion–exclusion in big fixed point.
//!
//! Every quantity lives in `[0, 1]` scaled by `2^bits`. Terms carry exact
//! binomial coefficients, so the alternating sums cancel heavily; the
//! precision is raised until the error budget sits well below the result.

use num_bigint::{BigInt, Sign};
use num_traits::{Float, One, ToPrimitive, Zero};

use crate::error::{Error, Result};

const MAX_BITS: u64 = 1 << 16;
const GUARD: u64 = 64;

struct Fixed {
    bits: u64,
    one: BigInt,
}

impl Fixed {
    fn new(bits: u64) -> Self {
        Self {
            bits,
            one: BigInt::one() << bits,
        }
    }

    fn from_f64(&self, x: f64) -> BigInt {
        debug_assert!((0.0..=1.0).contains(&x));
        if x == 0.0 {
            return BigInt::zero();
        }
        let (mant, exp, _) = x.integer_decode();
        let m = BigInt::from(mant);
        let shift = exp as i64 + self.bits as i64;
        if shift >= 0 {
            m << shift as u64
        } else {
            m >> (-shift) as u64
        }
    }

    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) >> self.bits
    }

    fn pow(&self, base: &BigInt, mut e: u64) -> BigInt {
        let mut acc = self.one.clone();
        let mut b = base.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        acc
    }

    fn to_f64(&self, a: &BigInt) -> f64 {
        if a.is_zero() {
            return 0.0;
        }
        let sign = if a.sign() == Sign::Minus { -1.0 } else { 1.0 };
        let mag = a.magnitude();
        let len = mag.bits();
        let drop = len.saturating_sub(64);
        let top = (mag >> drop).to_f64().unwrap();
        sign * ldexp(top, drop as i64 - self.bits as i64)
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

fn binomial_row(m: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(m as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for k in 1..=m {
        c = c * BigInt::from(m - k + 1) / BigInt::from(k);
        row.push(c.clone());
    }
    row
}

/// Powers `q^0 .. q^len-1`.
fn powers(fx: &Fixed, q: &BigInt, len: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(len);
    let mut cur = fx.one.clone();
    for _ in 0..len {
        out.push(cur.clone());
        cur = fx.mul(&cur, q);
    }
    out
}

/// P(an `m1 x m2` Bernoulli matrix has neither a zero row nor a zero column),
/// scaled by `2^bits`. `qp` holds `q^0 ..= q^{max(m1, m2)}`.
fn no_zero_lines(fx: &Fixed, qp: &[BigInt], m1: u64, m2: u64) -> BigInt {
    let binom = binomial_row(m1);
    let q_m2 = &qp[m2 as usize];
    let mut q_km2 = fx.one.clone();
    let mut acc = BigInt::zero();
    for k in 0..=m1 {
        let inner = &fx.one - &qp[(m1 - k) as usize];
        let t = fx.mul(&q_km2, &fx.pow(&inner, m2)) * &binom[k as usize];
        if k % 2 == 0 {
            acc += t;
        } else {
            acc -= t;
        }
        q_km2 = fx.mul(&q_km2, q_m2);
    }
    acc
}

/// log2 of an upper bound on the absolute rounding error, in units of
/// `2^-bits`, given the largest exact coefficient and the number of terms.
fn error_bits(max_coeff_bits: u64, terms: u64, n: u64) -> u64 {
    max_coeff_bits + 64 - (terms + 1).leading_zeros() as u64 + 2 * (64 - n.leading_zeros() as u64) + 8
}

fn run_adaptive(
    base_error_bits: u64,
    mut eval: impl FnMut(&Fixed) -> BigInt,
) -> Result<f64> {
    let mut bits = base_error_bits + GUARD + 64;
    loop {
        let fx = Fixed::new(bits);
        let v = eval(&fx);
        // need |v| >= 2^(err + GUARD) in fixed units
        let mag_bits = v.magnitude().bits();
        if v.is_zero() || mag_bits < base_error_bits + GUARD {
            let deficit = (base_error_bits + GUARD).saturating_sub(mag_bits);
            let next = bits + deficit.max(bits / 2).max(128);
            if next > MAX_BITS {
                return Err(Error::PrecisionLoss(format!(
                    "inclusion-exclusion needs more than {MAX_BITS} bits"
                )));
            }
            bits = next;
            continue;
        }
        return Ok(fx.to_f64(&v));
    }
}

/// `1 - sum_k (-1)^k C(n,k) q^{kn} (1 - q^{n-k})^n` with `q = 1 - p`.
pub fn zero_rowcol_exact(n: u64, p: f64) -> Result<f64> {
    if p >= 1.0 {
        return Ok(0.0);
    }
    if p <= 0.0 {
        return Ok(1.0);
    }
    let q = 1.0 - p;
    let coeff_bits = binomial_row(n).iter().map(|c| c.bits()).max().unwrap_or(0);
    let err = error_bits(coeff_bits, n + 1, n * n);
    run_adaptive(err, |fx| {
        let qb = fx.from_f64(q);
        let qp = powers(fx, &qb, n as usize + 1);
        &fx.one - no_zero_lines(fx, &qp, n, n)
    })
}

/// `P(max(#zero rows, #zero cols) >= beta)` through the exact joint law
/// `P(Zr = a, Zc = b) = C(n,a) C(n,b) q^{an + bn - ab} f(n-a, n-b)`.
pub fn omega_rc_complement_exact(n: u64, p: f64, beta: u64) -> Result<f64> {
    if beta > n {
        return Ok(0.0);
    }
    if p >= 1.0 {
        return Ok(0.0);
    }
    if p <= 0.0 {
        return Ok(1.0);
    }
    let q = 1.0 - p;
    let top = binomial_row(n);
    let coeff_bits = top.iter().map(|c| c.bits()).max().unwrap_or(0);
    let terms = beta * beta * (n + 1);
    let err = error_bits(3 * coeff_bits, terms, n * n);
    run_adaptive(err, |fx| {
        let qb = fx.from_f64(q);
        let qp = powers(fx, &qb, n as usize + 1);
        let mut inside = BigInt::zero();
        for a in 0..beta.min(n + 1) {
            for b in 0..beta.min(n + 1) {
                let e = a * n + b * n - a * b;
                let w = fx.mul(&fx.pow(&qb, e), &no_zero_lines(fx, &qp, n - a, n - b));
                inside += w * &top[a as usize] * &top[b as usize];
            }
        }
        &fx.one - inside
    })
}
