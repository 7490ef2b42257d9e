//! Exact rank over the rationals.
//!
//! `bareiss_rank` is plain fraction-free elimination. `certified_rank`
//! first peels zero and singleton rows/columns (each singleton contributes
//! exactly one to the rank), then runs elimination on the
//! remaining core, first over GF(2) and then modulo primes. A modular rank
//! never exceeds the rational rank, so a full modular rank is a
//! certificate. Otherwise the maximum over primes whose product exceeds the
//! Hadamard bound on the core's minors is exact: some prime in the set
//! cannot divide a nonzero maximal minor.

use num_bigint::BigInt;
use std::sync::OnceLock;

use num_traits::{One, Zero};

use crate::model::MatrixSample;

/// Fraction-free elimination on an integer matrix given as rows.
pub fn bareiss_rank(rows: &[Vec<i64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let wide: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    match bareiss_small(wide) {
        Some(r) => r,
        None => {
            let big: Vec<Vec<BigInt>> = rows
                .iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect();
            bareiss_big(big)
        }
    }
}

/// `None` on i128 overflow.
fn bareiss_small(mut m: Vec<Vec<i128>>) -> Option<usize> {
    let rows = m.len();
    let cols = m[0].len();
    let mut prev: i128 = 1;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, piv);
        let (top, rest) = m.split_at_mut(r + 1);
        let prow = &top[r];
        let pv = prow[c];
        for row in rest.iter_mut() {
            let f = row[c];
            for j in (c + 1)..cols {
                let a = pv.checked_mul(row[j])?;
                let b = f.checked_mul(prow[j])?;
                row[j] = a.checked_sub(b)? / prev;
            }
            row[c] = 0;
        }
        prev = pv;
        r += 1;
    }
    Some(r)
}

fn bareiss_big(mut m: Vec<Vec<BigInt>>) -> usize {
    let rows = m.len();
    let cols = m[0].len();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, piv);
        let (top, rest) = m.split_at_mut(r + 1);
        let prow = &top[r];
        let pv = &prow[c];
        for row in rest.iter_mut() {
            let f = row[c].clone();
            for j in (c + 1)..cols {
                let v = if f.is_zero() {
                    pv * &row[j]
                } else {
                    pv * &row[j] - &f * &prow[j]
                };
                row[j] = if prev.is_one() { v } else { v / &prev };
            }
            row[c] = BigInt::zero();
        }
        prev = pv.clone();
        r += 1;
    }
    r
}

/// Bareiss rank of a 0/1 sample.
pub fn exact_rank(a: &MatrixSample) -> usize {
    let n = a.n();
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j) as i64).collect())
        .collect();
    bareiss_rank(&rows)
}

/// Primes just below 2^31, largest first.
fn primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let is_prime = |v: u64| (2..).take_while(|d| d * d <= v).all(|d| v % d != 0);
        let mut out = Vec::new();
        let mut c = (1u64 << 31) - 1;
        while out.len() < 96 {
            if is_prime(c) {
                out.push(c);
            }
            c -= 2;
        }
        out
    })
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Rank modulo the prime `p < 2^32` of a matrix with entries already
/// reduced. Pivot rows are chosen by fewest nonzeros to limit fill-in.
pub(crate) fn rank_mod_prime(m: Vec<Vec<u64>>, cols: usize, p: u64) -> usize {
    const FIRST: u64 = (1 << 31) - 1;
    if p == FIRST {
        // constant modulus lets the compiler strength-reduce `%`
        rank_mod_impl(m, cols, FIRST, |x| x % FIRST)
    } else {
        rank_mod_impl(m, cols, p, |x| x % p)
    }
}

#[inline(always)]
fn rank_mod_impl(
    mut m: Vec<Vec<u64>>,
    cols: usize,
    p: u64,
    reduce: impl Fn(u64) -> u64,
) -> usize {
    let rows = m.len();
    let mut alive: Vec<usize> = (0..rows).collect();
    let mut nnz: Vec<usize> = m.iter().map(|r| r.iter().filter(|&&v| v != 0).count()).collect();
    let mut rank = 0;
    let mut piv_idx: Vec<usize> = Vec::with_capacity(cols);
    for c in 0..cols {
        let mut best: Option<usize> = None;
        for (pos, &i) in alive.iter().enumerate() {
            if m[i][c] != 0 && best.is_none_or(|b| nnz[i] < nnz[alive[b]]) {
                best = Some(pos);
            }
        }
        let Some(bpos) = best else { continue };
        let pr = alive.swap_remove(bpos);
        rank += 1;
        let inv = pow_mod(m[pr][c], p - 2, p);
        piv_idx.clear();
        piv_idx.extend(((c + 1)..cols).filter(|&j| m[pr][j] != 0));
        let prow = std::mem::take(&mut m[pr]);
        for &i in &alive {
            let e = m[i][c];
            if e == 0 {
                continue;
            }
            let f = p - reduce(e * inv);
            let row = &mut m[i];
            row[c] = 0;
            let mut delta: isize = -1;
            for &j in &piv_idx {
                let old = row[j];
                let new = reduce(old + f * prow[j]);
                row[j] = new;
                delta += (new != 0) as isize - (old != 0) as isize;
            }
            nnz[i] = (nnz[i] as isize + delta) as usize;
        }
        m[pr] = prow;
        if alive.is_empty() {
            break;
        }
    }
    rank
}

/// Rank over GF(2) of bit-packed rows, each `words` long.
pub(crate) fn rank_gf2(mut rows: Vec<Vec<u64>>, cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let (w, b) = (c / 64, 1u64 << (c % 64));
        let Some(pos) = (rank..rows.len()).find(|&i| rows[i][w] & b != 0) else {
            continue;
        };
        rows.swap(rank, pos);
        let (top, rest) = rows.split_at_mut(rank + 1);
        let prow = &top[rank];
        for row in rest.iter_mut() {
            if row[w] & b != 0 {
                for (x, y) in row[w..].iter_mut().zip(&prow[w..]) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankRoute {
    Peeled,
    /// full rank of the core over GF(2)
    Binary,
    /// full rank of the core modulo one prime
    Modular,
    /// maximum over enough primes to exceed the Hadamard bound on minors
    MultiModular,
    Bareiss,
}

/// Exact rational rank via peeling, modular certificate and Bareiss fallback.
pub fn certified_rank(a: &MatrixSample) -> (usize, RankRoute) {
    let n = a.n();
    let rows_sup = a.row_supports();
    let cols_sup = a.col_supports();
    let mut row_alive = vec![true; n];
    let mut col_alive = vec![true; n];
    let mut row_deg: Vec<usize> = rows_sup.iter().map(|s| s.len()).collect();
    let mut col_deg: Vec<usize> = cols_sup.iter().map(|s| s.len()).collect();
    let mut peeled = 0usize;

    // stack entries: (is_row, index)
    let mut stack: Vec<(bool, usize)> = Vec::new();
    for i in 0..n {
        if row_deg[i] <= 1 {
            stack.push((true, i));
        }
        if col_deg[i] <= 1 {
            stack.push((false, i));
        }
    }
    let kill_row = |i: usize,
                    row_alive: &mut [bool],
                    col_deg: &mut [usize],
                    col_alive: &[bool],
                    stack: &mut Vec<(bool, usize)>| {
        row_alive[i] = false;
        for &j in &rows_sup[i] {
            let j = j as usize;
            if col_alive[j] {
                col_deg[j] -= 1;
                if col_deg[j] <= 1 {
                    stack.push((false, j));
                }
            }
        }
    };
    let kill_col = |j: usize,
                    col_alive: &mut [bool],
                    row_deg: &mut [usize],
                    row_alive: &[bool],
                    stack: &mut Vec<(bool, usize)>| {
        col_alive[j] = false;
        for &i in &cols_sup[j] {
            let i = i as usize;
            if row_alive[i] {
                row_deg[i] -= 1;
                if row_deg[i] <= 1 {
                    stack.push((true, i));
                }
            }
        }
    };
    while let Some((is_row, idx)) = stack.pop() {
        if is_row {
            if !row_alive[idx] {
                continue;
            }
            match row_deg[idx] {
                0 => kill_row(idx, &mut row_alive, &mut col_deg, &col_alive, &mut stack),
                1 => {
                    let j = rows_sup[idx]
                        .iter()
                        .map(|&j| j as usize)
                        .find(|&j| col_alive[j])
                        .expect("degree one row has a live column");
                    peeled += 1;
                    kill_row(idx, &mut row_alive, &mut col_deg, &col_alive, &mut stack);
                    kill_col(j, &mut col_alive, &mut row_deg, &row_alive, &mut stack);
                }
                _ => {}
            }
        } else {
            if !col_alive[idx] {
                continue;
            }
            match col_deg[idx] {
                0 => kill_col(idx, &mut col_alive, &mut row_deg, &row_alive, &mut stack),
                1 => {
                    let i = cols_sup[idx]
                        .iter()
                        .map(|&i| i as usize)
                        .find(|&i| row_alive[i])
                        .expect("degree one column has a live row");
                    peeled += 1;
                    kill_col(idx, &mut col_alive, &mut row_deg, &row_alive, &mut stack);
                    kill_row(i, &mut row_alive, &mut col_deg, &col_alive, &mut stack);
                }
                _ => {}
            }
        }
    }

    let core_rows: Vec<usize> = (0..n).filter(|&i| row_alive[i]).collect();
    let core_cols: Vec<usize> = (0..n).filter(|&j| col_alive[j]).collect();
    if core_rows.is_empty() || core_cols.is_empty() {
        return (peeled, RankRoute::Peeled);
    }
    let full = core_rows.len().min(core_cols.len());
    let words = core_cols.len().div_ceil(64);
    let packed: Vec<Vec<u64>> = core_rows
        .iter()
        .map(|&i| {
            let mut r = vec![0u64; words];
            for (k, &j) in core_cols.iter().enumerate() {
                if a.get(i, j) {
                    r[k / 64] |= 1 << (k % 64);
                }
            }
            r
        })
        .collect();
    if rank_gf2(packed, core_cols.len()) == full {
        return (peeled + full, RankRoute::Binary);
    }
    let dense: Vec<Vec<u64>> = core_rows
        .iter()
        .map(|&i| core_cols.iter().map(|&j| a.get(i, j) as u64).collect())
        .collect();
    // any minor of a 0/1 matrix is at most the product of the row norms
    // (or of the column norms); log2 of the smaller product
    let half_log2 = |degs: &mut dyn Iterator<Item = usize>| -> f64 {
        degs.filter(|&d| d > 1).map(|d| 0.5 * (d as f64).log2()).sum()
    };
    let row_bits = half_log2(&mut dense.iter().map(|r| r.iter().filter(|&&v| v != 0).count()));
    let col_bits = half_log2(
        &mut (0..core_cols.len()).map(|k| dense.iter().filter(|r| r[k] != 0).count()),
    );
    let need_bits = row_bits.min(col_bits) + 1.0;
    let mut best = 0usize;
    let mut covered_bits = 0.0f64;
    for (k, &p) in primes().iter().enumerate() {
        best = best.max(rank_mod_prime(dense.clone(), core_cols.len(), p));
        covered_bits += (p as f64).log2();
        if best == full {
            let route = if k == 0 { RankRoute::Modular } else { RankRoute::MultiModular };
            return (peeled + full, route);
        }
        if covered_bits > need_bits {
            return (peeled + best, RankRoute::MultiModular);
        }
    }
    let ints: Vec<Vec<i64>> = core_rows
        .iter()
        .map(|&i| core_cols.iter().map(|&j| a.get(i, j) as i64).collect())
        .collect();
    (peeled + bareiss_rank(&ints), RankRoute::Bareiss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bareiss_examples() {
        assert_eq!(exact_rank(&MatrixSample::identity(4)), 4);
        let a = MatrixSample::from_rows(&[[0u8, 1, 0], [0, 0, 1], [0, 1, 1]]);
        assert_eq!(exact_rank(&a), 2);
        let dup = MatrixSample::from_rows(&[
            [1u8, 1, 0, 0],
            [0, 0, 1, 0],
            [1, 1, 0, 1],
            [0, 0, 1, 1],
        ]);
        assert_eq!(exact_rank(&dup), 3);
    }

    #[test]
    fn bareiss_handles_general_integers() {
        let m = vec![vec![2, 4, 6], vec![1, 2, 3], vec![0, 1, 5]];
        assert_eq!(bareiss_rank(&m), 2);
        let m = vec![vec![3, -1], vec![5, 7], vec![1, 1]];
        assert_eq!(bareiss_rank(&m), 2);
    }

    #[test]
    fn big_integer_path_agrees() {
        // large entries force the i128 path to overflow
        let big = 1i64 << 62;
        let m = vec![
            vec![big, 3, 1, 7],
            vec![5, big, 2, 9],
            vec![1, 1, big, 4],
            vec![big + 5, big + 3, 3, 16],
        ];
        assert!(bareiss_small(
            m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect()
        )
        .is_none());
        assert_eq!(bareiss_rank(&m), 3);
    }

    #[test]
    fn certified_matches_bareiss_on_examples() {
        let a = MatrixSample::from_rows(&[[0u8, 1, 0], [0, 0, 1], [0, 1, 1]]);
        assert_eq!(certified_rank(&a).0, 2);
        assert_eq!(certified_rank(&MatrixSample::zeros(5)).0, 0);
        assert_eq!(certified_rank(&MatrixSample::ones(5)).0, 1);
        assert_eq!(certified_rank(&MatrixSample::identity(6)), (6, RankRoute::Peeled));
        // rank 3 over Q, 2 over GF(2)
        let odd = MatrixSample::from_rows(&[[0u8, 1, 1], [1, 0, 1], [1, 1, 0]]);
        assert_eq!(certified_rank(&odd), (3, RankRoute::Modular));
    }

    #[test]
    fn multi_prime_matches_bareiss() {
        use crate::model::{sample_bernoulli, ModelParams};
        let params = ModelParams::new(40, 0.08, 1, 5).unwrap();
        let mut deficient = 0;
        for s in 0..300 {
            let a = sample_bernoulli(&params, s);
            let (r, route) = certified_rank(&a);
            assert_eq!(r, exact_rank(&a), "stream {s}");
            deficient += (route == RankRoute::MultiModular) as usize;
        }
        assert!(deficient > 0);
    }

    #[test]
    fn gf2_rank_small() {
        let rows = vec![vec![0b011u64], vec![0b101], vec![0b110]];
        assert_eq!(rank_gf2(rows, 3), 2);
    }
}
