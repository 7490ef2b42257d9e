//! Singular values, exact rank, order statistics and column distances.

mod jacobi;
pub mod rank;

use rand::seq::index::sample;

use crate::error::{precondition, Error, Result};
use crate::model::{stream_rng, MatrixSample};

pub use rank::{bareiss_rank, certified_rank, exact_rank, RankRoute};

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data = rows.iter().flat_map(|x| x.iter().copied()).collect();
        Self::new(r, c, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n, n, vec![0.0; n * n]);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self.get(i, j));
            }
        }
        Self::new(rows.len(), cols.len(), data)
    }

    fn column_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    fn transposed(&self) -> Self {
        let mut data = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Self::new(self.cols, self.rows, data)
    }
}

impl From<&MatrixSample> for RealMatrix {
    fn from(a: &MatrixSample) -> Self {
        RealMatrix::new(a.n(), a.n(), a.to_dense())
    }
}

/// Anything that can be viewed as a dense real matrix.
pub trait Dense {
    fn dense(&self) -> RealMatrix;
}

impl Dense for RealMatrix {
    fn dense(&self) -> RealMatrix {
        self.clone()
    }
}

impl Dense for MatrixSample {
    fn dense(&self) -> RealMatrix {
        RealMatrix::from(self)
    }
}

/// All singular values, nonincreasing, by one-sided Jacobi.
pub fn singular_values(a: &impl Dense) -> Result<Vec<f64>> {
    let m = a.dense();
    real_singular_values(&m)
}

fn real_singular_values(m: &RealMatrix) -> Result<Vec<f64>> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let m = if m.cols > m.rows { m.transposed() } else { m.clone() };
    if m.cols == 0 {
        return Ok(Vec::new());
    }
    let mut cols = m.column_major();
    Ok(jacobi::one_sided_jacobi(&mut cols, m.rows, m.cols))
}

/// `s_{n-beta+1}`, i.e. the `beta`-th smallest singular value.
pub fn s_order_statistic(a: &impl Dense, beta: usize) -> Result<f64> {
    let sv = singular_values(a)?;
    let n = sv.len();
    if beta < 1 || beta > n {
        return Err(precondition(format!("beta = {beta} outside [1, {n}]")));
    }
    Ok(sv[n - beta])
}

/// Default floating rank threshold `1e-8 * s1 * n`.
pub fn default_tolerance(sv: &[f64]) -> f64 {
    1e-8 * sv.first().copied().unwrap_or(0.0) * sv.len() as f64
}

pub fn numeric_rank(sv: &[f64], tol: f64) -> usize {
    sv.iter().filter(|&&s| s > tol).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub singular_values: Vec<f64>,
    pub exact_rank: usize,
    pub corank: usize,
    pub tolerance: f64,
}

impl SpectralReport {
    pub fn compute(a: &MatrixSample) -> Result<Self> {
        let sv = singular_values(a)?;
        let tolerance = default_tolerance(&sv);
        let r = exact_rank(a);
        Ok(Self {
            singular_values: sv,
            exact_rank: r,
            corank: a.n() - r,
            tolerance,
        })
    }

    pub fn numeric_rank(&self) -> usize {
        numeric_rank(&self.singular_values, self.tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxCheck {
    pub lhs: f64,
    pub best_rhs: f64,
    pub holds: bool,
}

/// Compares `s_{n-beta+1}(A)` with the smallest singular value of random
/// `(n-beta+1)`-square submatrices. For `beta = 1` the only such submatrix
/// is `A` itself.
pub fn submatrix_minmax_check(
    a: &impl Dense,
    beta: usize,
    subset_trials: usize,
    seed: u64,
) -> Result<MinMaxCheck> {
    let m = a.dense();
    if m.rows != m.cols {
        return Err(precondition("matrix must be square"));
    }
    let n = m.rows;
    if beta < 1 || beta > n {
        return Err(precondition(format!("beta = {beta} outside [1, {n}]")));
    }
    if subset_trials < 1 {
        return Err(precondition("subset_trials must be at least 1"));
    }
    let sv = real_singular_values(&m)?;
    let s1 = sv[0];
    let lhs = sv[n - beta];
    let k = n - beta + 1;
    let mut best_rhs = f64::NEG_INFINITY;
    for t in 0..subset_trials {
        let (rows, cols) = if t == 0 && beta == 1 {
            ((0..n).collect::<Vec<_>>(), (0..n).collect::<Vec<_>>())
        } else {
            let mut rng = stream_rng(seed, t as u64);
            let mut r = sample(&mut rng, n, k).into_vec();
            let mut c = sample(&mut rng, n, k).into_vec();
            r.sort_unstable();
            c.sort_unstable();
            (r, c)
        };
        let sub = m.submatrix(&rows, &cols);
        let s = *real_singular_values(&sub)?.last().unwrap();
        best_rhs = best_rhs.max(s);
    }
    Ok(MinMaxCheck {
        lhs,
        best_rhs,
        holds: lhs >= best_rhs - 1e-8 * s1,
    })
}

/// Euclidean distance from column `i` to the span of the other columns.
pub fn column_distance(a: &impl Dense, i: usize) -> Result<f64> {
    let m = a.dense();
    if m.cols < 2 {
        return Err(precondition("need at least two columns"));
    }
    if i >= m.cols {
        return Err(precondition(format!("column {i} out of range")));
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = m.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in (0..m.cols).filter(|&j| j != i) {
        let mut v = m.column(j);
        let before = norm(&v);
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let d = dotp(q, &v);
                axpy(-d, q, &mut v);
            }
        }
        let after = norm(&v);
        if after > 1e-12 * before.max(scale) {
            v.iter_mut().for_each(|x| *x /= after);
            basis.push(v);
        }
    }
    let mut r = m.column(i);
    for _ in 0..2 {
        for q in &basis {
            let d = dotp(q, &r);
            axpy(-d, q, &mut r);
        }
    }
    Ok(norm(&r))
}

fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dotp(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// How a fast order statistic was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SminRoute {
    /// Exact corank at least beta, so the value is exactly zero.
    ExactZero,
    /// LU factorization plus inverse iteration on `(A^T A)^{-1}`.
    InverseIteration,
    /// Full Jacobi spectrum.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastOrderStatistic {
    pub value: f64,
    pub route: SminRoute,
    /// Exact corank when it was computed.
    pub corank: Option<usize>,
}

/// `s_{n-beta+1}` for 0/1 samples, tuned for Monte Carlo throughput.
///
/// Zero rows or columns and exact rank deficiency give an exact zero.
/// For `beta = 1` and a nonsingular sample the value comes from inverse
/// iteration on the LU factors; a suspiciously small estimate triggers the
/// exact rank. Other cases use the Jacobi spectrum.
pub fn fast_order_statistic(a: &MatrixSample, beta: usize) -> Result<FastOrderStatistic> {
    let n = a.n();
    if beta < 1 || beta > n {
        return Err(precondition(format!("beta = {beta} outside [1, {n}]")));
    }
    let zeros = a.zero_rows().max(a.zero_cols());
    if zeros >= beta {
        return Ok(FastOrderStatistic {
            value: 0.0,
            route: SminRoute::ExactZero,
            corank: None,
        });
    }
    if beta == 1 && zeros == 0 {
        if let Some(est) = lu_smallest(a) {
            if est > 1e-6 {
                return Ok(FastOrderStatistic {
                    value: est,
                    route: SminRoute::InverseIteration,
                    corank: None,
                });
            }
        }
    }
    let (r, _) = certified_rank(a);
    let corank = n - r;
    if corank >= beta {
        return Ok(FastOrderStatistic {
            value: 0.0,
            route: SminRoute::ExactZero,
            corank: Some(corank),
        });
    }
    if beta == 1 {
        if let Some(est) = lu_smallest(a) {
            return Ok(FastOrderStatistic {
                value: est,
                route: SminRoute::InverseIteration,
                corank: Some(corank),
            });
        }
    }
    let v = s_order_statistic(a, beta)?;
    Ok(FastOrderStatistic {
        value: v,
        route: SminRoute::Jacobi,
        corank: Some(corank),
    })
}

/// Smallest singular value by inverse iteration; `None` if LU breaks down.
pub(crate) fn lu_smallest(a: &MatrixSample) -> Option<f64> {
    let n = a.n();
    let lu = Lu::factor(a.to_dense(), n)?;
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut mu_prev = 0.0;
    let mut mu = 0.0;
    for _ in 0..200 {
        let w = lu.solve_t(&x);
        let z = lu.solve(&w);
        mu = dotp(&x, &z);
        let nz = norm(&z);
        if !nz.is_finite() || nz == 0.0 {
            return None;
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if (mu - mu_prev).abs() <= 1e-13 * mu {
            break;
        }
        mu_prev = mu;
    }
    if !(mu.is_finite() && mu > 0.0) {
        return None;
    }
    Some(1.0 / mu.sqrt())
}

/// `P A = L U` with partial pivoting; row-major, unit lower `L` below the diagonal.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, n: usize) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut p, mut best) = (k, 0.0f64);
            for i in k..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let prow = &top[k * n + k + 1..k * n + n];
            for i in (k + 1)..n {
                let row = &mut bottom[(i - k - 1) * n..(i - k) * n];
                let f = row[k];
                if f == 0.0 {
                    continue;
                }
                let f = f / piv;
                row[k] = f;
                for (r, &pv) in row[k + 1..].iter_mut().zip(prow) {
                    *r -= f * pv;
                }
            }
        }
        Some(Self { n, lu: a, perm })
    }

    /// Solves `A x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        y
    }

    /// Solves `A^T x = b`.
    fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // U^T z = b
        let mut z = b.to_vec();
        for i in 0..n {
            z[i] /= self.lu[i * n + i];
            let zi = z[i];
            if zi != 0.0 {
                for j in (i + 1)..n {
                    z[j] -= self.lu[i * n + j] * zi;
                }
            }
        }
        // L^T w = z
        for i in (0..n).rev() {
            let wi = z[i];
            if wi != 0.0 {
                for j in 0..i {
                    z[j] -= self.lu[i * n + j] * wi;
                }
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_zero() {
        assert_eq!(singular_values(&RealMatrix::identity(3)).unwrap(), vec![1.0; 3]);
        assert_eq!(singular_values(&MatrixSample::zeros(4)).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn golden_ratio_pair() {
        let a = RealMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let sv = singular_values(&a).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sv[0] - phi).abs() < 1e-14);
        assert!((sv[1] - 1.0 / phi).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        let a = RealMatrix::from_rows(&[vec![1.0, f64::NAN], vec![0.0, 1.0]]);
        assert!(matches!(singular_values(&a), Err(Error::NonFinite)));
    }

    #[test]
    fn order_statistic_edges() {
        let id = RealMatrix::identity(3);
        assert_eq!(s_order_statistic(&id, 1).unwrap(), 1.0);
        let a = RealMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let sv = singular_values(&a).unwrap();
        assert_eq!(s_order_statistic(&a, 2).unwrap(), sv[0]);
        assert!(s_order_statistic(&a, 0).is_err());
        assert!(s_order_statistic(&a, 3).is_err());
        let zc = MatrixSample::from_rows(&[[0u8, 1, 0], [0, 0, 1], [0, 1, 1]]);
        assert!(s_order_statistic(&zc, 1).unwrap() < 1e-10);
    }

    #[test]
    fn minmax_identity_beta_two() {
        let c = submatrix_minmax_check(&RealMatrix::identity(3), 2, 10, 5).unwrap();
        assert_eq!(c.lhs, 1.0);
        assert!(c.best_rhs <= 1.0 + 1e-15);
        assert!(c.holds);
    }

    #[test]
    fn minmax_beta_one_includes_full_matrix() {
        let a = RealMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let c = submatrix_minmax_check(&a, 1, 1, 0).unwrap();
        assert!(c.holds);
        assert!((c.best_rhs - c.lhs).abs() < 1e-15);
    }

    #[test]
    fn column_distance_examples() {
        assert!((column_distance(&RealMatrix::identity(3), 0).unwrap() - 1.0).abs() < 1e-15);
        let a = RealMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let d = column_distance(&a, 0).unwrap();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let dup = RealMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 1.0], vec![0.0, 0.0, 3.0]]);
        assert!(column_distance(&dup, 1).unwrap() < 1e-12);
    }

    #[test]
    fn lu_route_matches_jacobi() {
        let a = MatrixSample::from_rows(&[[1u8, 1, 0], [0, 1, 1], [1, 0, 1]]);
        let f = fast_order_statistic(&a, 1).unwrap();
        let s = s_order_statistic(&a, 1).unwrap();
        assert_eq!(f.route, SminRoute::InverseIteration);
        assert!((f.value - s).abs() < 1e-10);
    }
}
