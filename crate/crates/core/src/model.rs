//! Parameters, deterministic random streams and the 0/1 matrix samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SmallP,
    LargeP,
}

/// Dimension, edge probability, corank level and master seed.
///
/// `p` may sit on the closed endpoints 0 and 1 so that degenerate
/// samplers can be exercised; every formula that needs `0 < p < 1`
/// checks it separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub p: f64,
    pub beta: usize,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(n: usize, p: f64, beta: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("n must be at least 2, got {n}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("p must lie in [0, 1], got {p}")));
        }
        if beta < 1 || beta > n {
            return Err(invalid(format!("beta must lie in [1, n], got {beta}")));
        }
        Ok(Self { n, p, beta, seed })
    }

    pub fn pn(&self) -> f64 {
        self.p * self.n as f64
    }

    pub fn regime(&self) -> Regime {
        regime_of(self.n, self.p, self.beta)
    }
}

/// Small-p iff `p <= (1 + 1/(2 beta)) log(n) / n`.
pub fn regime_of(n: usize, p: f64, beta: usize) -> Regime {
    let nf = n as f64;
    let cut = (1.0 + 1.0 / (2.0 * beta as f64)) * nf.ln() / nf;
    if p <= cut {
        Regime::SmallP
    } else {
        Regime::LargeP
    }
}

/// Counter-based stream: the ChaCha key comes from `seed`, the nonce is
/// `stream_id`, and the block counter indexes draws inside the stream.
pub fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Per-column support sizes for the conditioned sampler.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportDescriptor {
    pub sizes: Vec<usize>,
}

impl SupportDescriptor {
    pub fn new(sizes: Vec<usize>) -> Self {
        Self { sizes }
    }

    pub fn uniform(n: usize, b: usize) -> Self {
        Self { sizes: vec![b; n] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Bernoulli { params: ModelParams, stream_id: u64 },
    Conditioned { sizes: Vec<usize>, seed: u64, stream_id: u64 },
    Fixed,
}

/// Square 0/1 matrix stored as bit-packed rows with cached column supports.
#[derive(Debug, Clone)]
pub struct MatrixSample {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    col_supports: Vec<Vec<u32>>,
    provenance: Provenance,
}

impl PartialEq for MatrixSample {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.bits == other.bits
    }
}

impl MatrixSample {
    fn from_bits(n: usize, bits: Vec<u64>, provenance: Provenance) -> Self {
        let words = n.div_ceil(64);
        debug_assert_eq!(bits.len(), n * words);
        let mut col_supports = vec![Vec::new(); n];
        for i in 0..n {
            let row = &bits[i * words..(i + 1) * words];
            for (w, &word) in row.iter().enumerate() {
                let mut m = word;
                while m != 0 {
                    let b = m.trailing_zeros() as usize;
                    col_supports[w * 64 + b].push(i as u32);
                    m &= m - 1;
                }
            }
        }
        Self {
            n,
            words,
            bits,
            col_supports,
            provenance,
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if f(i, j) {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self::from_bits(n, bits, Provenance::Fixed)
    }

    /// Builds a matrix from 0/1 rows. Panics if the input is not square.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let n = rows.len();
        for r in rows {
            assert_eq!(r.as_ref().len(), n, "matrix must be square");
        }
        Self::from_fn(n, |i, j| rows[i].as_ref()[j] != 0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| i == j)
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| false)
    }

    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn col_support(&self, j: usize) -> &[u32] {
        &self.col_supports[j]
    }

    pub fn col_supports(&self) -> &[Vec<u32>] {
        &self.col_supports
    }

    pub fn row_support(&self, i: usize) -> Vec<u32> {
        let mut out = Vec::new();
        for (w, &word) in self.row_words(i).iter().enumerate() {
            let mut m = word;
            while m != 0 {
                out.push((w * 64 + m.trailing_zeros() as usize) as u32);
                m &= m - 1;
            }
        }
        out
    }

    pub fn row_supports(&self) -> Vec<Vec<u32>> {
        (0..self.n).map(|i| self.row_support(i)).collect()
    }

    pub fn row_degree(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn nnz(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn zero_rows(&self) -> usize {
        (0..self.n)
            .filter(|&i| self.row_words(i).iter().all(|&w| w == 0))
            .count()
    }

    pub fn zero_cols(&self) -> usize {
        self.col_supports.iter().filter(|s| s.is_empty()).count()
    }

    /// Recomputes the column supports from the bits and compares with the cache.
    pub fn supports_consistent(&self) -> bool {
        let fresh = Self::from_bits(self.n, self.bits.clone(), Provenance::Fixed);
        fresh.col_supports == self.col_supports
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// `B[i][j] = A[rows[i]][cols[j]]`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(self.n, |i, j| self.get(rows[i], cols[j]))
    }

    /// Dense row-major copy as `f64`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for (j, sup) in self.col_supports.iter().enumerate() {
            for &i in sup {
                out[i as usize * n + j] = 1.0;
            }
        }
        out
    }

    /// `A x` using the column supports.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (j, sup) in self.col_supports.iter().enumerate() {
            let xj = x[j];
            if xj != 0.0 {
                for &i in sup {
                    y[i as usize] += xj;
                }
            }
        }
        y
    }

    /// `A^T y`.
    pub fn mul_vec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        self.col_supports
            .iter()
            .map(|sup| sup.iter().map(|&i| y[i as usize]).sum())
            .collect()
    }

    /// Hex SHA-256 of the packed bits, used by the seed ledger.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for w in &self.bits {
            h.update(w.to_le_bytes());
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

/// Bernoulli(p) entries, fully determined by `(params.seed, stream_id)`.
pub fn sample_bernoulli(params: &ModelParams, stream_id: u64) -> MatrixSample {
    let n = params.n;
    let p = params.p;
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; n * words];
    let prov = Provenance::Bernoulli {
        params: *params,
        stream_id,
    };
    if p <= 0.0 {
        return MatrixSample::from_bits(n, bits, prov);
    }
    if p >= 1.0 {
        return MatrixSample::from_fn(n, |_, _| true).with_provenance(prov);
    }
    let mut rng = stream_rng(params.seed, stream_id);
    let total = n * n;
    if p < 0.25 {
        // geometric gaps between successive ones in row-major order
        let log_q = (-p).ln_1p();
        let mut pos: usize = 0;
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let gap = (u.ln() / log_q).floor();
            if gap >= (total - pos) as f64 {
                break;
            }
            pos += gap as usize;
            let (i, j) = (pos / n, pos % n);
            bits[i * words + j / 64] |= 1 << (j % 64);
            pos += 1;
            if pos >= total {
                break;
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                if rng.random::<f64>() < p {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
    }
    MatrixSample::from_bits(n, bits, prov)
}

impl MatrixSample {
    fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

/// Independent columns, column `j` a uniform `sizes[j]`-subset of the rows.
pub fn sample_with_column_supports(
    n: usize,
    desc: &SupportDescriptor,
    seed: u64,
    stream_id: u64,
) -> Result<MatrixSample> {
    if desc.sizes.len() != n {
        return Err(invalid(format!(
            "descriptor has {} sizes for n = {n}",
            desc.sizes.len()
        )));
    }
    if let Some((j, &b)) = desc.sizes.iter().enumerate().find(|(_, &b)| b > n) {
        return Err(invalid(format!("column {j} support size {b} exceeds n = {n}")));
    }
    let mut rng = stream_rng(seed, stream_id);
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; n * words];
    for (j, &b) in desc.sizes.iter().enumerate() {
        for i in rand::seq::index::sample(&mut rng, n, b).iter() {
            bits[i * words + j / 64] |= 1 << (j % 64);
        }
    }
    Ok(MatrixSample::from_bits(
        n,
        bits,
        Provenance::Conditioned {
            sizes: desc.sizes.clone(),
            seed,
            stream_id,
        },
    ))
}

/// Nonincreasing rearrangement of `|x|` with the index map `sigma`
/// (`x_star[i] = |x[sigma[i]]|`, zero-based). Ties keep original order.
pub fn rearrangement(x: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut sigma: Vec<usize> = (0..x.len()).collect();
    sigma.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    let x_star = sigma.iter().map(|&i| x[i].abs()).collect();
    (sigma, x_star)
}
