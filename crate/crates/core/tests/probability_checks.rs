use rand::Rng;
use rayon::prelude::*;
use spectra::harness::stats::proportion;
use spectra::model::{sample_bernoulli, stream_rng};
use spectra::{MatrixSample, ModelParams};

const N: usize = 200;
const TRIALS: u64 = 20_000;

fn p_log() -> f64 {
    (N as f64).ln() / N as f64
}

fn factorial(b: usize) -> f64 {
    (1..=b).map(|k| k as f64).product()
}

#[test]
fn zero_column_count_lower_bound() {
    let p = p_log();
    let m = ModelParams::new(N, p, 1, 5).unwrap();
    let counts: Vec<usize> = (0..TRIALS).into_par_iter().map(|s| sample_bernoulli(&m, s).zero_cols()).collect();
    let mu = N as f64 * (1.0 - p).powi(N as i32);
    for beta in [1usize, 2] {
        let hits = counts.iter().filter(|&&c| c >= beta).count() as u64;
        let (e, _) = proportion(hits, TRIALS);
        let floor = 0.9 * mu.powi(beta as i32) / (std::f64::consts::E * factorial(beta));
        assert!(e >= floor, "beta={beta}: {e} < {floor}");
    }
}

#[test]
fn low_support_columns_are_rare() {
    let p = p_log();
    let nf = N as f64;
    let pn = p * nf;
    let m = ModelParams::new(N, p, 1, 6).unwrap();
    let l2 = nf.ln().powi(2);
    let ks: Vec<usize> = (1..=(pn / 2.0).floor() as usize).collect();
    let caps: Vec<f64> = ks
        .iter()
        .map(|&k| l2 * (std::f64::consts::E * pn / k as f64).powi(k as i32) * (-pn).exp() * nf)
        .collect();
    let hits: u64 = (0..TRIALS)
        .into_par_iter()
        .map(|s| {
            let a = sample_bernoulli(&m, s);
            let bad = ks.iter().zip(&caps).any(|(&k, &cap)| {
                let count = (0..N).filter(|&j| a.col_support(j).len() <= k).count();
                count as f64 >= cap
            });
            bad as u64
        })
        .sum();
    let (e, se) = proportion(hits, TRIALS);
    assert!(e <= 2.0 * (-l2).exp() + 3.0 * se, "{e}");
}

/// With one uniform per entry, raising `p` can only fill entries in.
#[test]
fn zero_rows_decrease_under_coupling() {
    let n = 60;
    let ps = [0.01, 0.03, 0.06, 0.1];
    let mut means = vec![0.0; ps.len()];
    for s in 0..500u64 {
        let mut rng = stream_rng(9, s);
        let u: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        let zr: Vec<usize> = ps
            .iter()
            .map(|&p| MatrixSample::from_fn(n, |i, j| u[i * n + j] < p).zero_rows())
            .collect();
        for w in zr.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for (m, z) in means.iter_mut().zip(&zr) {
            *m += *z as f64;
        }
    }
    for w in means.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn sampler_zero_rows_decrease_in_p() {
    let n = 60;
    let mean = |p: f64| {
        let m = ModelParams::new(n, p, 1, 3).unwrap();
        (0..4000u64).map(|s| sample_bernoulli(&m, s).zero_rows() as f64).sum::<f64>() / 4000.0
    };
    let (a, b, c) = (mean(0.02), mean(0.05), mean(0.1));
    assert!(a > b && b > c, "{a} {b} {c}");
}

/// Bernoulli(1/2) sum of 20 ones at lambda = 0.6 against the general bound
/// with per-term windows lambda_i = 0.499 (each term then has Q = 1/2).
#[test]
fn rogozin_general_form_on_fair_coins() {
    use spectra::harness::experiments::bernoulli_sums;
    use spectra::probability::{levy_concentration, rogozin_bound};
    let mut rng = stream_rng(12, 0);
    let sums = bernoulli_sums(&[1.0; 20], 0.5, 1_000_000, &mut rng);
    let q = levy_concentration(&sums, 0.6).unwrap();
    let bound = rogozin_bound(0.6, &[0.499; 20], &[0.5; 20], 1.0).unwrap();
    // two adjacent atoms of Binomial(20, 1/2)
    let exact = (184756.0 + 167960.0) / 2f64.powi(20);
    assert!((q - exact).abs() < 5e-3, "{q} vs {exact}");
    assert!(q <= bound, "{q} > {bound}");
}
