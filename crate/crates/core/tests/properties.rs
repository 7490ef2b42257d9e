use proptest::prelude::*;
use spectra::expansion::{block_decomposition, expansion_set};
use spectra::model::{rearrangement, sample_bernoulli, sample_with_column_supports};
use spectra::probability::levy_concentration;
use spectra::spectral::rank::exact_rank;
use spectra::spectral::{column_distance, default_tolerance, numeric_rank, singular_values};
use spectra::structure::{default_classifier, triple_norm, ClassTag};
use spectra::{MatrixSample, ModelParams, SupportDescriptor};

fn params() -> impl Strategy<Value = ModelParams> {
    (2usize..40, 0.0f64..=1.0, 1usize..3, any::<u64>()).prop_map(|(n, p, b, s)| ModelParams::new(n, p, b.min(n), s).unwrap())
}

fn small_matrix() -> impl Strategy<Value = MatrixSample> {
    (params(), any::<u64>()).prop_map(|(m, s)| sample_bernoulli(&m, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_cache_matches_bits(a in small_matrix()) {
        prop_assert!(a.supports_consistent());
    }

    #[test]
    fn sampler_is_reproducible(m in params(), s in any::<u64>()) {
        let a = sample_bernoulli(&m, s);
        let b = sample_bernoulli(&m, s);
        prop_assert_eq!(a.content_hash(), b.content_hash());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn conditioned_supports_are_exact(n in 1usize..40, seed in any::<u64>(), fill in proptest::collection::vec(0.0f64..=1.0, 40)) {
        let sizes: Vec<usize> = fill[..n].iter().map(|f| (f * n as f64).floor() as usize).collect();
        let a = sample_with_column_supports(n, &SupportDescriptor::new(sizes.clone()), seed, 0).unwrap();
        for (j, &b) in sizes.iter().enumerate() {
            prop_assert_eq!(a.col_support(j).len(), b);
        }
    }

    #[test]
    fn zero_pattern_bounds_rank(a in small_matrix()) {
        let r = exact_rank(&a);
        prop_assert!(r + a.zero_cols() <= a.n());
        prop_assert!(r + a.zero_rows() <= a.n());
    }

    #[test]
    fn smin_below_every_column_distance(a in small_matrix()) {
        let sv = singular_values(&a).unwrap();
        let smin = *sv.last().unwrap();
        let tol = 1e-8 * sv[0].max(1.0);
        for i in 0..a.n() {
            prop_assert!(smin <= column_distance(&a, i).unwrap() + tol);
        }
    }

    #[test]
    fn singular_values_permutation_invariant(a in small_matrix(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = a.n();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<usize> = (0..n).collect();
        let mut cols: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        cols.shuffle(&mut rng);
        let b = a.permuted(&rows, &cols);
        let (sa, sb) = (singular_values(&a).unwrap(), singular_values(&b).unwrap());
        let tol = 1e-10 * sa[0].max(1.0);
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() <= tol);
        }
    }

    #[test]
    fn singular_values_match_nalgebra(a in small_matrix()) {
        let n = a.n();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j) as u8 as f64);
        let mut reference: Vec<f64> = m.singular_values().iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        let ours = singular_values(&a).unwrap();
        let tol = 1e-10 * reference[0].max(1.0);
        for (x, y) in ours.iter().zip(&reference) {
            prop_assert!((x - y).abs() <= tol, "{} vs {}", x, y);
        }
    }

    #[test]
    fn rearrangement_is_sorted_permutation(x in proptest::collection::vec(-1e6f64..1e6, 1..60)) {
        let (sigma, xs) = rearrangement(&x);
        let mut seen = sigma.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..x.len()).collect::<Vec<_>>());
        for w in xs.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for (k, &i) in sigma.iter().enumerate() {
            prop_assert_eq!(xs[k], x[i].abs());
        }
    }

    #[test]
    fn levy_monotone_and_saturates(xs in proptest::collection::vec(-10.0f64..10.0, 1..200), l1 in 0.0f64..5.0, dl in 0.0f64..5.0) {
        let q1 = levy_concentration(&xs, l1).unwrap();
        let q2 = levy_concentration(&xs, l1 + dl).unwrap();
        prop_assert!(q1 <= q2);
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert_eq!(levy_concentration(&xs, (hi - lo) / 2.0).unwrap(), 1.0);
    }

    #[test]
    fn triple_norm_is_a_norm(
        x in proptest::collection::vec(-5.0f64..5.0, 30),
        y in proptest::collection::vec(-5.0f64..5.0, 30),
        c in -10.0f64..10.0,
        p in 0.01f64..1.0,
    ) {
        let n = 30;
        let nx = triple_norm(&x, p, n);
        let ny = triple_norm(&y, p, n);
        prop_assert!(nx >= 0.0);
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        prop_assert!((triple_norm(&cx, p, n) - c.abs() * nx).abs() <= 1e-12 * (1.0 + c.abs() * nx));
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(triple_norm(&s, p, n) <= nx + ny + 1e-12 * (nx + ny + 1.0));
    }

    #[test]
    fn zero_block_invariant(a in small_matrix(), k in 0usize..6) {
        let bd = block_decomposition(&a, k);
        prop_assert!(bd.zero_block_holds(&a));
        for j in 0..a.n() {
            if bd.in_j(j) {
                for &i in a.col_support(j) {
                    prop_assert!(bd.in_i(i as usize));
                }
            }
        }
    }

    #[test]
    fn expansion_set_shrinks_as_j2_grows(a in small_matrix(), picks in proptest::collection::vec(any::<bool>(), 40), extra in proptest::collection::vec(any::<bool>(), 40)) {
        let n = a.n();
        let j1: Vec<usize> = (0..n).filter(|&j| picks[j]).collect();
        let j2: Vec<usize> = (0..n).filter(|&j| picks[j] || (extra[j] && j % 2 == 0)).collect();
        let j3: Vec<usize> = (0..n).filter(|&j| picks[j] || extra[j]).collect();
        let i2 = expansion_set(&a, &j1, &j2).unwrap();
        let i3 = expansion_set(&a, &j1, &j3).unwrap();
        prop_assert!(i3.iter().all(|i| i2.contains(i)));
    }

    #[test]
    fn steep_tags_are_scale_free(x in proptest::collection::vec(-1e3f64..1e3, 500), lam in 1e-6f64..1e6) {
        let clf = default_classifier(500, (500f64).ln() / 500.0, 1).unwrap();
        let y: Vec<f64> = x.iter().map(|v| lam * v).collect();
        prop_assert_eq!(clf.classify(&x).steep(), clf.classify(&y).steep());
    }

    #[test]
    fn steep_classes_are_exclusive(x in proptest::collection::vec(-1e3f64..1e3, 500)) {
        let clf = default_classifier(500, (500f64).ln() / 500.0, 1).unwrap();
        let label = clf.classify(&x);
        let steep = label.tags.iter().filter(|t| matches!(t, ClassTag::T1j { .. } | ClassTag::T2 | ClassTag::T3)).count();
        prop_assert!(steep <= 1);
    }

    #[test]
    fn non_steep_vectors_sit_under_the_growth_cap(x in proptest::collection::vec(-1e3f64..1e3, 500)) {
        let clf = default_classifier(500, (500f64).ln() / 500.0, 1).unwrap();
        let label = clf.classify(&x);
        if label.steep().is_none() {
            if let Some(scale) = label.scale {
                let (_, xs) = rearrangement(&x);
                let n = 500.0;
                let from = (n / clf.seq.get(clf.seq.s + 1) as f64).ceil() as usize;
                for i in from.max(1)..=500 {
                    prop_assert!(xs[i - 1] / scale <= clf.g.eval(n / i as f64).unwrap() * (1.0 + 1e-12));
                }
            }
        }
    }
}

/// Every 0/1 matrix with `n <= 4`: floating corank at `1e-8` agrees with
/// the exact corank.
#[test]
fn floating_rank_matches_exact_rank_exhaustively() {
    for n in 1..=4usize {
        for bits in 0u32..(1 << (n * n)) {
            let a = MatrixSample::from_fn(n, |i, j| bits >> (i * n + j) & 1 == 1);
            let sv = singular_values(&a).unwrap();
            let tol = default_tolerance(&sv).max(1e-8);
            assert_eq!(numeric_rank(&sv, tol), exact_rank(&a), "n={n} bits={bits:#x}");
        }
    }
}

#[test]
fn entry_mean_within_four_sigma() {
    for &p in &[0.01, 0.2, 0.5, 0.9] {
        let m = ModelParams::new(400, p, 1, 11).unwrap();
        let (mut ones, mut total) = (0usize, 0usize);
        for s in 0..2 {
            let a = sample_bernoulli(&m, s);
            ones += a.nnz();
            total += 400 * 400;
        }
        let sd = (total as f64 * p * (1.0 - p)).sqrt();
        assert!((ones as f64 - p * total as f64).abs() <= 4.0 * sd, "p={p}");
    }
}
