//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs with `harness = false` so the lines are always
//! printed and the heavy tail run can be shared between criteria 4 and 12.

use std::time::{Duration, Instant};

use spectra::expansion::expansion_lemma_audit;
use spectra::harness::experiments::{binomial_grid, growth_contract, hypergeometric_grid};
use spectra::harness::{self, CorankCheck, Experiment, ExperimentConfig, RunResult};
use spectra::model::sample_bernoulli;
use spectra::probability::{prob_omega_rc_complement, prob_zero_rowcol_asymptotic, prob_zero_rowcol_exact};
use spectra::spectral::submatrix_minmax_check;
use spectra::structure::default_classifier;
use spectra::{MatrixSample, ModelParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn p_log(n: usize) -> f64 {
    (n as f64).ln() / n as f64
}

fn cfg(e: Experiment, n: usize, p: f64, beta: usize, trials: u64, workers: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(e, ModelParams::new(n, p, beta, 2024).unwrap());
    c.trials = trials;
    c.workers = workers;
    c
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2} s (limit {limit_s} s)"))
}

fn c1() -> Outcome {
    let t = Instant::now();
    let n = 3;
    let mut worst = 0.0f64;
    for p in [0.25f64, 0.5] {
        let (mut zero, mut rc2) = (0.0, 0.0);
        for bits in 0u32..512 {
            let a = MatrixSample::from_fn(n, |i, j| bits >> (3 * i + j) & 1 == 1);
            let ones = bits.count_ones() as i32;
            let w = p.powi(ones) * (1.0 - p).powi(9 - ones);
            let z = a.zero_rows().max(a.zero_cols());
            if z >= 1 {
                zero += w;
            }
            if z >= 2 {
                rc2 += w;
            }
        }
        let e1 = prob_zero_rowcol_exact(n, p).unwrap();
        let o1 = prob_omega_rc_complement(n, p, 1, 0, 0).unwrap().value;
        let o2 = prob_omega_rc_complement(n, p, 2, 0, 0).unwrap().value;
        for (x, y) in [(e1, zero), (o1, zero), (o2, rc2)] {
            worst = worst.max((x - y).abs());
        }
    }
    let (fast, rt) = within(t.elapsed(), 1.0);
    Outcome {
        pass: worst <= 1e-12 && fast,
        detail: format!("max |formula - enumeration| = {worst:.2e}; {rt}"),
    }
}

fn c2() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [500usize, 1000, 2000] {
        let p = p_log(n);
        let exact = prob_zero_rowcol_exact(n, p).unwrap();
        let asym = prob_zero_rowcol_asymptotic(n, p);
        let rel = (exact - asym).abs() / exact;
        let ratio = exact / (n as f64 * (1.0 - p).powi(n as i32));
        pass &= rel <= 0.05 && ratio <= 3.0;
        parts.push(format!("n={n}: rel gap {rel:.4}, ratio {ratio:.3}"));
    }
    let (fast, rt) = within(t.elapsed(), 10.0);
    Outcome {
        pass: pass && fast,
        detail: format!("{}; {rt}", parts.join("; ")),
    }
}

fn c3(extra: &[&RunResult]) -> Outcome {
    let mut total = CorankCheck::default();
    let mut runs = 0;
    for &(e, n, p, beta) in &[
        (Experiment::CorankCensus, 40, 0.05, 1),
        (Experiment::CorankCensus, 40, 0.05, 2),
        (Experiment::CorankCensus, 25, 0.08, 3),
        (Experiment::SminTail, 60, 0.04, 2),
        (Experiment::ZeroProb, 30, 0.06, 2),
        (Experiment::ExpansionAudit, 80, 0.05, 1),
        (Experiment::DistanceDiagnostic, 20, 0.1, 1),
        (Experiment::T23Anticoncentration, 100, 0.05, 1),
    ] {
        let mut c = cfg(e, n, p, beta, 400, 1);
        c.audit_trials = 1000;
        c.tail_trials = 1000;
        total = total.merge(harness::run(&c).unwrap().corank_check);
        runs += 1;
    }
    for r in extra {
        total = total.merge(r.corank_check);
        runs += 1;
    }
    Outcome {
        pass: total.exceptions == 0 && total.antecedent > 0,
        detail: format!(
            "{} matrices over {runs} runs, {} met the antecedent, {} exceptions",
            total.matrices, total.antecedent, total.exceptions
        ),
    }
}

fn c4(r: &RunResult, elapsed: Duration) -> Outcome {
    let rec = r.record("tail_dominance(t=1e-12)").unwrap();
    let omega = rec.prediction.unwrap();
    let (fast, rt) = within(elapsed, 1800.0);
    Outcome {
        pass: rec.pass == Some(true) && fast,
        detail: format!(
            "P(s_n <= 1e-12) = {:.5} +- {:.5}, P(Omega_RC^c) = {omega:.5}, window [{:.5}, {:.5}]; {rt}",
            rec.empirical,
            rec.stderr,
            omega - 3.0 * rec.stderr,
            2.5 * omega
        ),
    }
}

fn c5() -> Outcome {
    let t = Instant::now();
    let mut held = 0;
    let mut total = 0;
    for beta in [1usize, 2] {
        let m = ModelParams::new(20, 0.3, beta, 5).unwrap();
        for s in 0..1000u64 {
            let a = sample_bernoulli(&m, s);
            let chk = submatrix_minmax_check(&a, beta, 20, s).unwrap();
            held += chk.holds as u32;
            total += 1;
        }
    }
    let (fast, rt) = within(t.elapsed(), 60.0);
    Outcome {
        pass: held == total && fast,
        detail: format!("{held}/{total} samples hold; {rt}"),
    }
}

fn c6() -> Outcome {
    let t = Instant::now();
    let r = harness::run(&cfg(Experiment::PartitionCheck, 500, p_log(500), 1, 40_000, 8)).unwrap();
    let recs: Vec<_> = r.records.iter().filter(|x| x.name.starts_with("partition_success")).collect();
    let ok = recs.len() == 4 && recs.iter().all(|x| x.pass == Some(true));
    let fails = r.record("witness_count[counterexample]").map_or(-1.0, |x| x.empirical);
    let (fast, rt) = within(t.elapsed(), 120.0);
    Outcome {
        pass: ok && fast,
        detail: format!("40000 vectors, {fails} counterexamples; {rt}"),
    }
}

fn c7() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [500usize, 2000] {
        let p = p_log(n);
        let clf = default_classifier(n, p, 1).unwrap();
        let (mono, prod, bn, cap) = growth_contract(&clf.g, n, p);
        pass &= mono == 0 && prod == 0 && bn <= cap;
        parts.push(format!(
            "n={n}, pn=log n: {mono} increment violations, {prod} product violations, b_n = {bn:.3e} vs cap {cap:.3e}"
        ));
    }
    let (fast, rt) = within(t.elapsed(), 5.0);
    Outcome {
        pass: pass && fast,
        detail: format!("{}; {rt}", parts.join("; ")),
    }
}

fn c8() -> Outcome {
    let t = Instant::now();
    let (bp, bb, bw) = binomial_grid();
    let (hp, hb, hw) = hypergeometric_grid(2.0);
    let (fast, rt) = within(t.elapsed(), 10.0);
    Outcome {
        pass: bb == 0 && hb == 0 && bp >= 1000 && hp >= 1000 && fast,
        detail: format!(
            "binomial {bb}/{bp} violations (max ratio {bw:.3}); hypergeometric {hb}/{hp} violations (max ratio {hw:.3}); {rt}"
        ),
    }
}

fn c9() -> Outcome {
    let t = Instant::now();
    let r = harness::run(&cfg(Experiment::BoundsAudit, 500, p_log(500), 1, 1_000_000, 8)).unwrap();
    let cases: Vec<_> = r.records.iter().filter(|x| x.name.starts_with("rogozin[")).collect();
    let failed: Vec<String> = cases
        .iter()
        .filter(|x| x.pass != Some(true))
        .map(|x| format!("{} Q={:.4} > {:.4}", &x.name[8..x.name.len() - 1], x.empirical, x.bound.unwrap()))
        .collect();
    let (fast, rt) = within(t.elapsed(), 300.0);
    Outcome {
        pass: failed.is_empty() && cases.len() == 40 && fast,
        detail: format!("{}/{} cases within bound; failing: [{}]; {rt}", cases.len() - failed.len(), cases.len(), failed.join(", ")),
    }
}

fn c10() -> Outcome {
    let t = Instant::now();
    let la = expansion_lemma_audit(400, 8, &[12; 24], 12.0, 100_000, 2.0, 77).unwrap();
    let sup = expansion_lemma_audit(20_000, 8, &[12; 24], 12.0, 100_000, 2.0, 78).unwrap();
    let (fast, rt) = within(t.elapsed(), 300.0);
    Outcome {
        pass: la.empirical <= la.bound && fast,
        detail: format!(
            "m1=400: P = {:.2e} +- {:.2e} vs bound {:.3e}; hypothesis r >= {:.2} is {} so the bound is {}; \
             supplementary m1=20000 (hypothesis {}): P = {:.2e} vs bound {:.3e} ({}); {rt}",
            la.empirical,
            la.stderr,
            la.bound,
            la.hypothesis_rhs,
            if la.hypothesis_satisfied { "met" } else { "NOT met" },
            if la.bound >= 1.0 { "vacuous" } else { "informative" },
            if sup.hypothesis_satisfied { "met" } else { "not met" },
            sup.empirical,
            sup.bound,
            if sup.empirical <= sup.bound { "holds" } else { "violated" },
        ),
    }
}

fn c11() -> Outcome {
    let t = Instant::now();
    let n = 400;
    let r = harness::run(&cfg(Experiment::T23Anticoncentration, n, p_log(n), 1, 10_000, 8)).unwrap();
    let rec = r.record("P(||Ax|| < sqrt(n)/log n) [T2']").unwrap();
    let t3 = r.record("T3' class").and_then(|x| x.note.clone()).unwrap_or_default();
    let (fast, rt) = within(t.elapsed(), 600.0);
    Outcome {
        pass: rec.pass == Some(true) && fast,
        detail: format!(
            "T2': P = {:.2e} (+- {:.2e}) vs 1e-3; T3': {t3}; {rt}",
            rec.empirical, rec.stderr
        ),
    }
}

fn c12(w8: &RunResult) -> Outcome {
    let mut c = w8.config.clone();
    c.workers = 1;
    let w1 = harness::run(&c).unwrap();
    let (a, b) = (w1.to_json().unwrap(), w8.to_json().unwrap());
    Outcome {
        pass: a == b,
        detail: format!(
            "workers 1 vs 8: {} bytes each, {}",
            a.len(),
            if a == b { "identical" } else { "DIFFERENT" }
        ),
    }
}

fn main() {
    // Only run when selected: `cargo test -- <filter>` with a non-matching
    // filter skips the suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |k: usize, o: Outcome| {
        println!("criterion {k:>2}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((k, o));
    };
    report(1, c1());
    report(2, c2());
    report(5, c5());
    report(6, c6());
    report(7, c7());
    report(8, c8());
    report(9, c9());
    report(10, c10());
    report(11, c11());
    let t = Instant::now();
    let tail = harness::run(&cfg(Experiment::SminTail, 300, p_log(300), 1, 200_000, 8)).unwrap();
    let tail_time = t.elapsed();
    report(4, c4(&tail, tail_time));
    report(12, c12(&tail));
    report(3, c3(&[&tail]));
    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(k, _)| *k).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
