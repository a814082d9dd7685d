//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use pauliest::batch_io::write_jsonl;
use pauliest::channels::{generating_value, row_polynomial_values, unit};
use pauliest::eta::DEFAULT_GRID;
use pauliest::individual::estimate_p0;
use pauliest::rng::RecordStream;
use pauliest::spam::staged_p_one;
use pauliest::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_simplex(rng: &mut RecordStream, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| -(1.0 - rng.uniform()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn zflip(nu1: f64, nu2: f64) -> ChannelSpec {
    ChannelSpec::Zflip { nu1, nu2 }
}

fn channel_algebra() -> Outcome {
    let mut worst = 0.0f64;
    for n in [1, 4, 16, 32] {
        for nu1 in [0.3, 2.0 / 3.0, 0.95] {
            for nu2 in [0.5, 0.8, 0.99] {
                let direct = amatrix(&zflip(nu1, nu2), n).unwrap();
                let z = amatrix(&ChannelSpec::Z { lambda: 1.0 - nu1 }, n).unwrap();
                let bsc = amatrix(
                    &ChannelSpec::Bsc {
                        b: (1.0 - nu2) / 2.0,
                    },
                    n,
                )
                .unwrap();
                let composed = concat(&z, &bsc).unwrap();
                for i in 0..=n {
                    for j in 0..=n {
                        worst = worst.max((direct.get(i, j) - composed.get(i, j)).abs());
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max |Δ| = {worst:.2e} (tol 1e-12)"))
}

fn generating_fidelity() -> Outcome {
    let mut rng = RecordStream::new(2, 0);
    let mut worst = 0.0f64;
    // Near z = −1 the row sums cancel down to ν₂^n |1 − 2ν₁|^i, so ν₁ close
    // to 1/2 would exhaust even double-double summation at n = 32.
    for n in [1, 2, 5, 8, 13, 21, 32] {
        for &(nu1, nu2) in &[
            (2.0 / 3.0, 0.7),
            (2.0 / 3.0, 0.9),
            (2.0 / 3.0, 0.99),
            (0.8, 0.8),
        ] {
            let spec = zflip(nu1, nu2);
            let zs: Vec<Complex64> = (0..100)
                .map(|_| unit(std::f64::consts::PI * (2.0 * rng.uniform() - 1.0)))
                .collect();
            let summed = row_polynomial_values(&spec, n, &zs).unwrap();
            for (z, rows) in zs.iter().zip(&summed) {
                for (i, s) in rows.iter().enumerate() {
                    let closed = generating_value(&spec, n, i, *z).unwrap();
                    worst = worst.max((closed - s).norm() / s.norm());
                }
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max relative error {worst:.2e} over 100 points (tol 1e-9)"),
    )
}

fn readout_law() -> Outcome {
    let mut rng = RecordStream::new(3, 0);
    let mut worst = 0.0f64;
    let mut seed = 100;
    for n in 1..=3usize {
        let strings: Vec<PauliString> = (0..4usize.pow(n as u32))
            .map(|code| {
                let syms: Vec<u8> = (0..n).map(|j| ((code >> (2 * j)) & 3) as u8).collect();
                PauliString::from_symbols(&syms).unwrap()
            })
            .collect();
        let masses = random_simplex(&mut rng, strings.len());
        let pi = ErrorRateDistribution::new(n, strings.into_iter().zip(masses)).unwrap();
        for delta in [0.0, 0.2, 0.6] {
            let r = (1.0f64 - delta).sqrt();
            let spam = SpamParams::new(r, r).unwrap();
            let exact = exact_readout_distribution(&pi, &spam).unwrap();
            seed += 1;
            let batch = simulate_batch(&pi, &spam, 1_000_000, seed).unwrap();
            let mut counts: BTreeMap<Readout, u64> = BTreeMap::new();
            for rec in batch.records() {
                *counts.entry(rec.readout()).or_default() += 1;
            }
            let tv: f64 = exact
                .iter()
                .map(|(r, &p)| (counts.get(r).copied().unwrap_or(0) as f64 / 1e6 - p).abs())
                .sum::<f64>()
                / 2.0;
            worst = worst.max(tv);
        }
    }
    outcome(worst <= 0.01, format!("max TV {worst:.4} (tol 0.01)"))
}

fn spam_factorization() -> Outcome {
    let mut worst = 0.0f64;
    for a in 0..10 {
        for b in 0..10 {
            let r_prep = 0.1 + 0.1 * a as f64;
            let r_meas = 0.1 + 0.1 * b as f64;
            let staged = SpamParams::new(r_prep, r_meas).unwrap();
            let merged = SpamParams::new(r_prep * r_meas, 1.0).unwrap();
            for nontrivial in [false, true] {
                let lhs = staged_p_one(r_prep, r_meas, nontrivial);
                let rhs = staged_p_one(r_prep * r_meas, 1.0, nontrivial);
                worst = worst.max((lhs - rhs).abs());
            }
            worst = worst.max((staged.p_one_given_trivial() - merged.p_one_given_trivial()).abs());
            worst = worst
                .max((staged.p_one_given_nontrivial() - merged.p_one_given_nontrivial()).abs());
        }
    }
    outcome(worst <= 1e-15, format!("max |Δ| = {worst:.2e} (tol 1e-15)"))
}

fn unbiasedness() -> Outcome {
    let spec = zflip(2.0 / 3.0, 0.9);
    let mut rng = RecordStream::new(5, 0);
    let mut worst = 0.0f64;
    for k in 1..=16 {
        let a = amatrix(&spec, k).unwrap();
        let est = build_estimator(&spec, k, EstimatorKind::ExactInverse, Precision::Auto).unwrap();
        for _ in 0..100 {
            let p = random_simplex(&mut rng, k + 1);
            let q = a.push_forward(&p).unwrap();
            worst = worst.max((est.mean(&q).unwrap() - p[0]).abs());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max |(pA)·y − p₀| = {worst:.2e} over k ≤ 16 (tol 1e-8)"),
    )
}

fn individual_end_to_end() -> Outcome {
    let k = 8;
    let spec = zflip(2.0 / 3.0, 0.9);
    let est = build_estimator(&spec, k, EstimatorKind::ExactInverse, Precision::Auto).unwrap();
    let m = plan_samples(&est, 0.05, 0.05).unwrap();
    // Retention 0.9 overall; the rest of the mass spread over strings of
    // weights 1..8 so the altered weight law is nontrivial.
    let pi = ErrorRateDistribution::from_strs([
        ("IIIIIIII", 0.4),
        ("XIIIIIII", 0.15),
        ("IYZIIIII", 0.1),
        ("IIIXXXII", 0.1),
        ("ZZZZIIII", 0.1),
        ("IXYZXYZI", 0.1),
        ("YYYYYYYY", 0.05),
    ])
    .unwrap();
    let spam = SpamParams::new(0.9, 1.0).unwrap();
    let identity = PauliString::identity(k);
    let mut good = 0;
    for seed in 0..20 {
        let batch = simulate_batch(&pi, &spam, m as usize, 600 + seed).unwrap();
        let hist = batch.altered_histogram(&identity).unwrap();
        let e = estimate_p0(&hist, &est, 0.05).unwrap();
        if (e.value - 0.4).abs() <= 0.05 {
            good += 1;
        }
    }
    outcome(
        good >= 18,
        format!("{good}/20 seeds within 0.05 at m = {m}"),
    )
}

fn full_pipeline() -> Outcome {
    let pi = ErrorRateDistribution::from_strs([
        ("IIIIII", 0.55),
        ("XZIIII", 0.25),
        ("IIYIIZ", 0.15),
        ("XXXIII", 0.05),
    ])
    .unwrap();
    let spam = SpamParams::new(0.95, 0.95).unwrap();
    let eps = 0.05;
    let m = plan_budget(6, eps, 0.05, &spam, KindPolicy::Auto).unwrap();
    let mut good = 0;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let batch = simulate_batch(&pi, &spam, m as usize, 700 + seed).unwrap();
        let report = recover(&batch, eps, 0.05).unwrap();
        let err = report.linf_error(&pi);
        worst = worst.max(err);
        if err <= eps {
            good += 1;
        }
    }
    outcome(
        good >= 18,
        format!("{good}/20 runs with ℓ∞ error ≤ {eps} at m = {m}, worst {worst:.4}"),
    )
}

fn eta_ordering() -> Outcome {
    let (nu1, nu2) = (2.0 / 3.0, 0.9);
    let spec = zflip(nu1, nu2);
    let ns = [4, 8, 12, 16];
    let epss = [0.05, 0.1, 0.2];
    let mut gap = f64::INFINITY;
    let mut table = vec![vec![0.0; epss.len()]; ns.len()];
    for (a, &n) in ns.iter().enumerate() {
        for (b, &eps) in epss.iter().enumerate() {
            let sol = eta_exact(&spec, n, eps).unwrap();
            let circle = circle_minimax_value(&sol.minimizer, nu1, nu2, n, DEFAULT_GRID).unwrap();
            gap = gap.min(sol.value - circle);
            table[a][b] = sol.value;
        }
    }
    let mut monotone = true;
    for pair in table.windows(2) {
        monotone &= pair[1].iter().zip(&pair[0]).all(|(hi, lo)| *hi <= lo + 1e-9);
    }
    for row in &table {
        for b in 1..epss.len() {
            monotone &= row[b] >= row[b - 1] - 1e-9;
        }
    }
    outcome(
        gap >= -1e-7 && monotone,
        format!("min(η − circle) = {gap:.3e} (tol −1e-7), monotone: {monotone}"),
    )
}

fn scaling_trend() -> Outcome {
    let ns = [8usize, 16, 27, 48, 64];
    let spec = ChannelSpec::probe_channel(0.7);
    let logs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            build_estimator(&spec, n, EstimatorKind::ExactInverse, Precision::Extended)
                .unwrap()
                .sup_norm
                .ln()
        })
        .collect();
    // Sublinear in n: ln‖y‖∞ / n strictly decreasing beyond rounding.
    // Superlinear in n^{1/4}: ln‖y‖∞ / n^{1/4} strictly increasing.
    let per_n: Vec<f64> = logs.iter().zip(&ns).map(|(l, &n)| l / n as f64).collect();
    let per_root: Vec<f64> = logs
        .iter()
        .zip(&ns)
        .map(|(l, &n)| l / (n as f64).powf(0.25))
        .collect();
    let sublinear = per_n.windows(2).all(|w| w[1] < w[0] * (1.0 - 1e-9));
    let superlinear = per_root.windows(2).all(|w| w[1] > w[0]);

    // Diagnostic: the bias-regularized estimator at bias ε/2.
    let lp: Vec<f64> = ns
        .iter()
        .map(|&n| {
            build_estimator(
                &spec,
                n,
                EstimatorKind::LpRegularized { eps_bias: 0.05 },
                Precision::Double,
            )
            .map(|e| e.sup_norm.ln())
            .unwrap_or(f64::NAN)
        })
        .collect();
    let lp_sub = lp
        .windows(2)
        .zip(ns.windows(2))
        .all(|(l, n)| l[1] / (n[1] as f64) < l[0] / (n[0] as f64));
    let lp_super = lp
        .windows(2)
        .zip(ns.windows(2))
        .all(|(l, n)| l[1] / (n[1] as f64).powf(0.25) > l[0] / (n[0] as f64).powf(0.25));
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    outcome(
        sublinear && superlinear,
        format!(
            "exact ln‖y‖∞ = [{}], per n = [{}]: sublinear {sublinear}, superlinear in n^1/4 {superlinear}; \
             diagnostic lp(bias 0.05) ln‖y‖∞ = [{}]: sublinear {lp_sub}, superlinear {lp_super}",
            fmt(&logs),
            fmt(&per_n),
            fmt(&lp)
        ),
    )
}

fn determinism() -> Outcome {
    let pi =
        ErrorRateDistribution::from_strs([("IIII", 0.7), ("XIZI", 0.2), ("IYYI", 0.1)]).unwrap();
    let spam = SpamParams::new(0.97, 0.95).unwrap();
    let run = || {
        let batch = simulate_batch(&pi, &spam, 50_000, 424242).unwrap();
        let mut bytes = Vec::new();
        write_jsonl(&batch, &mut bytes).unwrap();
        let report = recover(&batch, 0.1, 0.05).unwrap();
        (
            bytes,
            serde_json::to_vec_pretty(&report).unwrap(),
            report.to_csv(),
        )
    };
    let first = run();
    let second = run();
    let same = first == second;
    outcome(
        same,
        format!(
            "batch {} bytes, report {} bytes, identical: {same}",
            first.0.len(),
            first.1.len()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 10] = [
        (
            "channel algebra",
            channel_algebra,
            Some(Duration::from_secs(1)),
        ),
        (
            "generating-function fidelity",
            generating_fidelity,
            Some(Duration::from_secs(5)),
        ),
        ("readout law", readout_law, Some(Duration::from_secs(30))),
        ("SPAM factorization", spam_factorization, None),
        (
            "estimator unbiasedness",
            unbiasedness,
            Some(Duration::from_secs(1)),
        ),
        (
            "individual recovery end-to-end",
            individual_end_to_end,
            Some(Duration::from_secs(120)),
        ),
        (
            "full pipeline",
            full_pipeline,
            Some(Duration::from_secs(600)),
        ),
        ("η ordering", eta_ordering, Some(Duration::from_secs(300))),
        (
            "scaling trend",
            scaling_trend,
            Some(Duration::from_secs(120)),
        ),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = run();
        let took = start.elapsed();
        if let Some(limit) = limit {
            if took > *limit {
                result.pass = false;
                result
                    .detail
                    .push_str(&format!("; runtime {took:.2?} over {limit:?}"));
            }
        }
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {} ({:.2?}) {}",
            i + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            took,
            result.detail
        );
    }
    println!(
        "acceptance: {} passed, {} failed",
        criteria.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
