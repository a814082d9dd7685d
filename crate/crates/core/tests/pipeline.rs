use pauliest::batch_io::{read_batch, write_batch};
use pauliest::population::{max_candidates, prefix_masses};
use pauliest::*;

fn spam_for_delta(delta: f64) -> SpamParams {
    SpamParams::new(1.0 - delta, 1.0).unwrap()
}

#[test]
fn two_string_channel_recovered_in_most_seeds() {
    let pi = ErrorRateDistribution::from_strs([("IIXIII", 0.6), ("IIIIII", 0.4)]).unwrap();
    let spam = spam_for_delta(0.1);
    let m = plan_budget(6, 0.1, 0.05, &spam, KindPolicy::Auto).unwrap();
    let good = (0..20)
        .filter(|&seed| {
            let batch = simulate_batch(&pi, &spam, m as usize, seed).unwrap();
            let report = recover(&batch, 0.1, 0.05).unwrap();
            (report.estimate_of(&"IIXIII".parse().unwrap()) - 0.6).abs() <= 0.1
                && (report.estimate_of(&"IIIIII".parse().unwrap()) - 0.4).abs() <= 0.1
        })
        .count();
    assert!(good >= 18, "{good}/20");
}

#[test]
fn uniform_two_qubit_channel_is_within_eps() {
    let strings = [
        "II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY",
        "ZZ",
    ];
    let pi = ErrorRateDistribution::from_strs(strings.iter().map(|s| (*s, 1.0 / 16.0))).unwrap();
    let spam = SpamParams::new(0.95, 0.95).unwrap();
    let m = plan_budget(2, 0.1, 0.05, &spam, KindPolicy::Auto).unwrap();
    let batch = simulate_batch(&pi, &spam, m as usize, 17).unwrap();
    let report = recover(&batch, 0.1, 0.05).unwrap();
    assert!(report.linf_error(&pi) <= 0.1);
    assert!(report.estimates.iter().all(|c| c.mass_estimate >= 0.05));
}

#[test]
fn soundness_on_eight_qubits() {
    let pi = ErrorRateDistribution::from_strs([
        ("IIIIIIII", 0.4),
        ("XIIIIIIZ", 0.2),
        ("IYYIIIII", 0.15),
        ("IIIZZZII", 0.15),
        ("XYZXYZXY", 0.1),
    ])
    .unwrap();
    let spam = SpamParams::new(0.98, 0.97).unwrap();
    let eps = 0.1;
    let m = plan_budget(8, eps, 0.05, &spam, KindPolicy::Auto).unwrap();
    let good = (0..20)
        .filter(|&seed| {
            let batch = simulate_batch(&pi, &spam, m as usize, 1000 + seed).unwrap();
            let report = recover(&batch, eps, 0.05).unwrap();
            assert!(report.levels.iter().all(|l| l.kept <= max_candidates(eps)));
            report.linf_error(&pi) <= eps
        })
        .count();
    assert!(good >= 18, "{good}/20");
}

#[test]
fn budget_grows_like_cube_root_trend() {
    let spam = spam_for_delta(0.3);
    let m8 = plan_budget(8, 0.1, 0.05, &spam, KindPolicy::Auto).unwrap() as f64;
    let m27 = plan_budget(27, 0.1, 0.05, &spam, KindPolicy::Auto).unwrap() as f64;
    let ratio = m27.ln() / m8.ln();
    assert!((ratio - 1.5).abs() <= 0.25 * 1.5, "ratio {ratio}");
}

#[test]
fn exact_limit_matches_across_policies_and_at_large_n() {
    // 52 qubits puts the last levels on the LP estimator.
    let mut heavy = vec![0u8; 52];
    heavy[3] = 1;
    heavy[40] = 3;
    heavy[51] = 2;
    let mut light = vec![0u8; 52];
    light[0] = 2;
    let pi = ErrorRateDistribution::new(
        52,
        [
            (PauliString::identity(52), 0.5),
            (PauliString::from_symbols(&heavy).unwrap(), 0.3),
            (PauliString::from_symbols(&light).unwrap(), 0.2),
        ],
    )
    .unwrap();
    let spam = SpamParams::new(0.99, 0.99).unwrap();
    let obs = ExactObserver::new(pi.clone(), spam, 1 << 30);
    let report = recover_with(&obs, &spam, 0.1, 0.05, &RecoverOptions::default()).unwrap();
    assert_eq!(report.estimates.len(), 3);
    assert!(report.linf_error(&pi) <= 0.1 / 8.0 + 1e-6);
    let kinds: Vec<&str> = report.levels.iter().map(|l| l.estimator.as_str()).collect();
    assert_eq!(kinds[0], "exact-inverse");
    assert_eq!(kinds[51], "lp-regularized");
}

#[test]
fn assumed_spam_overrides_batch_parameters() {
    let pi = ErrorRateDistribution::from_strs([("XIII", 0.7), ("IIII", 0.3)]).unwrap();
    let spam = SpamParams::new(0.9, 0.9).unwrap();
    let obs = ExactObserver::new(pi.clone(), spam, 1 << 30);
    let calibrated = recover_with(&obs, &spam, 0.1, 0.05, &RecoverOptions::default()).unwrap();
    let options = RecoverOptions {
        assumed_spam: Some(SpamParams::noiseless()),
        ..RecoverOptions::default()
    };
    let naive = recover_with(&obs, &spam, 0.1, 0.05, &options).unwrap();
    let x: PauliString = "XIII".parse().unwrap();
    assert!((calibrated.estimate_of(&x) - 0.7).abs() < 1e-9);
    // Ignoring SPAM leaks mass away from the true strings.
    assert!(naive.estimate_of(&x) < 0.7 - 0.05);
}

#[test]
fn recovering_from_a_reloaded_batch_is_identical() {
    let pi = ErrorRateDistribution::from_strs([("IZZ", 0.5), ("XII", 0.5)]).unwrap();
    let batch = simulate_batch(&pi, &SpamParams::new(0.95, 0.9).unwrap(), 20_000, 8).unwrap();
    let dir = std::env::temp_dir().join(format!("pauliest-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for name in ["batch.jsonl", "batch.csv"] {
        let path = dir.join(name);
        write_batch(&batch, &path).unwrap();
        let loaded = read_batch(&path).unwrap();
        assert_eq!(loaded, batch);
        let a = serde_json::to_string(&recover(&batch, 0.2, 0.1).unwrap()).unwrap();
        let b = serde_json::to_string(&recover(&loaded, 0.2, 0.1).unwrap()).unwrap();
        assert_eq!(a, b);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn prefix_masses_sum_per_level() {
    let pi = ErrorRateDistribution::from_strs([("XY", 0.25), ("XZ", 0.25), ("II", 0.5)]).unwrap();
    let masses = prefix_masses(&pi).unwrap();
    assert_eq!(masses[&"X".parse::<PauliString>().unwrap()], 0.5);
    let level1: f64 = masses
        .iter()
        .filter(|(p, _)| p.len() == 1)
        .map(|(_, m)| m)
        .sum();
    assert!((level1 - 1.0).abs() < 1e-12);
}
