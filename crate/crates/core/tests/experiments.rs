use sparse_greedy::experiments::{run_experiment, ExperimentConfig, ExperimentReport, Flag, Row, CSV_HEADER};
use sparse_greedy::lpspace::lp_norm;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

fn lebesgue(dict: &str, algorithm: &str, target: &str, sweep: &str, trials: usize) -> ExperimentConfig {
    config(&format!(
        "kind = \"lebesgue\"\nseed = 11\ntrials = {trials}\n\n[dictionary]\n{dict}\n\n[algorithm]\n{algorithm}\n\n[target]\n{target}\n\n[sweep]\n{sweep}\n"
    ))
}

const TRIG2: &str = "type = \"trig\"\nmax_freq = 7\np = 2.0\npoints = 64";
const TRIG4: &str = "type = \"trig\"\nmax_freq = 7\np = 4.0\npoints = 64";

#[test]
fn sparse_targets_give_flagged_absolute_errors() {
    let cfg = lebesgue(
        TRIG2,
        "name = \"womp\"\nbudget = \"linear\"",
        "kind = \"sparse\"\nk = 3\nlaw = \"gaussian\"",
        "m_values = [3]",
        10,
    );
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.report.summary.errors, 0);
    for row in &out.rows {
        assert_eq!(row.flag, Flag::SigmaZero);
        assert!(row.ratio <= 1e-8, "{row:?}");
    }
}

#[test]
fn womp_on_orthonormal_basis_is_best_m_term() {
    let cfg = lebesgue(
        TRIG2,
        "name = \"womp\"\nbudget = \"linear\"",
        "kind = \"dense\"\nlaw = \"gaussian\"",
        "m_values = [1, 2, 3, 4, 5]",
        10,
    );
    let out = run_experiment(&cfg).unwrap();
    for row in &out.rows {
        assert_eq!(row.m, row.m_prime);
        assert_eq!(row.flag, Flag::Ok);
        assert!((row.ratio - 1.0).abs() <= 1e-9, "{row:?}");
    }
}

#[test]
fn l4_trig_ratios_stay_bounded() {
    let cfg = lebesgue(
        TRIG4,
        "name = \"wcga\"",
        "kind = \"dense\"\nlaw = \"gaussian\"",
        "m_values = [1, 2, 3, 4]",
        50,
    );
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.report.summary.errors, 0);
    let medians: Vec<f64> = out.report.summary.per_m.iter().map(|e| e.median_ratio.unwrap()).collect();
    assert_eq!(medians.len(), 4);
    assert!(medians.iter().all(|m| m.is_finite() && *m > 0.0));
    let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = medians.iter().copied().fold(0.0, f64::max);
    assert!(hi <= 3.0 * lo, "{medians:?}");
}

#[test]
fn exhaustive_rows_never_beat_the_oracle() {
    let cfg = lebesgue(
        TRIG4,
        "name = \"wcga\"\nbudget = \"linear\"\nbudget_c = 1.0",
        "kind = \"dense\"\nlaw = \"power\"\nalpha = 0.5",
        "m_values = [1, 2, 3]",
        8,
    );
    let out = run_experiment(&cfg).unwrap();
    for row in out.rows.iter().filter(|r| r.flag == Flag::Ok) {
        assert!(row.m_prime <= row.m);
        assert!(row.ratio >= 1.0 - 1e-9, "{row:?}");
    }
    for rec in &out.records {
        let table = rec.sigma.as_ref().unwrap();
        for m in 0..=3 {
            assert!(rec.traces[0].norm_at(m) >= table.sigma(m) - 1e-9);
        }
    }
}

fn phase(dict: &str, ks: &str, factors: &str, trials: usize) -> ExperimentConfig {
    config(&format!(
        "kind = \"phase\"\nseed = 2\ntrials = {trials}\n\n[dictionary]\n{dict}\n\n[algorithm]\nname = \"womp\"\n\n[target]\nkind = \"sparse\"\nlaw = \"gaussian\"\n\n[sweep]\nk_values = {ks}\nbudget_factors = {factors}\n"
    ))
}

#[test]
fn single_atoms_and_orthonormal_bases_recover() {
    let gaussian = "type = \"gaussian\"\nrows = 32\ncols = 64\nseed = 3\np = 2.0";
    let out = run_experiment(&phase(gaussian, "[1]", "[1.0, 2.0, 3.0]", 20)).unwrap();
    assert_eq!(out.report.summary.success.unwrap().rates, vec![vec![1.0, 1.0, 1.0]]);

    let out = run_experiment(&phase(TRIG2, "[1, 2, 4, 6]", "[1.0]", 20)).unwrap();
    let rates = out.report.summary.success.unwrap().rates;
    assert!(rates.iter().all(|r| r == &vec![1.0]), "{rates:?}");
}

#[test]
fn success_rate_grows_with_budget() {
    let gaussian = "type = \"gaussian\"\nrows = 64\ncols = 128\nseed = 1\np = 2.0";
    let trials = 40;
    let out = run_experiment(&phase(gaussian, "[10]", "[1.0, 1.5, 2.0, 3.0]", trials)).unwrap();
    let rates = &out.report.summary.success.unwrap().rates[0];
    for w in rates.windows(2) {
        let p = w[0].max(w[1]);
        let noise = 2.0 * (p * (1.0 - p) / trials as f64).sqrt();
        assert!(w[1] >= w[0] - noise - 1e-12, "{rates:?}");
    }
    assert!(rates.iter().all(|r| (0.0..=1.0).contains(r)));
}

#[test]
fn thresholding_is_best_m_term_in_l2() {
    let cfg = config(&format!(
        "kind = \"tga_compare\"\nseed = 4\ntrials = 6\n\n[dictionary]\n{TRIG2}\n\n[algorithm]\nname = \"wcga\"\n\n[target]\nkind = \"dense\"\nlaw = \"gaussian\"\n\n[sweep]\nm_values = [0, 1, 2, 3, 4]\n"
    ));
    let out = run_experiment(&cfg).unwrap();
    for row in out.rows.iter().filter(|r| r.flag == Flag::Tga) {
        assert!((row.res_norm - row.sigma_m).abs() <= 1e-9, "{row:?}");
    }
    for rec in &out.records {
        let f0 = lp_norm(&rec.target.f0, 2.0).unwrap();
        for trace in &rec.traces {
            assert!((trace.norm_at(0) - f0).abs() <= 1e-12 * f0);
        }
    }
    let zero: Vec<&Row> = out.rows.iter().filter(|r| r.m == 0).collect();
    assert!(!zero.is_empty());
    for r in zero {
        assert!((r.res_norm - r.sigma_m).abs() <= 1e-12 * r.sigma_m);
    }
}

#[test]
fn runs_are_deterministic() {
    let text = include_str!("../configs/noisy_sparse_l4.toml");
    let a = run_experiment(&config(text)).unwrap();
    let b = run_experiment(&config(text)).unwrap();
    assert_eq!(a.csv(), b.csv());
    assert_eq!(a.report.to_json(), b.report.to_json());
}

#[test]
fn failing_trials_do_not_abort_the_batch() {
    let cfg = lebesgue(
        TRIG4,
        "name = \"wcga\"",
        "kind = \"dense\"\nlaw = \"gaussian\"",
        "m_values = [1, 2]",
        3,
    );
    let mut cfg = cfg;
    cfg.oracle.combo_cap = 10;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.report.summary.errors, 3);
    assert!(out.rows.iter().all(|r| r.flag == Flag::Error && r.ratio.is_nan()));
    assert!(out.report.trials.iter().all(|t| t.error.as_deref().is_some_and(|e| e.contains("cap"))));
}

#[test]
fn reports_round_trip_and_match_the_documented_schema() {
    let out = run_experiment(&config(include_str!("../configs/noisy_sparse_l4.toml"))).unwrap();
    let json = out.report.to_json();
    let back = ExperimentReport::from_json(&json).unwrap();
    assert_eq!(back, out.report);

    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["schema_version", "version", "kind", "config", "dictionary_size", "rows", "summary", "trials"] {
        assert!(value.get(key).is_some(), "{key}");
    }
    assert_eq!(value["schema_version"], 1);
    assert_eq!(value["rows"], out.rows.len());

    let csv = out.csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        fields[0].parse::<usize>().unwrap();
        fields[3].parse::<f64>().unwrap();
    }
}
