use std::io::Write;
use std::path::Path;

use debunk::estimation::{
    fit_least_squares, fit_loss, fit_raw_excitation, ingest, FitConfig, IngestOptions, Ingested,
    KindLogs,
};
use debunk::hawkes::{simulate, EventLog, HawkesParams, NewsKind};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simulate_windows(p: &HawkesParams, windows: u64, horizon: f64) -> Vec<KindLogs> {
    (0..windows)
        .map(|w| KindLogs {
            fake: simulate(p, NewsKind::Fake, &EventLog::new(0.0), 0.0, horizon, 2 * w).unwrap(),
            mitigation: simulate(
                p,
                NewsKind::Mitigation,
                &EventLog::new(0.0),
                0.0,
                horizon,
                2 * w + 1,
            )
            .unwrap(),
        })
        .collect()
}

fn three_node_truth() -> HawkesParams {
    let a = array![[0.20, 0.30, 0.00], [0.00, 0.10, 0.35], [0.25, 0.00, 0.15]];
    HawkesParams::new(a, 1.0, vec![0.10, 0.20, 0.05], vec![0.10, 0.05, 0.20]).unwrap()
}

#[test]
fn refit_recovers_three_node_ground_truth() {
    let truth = three_node_truth();
    assert!(truth.is_stable());
    let logs = simulate_windows(&truth, 50, 500.0);
    let fit = fit_least_squares(&logs, 3, &FitConfig::default()).unwrap();
    let check = |name: &str, est: f64, t: f64| {
        if t.abs() >= 0.05 {
            let rel = (est - t).abs() / t.abs();
            assert!(
                rel <= 0.20,
                "{name}: estimate {est}, truth {t}, relative error {rel}"
            );
        }
    };
    for i in 0..3 {
        for j in 0..3 {
            check(&format!("a[{i}][{j}]"), fit.a()[[i, j]], truth.a()[[i, j]]);
        }
        check(&format!("mu_f[{i}]"), fit.mu_fake()[i], truth.mu_fake()[i]);
        check(
            &format!("mu_m[{i}]"),
            fit.mu_mitigation()[i],
            truth.mu_mitigation()[i],
        );
    }
}

#[test]
fn poisson_data_gives_negligible_off_diagonal_excitation() {
    let p = HawkesParams::new(
        Array2::zeros((3, 3)),
        1.0,
        vec![0.2, 0.1, 0.3],
        vec![0.1, 0.3, 0.2],
    )
    .unwrap();
    let logs = simulate_windows(&p, 20, 500.0);
    let raw = fit_raw_excitation(&logs, 3, &FitConfig::default()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert!(raw[[i, j]].abs() <= 0.05, "a[{i}][{j}] = {}", raw[[i, j]]);
            }
        }
    }
}

#[test]
fn ridge_never_lowers_the_training_contrast() {
    let logs = simulate_windows(&three_node_truth(), 5, 200.0);
    let base = fit_loss(
        &logs,
        3,
        &FitConfig {
            ridge: 0.0,
            ..FitConfig::default()
        },
    )
    .unwrap();
    let mut prev = base;
    for ridge in [1e-6, 1e-2, 1.0, 100.0, 1e4] {
        let r = fit_loss(
            &logs,
            3,
            &FitConfig {
                ridge,
                ..FitConfig::default()
            },
        )
        .unwrap();
        assert!(
            r >= base - 1e-9 * base.max(1.0),
            "ridge {ridge}: {r} < {base}"
        );
        assert!(r >= prev - 1e-9 * prev.max(1.0));
        prev = r;
    }
}

#[test]
fn fitted_parameters_are_nonnegative_when_clipping() {
    let logs = simulate_windows(&three_node_truth(), 3, 100.0);
    let fit = fit_least_squares(&logs, 3, &FitConfig::default()).unwrap();
    assert!(fit.a().iter().all(|v| *v >= 0.0));
    assert!(fit
        .mu_fake()
        .iter()
        .chain(fit.mu_mitigation())
        .all(|v| *v >= 0.0));
}

/// Table-shaped record file: 98 users, 70 fake and 159 true posts, with
/// some duplicated timestamps.
pub fn gur_shaped_records() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(98);
    let mut lines = vec!["user_id,timestamp,label".to_string()];
    let labels: Vec<&str> = std::iter::repeat_n("fake", 70)
        .chain(std::iter::repeat_n("true", 159))
        .collect();
    for (k, label) in labels.iter().enumerate() {
        let user = if k < 98 { k } else { rng.random_range(0..98) };
        let ts = 1_400_000_000 + rng.random_range(0..86_400u64) / 7 * 7;
        lines.push(format!("u{user},{ts},{label}"));
    }
    lines.join("\n") + "\n"
}

fn ingest_str(s: &str, opts: IngestOptions) -> Ingested {
    ingest(s.as_bytes(), Path::new("records.csv"), opts).unwrap()
}

#[test]
fn gur_shaped_input_keeps_sizes() {
    let data = ingest_str(&gur_shaped_records(), IngestOptions::default());
    assert_eq!(data.n(), 98);
    assert_eq!(data.logs.fake.len(), 70);
    assert_eq!(data.logs.mitigation.len(), 159);
    let merged = data.logs.fake.merged(&data.logs.mitigation);
    assert!(merged.events().windows(2).all(|w| w[0].time < w[1].time));
    assert_eq!(merged.events()[0].time, 0.0);
    assert_eq!(merged.last_time(), Some(500.0));
}

#[test]
fn ingestion_is_idempotent() {
    for opts in [IngestOptions::default(), IngestOptions { horizon: None }] {
        let first = ingest_str(&gur_shaped_records(), opts);
        let mut buf = Vec::new();
        first.write_records(&mut buf).unwrap();
        let second = ingest_str(std::str::from_utf8(&buf).unwrap(), opts);
        assert_eq!(first, second);
    }
}

#[test]
fn empty_file_ingests_to_empty_logs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::File::create(&path)
        .unwrap()
        .write_all(b"# nothing\n")
        .unwrap();
    let data = debunk::estimation::ingest_file(&path, IngestOptions::default()).unwrap();
    assert_eq!(data.n(), 0);
    assert!(data.logs.fake.is_empty() && data.logs.mitigation.is_empty());
}
