use std::fs;
use std::path::Path;

use rescale_rl::harness::{
    emit_outputs, emit_sweep, evaluate_csv, evaluate_final, run_experiment, run_sweep, scale_label,
    ExperimentConfig, ScaleMode,
};
use rescale_rl::Error;

fn small(extra: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!(
        "env=chain\nframes=3000\ntrials=2\npdrr.interval=500\noutput.checkpoint=true\n{extra}"
    ))
    .unwrap()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn runs_are_byte_reproducible() {
    for extra in ["", "mode=ans\nans.tolerance=5", "mode=popart"] {
        let cfg = small(extra);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        emit_outputs(&run_experiment(&cfg).unwrap(), a.path()).unwrap();
        emit_outputs(&run_experiment(&cfg).unwrap(), b.path()).unwrap();
        let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
        assert!(sa.iter().any(|(n, _)| n.ends_with("critic.net")));
        assert_eq!(sa, sb, "config {extra:?}");
    }
}

#[test]
fn different_seeds_differ() {
    let a = run_experiment(&small("seed=1")).unwrap();
    let b = run_experiment(&small("seed=2")).unwrap();
    assert_ne!(a[0].episodes, b[0].episodes);
    assert_eq!(a[1].seed, 2);
}

#[test]
fn csv_score_matches_in_memory_score() {
    let logs = run_experiment(&small("scale=10")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&logs, dir.path()).unwrap();
    let from_csv = evaluate_csv(&dir.path().join("episodes.csv")).unwrap();
    assert_eq!(from_csv, evaluate_final(&logs).unwrap());
}

#[test]
fn sweep_writes_one_curve_per_scale() {
    let scales = [0.5, 1.0, 10.0];
    let results = run_sweep(&small(""), &scales).unwrap();
    for (c, logs) in &results {
        assert!(logs.iter().all(|l| l.final_scale == *c));
    }
    let dir = tempfile::tempdir().unwrap();
    emit_sweep(&results, dir.path()).unwrap();
    let curves: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("plot_return_"))
        .collect();
    assert_eq!(curves.len(), scales.len());
    for c in scales {
        let label = scale_label(c);
        assert!(curves.contains(&format!("plot_return_{label}.csv")));
        assert!(dir.path().join(&label).join("episodes.csv").is_file());
    }
    let summary = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), scales.len() + 1);
}

#[test]
fn config_errors_are_all_reported() {
    let err = ExperimentConfig::parse("trials=0\nfoo=1\nlr=abc\nmode=ans\nscale=2\nseed=1\nseed=2\n").unwrap_err();
    let Error::Config(msgs) = err else { panic!("expected a config error") };
    for needle in ["trials", "foo", "lr", "scale", "seed"] {
        assert!(msgs.iter().any(|m| m.contains(needle)), "{needle} missing from {msgs:?}");
    }
    assert!(msgs.len() >= 5);
}

#[test]
fn config_text_round_trips() {
    let cfg = small("mode=ans\nans.tolerance=7\nhidden=16,8\nactivation=leaky_relu");
    let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.mode, ScaleMode::Ans);
}
