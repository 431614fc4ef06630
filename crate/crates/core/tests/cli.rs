use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rescale-rl"));
    c.env_remove("RESCALE_RL_SEED");
    c
}

fn run(c: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = c.output().unwrap();
    (
        status.code().unwrap_or(-1),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

const SMALL: [&str; 6] = ["--set", "frames=2000", "--set", "trials=1", "--set", "output.checkpoint=true"];

fn assert_one_line_error(stderr: &str, kind: &str) {
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with(&format!("error kind={kind} msg=\"")), "{stderr}");
}

#[test]
fn train_then_eval_and_pdrr() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, stdout, _) = run(bin().arg("train").args(SMALL).arg("--out").arg(&out));
    assert_eq!(code, 0);
    assert!(stdout.starts_with("mode=fixed score="));
    let score = stdout.lines().next().unwrap().split("score=").nth(1).unwrap().to_string();

    let (code, stdout, _) = run(bin().arg("eval").arg(out.join("episodes.csv")));
    assert_eq!(code, 0);
    assert!(stdout.trim_end().ends_with(&format!("score={score}")));

    let (code, stdout, _) = run(bin().arg("pdrr").arg("--checkpoint").arg(out.join("checkpoints/trial_0")));
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "layer,neurons,pseudo_dying,pdrr");
    assert_eq!(lines.len(), 3);
}

#[test]
fn seed_env_var_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "seed=3\nframes=1000\ntrials=1\n").unwrap();
    let (code, stdout, _) = run(bin().env("RESCALE_RL_SEED", "41").arg("train").arg("--config").arg(&cfg));
    assert_eq!(code, 0);
    assert!(stdout.contains("trial=0 seed=41 "), "{stdout}");
    let (code, stdout, _) = run(bin().arg("train").arg("--config").arg(&cfg));
    assert_eq!(code, 0);
    assert!(stdout.contains("trial=0 seed=3 "), "{stdout}");

    let (code, _, stderr) = run(bin().env("RESCALE_RL_SEED", "x").arg("train").arg("--config").arg(&cfg));
    assert_eq!(code, 1);
    assert_one_line_error(&stderr, "config");
}

#[test]
fn failures_are_one_line() {
    let (code, _, stderr) = run(bin().args(["train", "--set", "bogus=1", "--set", "trials=0"]));
    assert_eq!(code, 1);
    assert_one_line_error(&stderr, "config");

    let (code, _, stderr) = run(bin().args(["eval", "/nonexistent/episodes.csv"]));
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error kind="), "{stderr}");
    assert_eq!(stderr.lines().count(), 1);

    let (code, _, stderr) = run(bin().arg("frobnicate"));
    assert_eq!(code, 2);
    assert_one_line_error(&stderr, "usage");

    let (code, stdout, _) = run(bin().arg("--help"));
    assert_eq!(code, 0);
    assert!(stdout.contains("scale-net"));
}

#[test]
fn scale_net_multiplies_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(run(bin().arg("train").args(SMALL).arg("--out").arg(&out)).0, 0);
    let ckpt = out.join("checkpoints/trial_0");
    let scaled = dir.path().join("scaled.net");
    let (code, _, _) = run(bin()
        .arg("scale-net")
        .arg("--input")
        .arg(ckpt.join("critic.net"))
        .args(["--c", "8"])
        .arg("--output")
        .arg(&scaled));
    assert_eq!(code, 0);
    let a = rescale_rl::nn::load_network(&ckpt.join("critic.net")).unwrap();
    let b = rescale_rl::nn::load_network(&scaled).unwrap();
    let x = rescale_rl::harness::read_matrix_csv(&ckpt.join("window.csv")).unwrap();
    let (ya, yb) = (a.predict(&x).unwrap(), b.predict(&x).unwrap());
    for (u, v) in ya.as_slice().iter().zip(yb.as_slice()) {
        assert!((8.0 * u - v).abs() <= 1e-12 * (1.0 + v.abs()));
    }

    let (code, _, stderr) = run(bin()
        .arg("scale-net")
        .arg("--input")
        .arg(ckpt.join("critic.net"))
        .arg("--c=-1")
        .arg("--output")
        .arg(&scaled));
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error kind="));
}

#[test]
fn prop1_table() {
    let (code, stdout, _) = run(bin().args(["prop1", "--batch", "16", "--samples", "20000"]));
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let bound = header.iter().position(|h| *h == "bound").unwrap();
    let lo = header.iter().position(|h| *h == "ci_low").unwrap();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        // empirical revival probability never sits clearly above the bound
        assert!(r[lo - 1] <= r[bound - 1] + 1e-9, "{r:?}");
    }
    let (code, _, stderr) = run(bin().args(["prop1", "--samples", "1"]));
    assert_eq!(code, 1);
    assert_one_line_error(&stderr, "invalid_argument");
}
