//! CSV logs, summaries, plot data and checkpoints.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::eval::{evaluate_final, evaluate_records};
use super::run::{EpisodeRecord, TrialLog};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::save_network;

/// Number of frame bins in return and scale curves.
pub const PLOT_BINS: usize = 50;

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn n_pdrr_columns(logs: &[TrialLog]) -> usize {
    logs.iter()
        .flat_map(|l| l.episodes.iter().map(|e| e.pdrr.len()))
        .max()
        .unwrap_or(0)
}

pub fn episode_header(n_layers: usize) -> Vec<String> {
    let mut h = strings(&["trial", "episode", "frame", "raw_return", "scaled_return", "scale"]);
    h.extend((1..=n_layers).map(|k| format!("pdrr_l{k}")));
    h
}

pub fn write_episodes_csv(path: &Path, logs: &[TrialLog]) -> Result<()> {
    let n = n_pdrr_columns(logs);
    let rows: Vec<Vec<String>> = logs
        .iter()
        .flat_map(|l| &l.episodes)
        .map(|e| {
            let mut r = vec![
                e.trial.to_string(),
                e.episode.to_string(),
                e.frame.to_string(),
                e.raw_return.to_string(),
                e.scaled_return.to_string(),
                e.scale.to_string(),
            ];
            r.extend((0..n).map(|k| e.pdrr.get(k).map_or(String::new(), |v| v.to_string())));
            r
        })
        .collect();
    write_csv(path, &episode_header(n), &rows)
}

pub fn read_episodes_csv(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let n = header.len().saturating_sub(6);
    if header.iter().take(6).ne(episode_header(0).iter().map(String::as_str)) {
        return Err(csv_err(path, "unexpected episode header"));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |col: &str| csv_err(path, format!("row {}: bad {col}", i + 1));
        let f = |k: usize| rec.get(k).unwrap_or("").parse::<f64>();
        let mut pdrr = Vec::new();
        for k in 0..n {
            let cell = rec.get(6 + k).unwrap_or("");
            if cell.is_empty() {
                break;
            }
            pdrr.push(cell.parse::<f64>().map_err(|_| bad("pdrr"))?);
        }
        out.push(EpisodeRecord {
            trial: rec.get(0).unwrap_or("").parse().map_err(|_| bad("trial"))?,
            episode: rec.get(1).unwrap_or("").parse().map_err(|_| bad("episode"))?,
            frame: rec.get(2).unwrap_or("").parse().map_err(|_| bad("frame"))?,
            raw_return: f(3).map_err(|_| bad("raw_return"))?,
            scaled_return: f(4).map_err(|_| bad("scaled_return"))?,
            scale: f(5).map_err(|_| bad("scale"))?,
            pdrr,
        });
    }
    Ok(out)
}

/// Mean of `value` over records falling into equal-width frame bins; returns
/// `(bin end frame, mean)` for every non-empty bin.
fn binned(points: &[(u64, f64)], bins: usize) -> Vec<(u64, f64)> {
    let Some(max) = points.iter().map(|p| p.0).max() else {
        return Vec::new();
    };
    let width = max.div_ceil(bins as u64).max(1);
    let mut acc: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for &(x, y) in points {
        let b = x.saturating_sub(1) / width;
        let e = acc.entry(b).or_insert((0.0, 0));
        e.0 += y;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(b, (s, n))| ((b + 1) * width, s / n as f64))
        .collect()
}

fn write_xy(path: &Path, points: &[(u64, f64)]) -> Result<()> {
    let rows: Vec<Vec<String>> = points.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]).collect();
    write_csv(path, &strings(&["x", "y"]), &rows)
}

/// Return, per-layer PDRR and scale curves against frames, averaged over
/// trials. `suffix` is appended to every file stem.
pub fn write_plot_data(dir: &Path, logs: &[TrialLog], suffix: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let episodes: Vec<&EpisodeRecord> = logs.iter().flat_map(|l| &l.episodes).collect();

    let path = dir.join(format!("plot_return{suffix}.csv"));
    let pts: Vec<(u64, f64)> = episodes.iter().map(|e| (e.frame, e.raw_return)).collect();
    write_xy(&path, &binned(&pts, PLOT_BINS))?;
    written.push(path);

    let path = dir.join(format!("plot_scale{suffix}.csv"));
    let pts: Vec<(u64, f64)> = episodes.iter().map(|e| (e.frame, e.scale)).collect();
    write_xy(&path, &binned(&pts, PLOT_BINS))?;
    written.push(path);

    let mut by_layer: BTreeMap<usize, BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    for r in logs.iter().flat_map(|l| &l.pdrr) {
        let e = by_layer.entry(r.layer).or_default().entry(r.frame).or_insert((0.0, 0));
        e.0 += r.pdrr;
        e.1 += 1;
    }
    for (layer, series) in by_layer {
        let path = dir.join(format!("plot_pdrr_l{layer}{suffix}.csv"));
        let pts: Vec<(u64, f64)> = series.into_iter().map(|(f, (s, n))| (f, s / n as f64)).collect();
        write_xy(&path, &pts)?;
        written.push(path);
    }
    Ok(written)
}

fn write_summary(path: &Path, logs: &[TrialLog]) -> Result<()> {
    let mut s = String::new();
    match evaluate_final(logs) {
        Ok(v) => s.push_str(&format!("score={v}\n")),
        Err(_) => s.push_str("score=NA\n"),
    }
    s.push_str(&format!("trials={}\n", logs.len()));
    for l in logs {
        let k = l.trial;
        s.push_str(&format!("trial.{k}.seed={}\n", l.seed));
        s.push_str(&format!("trial.{k}.frames={}\n", l.frames));
        s.push_str(&format!("trial.{k}.episodes={}\n", l.episodes.len()));
        s.push_str(&format!("trial.{k}.final_scale={}\n", l.final_scale));
        s.push_str(&format!("trial.{k}.scale_events={}\n", l.scale_events.len()));
        if let Some(d) = &l.diverged {
            s.push_str(&format!("trial.{k}.diverged={}\n", d.replace('\n', " ")));
        }
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn write_checkpoints(dir: &Path, logs: &[TrialLog]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for l in logs {
        let Some(c) = &l.checkpoint else { continue };
        let d = dir.join("checkpoints").join(format!("trial_{}", l.trial));
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        for (name, net) in [("actor.net", &c.actor), ("critic.net", &c.critic)] {
            let p = d.join(name);
            save_network(&p, net)?;
            written.push(p);
        }
        let p = d.join("manifest.txt");
        let manifest = format!(
            "scale={}\nframes={}\noptimizer_steps={}\n",
            c.scale, c.frames, c.optimizer_steps
        );
        fs::write(&p, manifest).map_err(|e| Error::io(&p, e))?;
        written.push(p);
        let p = d.join("window.csv");
        let header: Vec<String> = (0..c.window.cols()).map(|k| format!("x{k}")).collect();
        let rows: Vec<Vec<String>> = c
            .window
            .row_iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect();
        write_csv(&p, &header, &rows)?;
        written.push(p);
    }
    Ok(written)
}

/// Writes every artifact of a run into `dir` and returns the paths.
pub fn emit_outputs(logs: &[TrialLog], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let p = dir.join("episodes.csv");
    write_episodes_csv(&p, logs)?;
    written.push(p);

    let p = dir.join("summary.txt");
    write_summary(&p, logs)?;
    written.push(p);

    let p = dir.join("scale_events.csv");
    let rows: Vec<Vec<String>> = logs
        .iter()
        .flat_map(|l| {
            l.scale_events.iter().map(move |e| {
                vec![
                    l.trial.to_string(),
                    e.frame.to_string(),
                    e.old_scale.to_string(),
                    e.new_scale.to_string(),
                    e.c_applied.to_string(),
                ]
            })
        })
        .collect();
    write_csv(&p, &strings(&["trial", "frame", "old_scale", "new_scale", "c_applied"]), &rows)?;
    written.push(p);

    let p = dir.join("ans.csv");
    let rows: Vec<Vec<String>> = logs
        .iter()
        .flat_map(|l| {
            l.ans.iter().map(move |a| {
                vec![
                    l.trial.to_string(),
                    a.episode.to_string(),
                    a.frame.to_string(),
                    a.raw_return.to_string(),
                    a.m_hat.to_string(),
                    a.m_hat_max.to_string(),
                    a.scale.to_string(),
                    a.decision.clone(),
                ]
            })
        })
        .collect();
    write_csv(
        &p,
        &strings(&["trial", "episode", "frame", "raw_return", "m_hat", "m_hat_max", "s", "decision"]),
        &rows,
    )?;
    written.push(p);

    let p = dir.join("pdrr.csv");
    let rows: Vec<Vec<String>> = logs
        .iter()
        .flat_map(|l| {
            l.pdrr
                .iter()
                .map(move |r| vec![l.trial.to_string(), r.frame.to_string(), r.layer.to_string(), r.pdrr.to_string()])
        })
        .collect();
    write_csv(&p, &strings(&["trial", "frame", "layer", "pdrr"]), &rows)?;
    written.push(p);

    let p = dir.join("popart.csv");
    let rows: Vec<Vec<String>> = logs
        .iter()
        .flat_map(|l| {
            l.popart
                .iter()
                .map(move |r| vec![l.trial.to_string(), r.frame.to_string(), r.sigma.to_string(), r.mu.to_string()])
        })
        .collect();
    write_csv(&p, &strings(&["trial", "frame", "sigma", "mu"]), &rows)?;
    written.push(p);

    written.extend(write_plot_data(dir, logs, "")?);
    written.extend(write_checkpoints(dir, logs)?);
    Ok(written)
}

/// Label used for a scale value in file names, e.g. `0.5` -> `c0.5`.
pub fn scale_label(c: f64) -> String {
    format!("c{c}")
}

/// Writes a sweep: one subdirectory per scale, plus top-level plot data with
/// one curve per scale and a `sweep_summary.csv` of final scores.
pub fn emit_sweep(results: &[(f64, Vec<TrialLog>)], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for (c, logs) in results {
        let label = scale_label(*c);
        written.extend(emit_outputs(logs, &dir.join(&label))?);
        written.extend(write_plot_data(dir, logs, &format!("_{label}"))?);
        let score = evaluate_final(logs).map_or("NA".to_string(), |v| v.to_string());
        rows.push(vec![c.to_string(), score]);
    }
    let p = dir.join("sweep_summary.csv");
    write_csv(&p, &strings(&["scale", "score"]), &rows)?;
    written.push(p);
    Ok(written)
}

/// Final score recomputed from an emitted `episodes.csv`.
pub fn evaluate_csv(path: &Path) -> Result<f64> {
    evaluate_records(&read_episodes_csv(path)?)
}

/// Reads a headed CSV of numeric rows (e.g. a checkpoint's `window.csv`).
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let cols = r.headers().map_err(|e| csv_err(path, e))?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for cell in rec.iter() {
            data.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| csv_err(path, format!("row {}: bad number `{cell}`", i + 1)))?,
            );
        }
        rows += 1;
    }
    Matrix::from_vec(rows, cols, data).map_err(|e| csv_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(trial: usize, returns: &[f64], pdrr: Vec<f64>) -> TrialLog {
        let episodes = returns
            .iter()
            .enumerate()
            .map(|(i, r)| EpisodeRecord {
                trial,
                episode: i,
                frame: 10 * (i as u64 + 1),
                raw_return: *r,
                scaled_return: 0.1 * r,
                scale: 0.1,
                pdrr: pdrr.clone(),
            })
            .collect();
        TrialLog {
            trial,
            seed: trial as u64,
            frames: 10 * returns.len() as u64,
            episodes,
            scale_events: Vec::new(),
            ans: Vec::new(),
            pdrr: Vec::new(),
            popart: Vec::new(),
            final_scale: 0.1,
            diverged: None,
            checkpoint: None,
        }
    }

    #[test]
    fn empty_log_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&[], dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("episodes.csv")).unwrap();
        assert_eq!(text, "trial,episode,frame,raw_return,scaled_return,scale\n");
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.starts_with("score=NA"));
    }

    #[test]
    fn episodes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let logs = vec![
            log(0, &[1.0, 0.1 + 0.2, -3.5e-7], vec![0.25, 1.0 / 3.0]),
            log(1, &[2.0, f64::MIN_POSITIVE], vec![0.0, 0.5]),
        ];
        let p = dir.path().join("episodes.csv");
        write_episodes_csv(&p, &logs).unwrap();
        let back = read_episodes_csv(&p).unwrap();
        let orig: Vec<EpisodeRecord> = logs.iter().flat_map(|l| l.episodes.clone()).collect();
        assert_eq!(back, orig);
        assert_eq!(evaluate_csv(&p).unwrap(), evaluate_final(&logs).unwrap());
    }

    #[test]
    fn binning_means() {
        let pts = [(1, 1.0), (2, 3.0), (100, 5.0)];
        let b = binned(&pts, 2);
        assert_eq!(b, vec![(50, 2.0), (100, 5.0)]);
    }
}
