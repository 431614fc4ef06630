//! Experiment orchestration: configs, seeded trials, scoring and output files.

mod config;
mod eval;
mod output;
mod run;

pub use config::{AgentKind, ExperimentConfig, ScaleMode, SEED_ENV_VAR};
pub use eval::{evaluate_final, evaluate_records, score, FINAL_WINDOW};
pub use output::{
    emit_outputs, emit_sweep, episode_header, evaluate_csv, read_episodes_csv, read_matrix_csv,
    scale_label, write_episodes_csv, write_plot_data, PLOT_BINS,
};
pub use run::{
    run_experiment, run_trial, AnsRecord, Checkpoint, EpisodeRecord, PdrrRecord, PopArtRecord,
    ScaleEvent, TrialLog,
};

use crate::error::Result;

/// Runs `cfg` once per scale in fixed-scale mode.
pub fn run_sweep(cfg: &ExperimentConfig, scales: &[f64]) -> Result<Vec<(f64, Vec<TrialLog>)>> {
    scales
        .iter()
        .map(|&c| {
            let mut sub = cfg.clone();
            sub.mode = ScaleMode::Fixed(c);
            Ok((c, run_experiment(&sub)?))
        })
        .collect()
}
