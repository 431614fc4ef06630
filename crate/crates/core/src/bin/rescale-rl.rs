use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rescale_rl::diagnostics::pdrr_report;
use rescale_rl::harness::{
    emit_outputs, emit_sweep, evaluate_csv, evaluate_final, read_matrix_csv, run_experiment, run_sweep,
    ExperimentConfig, ScaleMode, TrialLog,
};
use rescale_rl::nn::{load_network, save_network};
use rescale_rl::scaling::scale_network;
use rescale_rl::theory::{prop1_monte_carlo, reference_scenarios, MIN_SAMPLES};
use rescale_rl::{Error, Result};

#[derive(Parser)]
#[command(name = "rescale-rl", version, about = "Reward scaling experiments for ReLU actor-critics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config as written.
    Train(RunArgs),
    /// Run a fixed-scale grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated reward scales.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,10,100")]
        scales: Vec<f64>,
    },
    /// Run with the adaptive network scaling controller.
    Ans(RunArgs),
    /// Run with Pop-Art output normalization.
    Popart(RunArgs),
    /// Per-layer pseudo-dying ReLU ratios of a network over an input window.
    Pdrr {
        /// Checkpoint directory holding critic.net and window.csv.
        #[arg(long, conflicts_with_all = ["net", "window"])]
        checkpoint: Option<PathBuf>,
        #[arg(long, requires = "window")]
        net: Option<PathBuf>,
        #[arg(long, requires = "net")]
        window: Option<PathBuf>,
    },
    /// Multiply a serialized ReLU network's output by c.
    ScaleNet {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Revival bounds against Monte-Carlo estimates.
    Prop1 {
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recompute final scores from episodes.csv files.
    Eval {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file of key=value lines; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value settings, overriding the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory, overriding output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error kind=usage msg={first:?}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} msg={msg:?}", e.kind());
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(run) => {
            let cfg = load_config(&run, None)?;
            finish_run(&cfg, &run_experiment(&cfg)?)
        }
        Command::Ans(run) => {
            let cfg = load_config(&run, Some(ScaleMode::Ans))?;
            finish_run(&cfg, &run_experiment(&cfg)?)
        }
        Command::Popart(run) => {
            let cfg = load_config(&run, Some(ScaleMode::PopArt))?;
            finish_run(&cfg, &run_experiment(&cfg)?)
        }
        Command::Sweep { run, scales } => {
            let cfg = load_config(&run, None)?;
            let results = run_sweep(&cfg, &scales)?;
            for (c, logs) in &results {
                println!("scale={c} score={}", score_text(logs));
            }
            if let Some(dir) = &cfg.output_dir {
                emit_sweep(&results, dir)?;
                println!("output={}", dir.display());
            }
            Ok(())
        }
        Command::Pdrr { checkpoint, net, window } => {
            let (net, window) = match (checkpoint, net, window) {
                (Some(dir), _, _) => (dir.join("critic.net"), dir.join("window.csv")),
                (None, Some(n), Some(w)) => (n, w),
                _ => {
                    return Err(Error::InvalidArgument(
                        "pdrr needs --checkpoint or both --net and --window".into(),
                    ))
                }
            };
            let report = pdrr_report(&load_network(&net)?, &read_matrix_csv(&window)?)?;
            println!("layer,neurons,pseudo_dying,pdrr");
            for l in &report.layers {
                println!("{},{},{},{}", l.layer + 1, l.n_neurons, l.n_pseudo_dying, l.ratio);
            }
            Ok(())
        }
        Command::ScaleNet { input, c, output } => {
            let scaled = scale_network(&load_network(&input)?, c)?;
            save_network(&output, &scaled)?;
            println!("output={}", output.display());
            Ok(())
        }
        Command::Prop1 { batch, samples, seed } => {
            if samples < MIN_SAMPLES {
                return Err(Error::InvalidArgument(format!("--samples must be >= {MIN_SAMPLES}")));
            }
            println!("case,B,w_norm,b,mu_bar,sigma_bar,cos_theta_min,bound,empirical,ci_low,ci_high");
            for (k, s) in reference_scenarios(batch)?.iter().enumerate() {
                let mc = prop1_monte_carlo(s, samples, seed.wrapping_add(k as u64))?;
                println!(
                    "{:?},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                    s.case,
                    s.batch,
                    s.w_norm(),
                    s.b,
                    s.mu_bar,
                    s.sigma_bar,
                    s.cos_theta_min,
                    s.bound()?,
                    mc.probability,
                    mc.ci_low,
                    mc.ci_high
                );
            }
            Ok(())
        }
        Command::Eval { files } => {
            for f in &files {
                println!("{} score={}", f.display(), evaluate_csv(f)?);
            }
            Ok(())
        }
    }
}

fn load_config(run: &RunArgs, mode: Option<ScaleMode>) -> Result<ExperimentConfig> {
    let base = match &run.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::parse(&merge_settings(&base, &run.set)?)?;
    cfg.apply_seed_override()?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if let Some(out) = &run.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Appends `key=value` overrides to a config text, dropping file lines that
/// set the same keys.
fn merge_settings(base: &str, set: &[String]) -> Result<String> {
    let mut keys = Vec::new();
    for s in set {
        match s.split_once('=') {
            Some((k, _)) if !k.trim().is_empty() => keys.push(k.trim().to_string()),
            _ => return Err(Error::InvalidArgument(format!("--set expects KEY=VALUE, got `{s}`"))),
        }
    }
    let mut out: Vec<&str> = base
        .lines()
        .filter(|line| {
            let body = line.split('#').next().unwrap_or("");
            body.split_once('=').is_none_or(|(k, _)| !keys.iter().any(|x| x == k.trim()))
        })
        .collect();
    out.extend(set.iter().map(String::as_str));
    Ok(out.join("\n"))
}

fn score_text(logs: &[TrialLog]) -> String {
    evaluate_final(logs).map_or("NA".to_string(), |s| s.to_string())
}

fn finish_run(cfg: &ExperimentConfig, logs: &[TrialLog]) -> Result<()> {
    println!("mode={} score={}", cfg.mode.name(), score_text(logs));
    for l in logs {
        println!(
            "trial={} seed={} episodes={} final_scale={} diverged={}",
            l.trial,
            l.seed,
            l.episodes.len(),
            l.final_scale,
            l.diverged.is_some()
        );
    }
    if let Some(dir) = &cfg.output_dir {
        write_outputs(logs, dir)?;
    }
    Ok(())
}

fn write_outputs(logs: &[TrialLog], dir: &Path) -> Result<()> {
    emit_outputs(logs, dir)?;
    println!("output={}", dir.display());
    Ok(())
}
