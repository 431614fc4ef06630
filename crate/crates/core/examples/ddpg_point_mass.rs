//! DDPG on the 1-D point mass under fixed, ANS and Pop-Art reward handling.
//!
//! Usage: `cargo run --release --example ddpg_point_mass [frames] [trials]`

use rescale_rl::harness::{evaluate_final, run_experiment, ExperimentConfig, ScaleMode};

fn main() -> rescale_rl::Result<()> {
    let mut args = std::env::args().skip(1);
    let frames: u64 = args.next().map_or(5_000, |a| a.parse().expect("frames"));
    let trials: usize = args.next().map_or(2, |a| a.parse().expect("trials"));
    let base = ExperimentConfig::parse(&format!(
        "env=point_mass_1d\nenv.magnitude=0.1\nagent=ddpg\nframes={frames}\ntrials={trials}\n"
    ))?;

    for mode in [ScaleMode::Fixed(1.0), ScaleMode::Fixed(10.0), ScaleMode::Ans, ScaleMode::PopArt] {
        let mut cfg = base.clone();
        cfg.mode = mode;
        let logs = run_experiment(&cfg)?;
        let scales: Vec<String> = logs.iter().map(|l| format!("{:.3}", l.final_scale)).collect();
        println!(
            "{:<8} {:<6} score={:>9.4} final scales [{}]",
            mode.name(),
            if let ScaleMode::Fixed(c) = mode { c.to_string() } else { "-".into() },
            evaluate_final(&logs)?,
            scales.join(" ")
        );
    }
    Ok(())
}
