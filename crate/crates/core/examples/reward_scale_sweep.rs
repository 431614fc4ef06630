//! Fixed reward-scale sweep on the chain MDP with a tiny raw reward.
//!
//! Usage: `cargo run --release --example reward_scale_sweep [frames] [trials] [key=value ...]`

use rescale_rl::harness::{evaluate_final, run_sweep, ExperimentConfig};

fn main() -> rescale_rl::Result<()> {
    let mut args = std::env::args().skip(1);
    let frames: u64 = args.next().map_or(200_000, |a| a.parse().expect("frames"));
    let trials: usize = args.next().map_or(5, |a| a.parse().expect("trials"));
    let extra: Vec<String> = args.collect();
    let cfg = ExperimentConfig::parse(&format!(
        "env=chain\nenv.magnitude=0.01\nframes={frames}\ntrials={trials}\n{}\n",
        extra.join("\n")
    ))?;

    println!("{:>8} {:>10} {:>10}  per-trial", "scale", "score", "pdrr(q4)");
    for (c, logs) in run_sweep(&cfg, &[0.5, 1.0, 10.0, 100.0])? {
        let score = evaluate_final(&logs)?;
        let q4: Vec<f64> = logs
            .iter()
            .map(|l| {
                let late: Vec<f64> = l
                    .pdrr
                    .iter()
                    .filter(|r| 4 * r.frame >= 3 * l.frames)
                    .map(|r| r.pdrr)
                    .collect();
                late.iter().sum::<f64>() / late.len().max(1) as f64
            })
            .collect();
        let per_trial: Vec<String> = logs
            .iter()
            .map(|l| format!("{:.4}", evaluate_final(std::slice::from_ref(l)).unwrap_or(f64::NAN)))
            .collect();
        println!(
            "{c:>8} {score:>10.5} {:>10.3}  {}",
            q4.iter().sum::<f64>() / q4.len() as f64,
            per_trial.join(" ")
        );
    }
    Ok(())
}
