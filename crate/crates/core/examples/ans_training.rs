//! Adaptive network scaling against the fixed c=1 baseline on the chain MDP.
//!
//! Usage: `cargo run --release --example ans_training [frames] [trials] [key=value ...]`

use rescale_rl::harness::{evaluate_final, run_experiment, ExperimentConfig, ScaleMode};

fn main() -> rescale_rl::Result<()> {
    let mut args = std::env::args().skip(1);
    let frames: u64 = args.next().map_or(200_000, |a| a.parse().expect("frames"));
    let trials: usize = args.next().map_or(5, |a| a.parse().expect("trials"));
    let extra: Vec<String> = args.collect();
    let mut cfg = ExperimentConfig::parse(&format!(
        "env=chain\nenv.magnitude=0.01\nframes={frames}\ntrials={trials}\nmode=ans\n{}\n",
        extra.join("\n")
    ))?;
    let ans = run_experiment(&cfg)?;
    cfg.mode = ScaleMode::Fixed(1.0);
    let base = run_experiment(&cfg)?;

    println!("{:>5} {:>10} {:>10} {:>10} {:>8}", "trial", "ans", "fixed c=1", "scale", "events");
    for (a, b) in ans.iter().zip(&base) {
        println!(
            "{:>5} {:>10.5} {:>10.5} {:>10} {:>8}",
            a.trial,
            evaluate_final(std::slice::from_ref(a))?,
            evaluate_final(std::slice::from_ref(b))?,
            a.final_scale,
            a.scale_events.len()
        );
    }
    println!("score ans={:.5} fixed={:.5}", evaluate_final(&ans)?, evaluate_final(&base)?);
    Ok(())
}
