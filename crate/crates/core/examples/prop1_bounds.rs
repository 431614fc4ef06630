//! Revival-probability bounds for pseudo-dying neurons against Monte-Carlo
//! estimates, over a few window sizes.
//!
//! Usage: `cargo run --release --example prop1_bounds [samples]`

use rescale_rl::theory::{prop1_bound_case1, prop1_monte_carlo, reference_scenarios};

fn main() -> rescale_rl::Result<()> {
    let samples: u64 = std::env::args().nth(1).map_or(1_000_000, |a| a.parse().expect("samples"));
    println!("{:>5} {:>6} {:>9} {:>9} {:>21} {:>8}", "B", "case", "bound", "mc", "95% CI", "reject");
    for batch in [4, 32, 256] {
        for (k, s) in reference_scenarios(batch)?.iter().enumerate() {
            let mc = prop1_monte_carlo(s, samples, k as u64)?;
            println!(
                "{batch:>5} {:>6} {:>9.5} {:>9.5} [{:>9.5}, {:>9.5}] {:>8.1e}",
                format!("{:?}", s.case),
                s.bound()?,
                mc.probability,
                mc.ci_low,
                mc.ci_high,
                mc.rejection_rate
            );
        }
    }
    let b: Vec<String> = [2, 8, 64, 1024].iter().map(|&b| format!("B={b}:{:.4}", prop1_bound_case1(b).unwrap())).collect();
    println!("case 1 bound grows toward 1/2: {}", b.join(" "));
    Ok(())
}
