//! Drives the scale controller with a synthetic concave return landscape
//! peaking at a chosen scale and prints every decision.
//!
//! Usage: `cargo run --example ans_controller [s_star]`

use rescale_rl::ans::{max_steps_bound, AnsDecision, AnsParams, ScaleController};

fn main() -> rescale_rl::Result<()> {
    let s_star: f64 = std::env::args().nth(1).map_or(20.0, |a| a.parse().expect("s_star"));
    let params = AnsParams { tolerance: 5, ..AnsParams::default() };
    let mut ctl = ScaleController::new(params.clone())?;
    // return as a function of log-scale, maximal at s_star
    let landscape = |s: f64| 10.0 - (s.ln() - s_star.ln()).powi(2);

    let mut updates = 0u64;
    while !ctl.is_stopped() && updates < 100_000 {
        updates += 1;
        let s = ctl.scale();
        match ctl.step(landscape(s))? {
            AnsDecision::Continue => {}
            AnsDecision::Rescale(c) => {
                println!("update {updates:>5}: scale {s:>9.4} -> {:>9.4} (c={c})", ctl.scale());
            }
            AnsDecision::Stop => println!("update {updates:>5}: stop at scale {s:.4}"),
        }
    }
    println!(
        "rescales={} bound={} final_scale={:.4} target={s_star}",
        ctl.n_rescales(),
        max_steps_bound(params.c_inc, params.c_dec, s_star.max(1.0))?,
        ctl.scale()
    );
    Ok(())
}
