//! Pop-Art statistics tracking a shifted, stretched target stream while the
//! network's unnormalized outputs stay put across every statistics update.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rescale_rl::nn::{ActivationKind, Network};
use rescale_rl::popart::{PopArtConfig, PopArtState};

fn main() -> rescale_rl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut net = Network::mlp(&[3, 16, 1], ActivationKind::Relu, ActivationKind::Identity, &mut rng)?;
    let mut pop = PopArtState::new(PopArtConfig { step_size: 1e-2, ..PopArtConfig::default() })?;
    let targets = Normal::new(500.0, 50.0).unwrap();
    let probe = [0.3, -0.7, 1.1];

    let mut worst: f64 = 0.0;
    for step in 1..=2000 {
        let before = pop.denormalize(net.predict_one(&probe)?[0]);
        let batch: Vec<f64> = (0..16).map(|_| targets.sample(&mut rng)).collect();
        let n = net.n_layers();
        pop.observe_and_update(&batch, &mut net.layers_mut()[n - 1])?;
        let after = pop.denormalize(net.predict_one(&probe)?[0]);
        worst = worst.max(((after - before) / before.abs().max(1e-12)).abs());
        if step % 400 == 0 {
            let z: Vec<f64> = batch.iter().map(|&y| pop.normalize(y)).collect();
            let mean = z.iter().sum::<f64>() / z.len() as f64;
            println!("step {step:>4}: mu={:>8.3} sigma={:>7.3} normalized batch mean={mean:+.3}", pop.mu(), pop.sigma());
        }
    }
    println!("largest relative output change across updates: {worst:.2e}");
    Ok(())
}
