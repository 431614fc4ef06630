//! PDRR of a ReLU network before and after pushing its first-layer biases
//! down, over a rolling window of random inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rescale_rl::diagnostics::{pdrr_report, InputWindow, DEFAULT_WINDOW};
use rescale_rl::nn::{ActivationKind, Network};

fn main() -> rescale_rl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = Network::mlp(&[6, 48, 48, 1], ActivationKind::Relu, ActivationKind::Identity, &mut rng)?;
    let mut window = InputWindow::new(DEFAULT_WINDOW, 6);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        window.push(&x);
    }
    let inputs = window.to_matrix();

    for shift in [0.0, 0.5, 1.0, 2.0] {
        let mut shifted = net.clone();
        for b in shifted.layers_mut()[0].bias.iter_mut() {
            *b -= shift;
        }
        let report = pdrr_report(&shifted, &inputs)?;
        let parts: Vec<String> = report
            .layers
            .iter()
            .map(|l| format!("l{}={}/{} ({:.3})", l.layer + 1, l.n_pseudo_dying, l.n_neurons, l.ratio))
            .collect();
        println!("bias shift -{shift}: {}", parts.join("  "));
    }
    net.layers_mut()[0].bias.iter_mut().for_each(|b| *b = -10.0);
    println!("all first-layer biases at -10: {:?}", pdrr_report(&net, &inputs)?.ratios());
    Ok(())
}
