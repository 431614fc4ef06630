//! Scales a random ReLU network by several factors and checks that the output
//! is multiplied exactly, along with the per-parameter gradient factors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rescale_rl::nn::{ActivationKind, Network};
use rescale_rl::scaling::{gradient_scale_factor, scale_network, ParamKind};
use rescale_rl::Matrix;

fn main() -> rescale_rl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = Network::mlp(&[4, 32, 32, 1], ActivationKind::Relu, ActivationKind::Identity, &mut rng)?;
    let x = Matrix::from_fn(200, 4, |r, c| ((r * 7 + c * 3) % 11) as f64 / 5.0 - 1.0);
    let y = net.predict(&x)?;

    for c in [0.1, 0.5, 8.0, 64.0] {
        let scaled = scale_network(&net, c)?;
        let y2 = scaled.predict(&x)?;
        let worst = y
            .as_slice()
            .iter()
            .zip(y2.as_slice())
            .map(|(a, b)| ((b - c * a) / (c * a).abs().max(1e-300)).abs())
            .fold(0.0, f64::max);
        let n = net.n_layers();
        let w: Vec<String> = (1..=n)
            .map(|i| format!("{:.4}", gradient_scale_factor(ParamKind::Weight, i, n, c).unwrap()))
            .collect();
        let b: Vec<String> = (1..=n)
            .map(|i| format!("{:.4}", gradient_scale_factor(ParamKind::Bias, i, n, c).unwrap()))
            .collect();
        println!("c={c:<5} max rel err {worst:.2e}  grad factors W [{}] b [{}]", w.join(" "), b.join(" "));
    }
    Ok(())
}
