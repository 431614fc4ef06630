use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rescale_rl::diagnostics::{pdrr_report, pseudo_dying_mask, InputWindow};
use rescale_rl::nn::{ActivationKind, Network};
use rescale_rl::Matrix;

/// Per-layer pseudo-dying flags by explicit loops over neurons and inputs.
fn brute_force(net: &Network, window: &Matrix) -> Vec<Vec<bool>> {
    let mut dead: Vec<Vec<bool>> = net.layers().iter().map(|l| vec![true; l.out_dim()]).collect();
    for r in 0..window.rows() {
        let mut h = window.row(r).to_vec();
        for (li, l) in net.layers().iter().enumerate() {
            let mut next = Vec::with_capacity(l.out_dim());
            for j in 0..l.out_dim() {
                let z: f64 = l.bias[j] + (0..h.len()).map(|q| l.weight.get(j, q) * h[q]).sum::<f64>();
                if z > 0.0 {
                    dead[li][j] = false;
                }
                next.push(l.activation.value(z));
            }
            h = next;
        }
    }
    dead
}

proptest! {
    #[test]
    fn report_matches_double_loop(seed in 0u64..1_000_000, shift in 0.0f64..2.0, rows in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = [rng.random_range(1..=5), rng.random_range(1..=10), rng.random_range(1..=10), 1];
        let mut net = Network::mlp(&sizes, ActivationKind::Relu, ActivationKind::Identity, &mut rng).unwrap();
        for l in net.layers_mut() {
            l.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0) - shift);
        }
        let window = Matrix::from_fn(rows, sizes[0], |_, _| rng.random_range(-1.0..1.0));
        let oracle = brute_force(&net, &window);
        let report = pdrr_report(&net, &window).unwrap();
        let (_, trace) = net.forward(&window).unwrap();
        prop_assert_eq!(report.layers.len(), 2);
        for l in &report.layers {
            let mask = pseudo_dying_mask(&net, &trace, l.layer).unwrap();
            prop_assert_eq!(&mask, &oracle[l.layer]);
            let count = oracle[l.layer].iter().filter(|&&d| d).count();
            prop_assert_eq!(l.n_pseudo_dying, count);
            prop_assert_eq!(l.ratio, count as f64 / l.n_neurons as f64);
        }
    }

    #[test]
    fn larger_window_never_adds_dying(seed in 0u64..1_000_000, extra in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::mlp(&[3, 8, 8, 1], ActivationKind::Relu, ActivationKind::Identity, &mut rng).unwrap();
        let small = Matrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
        let more = Matrix::from_fn(extra, 3, |_, _| rng.random_range(-1.0..1.0));
        let mut rows: Vec<Vec<f64>> = small.row_iter().map(<[f64]>::to_vec).collect();
        rows.extend(more.row_iter().map(<[f64]>::to_vec));
        let big = Matrix::from_rows(&rows).unwrap();
        let a = pdrr_report(&net, &small).unwrap();
        let b = pdrr_report(&net, &big).unwrap();
        for (x, y) in a.layers.iter().zip(&b.layers) {
            prop_assert!(y.n_pseudo_dying <= x.n_pseudo_dying);
        }
    }
}

#[test]
fn rolling_window_keeps_latest_inputs() {
    let mut w = InputWindow::new(3, 1);
    for v in 0..10 {
        w.push(&[v as f64]);
    }
    let m = w.to_matrix();
    let mut got: Vec<f64> = m.as_slice().to_vec();
    got.sort_by(f64::total_cmp);
    assert_eq!(got, vec![7.0, 8.0, 9.0]);
}
