//! Exact output scaling of positively homogeneous networks.
//!
//! For a network of `n` dense layers whose hidden activations satisfy
//! `act(k·x) = k·act(x)` for `k > 0`, multiplying layer `i`'s weights by `c_i`
//! and its bias by `r_i = c_1·…·c_i` multiplies every pre-activation of layer
//! `i` by `r_i`. With `r_n = c` the output becomes exactly `c·f(x)`.
//!
//! This is the contract implemented here: `f'(x) = c·f(x)` for every input.
//! Note that it is an output scaling; the input is left untouched.

use crate::error::{Error, Result};
use crate::nn::{Gradients, Network};

/// Per-layer weight factors `c_i` and the cumulative bias factors `r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePlan {
    c: f64,
    weight_factors: Vec<f64>,
    bias_factors: Vec<f64>,
}

impl ScalePlan {
    /// Equal split `c_i = c^(1/n)`, so `r_i = c^(i/n)`.
    pub fn uniform(c: f64, n_layers: usize) -> Result<Self> {
        check_scale(c)?;
        if n_layers == 0 {
            return Err(Error::InvalidArgument("scale plan for zero layers".into()));
        }
        let n = n_layers as f64;
        let weight_factors = vec![c.powf(1.0 / n); n_layers];
        let mut bias_factors: Vec<f64> = (1..=n_layers).map(|i| c.powf(i as f64 / n)).collect();
        // the last bias must carry exactly c
        bias_factors[n_layers - 1] = c;
        Ok(Self {
            c,
            weight_factors,
            bias_factors,
        })
    }

    /// Custom split; the product of all factors must equal `c` (relative 1e-12).
    pub fn custom(c: f64, weight_factors: Vec<f64>) -> Result<Self> {
        check_scale(c)?;
        if weight_factors.is_empty() || weight_factors.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidArgument(
                "per-layer factors must be positive and finite".into(),
            ));
        }
        let mut bias_factors = Vec::with_capacity(weight_factors.len());
        let mut r = 1.0;
        for f in &weight_factors {
            r *= f;
            bias_factors.push(r);
        }
        if ((r - c) / c).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "per-layer factors multiply to {r}, not {c}"
            )));
        }
        Ok(Self {
            c,
            weight_factors,
            bias_factors,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn weight_factors(&self) -> &[f64] {
        &self.weight_factors
    }

    pub fn bias_factors(&self) -> &[f64] {
        &self.bias_factors
    }
}

fn check_scale(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive and finite, got {c}")));
    }
    Ok(())
}

fn check_homogeneous(net: &Network) -> Result<()> {
    let n = net.n_layers();
    for (i, l) in net.layers().iter().enumerate() {
        let ok = if i + 1 == n {
            l.activation == crate::nn::ActivationKind::Identity
        } else {
            l.activation.is_positively_homogeneous()
        };
        if !ok {
            return Err(Error::UnsupportedActivation {
                op: "scale_network",
                activation: l.activation.to_string(),
            });
        }
    }
    Ok(())
}

/// Returns a network whose output is exactly `c` times the input network's.
pub fn scale_network(net: &Network, c: f64) -> Result<Network> {
    let plan = ScalePlan::uniform(c, net.n_layers())?;
    scale_network_with_plan(net, &plan)
}

pub fn scale_network_with_plan(net: &Network, plan: &ScalePlan) -> Result<Network> {
    check_homogeneous(net)?;
    if plan.weight_factors.len() != net.n_layers() {
        return Err(Error::Dimension(format!(
            "plan for {} layers applied to a {}-layer network",
            plan.weight_factors.len(),
            net.n_layers()
        )));
    }
    let mut out = net.clone();
    if plan.c == 1.0 && plan.weight_factors.iter().all(|&f| f == 1.0) {
        return Ok(out);
    }
    for ((layer, &cw), &cb) in out
        .layers_mut()
        .iter_mut()
        .zip(&plan.weight_factors)
        .zip(&plan.bias_factors)
    {
        layer.weight.scale_in_place(cw);
        layer.bias.iter_mut().for_each(|b| *b *= cb);
    }
    Ok(out)
}

/// In-place variant used by training loops.
pub fn scale_network_in_place(net: &mut Network, c: f64) -> Result<()> {
    *net = scale_network(net, c)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

/// Ratio between the MSE gradient of a parameter in the scaled network
/// (trained toward `c·y`) and the same gradient in the original network
/// (trained toward `y`): `c^(2-1/n)` for weights, `c^(2-i/n)` for the bias of
/// layer `i` (1-based).
pub fn gradient_scale_factor(param: ParamKind, layer: usize, n_layers: usize, c: f64) -> Result<f64> {
    check_scale(c)?;
    if layer == 0 || layer > n_layers {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} outside 1..={n_layers}"
        )));
    }
    let n = n_layers as f64;
    Ok(match param {
        ParamKind::Weight => c.powf(2.0 - 1.0 / n),
        ParamKind::Bias => c.powf(2.0 - layer as f64 / n),
    })
}

/// Max-norm schedule applied to policy gradients after a scale event: the cap
/// starts at `initial` and grows by `growth` per update up to `ceiling`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSchedule {
    pub initial: f64,
    pub growth: f64,
    pub ceiling: f64,
}

impl Default for ClipSchedule {
    fn default() -> Self {
        Self {
            initial: 0.5,
            growth: 1.2,
            ceiling: 10.0,
        }
    }
}

impl ClipSchedule {
    pub fn new(initial: f64, growth: f64, ceiling: f64) -> Result<Self> {
        if !(initial > 0.0) || !(growth > 1.0) || !(ceiling >= initial) {
            return Err(Error::InvalidArgument(
                "clip schedule needs initial > 0, growth > 1, ceiling >= initial".into(),
            ));
        }
        Ok(Self {
            initial,
            growth,
            ceiling,
        })
    }

    pub fn cap(&self, steps_since_scale: u64) -> f64 {
        let steps = steps_since_scale.min(i32::MAX as u64) as i32;
        (self.initial * self.growth.powi(steps)).min(self.ceiling)
    }

    /// Number of updates until the cap reaches the ceiling.
    pub fn relax_steps(&self) -> u64 {
        ((self.ceiling / self.initial).ln() / self.growth.ln()).ceil() as u64
    }
}

/// Rescales `grads` so its global norm is at most the schedule's current cap.
/// Returns the norm before clipping.
pub fn clip_gradient(grads: &mut Gradients, schedule: &ClipSchedule, steps_since_scale: u64) -> f64 {
    let cap = schedule.cap(steps_since_scale);
    clip_to_norm(grads, cap)
}

pub fn clip_to_norm(grads: &mut Gradients, cap: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > cap && norm > 0.0 {
        grads.scale(cap / norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::nn::{ActivationKind, Layer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn relu_net(sizes: &[usize], seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::mlp(sizes, ActivationKind::Relu, ActivationKind::Identity, &mut rng)
            .unwrap();
        for (i, l) in net.layers_mut().iter_mut().enumerate() {
            l.bias.iter_mut().enumerate().for_each(|(j, b)| *b = 0.1 * (i + 1) as f64 - 0.05 * j as f64);
        }
        net
    }

    #[test]
    fn unit_scale_is_identity() {
        let net = relu_net(&[3, 8, 8, 1], 1);
        assert_eq!(scale_network(&net, 1.0).unwrap(), net);
    }

    #[test]
    fn three_layers_by_eight() {
        let net = relu_net(&[3, 8, 8, 1], 2);
        let scaled = scale_network(&net, 8.0).unwrap();
        for (i, (a, b)) in net.layers().iter().zip(scaled.layers()).enumerate() {
            for (x, y) in a.weight.as_slice().iter().zip(b.weight.as_slice()) {
                assert!((y - 2.0 * x).abs() <= 1e-15 * x.abs().max(1.0));
            }
            let bf = [2.0, 4.0, 8.0][i];
            for (x, y) in a.bias.iter().zip(&b.bias) {
                assert!((y - bf * x).abs() <= 1e-14 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn non_homogeneous_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for act in [ActivationKind::Elu(1.0), ActivationKind::Tanh, ActivationKind::Sigmoid] {
            let net = Network::mlp(&[2, 4, 1], act, ActivationKind::Identity, &mut rng).unwrap();
            assert!(matches!(
                scale_network(&net, 2.0),
                Err(Error::UnsupportedActivation { .. })
            ));
        }
        let net = Network::mlp(&[2, 4, 1], ActivationKind::Relu, ActivationKind::Tanh, &mut rng)
            .unwrap();
        assert!(scale_network(&net, 2.0).is_err());
        let net = relu_net(&[2, 4, 1], 4);
        assert!(scale_network(&net, 0.0).is_err());
        assert!(scale_network(&net, -1.0).is_err());
    }

    #[test]
    fn leaky_relu_is_scalable() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::mlp(&[2, 6, 6, 1], ActivationKind::LeakyRelu(0.05), ActivationKind::Identity, &mut rng)
            .unwrap();
        let scaled = scale_network(&net, 3.0).unwrap();
        let x = Matrix::from_rows(&[[0.3, -1.2], [-2.0, 0.7]]).unwrap();
        let a = net.predict(&x).unwrap();
        let b = scaled.predict(&x).unwrap();
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((v - 3.0 * u).abs() <= 1e-12 * (1.0 + 3.0 * u.abs()));
        }
    }

    #[test]
    fn custom_plan_constraint() {
        let plan = ScalePlan::custom(8.0, vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(plan.bias_factors(), &[1.0, 2.0, 8.0]);
        assert!(ScalePlan::custom(8.0, vec![1.0, 2.0, 3.0]).is_err());
        let uni = ScalePlan::uniform(8.0, 3).unwrap();
        let prod: f64 = uni.weight_factors().iter().product();
        assert!((prod - 8.0).abs() < 1e-12);
        assert_eq!(uni.bias_factors()[2], 8.0);

        let net = relu_net(&[2, 5, 5, 1], 6);
        let scaled = scale_network_with_plan(&net, &plan).unwrap();
        let x = Matrix::from_rows(&[[0.4, 0.9]]).unwrap();
        let a = net.predict(&x).unwrap().get(0, 0);
        let b = scaled.predict(&x).unwrap().get(0, 0);
        assert!((b - 8.0 * a).abs() <= 1e-12 * (1.0 + 8.0 * a.abs()));
    }

    #[test]
    fn gradient_factor_values() {
        for i in 1..=3 {
            assert_eq!(gradient_scale_factor(ParamKind::Weight, i, 3, 1.0).unwrap(), 1.0);
            assert_eq!(gradient_scale_factor(ParamKind::Bias, i, 3, 1.0).unwrap(), 1.0);
        }
        let w = gradient_scale_factor(ParamKind::Weight, 2, 3, 8.0).unwrap();
        assert!((w - 32.0).abs() < 1e-12);
        let b3 = gradient_scale_factor(ParamKind::Bias, 3, 3, 8.0).unwrap();
        assert!((b3 - 8.0).abs() < 1e-12);
        assert!(gradient_scale_factor(ParamKind::Bias, 4, 3, 8.0).is_err());
    }

    #[test]
    fn clip_schedule_cap() {
        let s = ClipSchedule::default();
        assert_eq!(s.cap(0), 0.5);
        let expected = 0.5 * 1.2f64.powi(10);
        assert!((s.cap(10) - expected).abs() < 1e-12);
        assert!((expected - 3.0958682112).abs() < 1e-9);
        assert_eq!(s.cap(100), 10.0);
        assert_eq!(s.relax_steps(), 17);
        assert!(ClipSchedule::new(0.5, 1.0, 10.0).is_err());
        assert!(ClipSchedule::new(0.5, 1.2, 0.1).is_err());
    }

    fn grads_with(values: &[f64]) -> Gradients {
        let l = Layer::new(
            Matrix::from_vec(1, values.len(), values.to_vec()).unwrap(),
            vec![0.0],
            ActivationKind::Identity,
        )
        .unwrap();
        let net = Network::new(vec![l]).unwrap();
        let mut g = Gradients::zeros_like(&net);
        g.weights[0] = net.layers()[0].weight.clone();
        g
    }

    #[test]
    fn clipping_below_cap_is_noop() {
        let mut g = grads_with(&[0.1, 0.2]);
        let before = g.clone();
        clip_gradient(&mut g, &ClipSchedule::default(), 0);
        assert_eq!(g, before);
    }

    #[test]
    fn clipping_preserves_direction() {
        let mut g = grads_with(&[6.0, 8.0]);
        let norm = clip_to_norm(&mut g, 0.5);
        assert_eq!(norm, 10.0);
        assert!((g.global_norm() - 0.5).abs() < 1e-15);
        assert!((g.weights[0].get(0, 0) - 0.3).abs() < 1e-15);
        assert!((g.weights[0].get(0, 1) - 0.4).abs() < 1e-15);
    }
}
