//! Pop-Art output normalization for a scalar value head.
//!
//! The critic's last linear layer produces a normalized value `g(x)`; the
//! unnormalized estimate is `Σ·g(x) + μ`. Whenever the target statistics move
//! to `(Σ', μ')` the last layer is rewritten as `W' = (Σ/Σ')·W` and
//! `b' = (Σ·b + μ − μ')/Σ'`, leaving unnormalized outputs unchanged.

use crate::error::{Error, Result};
use crate::nn::Layer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopArtConfig {
    /// Step size of the running first and second moments.
    pub step_size: f64,
    pub variance_floor: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for PopArtConfig {
    fn default() -> Self {
        Self {
            step_size: 3e-4,
            variance_floor: 1e-4,
            sigma_min: 1e-4,
            sigma_max: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopArtState {
    config: PopArtConfig,
    sigma: f64,
    mu: f64,
    first_moment: f64,
    second_moment: f64,
}

impl PopArtState {
    pub fn new(config: PopArtConfig) -> Result<Self> {
        if !(config.step_size > 0.0 && config.step_size <= 1.0)
            || !(config.variance_floor > 0.0)
            || !(config.sigma_min > 0.0 && config.sigma_max >= config.sigma_min)
        {
            return Err(Error::InvalidArgument("invalid Pop-Art configuration".into()));
        }
        Ok(Self {
            config,
            sigma: 1.0,
            mu: 0.0,
            first_moment: 0.0,
            second_moment: 1.0,
        })
    }

    /// Starts from explicit statistics; moments are set to reproduce them.
    pub fn with_stats(config: PopArtConfig, sigma: f64, mu: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
            return Err(Error::InvalidArgument("Pop-Art needs sigma > 0 and finite mu".into()));
        }
        let mut s = Self::new(config)?;
        s.sigma = sigma;
        s.mu = mu;
        s.first_moment = mu;
        s.second_moment = sigma * sigma + mu * mu;
        Ok(s)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn normalize(&self, y: f64) -> f64 {
        (y - self.mu) / self.sigma
    }

    pub fn denormalize(&self, y_hat: f64) -> f64 {
        self.sigma * y_hat + self.mu
    }

    /// Rewrites `head` so that `Σ_new·(W_new h + b_new) + μ_new = Σ·(W h + b) + μ`.
    pub fn preserve_outputs(&self, head: &mut Layer, sigma_new: f64, mu_new: f64) -> Result<()> {
        if head.out_dim() != 1 {
            return Err(Error::Dimension(format!(
                "Pop-Art wraps a scalar head, got {} outputs",
                head.out_dim()
            )));
        }
        if !(sigma_new > 0.0 && sigma_new.is_finite()) || !mu_new.is_finite() {
            return Err(Error::NonFinite("Pop-Art statistics"));
        }
        if sigma_new == self.sigma && mu_new == self.mu {
            return Ok(());
        }
        let ratio = self.sigma / sigma_new;
        head.weight.scale_in_place(ratio);
        let b = &mut head.bias[0];
        *b = (self.sigma * *b + (self.mu - mu_new)) / sigma_new;
        Ok(())
    }

    /// Moves the running moments toward the targets (one incremental step per
    /// target) and rewrites `head` to preserve unnormalized outputs.
    pub fn observe_and_update(&mut self, targets: &[f64], head: &mut Layer) -> Result<()> {
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("Pop-Art targets"));
        }
        if targets.is_empty() {
            return Ok(());
        }
        let beta = self.config.step_size;
        let (mut m1, mut m2) = (self.first_moment, self.second_moment);
        for &y in targets {
            m1 += beta * (y - m1);
            m2 += beta * (y * y - m2);
        }
        let var = (m2 - m1 * m1).max(self.config.variance_floor);
        let sigma_new = var.sqrt().clamp(self.config.sigma_min, self.config.sigma_max);
        self.preserve_outputs(head, sigma_new, m1)?;
        self.first_moment = m1;
        self.second_moment = m2;
        self.sigma = sigma_new;
        self.mu = m1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, Matrix};
    use crate::nn::ActivationKind;

    fn head(w: &[f64], b: f64) -> Layer {
        Layer::new(
            Matrix::from_vec(1, w.len(), w.to_vec()).unwrap(),
            vec![b],
            ActivationKind::Identity,
        )
        .unwrap()
    }

    fn unnormalized(state_sigma: f64, state_mu: f64, l: &Layer, h: &[f64]) -> f64 {
        state_sigma * (dot(l.weight.row(0), h) + l.bias[0]) + state_mu
    }

    #[test]
    fn identical_statistics_leave_head_alone() {
        let s = PopArtState::new(PopArtConfig::default()).unwrap();
        let mut l = head(&[0.3, -0.7], 0.2);
        let before = l.clone();
        s.preserve_outputs(&mut l, 1.0, 0.0).unwrap();
        assert_eq!(l, before);
    }

    #[test]
    fn unit_to_two_one() {
        let s = PopArtState::new(PopArtConfig::default()).unwrap();
        let w = [0.3, -0.7, 1.1];
        let b = 0.4;
        let mut l = head(&w, b);
        s.preserve_outputs(&mut l, 2.0, 1.0).unwrap();
        for (x, y) in l.weight.row(0).iter().zip(&w) {
            assert_eq!(*x, y / 2.0);
        }
        assert_eq!(l.bias[0], (b - 1.0) / 2.0);
        for k in 0..20 {
            let h = [k as f64 * 0.3 - 2.0, 1.0 / (k as f64 + 1.0), (k as f64).sin()];
            let old = dot(&w, &h) + b;
            let new = unnormalized(2.0, 1.0, &l, &h);
            assert!((old - new).abs() <= 1e-12 * (1.0 + old.abs()));
        }
    }

    #[test]
    fn constant_stream_hits_floor() {
        let mut s = PopArtState::new(PopArtConfig::default()).unwrap();
        let mut l = head(&[1.0], 0.0);
        let chunk = vec![3.5; 1000];
        for _ in 0..60 {
            s.observe_and_update(&chunk, &mut l).unwrap();
        }
        assert!((s.mu() - 3.5).abs() < 1e-6);
        assert!((s.sigma() - 1e-2).abs() < 1e-12);
    }

    #[test]
    fn round_trip_by_hand() {
        let s = PopArtState::with_stats(PopArtConfig::default(), 2.0, 1.0).unwrap();
        assert_eq!(s.normalize(5.0), 2.0);
        assert_eq!(s.denormalize(2.0), 5.0);
        let unit = PopArtState::new(PopArtConfig::default()).unwrap();
        assert_eq!(unit.normalize(-3.25), -3.25);
        assert_eq!(unit.denormalize(-3.25), -3.25);
    }

    #[test]
    fn rejects_non_finite_targets() {
        let mut s = PopArtState::new(PopArtConfig::default()).unwrap();
        let mut l = head(&[1.0], 0.0);
        assert!(s.observe_and_update(&[1.0, f64::NAN], &mut l).is_err());
        assert_eq!(s.sigma(), 1.0);
    }
}
