//! Actor-critic agents.
//!
//! Both agents keep their critic in *scaled* reward units: when the reward
//! scale is `s`, value estimates approximate `s` times the raw-reward values.
//! Quantities handed to the actor are multiplied by `1/s` so the policy sees
//! raw-unit signals regardless of the current scale.

mod a2c;
mod ddpg;

pub use a2c::{A2cAgent, A2cConfig, PolicyHead, Rollout, RolloutStep};
pub use ddpg::{ddpg_target, DdpgAgent, DdpgConfig, ReplayBuffer, StoredTransition};

use crate::error::{Error, Result};
use crate::nn::Network;

/// Training losses reported by one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Losses {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    /// Actor gradient norm before any clipping.
    pub actor_grad_norm: f64,
}

/// One step of a trajectory as seen by the return computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Reward in the critic's (scaled) units.
    pub reward: f64,
    /// Critic estimate `V(s_t)`.
    pub value: f64,
    /// The episode terminated after this step; nothing is bootstrapped.
    pub terminal: bool,
    /// The episode was cut by its horizon; the return bootstraps from this
    /// estimate of `V(s_{t+1})`.
    pub truncated_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advantages {
    /// n-step returns in scaled units (critic targets).
    pub returns: Vec<f64>,
    /// `returns - values`, in scaled units.
    pub critic: Vec<f64>,
    /// `critic / s`, fed to the actor.
    pub actor: Vec<f64>,
}

/// n-step bootstrapped returns and advantages for one trajectory segment.
/// `bootstrap` is `V(s_T)` for the state following the last step; it is
/// ignored if the last step ends the episode.
pub fn compute_advantages(steps: &[StepOutcome], bootstrap: f64, gamma: f64, scale: f64) -> Result<Advantages> {
    if steps.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must be in (0, 1), got {gamma}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let mut returns = vec![0.0; steps.len()];
    let mut next = bootstrap;
    for (i, st) in steps.iter().enumerate().rev() {
        let tail = if st.terminal {
            0.0
        } else if let Some(v) = st.truncated_value {
            v
        } else {
            next
        };
        returns[i] = st.reward + gamma * tail;
        next = returns[i];
    }
    let critic: Vec<f64> = returns.iter().zip(steps).map(|(g, st)| g - st.value).collect();
    let actor = critic.iter().map(|a| a / scale).collect();
    Ok(Advantages {
        returns,
        critic,
        actor,
    })
}

/// `target ← τ·online + (1 − τ)·target`, elementwise.
pub fn soft_update(target: &mut Network, online: &Network, tau: f64) -> Result<()> {
    if !target.same_architecture(online) {
        return Err(Error::Dimension("soft update between different architectures".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("tau must be in [0, 1], got {tau}")));
    }
    if tau == 0.0 {
        return Ok(());
    }
    for (t, o) in target.param_slices_mut().into_iter().zip(online.param_slices()) {
        if tau == 1.0 {
            t.copy_from_slice(o);
        } else {
            for (x, y) in t.iter_mut().zip(o) {
                *x = tau * y + (1.0 - tau) * *x;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ActivationKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn step(reward: f64, value: f64) -> StepOutcome {
        StepOutcome {
            reward,
            value,
            terminal: false,
            truncated_value: None,
        }
    }

    #[test]
    fn single_step_advantage() {
        let a = compute_advantages(&[step(1.0, 0.0)], 0.0, 0.99, 1.0).unwrap();
        assert_eq!(a.actor, vec![1.0]);
    }

    #[test]
    fn exact_values_give_zero_advantage() {
        let gamma = 0.9;
        let rewards = [1.0, 2.0, 0.5];
        let bootstrap = 4.0;
        let mut v = [0.0; 3];
        let mut next = bootstrap;
        for i in (0..3).rev() {
            v[i] = rewards[i] + gamma * next;
            next = v[i];
        }
        let steps: Vec<_> = (0..3).map(|i| step(rewards[i], v[i])).collect();
        let a = compute_advantages(&steps, bootstrap, gamma, 1.0).unwrap();
        assert!(a.critic.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn terminal_and_truncation() {
        let mut s = vec![step(1.0, 0.0), step(2.0, 0.0), step(3.0, 0.0)];
        s[0].terminal = true;
        s[1].truncated_value = Some(10.0);
        let a = compute_advantages(&s, 100.0, 0.5, 2.0).unwrap();
        assert_eq!(a.returns, vec![1.0, 2.0 + 5.0, 3.0 + 50.0]);
        assert_eq!(a.actor, vec![0.5, 3.5, 26.5]);
    }

    #[test]
    fn empty_trajectory_rejected() {
        assert!(compute_advantages(&[], 0.0, 0.9, 1.0).is_err());
    }

    #[test]
    fn soft_update_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let online = Network::mlp(&[2, 4, 1], ActivationKind::Relu, ActivationKind::Identity, &mut rng).unwrap();
        let start = Network::mlp(&[2, 4, 1], ActivationKind::Relu, ActivationKind::Identity, &mut rng).unwrap();

        let mut t = start.clone();
        soft_update(&mut t, &online, 0.0).unwrap();
        assert_eq!(t, start);
        soft_update(&mut t, &online, 1.0).unwrap();
        assert_eq!(t, online);

        let mut t = start.clone();
        soft_update(&mut t, &online, 0.5).unwrap();
        soft_update(&mut t, &online, 0.5).unwrap();
        for ((x, t0), o) in t
            .param_slices()
            .concat()
            .iter()
            .zip(start.param_slices().concat())
            .zip(online.param_slices().concat())
        {
            assert!((x - (0.25 * t0 + 0.75 * o)).abs() < 1e-15);
        }

        let other = Network::mlp(&[2, 3, 1], ActivationKind::Relu, ActivationKind::Identity, &mut rng).unwrap();
        assert!(soft_update(&mut t, &other, 0.5).is_err());
    }
}
