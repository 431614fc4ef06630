//! Deterministic policy gradient with target networks and a replay buffer.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{soft_update, Losses};
use crate::envs::ActionSpace;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{ActivationKind, Network, Optimizer, OptimizerKind};
use crate::popart::{PopArtConfig, PopArtState};
use crate::scaling::{clip_gradient, scale_network_in_place, ClipSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct DdpgConfig {
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Environment steps collected before the first update.
    pub warmup: usize,
    /// Exploration noise std, as a fraction of the action half-range.
    pub noise_std: f64,
    pub hidden: Vec<usize>,
    pub activation: ActivationKind,
    pub reset_optimizer_on_scale: bool,
    pub clip: ClipSchedule,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            batch_size: 64,
            buffer_capacity: 100_000,
            warmup: 256,
            noise_std: 0.1,
            hidden: vec![64, 64],
            activation: ActivationKind::Relu,
            reset_optimizer_on_scale: true,
            clip: ClipSchedule::default(),
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            errs.push(format!("gamma must be in (0, 1), got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            errs.push(format!("tau must be in (0, 1], got {}", self.tau));
        }
        if !(self.actor_lr > 0.0) || !(self.critic_lr > 0.0) {
            errs.push("learning rates must be positive".to_string());
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            errs.push("need 1 <= batch_size <= buffer_capacity".to_string());
        }
        if !(self.noise_std >= 0.0) {
            errs.push("noise_std must be >= 0".to_string());
        }
        if self.hidden.contains(&0) {
            errs.push("hidden widths must be positive".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Replayed transition. The reward is raw; the current scale is applied when
/// a minibatch is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTransition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    data: Vec<StoredTransition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "replay capacity must be positive");
        Self {
            capacity,
            data: Vec::new(),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, t: StoredTransition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform draw with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&StoredTransition> {
        if self.data.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.data[rng.random_range(0..self.data.len())]).collect()
    }
}

/// Critic target `y = r + γ·Q'(s', μ'(s'))`, or `r` at a terminal step.
pub fn ddpg_target(reward: f64, gamma: f64, q_next: f64, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * q_next
    }
}

pub struct DdpgAgent {
    config: DdpgConfig,
    action_dim: usize,
    low: f64,
    high: f64,
    actor: Network,
    critic: Network,
    target_actor: Network,
    target_critic: Network,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
    replay: ReplayBuffer,
    scale: f64,
    steps_since_scale: Option<u64>,
    popart: Option<PopArtState>,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, space: &ActionSpace, config: DdpgConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (action_dim, low, high) = match *space {
            ActionSpace::Continuous { dim, low, high } if dim >= 1 && low < high => (dim, low, high),
            _ => {
                return Err(Error::InvalidArgument(
                    "DDPG needs a non-empty bounded continuous action space".into(),
                ))
            }
        };
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(&config.hidden);
        actor_sizes.push(action_dim);
        let mut critic_sizes = vec![obs_dim + action_dim];
        critic_sizes.extend(&config.hidden);
        critic_sizes.push(1);
        let actor = Network::mlp(&actor_sizes, config.activation, ActivationKind::Tanh, rng)?;
        let critic = Network::mlp(&critic_sizes, config.activation, ActivationKind::Identity, rng)?;
        Ok(Self {
            actor_opt: Optimizer::new(OptimizerKind::adam(config.actor_lr))?,
            critic_opt: Optimizer::new(OptimizerKind::adam(config.critic_lr))?,
            replay: ReplayBuffer::new(config.buffer_capacity),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            config,
            action_dim,
            low,
            high,
            scale: 1.0,
            steps_since_scale: None,
            popart: None,
        })
    }

    /// Switches both critics to Pop-Art normalized outputs.
    pub fn enable_popart(&mut self, config: PopArtConfig) -> Result<()> {
        self.popart = Some(PopArtState::new(config)?);
        Ok(())
    }

    pub fn popart(&self) -> Option<&PopArtState> {
        self.popart.as_ref()
    }

    fn denormalize(&self, q: f64) -> f64 {
        self.popart.as_ref().map_or(q, |p| p.denormalize(q))
    }

    pub fn config(&self) -> &DdpgConfig {
        &self.config
    }

    pub fn actor(&self) -> &Network {
        &self.actor
    }

    pub fn critic(&self) -> &Network {
        &self.critic
    }

    pub fn critic_mut(&mut self) -> &mut Network {
        &mut self.critic
    }

    pub fn target_critic(&self) -> &Network {
        &self.target_critic
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Declares the reward scale without touching the critic. Meant for
    /// fixed-scale runs before training starts.
    pub fn set_reward_scale(&mut self, s: f64) -> Result<()> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("reward scale must be positive, got {s}")));
        }
        self.scale = s;
        Ok(())
    }

    pub fn critic_optimizer_steps(&self) -> u64 {
        self.critic_opt.steps()
    }

    pub fn steps_since_scale(&self) -> Option<u64> {
        self.steps_since_scale
    }

    fn half_range(&self) -> f64 {
        0.5 * (self.high - self.low)
    }

    fn to_action(&self, h: f64) -> f64 {
        0.5 * (self.high + self.low) + self.half_range() * h
    }

    /// Deterministic policy actions `μ(s)` for a batch of states.
    pub fn policy(&self, states: &Matrix) -> Result<Matrix> {
        Ok(self.actor.predict(states)?.map(|h| self.to_action(h)))
    }

    /// `μ(s)` plus Gaussian exploration noise, clipped to the action box.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>> {
        let mu = self.actor.predict_one(obs)?;
        let sd = self.config.noise_std * self.half_range();
        Ok(mu
            .iter()
            .map(|&h| {
                let mut a = self.to_action(h);
                if explore && sd > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    a += sd * z;
                }
                a.clamp(self.low, self.high)
            })
            .collect())
    }

    /// Critic estimate `Q(s, a)`, in scaled units.
    pub fn q_value(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let mut x = state.to_vec();
        x.extend_from_slice(action);
        Ok(self.denormalize(self.critic.predict_one(&x)?[0]))
    }

    pub fn remember(&mut self, t: StoredTransition) -> Result<()> {
        if t.action.len() != self.action_dim || !t.reward.is_finite() {
            return Err(Error::InvalidArgument("malformed transition".into()));
        }
        self.replay.push(t);
        Ok(())
    }

    /// Multiplies the reward scale by `c`, scaling the critic and its target.
    pub fn rescale(&mut self, c: f64) -> Result<()> {
        if self.popart.is_some() {
            return Err(Error::InvalidArgument("rescaling a Pop-Art critic".into()));
        }
        scale_network_in_place(&mut self.critic, c)?;
        scale_network_in_place(&mut self.target_critic, c)?;
        self.scale *= c;
        if self.config.reset_optimizer_on_scale {
            self.critic_opt.reset();
        }
        self.steps_since_scale = Some(0);
        Ok(())
    }

    /// One critic and actor update from a replayed minibatch. Returns `None`
    /// while the buffer holds fewer than `batch_size` transitions.
    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<Losses>> {
        if self.replay.len() < self.config.batch_size.max(1) {
            return Ok(None);
        }
        let batch = self.replay.sample(self.config.batch_size, rng);
        let n = batch.len();
        let states = Matrix::from_rows(&batch.iter().map(|t| t.state.as_slice()).collect::<Vec<_>>())?;
        let actions =
            Matrix::from_rows(&batch.iter().map(|t| t.action.as_slice()).collect::<Vec<_>>())?;
        let next = Matrix::from_rows(&batch.iter().map(|t| t.next_state.as_slice()).collect::<Vec<_>>())?;

        let next_actions = self.target_actor.predict(&next)?.map(|h| self.to_action(h));
        let q_next = self.target_critic.predict(&next.hstack(&next_actions)?)?;
        let mut targets: Vec<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let q = self.denormalize(q_next.get(i, 0));
                ddpg_target(self.scale * t.reward, self.config.gamma, q, t.terminal)
            })
            .collect();
        if let Some(p) = &mut self.popart {
            let old = p.clone();
            let head = self.critic.layers_mut().last_mut().expect("critic has layers");
            p.observe_and_update(&targets, head)?;
            let target_head = self.target_critic.layers_mut().last_mut().expect("critic has layers");
            old.preserve_outputs(target_head, p.sigma(), p.mu())?;
            targets.iter_mut().for_each(|y| *y = p.normalize(*y));
        }

        let nf = n as f64;
        let (q, trace) = self.critic.forward(&states.hstack(&actions)?)?;
        let mut grad_q = Matrix::zeros(n, 1);
        let mut value_loss = 0.0;
        for (i, y) in targets.iter().enumerate() {
            let d = q.get(i, 0) - y;
            value_loss += d * d / nf;
            grad_q.set(i, 0, 2.0 * d / nf);
        }
        if !value_loss.is_finite() {
            return Err(Error::Diverged(format!("critic loss {value_loss} at scale {}", self.scale)));
        }
        let critic_grads = self.critic.backward(&trace, &grad_q)?;
        self.critic_opt.step_network(&mut self.critic, &critic_grads)?;

        let (policy_loss, actor_grad_norm) = self.actor_step(&states)?;

        soft_update(&mut self.target_actor, &self.actor, self.config.tau)?;
        soft_update(&mut self.target_critic, &self.critic, self.config.tau)?;
        Ok(Some(Losses {
            policy: policy_loss,
            value: value_loss,
            entropy: 0.0,
            actor_grad_norm,
        }))
    }

    /// Ascends `mean Q(s, μ(s)) / s` through the current critic. Returns the
    /// actor loss `-mean Q / s` and the pre-clip gradient norm.
    pub fn actor_step(&mut self, states: &Matrix) -> Result<(f64, f64)> {
        let n = states.rows();
        if n == 0 {
            return Err(Error::InvalidArgument("actor step on an empty batch".into()));
        }
        let nf = n as f64;
        let (h, actor_trace) = self.actor.forward(states)?;
        let mu = h.map(|v| self.to_action(v));
        let (q, critic_trace) = self.critic.forward(&states.hstack(&mu)?)?;
        let ones = Matrix::from_fn(n, 1, |_, _| 1.0);
        let dq = self.critic.backward(&critic_trace, &ones)?;
        let obs_dim = states.cols();
        let dq_da = dq.input.columns(obs_dim, obs_dim + self.action_dim);
        let sigma = self.popart.as_ref().map_or(1.0, |p| p.sigma());
        let k = -sigma * self.half_range() / (nf * self.scale);
        let grad_h = dq_da.map(|g| k * g);
        let mut grads = self.actor.backward(&actor_trace, &grad_h)?;
        let norm = match self.steps_since_scale {
            Some(steps) => {
                let norm = clip_gradient(&mut grads, &self.config.clip, steps);
                self.steps_since_scale = if steps + 1 >= self.config.clip.relax_steps() {
                    None
                } else {
                    Some(steps + 1)
                };
                norm
            }
            None => grads.global_norm(),
        };
        self.actor_opt.step_network(&mut self.actor, &grads)?;
        let loss = -q.as_slice().iter().map(|&v| self.denormalize(v)).sum::<f64>() / (nf * self.scale);
        Ok((loss, norm))
    }
}
