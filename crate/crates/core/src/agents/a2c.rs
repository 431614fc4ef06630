//! Synchronous advantage actor-critic over batched environment copies.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{compute_advantages, Losses, StepOutcome};
use crate::envs::{Action, ActionSpace};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{ActivationKind, Gradients, Network, Optimizer, OptimizerKind};
use crate::popart::{PopArtConfig, PopArtState};
use crate::scaling::{clip_gradient, scale_network_in_place, ClipSchedule};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, PartialEq)]
pub struct A2cConfig {
    pub gamma: f64,
    pub n_envs: usize,
    pub rollout_len: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Multiplier on the critic's MSE gradient.
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub hidden: Vec<usize>,
    pub activation: ActivationKind,
    /// Initial log standard deviation of the Gaussian head.
    pub init_log_std: f64,
    pub reset_optimizer_on_scale: bool,
    pub clip: ClipSchedule,
    /// Bootstrap from `V(s')` when an episode is cut by its horizon.
    pub bootstrap_on_truncation: bool,
}

impl Default for A2cConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            n_envs: 16,
            rollout_len: 5,
            actor_lr: 7e-4,
            critic_lr: 7e-4,
            value_coef: 0.5,
            entropy_coef: 0.01,
            hidden: vec![64, 64],
            activation: ActivationKind::Relu,
            init_log_std: -0.5,
            reset_optimizer_on_scale: true,
            clip: ClipSchedule::default(),
            bootstrap_on_truncation: true,
        }
    }
}

impl A2cConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            errs.push(format!("gamma must be in (0, 1), got {}", self.gamma));
        }
        if self.n_envs == 0 {
            errs.push("n_envs must be >= 1".to_string());
        }
        if self.rollout_len == 0 {
            errs.push("rollout_len must be >= 1".to_string());
        }
        if !(self.actor_lr > 0.0) || !(self.critic_lr > 0.0) {
            errs.push("learning rates must be positive".to_string());
        }
        if !(self.entropy_coef >= 0.0) || !(self.value_coef > 0.0) {
            errs.push("entropy_coef must be >= 0 and value_coef > 0".to_string());
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

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyHead {
    /// Categorical policy over `n` actions from softmax logits.
    Softmax(usize),
    /// Diagonal Gaussian with state-independent learned log std.
    Gaussian { dim: usize },
}

impl PolicyHead {
    pub fn for_space(space: &ActionSpace) -> Result<Self> {
        Ok(match *space {
            ActionSpace::Discrete(n) if n >= 1 => PolicyHead::Softmax(n),
            ActionSpace::Continuous { dim, .. } if dim >= 1 => PolicyHead::Gaussian { dim },
            _ => return Err(Error::InvalidArgument("empty action space".into())),
        })
    }

    pub fn output_dim(&self) -> usize {
        match *self {
            PolicyHead::Softmax(n) => n,
            PolicyHead::Gaussian { dim } => dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    pub state: Vec<f64>,
    pub action: Action,
    /// Reward at the scale in force when it was collected.
    pub reward: f64,
    pub terminal: bool,
    pub truncated: bool,
    pub next_state: Vec<f64>,
}

/// Steps collected from every environment copy, plus the observation each
/// copy is in afterwards.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rollout {
    pub steps: Vec<Vec<RolloutStep>>,
    pub last_obs: Vec<Vec<f64>>,
}

impl Rollout {
    pub fn new(n_envs: usize) -> Self {
        Self {
            steps: vec![Vec::new(); n_envs],
            last_obs: Vec::new(),
        }
    }

    pub fn n_steps(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}

pub struct A2cAgent {
    config: A2cConfig,
    head: PolicyHead,
    actor: Network,
    critic: Network,
    log_std: Vec<f64>,
    actor_opt: Optimizer,
    log_std_opt: Optimizer,
    critic_opt: Optimizer,
    scale: f64,
    steps_since_scale: Option<u64>,
    popart: Option<PopArtState>,
}

fn row_softmax(logits: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let log_p: Vec<f64> = logits.iter().map(|l| l - lse).collect();
    (log_p.iter().map(|l| l.exp()).collect(), log_p)
}

impl A2cAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, space: &ActionSpace, config: A2cConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let head = PolicyHead::for_space(space)?;
        let mut sizes = vec![obs_dim];
        sizes.extend(&config.hidden);
        let mut actor_sizes = sizes.clone();
        actor_sizes.push(head.output_dim());
        sizes.push(1);
        let actor = Network::mlp(&actor_sizes, config.activation, ActivationKind::Identity, rng)?;
        let critic = Network::mlp(&sizes, config.activation, ActivationKind::Identity, rng)?;
        let log_std = match head {
            PolicyHead::Gaussian { dim } => vec![config.init_log_std; dim],
            PolicyHead::Softmax(_) => Vec::new(),
        };
        Ok(Self {
            actor_opt: Optimizer::new(OptimizerKind::adam(config.actor_lr))?,
            log_std_opt: Optimizer::new(OptimizerKind::adam(config.actor_lr))?,
            critic_opt: Optimizer::new(OptimizerKind::adam(config.critic_lr))?,
            config,
            head,
            actor,
            critic,
            log_std,
            scale: 1.0,
            steps_since_scale: None,
            popart: None,
        })
    }

    /// Switches the critic to Pop-Art normalized outputs.
    pub fn enable_popart(&mut self, config: PopArtConfig) -> Result<()> {
        self.popart = Some(PopArtState::new(config)?);
        Ok(())
    }

    pub fn popart(&self) -> Option<&PopArtState> {
        self.popart.as_ref()
    }

    pub fn config(&self) -> &A2cConfig {
        &self.config
    }

    pub fn head(&self) -> &PolicyHead {
        &self.head
    }

    pub fn actor(&self) -> &Network {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Network {
        &mut self.actor
    }

    pub fn critic(&self) -> &Network {
        &self.critic
    }

    pub fn critic_mut(&mut self) -> &mut Network {
        &mut self.critic
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
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

    /// Multiplies the reward scale by `c`: the critic is scaled so its outputs
    /// follow, and the actor's gradient cap restarts from its initial value.
    pub fn rescale(&mut self, c: f64) -> Result<()> {
        if self.popart.is_some() {
            return Err(Error::InvalidArgument("rescaling a Pop-Art critic".into()));
        }
        scale_network_in_place(&mut self.critic, c)?;
        self.scale *= c;
        if self.config.reset_optimizer_on_scale {
            self.critic_opt.reset();
        }
        self.steps_since_scale = Some(0);
        Ok(())
    }

    /// Softmax probabilities for a discrete head.
    pub fn probabilities(&self, obs: &[f64]) -> Result<Vec<f64>> {
        if !matches!(self.head, PolicyHead::Softmax(_)) {
            return Err(Error::InvalidArgument("probabilities need a softmax head".into()));
        }
        Ok(row_softmax(&self.actor.predict_one(obs)?).0)
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[Vec<f64>], rng: &mut R) -> Result<Vec<Action>> {
        let x = Matrix::from_rows(obs)?;
        let out = self.actor.predict(&x)?;
        out.row_iter()
            .map(|row| {
                Ok(match self.head {
                    PolicyHead::Softmax(_) => {
                        let (p, _) = row_softmax(row);
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut pick = p.len() - 1;
                        for (i, pi) in p.iter().enumerate() {
                            acc += pi;
                            if u < acc {
                                pick = i;
                                break;
                            }
                        }
                        Action::Discrete(pick)
                    }
                    PolicyHead::Gaussian { .. } => Action::Continuous(
                        row.iter()
                            .zip(&self.log_std)
                            .map(|(m, ls)| {
                                let z: f64 = StandardNormal.sample(rng);
                                m + ls.exp() * z
                            })
                            .collect(),
                    ),
                })
            })
            .collect()
    }

    /// Most likely action.
    pub fn greedy(&self, obs: &[f64]) -> Result<Action> {
        let out = self.actor.predict_one(obs)?;
        Ok(match self.head {
            PolicyHead::Softmax(_) => {
                let mut best = 0;
                for (i, v) in out.iter().enumerate() {
                    if *v > out[best] {
                        best = i;
                    }
                }
                Action::Discrete(best)
            }
            PolicyHead::Gaussian { .. } => Action::Continuous(out),
        })
    }

    /// Value estimates in scaled (and, with Pop-Art, unnormalized) units.
    pub fn values(&self, states: &Matrix) -> Result<Vec<f64>> {
        let mut v = self.critic.predict(states)?.into_vec();
        if let Some(p) = &self.popart {
            v.iter_mut().for_each(|x| *x = p.denormalize(*x));
        }
        Ok(v)
    }

    /// Loss `-mean(log π(a|s)·A) - entropy_coef·mean(H(π(·|s)))` and its
    /// gradients with respect to the actor parameters and the log std.
    /// Returns `(loss, mean entropy, actor grads, log_std grads)`.
    pub fn policy_loss_and_grad(
        &self,
        states: &Matrix,
        actions: &[Action],
        advantages: &[f64],
    ) -> Result<(f64, f64, Gradients, Vec<f64>)> {
        let n = states.rows();
        if n == 0 || actions.len() != n || advantages.len() != n {
            return Err(Error::Dimension(format!(
                "{} states, {} actions, {} advantages",
                n,
                actions.len(),
                advantages.len()
            )));
        }
        let nf = n as f64;
        let beta = self.config.entropy_coef;
        let (out, trace) = self.actor.forward(states)?;
        let mut grad_out = Matrix::zeros(n, out.cols());
        let mut loss = 0.0;
        let mut entropy = 0.0;
        let mut log_std_grad = vec![0.0; self.log_std.len()];
        for i in 0..n {
            let row = out.row(i);
            let adv = advantages[i];
            match (&self.head, &actions[i]) {
                (PolicyHead::Softmax(k), Action::Discrete(a)) => {
                    if *a >= *k {
                        return Err(Error::InvalidArgument(format!("action {a} out of range")));
                    }
                    let (p, log_p) = row_softmax(row);
                    let h: f64 = -p.iter().zip(&log_p).map(|(p, l)| p * l).sum::<f64>();
                    loss += -log_p[*a] * adv - beta * h;
                    entropy += h;
                    let g = grad_out.row_mut(i);
                    for j in 0..*k {
                        let onehot = if j == *a { 1.0 } else { 0.0 };
                        g[j] = ((p[j] - onehot) * adv + beta * p[j] * (log_p[j] + h)) / nf;
                    }
                }
                (PolicyHead::Gaussian { dim }, Action::Continuous(a)) => {
                    if a.len() != *dim {
                        return Err(Error::Dimension("action dimension mismatch".into()));
                    }
                    let g = grad_out.row_mut(i);
                    for j in 0..*dim {
                        let ls = self.log_std[j];
                        let var = (2.0 * ls).exp();
                        let d = a[j] - row[j];
                        let log_p = -0.5 * d * d / var - ls - 0.5 * LN_2PI;
                        let h = ls + 0.5 * (LN_2PI + 1.0);
                        loss += -log_p * adv - beta * h;
                        entropy += h;
                        g[j] = -adv * d / var / nf;
                        log_std_grad[j] += (-adv * (d * d / var - 1.0) - beta) / nf;
                    }
                }
                _ => return Err(Error::InvalidArgument("action does not match policy head".into())),
            }
        }
        let grads = self.actor.backward(&trace, &grad_out)?;
        Ok((loss / nf, entropy / nf, grads, log_std_grad))
    }

    /// One synchronous update from a batch of rollouts.
    pub fn update(&mut self, rollout: &Rollout) -> Result<Losses> {
        if rollout.n_steps() == 0 {
            return Err(Error::InvalidArgument("empty rollout".into()));
        }
        if rollout.last_obs.len() != rollout.steps.len() {
            return Err(Error::Dimension("one final observation per environment".into()));
        }
        let states: Vec<&[f64]> = rollout
            .steps
            .iter()
            .flat_map(|s| s.iter().map(|st| st.state.as_slice()))
            .collect();
        let states = Matrix::from_rows(&states)?;
        let values = self.values(&states)?;
        let bootstrap = self.values(&Matrix::from_rows(&rollout.last_obs)?)?;

        let mut returns = Vec::with_capacity(states.rows());
        let mut actor_adv = Vec::with_capacity(states.rows());
        let mut actions = Vec::with_capacity(states.rows());
        let mut offset = 0;
        for (e, seg) in rollout.steps.iter().enumerate() {
            if seg.is_empty() {
                continue;
            }
            let mut outcomes = Vec::with_capacity(seg.len());
            for (k, st) in seg.iter().enumerate() {
                let truncated_value = if st.truncated && !st.terminal {
                    if self.config.bootstrap_on_truncation {
                        Some(self.values(&Matrix::from_rows(&[st.next_state.as_slice()])?)?[0])
                    } else {
                        Some(0.0)
                    }
                } else {
                    None
                };
                outcomes.push(StepOutcome {
                    reward: st.reward,
                    value: values[offset + k],
                    terminal: st.terminal,
                    truncated_value,
                });
                actions.push(st.action.clone());
            }
            let adv = compute_advantages(&outcomes, bootstrap[e], self.config.gamma, self.scale)?;
            returns.extend(adv.returns);
            actor_adv.extend(adv.actor);
            offset += seg.len();
        }

        if let Some(p) = &mut self.popart {
            let head = self.critic.layers_mut().last_mut().expect("critic has layers");
            p.observe_and_update(&returns, head)?;
            returns.iter_mut().for_each(|g| *g = p.normalize(*g));
        }
        let (raw_values, critic_trace) = self.critic.forward(&states)?;
        let n = states.rows() as f64;
        let mut value_loss = 0.0;
        let mut grad_v = Matrix::zeros(states.rows(), 1);
        for (i, g) in returns.iter().enumerate() {
            let d = raw_values.get(i, 0) - g;
            value_loss += d * d / n;
            grad_v.set(i, 0, self.config.value_coef * 2.0 * d / n);
        }
        let (policy_loss, entropy, mut actor_grads, log_std_grad) =
            self.policy_loss_and_grad(&states, &actions, &actor_adv)?;
        if !value_loss.is_finite() || !policy_loss.is_finite() {
            return Err(Error::Diverged(format!(
                "value loss {value_loss}, policy loss {policy_loss} at scale {}",
                self.scale
            )));
        }

        let critic_grads = self.critic.backward(&critic_trace, &grad_v)?;
        self.critic_opt.step_network(&mut self.critic, &critic_grads)?;

        let actor_grad_norm = match self.steps_since_scale {
            Some(k) => {
                let norm = clip_gradient(&mut actor_grads, &self.config.clip, k);
                self.steps_since_scale = if k + 1 >= self.config.clip.relax_steps() {
                    None
                } else {
                    Some(k + 1)
                };
                norm
            }
            None => actor_grads.global_norm(),
        };
        self.actor_opt.step_network(&mut self.actor, &actor_grads)?;
        if !self.log_std.is_empty() {
            self.log_std_opt
                .step(&mut [self.log_std.as_mut_slice()], &[log_std_grad.as_slice()])?;
        }
        Ok(Losses {
            policy: policy_loss,
            value: value_loss,
            entropy,
            actor_grad_norm,
        })
    }
}
