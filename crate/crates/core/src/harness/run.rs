//! Seeded training trials.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{AgentKind, ExperimentConfig, ScaleMode};
use crate::agents::{A2cAgent, DdpgAgent, Rollout, RolloutStep, StoredTransition};
use crate::ans::{AnsDecision, ScaleController};
use crate::diagnostics::{pdrr_report, InputWindow};
use crate::envs::{Action, Env, RewardScaled, VecEnv};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::Network;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub trial: usize,
    /// 0-based episode index within the trial.
    pub episode: usize,
    /// Frames elapsed when the episode ended.
    pub frame: u64,
    pub raw_return: f64,
    pub scaled_return: f64,
    pub scale: f64,
    /// Latest PDRR sample of each ReLU critic layer.
    pub pdrr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleEvent {
    pub frame: u64,
    pub old_scale: f64,
    pub new_scale: f64,
    pub c_applied: f64,
}

/// One controller step.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsRecord {
    /// Episodes finished so far in the trial.
    pub episode: usize,
    pub frame: u64,
    /// Raw return fed to the controller.
    pub raw_return: f64,
    pub m_hat: f64,
    pub m_hat_max: f64,
    /// Cumulative scale after the decision.
    pub scale: f64,
    pub decision: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdrrRecord {
    pub frame: u64,
    /// 1-based hidden layer of the critic.
    pub layer: usize,
    pub pdrr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopArtRecord {
    pub frame: u64,
    pub sigma: f64,
    pub mu: f64,
}

/// Final networks of a trial and the PDRR window they were last probed with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub actor: Network,
    pub critic: Network,
    pub scale: f64,
    pub frames: u64,
    pub optimizer_steps: u64,
    pub window: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub trial: usize,
    pub seed: u64,
    pub frames: u64,
    pub episodes: Vec<EpisodeRecord>,
    pub scale_events: Vec<ScaleEvent>,
    pub ans: Vec<AnsRecord>,
    pub pdrr: Vec<PdrrRecord>,
    pub popart: Vec<PopArtRecord>,
    pub final_scale: f64,
    /// Set when training stopped on a non-finite loss.
    pub diverged: Option<String>,
    pub checkpoint: Option<Checkpoint>,
}

impl TrialLog {
    fn new(trial: usize, seed: u64, scale: f64) -> Self {
        Self {
            trial,
            seed,
            frames: 0,
            episodes: Vec::new(),
            scale_events: Vec::new(),
            ans: Vec::new(),
            pdrr: Vec::new(),
            popart: Vec::new(),
            final_scale: scale,
            diverged: None,
            checkpoint: None,
        }
    }
}

/// Runs every trial of `cfg`, in parallel, returning logs ordered by trial.
/// Trial `k` is seeded with `cfg.seed + k`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialLog>> {
    cfg.validate()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|k| run_trial(cfg, k))
        .collect()
}

pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialLog> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    match cfg.agent {
        AgentKind::A2c => run_a2c(cfg, trial, seed),
        AgentKind::Ddpg => run_ddpg(cfg, trial, seed),
    }
}

/// Mutable bookkeeping shared by both training loops.
struct Tracker {
    log: TrialLog,
    window: InputWindow,
    latest_pdrr: Vec<f64>,
    next_sample: u64,
    interval: u64,
    controller: Option<ScaleController>,
}

impl Tracker {
    fn new(cfg: &ExperimentConfig, trial: usize, seed: u64, window_dim: usize) -> Result<Self> {
        let controller = match cfg.mode {
            ScaleMode::Ans => Some(ScaleController::new(cfg.ans)?),
            _ => None,
        };
        Ok(Self {
            log: TrialLog::new(trial, seed, cfg.mode.initial_scale()),
            window: InputWindow::new(cfg.pdrr_window, window_dim),
            latest_pdrr: Vec::new(),
            next_sample: 0,
            interval: cfg.pdrr_interval,
            controller,
        })
    }

    fn sample_due(&self, frame: u64) -> bool {
        frame >= self.next_sample
    }

    fn sample(&mut self, critic: &Network, frame: u64, popart: Option<(f64, f64)>) -> Result<()> {
        if !self.window.is_empty() {
            let report = pdrr_report(critic, &self.window.to_matrix())?;
            self.latest_pdrr = report.ratios();
            for (k, r) in self.latest_pdrr.iter().enumerate() {
                self.log.pdrr.push(PdrrRecord {
                    frame,
                    layer: k + 1,
                    pdrr: *r,
                });
            }
        }
        if let Some((sigma, mu)) = popart {
            self.log.popart.push(PopArtRecord { frame, sigma, mu });
        }
        while self.next_sample <= frame {
            self.next_sample += self.interval;
        }
        Ok(())
    }

    fn episode(&mut self, frame: u64, raw: f64, scaled: f64, scale: f64) {
        let episode = self.log.episodes.len();
        self.log.episodes.push(EpisodeRecord {
            trial: self.log.trial,
            episode,
            frame,
            raw_return: raw,
            scaled_return: scaled,
            scale,
            pdrr: self.latest_pdrr.clone(),
        });
    }

    /// Feeds the controller (if any) and returns the multiplier to apply.
    fn ans_step(&mut self, frame: u64, raw: f64, scale: f64) -> Result<Option<f64>> {
        let Some(ctrl) = self.controller.as_mut() else {
            return Ok(None);
        };
        if ctrl.is_stopped() {
            return Ok(None);
        }
        let decision = ctrl.step(raw)?;
        let (m_hat, m_hat_max) = ctrl.last_estimates();
        let c = match decision {
            AnsDecision::Rescale(c) => Some(c),
            _ => None,
        };
        let new_scale = scale * c.unwrap_or(1.0);
        self.log.ans.push(AnsRecord {
            episode: self.log.episodes.len(),
            frame,
            raw_return: raw,
            m_hat,
            m_hat_max,
            scale: new_scale,
            decision: decision.label(),
        });
        if let Some(c) = c {
            self.log.scale_events.push(ScaleEvent {
                frame,
                old_scale: scale,
                new_scale,
                c_applied: c,
            });
        }
        Ok(c)
    }
}

fn run_a2c(cfg: &ExperimentConfig, trial: usize, seed: u64) -> Result<TrialLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_envs = cfg.a2c.n_envs;
    let envs = (0..n_envs)
        .map(|_| cfg.env.build(rng.next_u64()))
        .collect::<Result<Vec<_>>>()?;
    let mut venv = VecEnv::new(envs, cfg.mode.initial_scale())?;
    let obs_dim = venv.observation_dim();
    let mut agent = A2cAgent::new(obs_dim, &venv.action_space(), cfg.a2c.clone(), &mut rng)?;
    agent.set_reward_scale(cfg.mode.initial_scale())?;
    if cfg.mode == ScaleMode::PopArt {
        agent.enable_popart(cfg.popart)?;
    }
    let mut tr = Tracker::new(cfg, trial, seed, obs_dim)?;
    for o in venv.observations() {
        tr.window.push(o);
    }
    let popart_stats = |a: &A2cAgent| a.popart().map(|p| (p.sigma(), p.mu()));

    let mut frame = 0u64;
    if cfg.frames > 0 {
        tr.sample(agent.critic(), 0, popart_stats(&agent))?;
    }
    while frame < cfg.frames {
        let mut rollout = Rollout::new(n_envs);
        let mut finished = Vec::new();
        for _ in 0..cfg.a2c.rollout_len {
            if frame >= cfg.frames {
                break;
            }
            let obs = venv.observations().to_vec();
            let actions = agent.act(&obs, &mut rng)?;
            let step = venv.step(&actions)?;
            frame += n_envs as u64;
            for (e, t) in step.transitions.into_iter().enumerate() {
                tr.window.push(&obs[e]);
                rollout.steps[e].push(RolloutStep {
                    state: obs[e].clone(),
                    action: t.action,
                    reward: t.scaled_reward,
                    terminal: t.terminal,
                    truncated: t.truncated,
                    next_state: t.next_state,
                });
            }
            for f in step.finished {
                tr.episode(frame, f.raw_return, f.scaled_return, venv.scale());
                finished.push(f.raw_return);
            }
        }
        rollout.last_obs = venv.observations().to_vec();
        match agent.update(&rollout) {
            Err(Error::Diverged(msg)) => {
                tr.log.diverged = Some(msg);
                break;
            }
            r => {
                r?;
            }
        }
        if tr.sample_due(frame) {
            tr.sample(agent.critic(), frame, popart_stats(&agent))?;
        }
        if !finished.is_empty() {
            let mean = finished.iter().sum::<f64>() / finished.len() as f64;
            if let Some(c) = tr.ans_step(frame, mean, agent.scale())? {
                agent.rescale(c)?;
                venv.set_scale(agent.scale())?;
            }
        }
    }
    tr.log.frames = frame;
    tr.log.final_scale = agent.scale();
    if cfg.checkpoint {
        tr.log.checkpoint = Some(Checkpoint {
            actor: agent.actor().clone(),
            critic: agent.critic().clone(),
            scale: agent.scale(),
            frames: frame,
            optimizer_steps: agent.critic_optimizer_steps(),
            window: tr.window.to_matrix(),
        });
    }
    Ok(tr.log)
}

fn run_ddpg(cfg: &ExperimentConfig, trial: usize, seed: u64) -> Result<TrialLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = RewardScaled::new(cfg.env.build(rng.next_u64())?, cfg.mode.initial_scale())?;
    let obs_dim = env.observation_dim();
    let space = env.action_space();
    let mut agent = DdpgAgent::new(obs_dim, &space, cfg.ddpg.clone(), &mut rng)?;
    agent.set_reward_scale(cfg.mode.initial_scale())?;
    if cfg.mode == ScaleMode::PopArt {
        agent.enable_popart(cfg.popart)?;
    }
    let mut tr = Tracker::new(cfg, trial, seed, obs_dim + space.dim())?;
    let popart_stats = |a: &DdpgAgent| a.popart().map(|p| (p.sigma(), p.mu()));
    let warmup = cfg.ddpg.warmup.max(cfg.ddpg.batch_size);

    let mut obs = env.reset();
    let (mut raw, mut scaled) = (0.0, 0.0);
    let mut frame = 0u64;
    while frame < cfg.frames {
        let a = agent.act(&obs, true, &mut rng)?;
        let t = env.step(&Action::Continuous(a.clone()))?;
        frame += 1;
        raw += t.reward;
        scaled += t.scaled_reward;
        let mut input = obs.clone();
        input.extend_from_slice(&a);
        tr.window.push(&input);
        agent.remember(StoredTransition {
            state: obs,
            action: a,
            reward: t.reward,
            next_state: t.next_state.clone(),
            terminal: t.terminal,
        })?;
        if agent.replay().len() >= warmup {
            match agent.update(&mut rng) {
                Err(Error::Diverged(msg)) => {
                    tr.log.diverged = Some(msg);
                    break;
                }
                r => {
                    r?;
                }
            }
        }
        if tr.sample_due(frame) {
            tr.sample(agent.critic(), frame, popart_stats(&agent))?;
        }
        if t.done() {
            tr.episode(frame, raw, scaled, env.scale());
            if let Some(c) = tr.ans_step(frame, raw, agent.scale())? {
                agent.rescale(c)?;
                env.set_scale(agent.scale())?;
            }
            raw = 0.0;
            scaled = 0.0;
            obs = env.reset();
        } else {
            obs = t.next_state;
        }
    }
    tr.log.frames = frame;
    tr.log.final_scale = agent.scale();
    if cfg.checkpoint {
        tr.log.checkpoint = Some(Checkpoint {
            actor: agent.actor().clone(),
            critic: agent.critic().clone(),
            scale: agent.scale(),
            frames: frame,
            optimizer_steps: agent.critic_optimizer_steps(),
            window: tr.window.to_matrix(),
        });
    }
    Ok(tr.log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn zero_budget_is_empty() {
        let logs = run_experiment(&small("trials=1\nframes=0\n")).unwrap();
        assert_eq!(logs.len(), 1);
        assert!(logs[0].episodes.is_empty());
        assert_eq!(logs[0].frames, 0);
    }

    #[test]
    fn a2c_runs_are_deterministic() {
        let cfg = small("trials=2\nframes=800\nhidden=8\npdrr.interval=200\nmode=ans\nans.tolerance=2\n");
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].episodes, a[1].episodes);
        for log in &a {
            assert!(log.episodes.windows(2).all(|w| w[0].frame <= w[1].frame));
            assert!(!log.pdrr.is_empty());
        }
    }

    #[test]
    fn ddpg_bandit_runs() {
        let cfg = small("agent=ddpg\nenv=bandit\ntrials=1\nframes=300\nhidden=8\nddpg.warmup=64\nmode=popart\n");
        let logs = run_experiment(&cfg).unwrap();
        assert_eq!(logs[0].episodes.len(), 300);
        assert!(!logs[0].popart.is_empty());
    }
}
