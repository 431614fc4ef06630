use super::{Action, Env, RewardScaled, Transition};
use crate::error::{Error, Result};

/// Episode that ended during a [`VecEnv::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct FinishedEpisode {
    pub env_index: usize,
    pub raw_return: f64,
    pub scaled_return: f64,
    pub length: usize,
}

#[derive(Debug, Clone)]
pub struct VecStep {
    /// One transition per copy; `next_state` is the pre-reset observation.
    pub transitions: Vec<Transition>,
    pub finished: Vec<FinishedEpisode>,
}

/// Synchronized copies of an environment stepped in lockstep. Finished copies
/// are reset immediately.
pub struct VecEnv {
    envs: Vec<RewardScaled<Box<dyn Env>>>,
    obs: Vec<Vec<f64>>,
    raw: Vec<f64>,
    scaled: Vec<f64>,
    lengths: Vec<usize>,
}

impl VecEnv {
    pub fn new(envs: Vec<Box<dyn Env>>, scale: f64) -> Result<Self> {
        if envs.is_empty() {
            return Err(Error::InvalidArgument("VecEnv needs at least one copy".into()));
        }
        let mut wrapped = envs
            .into_iter()
            .map(|e| RewardScaled::new(e, scale))
            .collect::<Result<Vec<_>>>()?;
        let obs = wrapped.iter_mut().map(|e| e.reset()).collect();
        let n = wrapped.len();
        Ok(Self {
            envs: wrapped,
            obs,
            raw: vec![0.0; n],
            scaled: vec![0.0; n],
            lengths: vec![0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.obs
    }

    pub fn observation_dim(&self) -> usize {
        self.envs[0].observation_dim()
    }

    pub fn action_space(&self) -> super::ActionSpace {
        self.envs[0].action_space()
    }

    pub fn scale(&self) -> f64 {
        self.envs[0].scale()
    }

    pub fn set_scale(&mut self, c: f64) -> Result<()> {
        for e in &mut self.envs {
            e.set_scale(c)?;
        }
        Ok(())
    }

    pub fn step(&mut self, actions: &[Action]) -> Result<VecStep> {
        if actions.len() != self.envs.len() {
            return Err(Error::Dimension(format!(
                "{} actions for {} environments",
                actions.len(),
                self.envs.len()
            )));
        }
        let mut transitions = Vec::with_capacity(actions.len());
        let mut finished = Vec::new();
        for (i, (env, a)) in self.envs.iter_mut().zip(actions).enumerate() {
            let t = env.step(a)?;
            self.raw[i] += t.reward;
            self.scaled[i] += t.scaled_reward;
            self.lengths[i] += 1;
            if t.done() {
                finished.push(FinishedEpisode {
                    env_index: i,
                    raw_return: self.raw[i],
                    scaled_return: self.scaled[i],
                    length: self.lengths[i],
                });
                self.raw[i] = 0.0;
                self.scaled[i] = 0.0;
                self.lengths[i] = 0;
                self.obs[i] = env.reset();
            } else {
                self.obs[i] = t.next_state.clone();
            }
            transitions.push(t);
        }
        Ok(VecStep {
            transitions,
            finished,
        })
    }
}
