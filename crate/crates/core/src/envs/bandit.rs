use super::{Action, ActionSpace, Env, Transition};
use crate::error::{Error, Result};

/// One-step continuous bandit: constant observation `[1]`, action in
/// `[-1, 1]`, reward `magnitude·(1 − (a − target)²)`.
#[derive(Debug, Clone)]
pub struct Bandit {
    magnitude: f64,
    target: f64,
    done: bool,
}

impl Bandit {
    pub fn new(magnitude: f64, target: f64) -> Result<Self> {
        if !magnitude.is_finite() || !(-1.0..=1.0).contains(&target) {
            return Err(Error::InvalidArgument(
                "bandit needs a finite magnitude and target in [-1, 1]".into(),
            ));
        }
        Ok(Self {
            magnitude,
            target,
            done: true,
        })
    }

    pub fn expected_reward(&self, a: f64) -> f64 {
        let a = a.clamp(-1.0, 1.0);
        self.magnitude * (1.0 - (a - self.target).powi(2))
    }

    pub fn target(&self) -> f64 {
        self.target
    }
}

impl Env for Bandit {
    fn name(&self) -> String {
        format!("bandit(magnitude={}, target={})", self.magnitude, self.target)
    }

    fn observation_dim(&self) -> usize {
        1
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous {
            dim: 1,
            low: -1.0,
            high: 1.0,
        }
    }

    fn horizon(&self) -> usize {
        1
    }

    fn reset(&mut self) -> Vec<f64> {
        self.done = false;
        vec![1.0]
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let a = match action {
            Action::Continuous(a) if a.len() == 1 => a[0].clamp(-1.0, 1.0),
            _ => return Err(Error::InvalidArgument("bandit takes a 1-d action".into())),
        };
        self.done = true;
        let reward = self.expected_reward(a);
        Ok(Transition {
            state: vec![1.0],
            action: Action::Continuous(vec![a]),
            reward,
            scaled_reward: reward,
            next_state: vec![1.0],
            terminal: true,
            truncated: false,
        })
    }
}
