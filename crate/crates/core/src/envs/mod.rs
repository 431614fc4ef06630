//! Toy environments and the reward-scaling wrapper.

mod bandit;
mod chain;
mod point_mass;
mod vec_env;
mod wrapper;

use std::fmt;
use std::str::FromStr;

pub use bandit::Bandit;
pub use chain::{value_iteration, ChainMdp, ChainModel, LEFT, RIGHT};
pub use point_mass::PointMass;
pub use vec_env::{FinishedEpisode, VecEnv, VecStep};
pub use wrapper::RewardScaled;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    Discrete(usize),
    /// Box `[low, high]^dim`.
    Continuous { dim: usize, low: f64, high: f64 },
}

impl ActionSpace {
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete(_) => 1,
            ActionSpace::Continuous { dim, .. } => *dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    /// Numeric encoding used when actions are fed to a network.
    pub fn as_vec(&self) -> Vec<f64> {
        match self {
            Action::Discrete(a) => vec![*a as f64],
            Action::Continuous(v) => v.clone(),
        }
    }
}

/// One environment step. `reward` is the raw reward; `scaled_reward` is the
/// reward after every wrapper's scale has been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub scaled_reward: f64,
    pub next_state: Vec<f64>,
    /// Reached a terminal state (no bootstrapping).
    pub terminal: bool,
    /// Hit the horizon without terminating.
    pub truncated: bool,
}

impl Transition {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub trait Env: Send {
    fn name(&self) -> String;
    fn observation_dim(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    fn horizon(&self) -> usize;
    fn reset(&mut self) -> Vec<f64>;
    /// Errors if the episode is over (or was never started).
    fn step(&mut self, action: &Action) -> Result<Transition>;
    /// Product of all reward scales applied on top of the raw rewards.
    fn reward_scale(&self) -> f64 {
        1.0
    }
}

impl Env for Box<dyn Env> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn observation_dim(&self) -> usize {
        (**self).observation_dim()
    }
    fn action_space(&self) -> ActionSpace {
        (**self).action_space()
    }
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn reset(&mut self) -> Vec<f64> {
        (**self).reset()
    }
    fn step(&mut self, action: &Action) -> Result<Transition> {
        (**self).step(action)
    }
    fn reward_scale(&self) -> f64 {
        (**self).reward_scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Chain,
    PointMass1d,
    PointMass2d,
    Bandit,
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvKind::Chain => "chain",
            EnvKind::PointMass1d => "point_mass_1d",
            EnvKind::PointMass2d => "point_mass_2d",
            EnvKind::Bandit => "bandit",
        })
    }
}

impl FromStr for EnvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "chain" | "chain_mdp" => EnvKind::Chain,
            "point_mass_1d" | "point_mass" => EnvKind::PointMass1d,
            "point_mass_2d" => EnvKind::PointMass2d,
            "bandit" => EnvKind::Bandit,
            other => return Err(Error::InvalidArgument(format!("unknown environment `{other}`"))),
        })
    }
}

/// Environment selection as written in experiment configs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// Raw reward magnitude.
    pub magnitude: f64,
    /// Number of chain states (chain only).
    pub length: usize,
    pub horizon: usize,
}

impl Default for EnvSpec {
    fn default() -> Self {
        Self {
            kind: EnvKind::Chain,
            magnitude: 1.0,
            length: 5,
            horizon: 20,
        }
    }
}

impl EnvSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn Env>> {
        Ok(match self.kind {
            EnvKind::Chain => Box::new(ChainMdp::new(self.length, self.magnitude, self.horizon)?),
            EnvKind::PointMass1d => {
                Box::new(PointMass::new(1, self.magnitude, self.horizon, seed)?)
            }
            EnvKind::PointMass2d => {
                Box::new(PointMass::new(2, self.magnitude, self.horizon, seed)?)
            }
            EnvKind::Bandit => Box::new(Bandit::new(self.magnitude, 0.3)?),
        })
    }
}
