use super::{Action, ActionSpace, Env, Transition};
use crate::error::{Error, Result};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Deterministic chain of `length` states starting at state 0. `LEFT` moves
/// one state back (staying at 0), `RIGHT` moves forward; taking `RIGHT` in
/// the last state pays `magnitude` and ends the episode. Observations are
/// one-hot state encodings.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    length: usize,
    magnitude: f64,
    horizon: usize,
    state: usize,
    steps: usize,
    done: bool,
}

/// Tabular view of the chain dynamics: `(next_state, reward, terminal)`.
pub trait ChainModel {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn outcome(&self, state: usize, action: usize) -> (usize, f64, bool);
}

impl ChainMdp {
    pub fn new(length: usize, magnitude: f64, horizon: usize) -> Result<Self> {
        if length < 2 || horizon == 0 || !magnitude.is_finite() {
            return Err(Error::InvalidArgument(
                "chain needs length >= 2, horizon >= 1 and a finite magnitude".into(),
            ));
        }
        Ok(Self {
            length,
            magnitude,
            horizon,
            state: 0,
            steps: 0,
            done: true,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.length];
        v[s] = 1.0;
        v
    }
}

impl ChainModel for ChainMdp {
    fn n_states(&self) -> usize {
        self.length
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn outcome(&self, state: usize, action: usize) -> (usize, f64, bool) {
        match action {
            LEFT => (state.saturating_sub(1), 0.0, false),
            _ if state + 1 == self.length => (state, self.magnitude, true),
            _ => (state + 1, 0.0, false),
        }
    }
}

impl Env for ChainMdp {
    fn name(&self) -> String {
        format!("chain(length={}, magnitude={})", self.length, self.magnitude)
    }

    fn observation_dim(&self) -> usize {
        self.length
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(2)
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = 0;
        self.steps = 0;
        self.done = false;
        self.one_hot(0)
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let a = match action {
            Action::Discrete(a) if *a < 2 => *a,
            Action::Discrete(a) => (*a).min(1),
            Action::Continuous(_) => {
                return Err(Error::InvalidArgument("chain takes discrete actions".into()))
            }
        };
        let state = self.one_hot(self.state);
        let (next, reward, terminal) = self.outcome(self.state, a);
        self.state = next;
        self.steps += 1;
        let truncated = !terminal && self.steps >= self.horizon;
        self.done = terminal || truncated;
        Ok(Transition {
            state,
            action: Action::Discrete(a),
            reward,
            scaled_reward: reward,
            next_state: self.one_hot(next),
            terminal,
            truncated,
        })
    }
}

/// Infinite-horizon value iteration with terminal states; returns state values
/// and the greedy policy (ties go to the lower action index).
pub fn value_iteration<M: ChainModel>(
    model: &M,
    gamma: f64,
    reward_scale: f64,
    tol: f64,
) -> (Vec<f64>, Vec<usize>) {
    let n = model.n_states();
    let mut v = vec![0.0; n];
    let q = |v: &[f64], s: usize, a: usize| {
        let (s2, r, term) = model.outcome(s, a);
        reward_scale * r + if term { 0.0 } else { gamma * v[s2] }
    };
    loop {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let best = (0..model.n_actions())
                .map(|a| q(&v, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta <= tol {
            break;
        }
    }
    let policy = (0..n)
        .map(|s| {
            let mut best_a = 0;
            let mut best = f64::NEG_INFINITY;
            for a in 0..model.n_actions() {
                let val = q(&v, s, a);
                if val > best {
                    best = val;
                    best_a = a;
                }
            }
            best_a
        })
        .collect();
    (v, policy)
}
