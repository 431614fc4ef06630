use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionSpace, Env, Transition};
use crate::error::{Error, Result};

const STEP: f64 = 0.1;

/// Point in `[-1, 1]^dim` pushed by actions in `[-1, 1]^dim` (clipped), with
/// reward `-magnitude·‖x' − goal‖`. The goal is the origin; starts are drawn
/// uniformly from the seeded RNG.
#[derive(Debug, Clone)]
pub struct PointMass {
    dim: usize,
    magnitude: f64,
    horizon: usize,
    goal: Vec<f64>,
    pos: Vec<f64>,
    steps: usize,
    done: bool,
    rng: ChaCha8Rng,
}

impl PointMass {
    pub fn new(dim: usize, magnitude: f64, horizon: usize, seed: u64) -> Result<Self> {
        if dim == 0 || horizon == 0 || !magnitude.is_finite() {
            return Err(Error::InvalidArgument(
                "point mass needs dim >= 1, horizon >= 1 and a finite magnitude".into(),
            ));
        }
        Ok(Self {
            dim,
            magnitude,
            horizon,
            goal: vec![0.0; dim],
            pos: vec![0.0; dim],
            steps: 0,
            done: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn goal(&self) -> &[f64] {
        &self.goal
    }

    /// Starts an episode from a chosen position (clipped to the box).
    pub fn reset_to(&mut self, pos: &[f64]) -> Result<Vec<f64>> {
        if pos.len() != self.dim {
            return Err(Error::Dimension(format!(
                "position of length {} for a {}-d point mass",
                pos.len(),
                self.dim
            )));
        }
        self.pos = pos.iter().map(|x| x.clamp(-1.0, 1.0)).collect();
        self.steps = 0;
        self.done = false;
        Ok(self.pos.clone())
    }

    fn distance(&self) -> f64 {
        self.pos
            .iter()
            .zip(&self.goal)
            .map(|(x, g)| (x - g) * (x - g))
            .sum::<f64>()
            .sqrt()
    }
}

impl Env for PointMass {
    fn name(&self) -> String {
        format!("point_mass_{}d(magnitude={})", self.dim, self.magnitude)
    }

    fn observation_dim(&self) -> usize {
        self.dim
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous {
            dim: self.dim,
            low: -1.0,
            high: 1.0,
        }
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self) -> Vec<f64> {
        let start: Vec<f64> = (0..self.dim).map(|_| self.rng.random_range(-1.0..=1.0)).collect();
        self.reset_to(&start).expect("dimension matches")
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let a = match action {
            Action::Continuous(a) if a.len() == self.dim => {
                a.iter().map(|x| if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) }).collect::<Vec<_>>()
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "point mass takes {}-d continuous actions",
                    self.dim
                )))
            }
        };
        let state = self.pos.clone();
        for (p, da) in self.pos.iter_mut().zip(&a) {
            *p = (*p + STEP * da).clamp(-1.0, 1.0);
        }
        let reward = -self.magnitude * self.distance();
        self.steps += 1;
        let truncated = self.steps >= self.horizon;
        self.done = truncated;
        Ok(Transition {
            state,
            action: Action::Continuous(a),
            reward,
            scaled_reward: reward,
            next_state: self.pos.clone(),
            terminal: false,
            truncated,
        })
    }
}
