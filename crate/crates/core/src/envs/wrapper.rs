use super::{Action, ActionSpace, Env, Transition};
use crate::error::{Error, Result};

/// Multiplies every reward by `c` while leaving dynamics alone. The raw reward
/// stays in [`Transition::reward`]; nested wrappers compose by multiplying
/// their scales before the single multiplication of the raw reward.
#[derive(Debug, Clone)]
pub struct RewardScaled<E> {
    inner: E,
    scale: f64,
}

fn check(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("reward scale must be positive, got {c}")));
    }
    Ok(())
}

impl<E: Env> RewardScaled<E> {
    pub fn new(inner: E, c: f64) -> Result<Self> {
        check(c)?;
        Ok(Self { inner, scale: c })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, c: f64) -> Result<()> {
        check(c)?;
        self.scale = c;
        Ok(())
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut E {
        &mut self.inner
    }
}

impl<E: Env> Env for RewardScaled<E> {
    fn name(&self) -> String {
        format!("{}*{}", self.inner.name(), self.scale)
    }

    fn observation_dim(&self) -> usize {
        self.inner.observation_dim()
    }

    fn action_space(&self) -> ActionSpace {
        self.inner.action_space()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn reset(&mut self) -> Vec<f64> {
        self.inner.reset()
    }

    fn step(&mut self, action: &Action) -> Result<Transition> {
        let mut t = self.inner.step(action)?;
        t.scaled_reward = t.reward * self.reward_scale();
        Ok(t)
    }

    fn reward_scale(&self) -> f64 {
        self.inner.reward_scale() * self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::ChainMdp;

    fn rollout<E: Env>(env: &mut E) -> Vec<Transition> {
        env.reset();
        let mut out = Vec::new();
        loop {
            let t = env.step(&Action::Discrete(1)).unwrap();
            let done = t.done();
            out.push(t);
            if done {
                return out;
            }
        }
    }

    #[test]
    fn unit_scale_is_transparent() {
        let mut raw = ChainMdp::new(4, 0.01, 10).unwrap();
        let mut wrapped = RewardScaled::new(ChainMdp::new(4, 0.01, 10).unwrap(), 1.0).unwrap();
        assert_eq!(rollout(&mut raw), rollout(&mut wrapped));
    }

    #[test]
    fn ten_times_a_hundredth() {
        let mut env = RewardScaled::new(ChainMdp::new(2, 0.01, 10).unwrap(), 10.0).unwrap();
        let last = rollout(&mut env).pop().unwrap();
        assert_eq!(last.reward, 0.01);
        assert_eq!(last.scaled_reward, 0.1);
    }

    #[test]
    fn nested_equals_product() {
        let chain = || ChainMdp::new(3, 0.37, 10).unwrap();
        let mut nested = RewardScaled::new(RewardScaled::new(chain(), 2.0).unwrap(), 3.0).unwrap();
        let mut single = RewardScaled::new(chain(), 6.0).unwrap();
        assert_eq!(rollout(&mut nested), rollout(&mut single));
    }

    #[test]
    fn non_positive_scale_rejected() {
        assert!(RewardScaled::new(ChainMdp::new(3, 1.0, 10).unwrap(), 0.0).is_err());
        assert!(RewardScaled::new(ChainMdp::new(3, 1.0, 10).unwrap(), -2.0).is_err());
        let mut ok = RewardScaled::new(ChainMdp::new(3, 1.0, 10).unwrap(), 1.0).unwrap();
        assert!(ok.set_scale(f64::NAN).is_err());
    }
}
