//! First-order optimizers over flat parameter slices.

use super::network::{Gradients, Network};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd {
        lr: f64,
        momentum: f64,
        nesterov: bool,
    },
    /// Adam with bias-corrected moments. With `eps_inside_sqrt` the step is
    /// `lr·m̂/sqrt(v̂+eps)`, otherwise the common `lr·m̂/(sqrt(v̂)+eps)`.
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        eps_inside_sqrt: bool,
    },
    RmsProp {
        lr: f64,
        decay: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            eps_inside_sqrt: true,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        OptimizerKind::Sgd {
            lr,
            momentum: 0.0,
            nesterov: false,
        }
    }

    pub fn rmsprop(lr: f64) -> Self {
        OptimizerKind::RmsProp {
            lr,
            decay: 0.99,
            eps: 1e-5,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerKind::Sgd { lr, .. }
            | OptimizerKind::Adam { lr, .. }
            | OptimizerKind::RmsProp { lr, .. } => lr,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match *self {
            OptimizerKind::Sgd { lr, momentum, .. } => {
                if !(lr > 0.0) || !(0.0..1.0).contains(&momentum) {
                    return bad("sgd needs lr > 0 and momentum in [0, 1)");
                }
            }
            OptimizerKind::Adam {
                lr,
                beta1,
                beta2,
                eps,
                ..
            } => {
                if !(lr > 0.0)
                    || !(0.0..1.0).contains(&beta1)
                    || !(0.0..1.0).contains(&beta2)
                    || !(eps >= 0.0)
                {
                    return bad("adam needs lr > 0, betas in [0, 1) and eps >= 0");
                }
            }
            OptimizerKind::RmsProp { lr, decay, eps } => {
                if !(lr > 0.0) || !(0.0..1.0).contains(&decay) || !(eps > 0.0) {
                    return bad("rmsprop needs lr > 0, decay in [0, 1) and eps > 0");
                }
            }
        }
        Ok(())
    }
}

/// Optimizer state: the kind, the step counter, and moment buffers shaped like
/// the parameter slices they were first used with.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    t: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind) -> Result<Self> {
        kind.validate()?;
        Ok(Self {
            kind,
            t: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn set_lr(&mut self, lr: f64) {
        match &mut self.kind {
            OptimizerKind::Sgd { lr: l, .. }
            | OptimizerKind::Adam { lr: l, .. }
            | OptimizerKind::RmsProp { lr: l, .. } => *l = lr,
        }
    }

    /// Drops moment buffers and the step counter.
    pub fn reset(&mut self) {
        self.t = 0;
        self.first.clear();
        self.second.clear();
    }

    fn ensure_buffers(&mut self, shapes: &[usize]) -> Result<()> {
        if self.first.is_empty() {
            self.first = shapes.iter().map(|&n| vec![0.0; n]).collect();
            self.second = shapes.iter().map(|&n| vec![0.0; n]).collect();
            return Ok(());
        }
        if self.first.len() != shapes.len()
            || self.first.iter().zip(shapes).any(|(b, &n)| b.len() != n)
        {
            return Err(Error::Dimension(
                "parameter shapes changed since the optimizer was created".into(),
            ));
        }
        Ok(())
    }

    /// One update of `params` in place. Non-finite gradients reject the step
    /// without touching parameters or state.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len()
            || params.iter().zip(grads).any(|(p, g)| p.len() != g.len())
        {
            return Err(Error::Dimension("parameter and gradient shapes differ".into()));
        }
        if grads.iter().any(|g| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("gradient"));
        }
        let shapes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        self.ensure_buffers(&shapes)?;
        self.t += 1;

        match self.kind {
            OptimizerKind::Sgd {
                lr,
                momentum,
                nesterov,
            } => {
                for ((p, g), vel) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for ((p, &g), v) in p.iter_mut().zip(*g).zip(vel.iter_mut()) {
                        if momentum == 0.0 {
                            *p -= lr * g;
                        } else {
                            *v = momentum * *v + g;
                            let d = if nesterov { g + momentum * *v } else { *v };
                            *p -= lr * d;
                        }
                    }
                }
            }
            OptimizerKind::Adam {
                lr,
                beta1,
                beta2,
                eps,
                eps_inside_sqrt,
            } => {
                let t = self.t as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for (((p, &g), m), v) in p.iter_mut().zip(*g).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        let m_hat = *m / c1;
                        let v_hat = *v / c2;
                        let denom = if eps_inside_sqrt {
                            (v_hat + eps).sqrt()
                        } else {
                            v_hat.sqrt() + eps
                        };
                        if denom > 0.0 {
                            *p -= lr * m_hat / denom;
                        }
                    }
                }
            }
            OptimizerKind::RmsProp { lr, decay, eps } => {
                for ((p, g), acc) in params.iter_mut().zip(grads).zip(&mut self.second) {
                    for ((p, &g), a) in p.iter_mut().zip(*g).zip(acc.iter_mut()) {
                        *a = decay * *a + (1.0 - decay) * g * g;
                        *p -= lr * g / (a.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn step_network(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        let g = grads.slices();
        let mut p = net.param_slices_mut();
        self.step(&mut p, &g)
    }
}
