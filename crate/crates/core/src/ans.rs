//! Adaptive network scaling controller.
//!
//! The controller watches a bias-corrected exponential moving average of
//! episode returns. When the best estimate of the current phase has not
//! improved for more than `tolerance` episodes the phase ends: the scale is
//! multiplied by `c_inc` while phases keep improving on the previous one, the
//! first non-improving phase switches to `c_dec`, and a non-improving phase
//! while already decreasing stops the search.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnsParams {
    /// Phase ends once `t_stop > tolerance`.
    pub tolerance: u64,
    pub c_inc: f64,
    pub c_dec: f64,
    /// EMA decay.
    pub beta: f64,
}

impl Default for AnsParams {
    fn default() -> Self {
        Self {
            tolerance: 100,
            c_inc: 8.0,
            c_dec: 0.9,
            beta: 0.9,
        }
    }
}

impl AnsParams {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.c_inc > 1.0 && self.c_inc.is_finite()) {
            errs.push(format!("c_inc must be > 1, got {}", self.c_inc));
        }
        if !(self.c_dec > 0.0 && self.c_dec < 1.0) {
            errs.push(format!("c_dec must be in (0, 1), got {}", self.c_dec));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            errs.push(format!("beta must be in (0, 1), got {}", self.beta));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnsDecision {
    Continue,
    /// Multiply the reward scale (and the critic's output) by this factor.
    Rescale(f64),
    Stop,
}

impl AnsDecision {
    pub fn label(&self) -> String {
        match self {
            AnsDecision::Continue => "continue".into(),
            AnsDecision::Rescale(c) => format!("rescale:{c}"),
            AnsDecision::Stop => "stop".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaleController {
    params: AnsParams,
    t: u64,
    t_stop: u64,
    m_hat: f64,
    m_hat_max: f64,
    r_prev: f64,
    c: f64,
    reverse: bool,
    stopped: bool,
    scale: f64,
    n_rescales: usize,
    last: (f64, f64),
}

impl ScaleController {
    pub fn new(params: AnsParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            t: 0,
            t_stop: 0,
            m_hat: f64::NAN,
            m_hat_max: f64::NEG_INFINITY,
            r_prev: f64::NEG_INFINITY,
            c: params.c_inc,
            reverse: false,
            stopped: false,
            scale: 1.0,
            n_rescales: 0,
            last: (f64::NAN, f64::NEG_INFINITY),
        })
    }

    pub fn params(&self) -> &AnsParams {
        &self.params
    }

    /// Cumulative scale: the product of every emitted multiplier.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_reversed(&self) -> bool {
        self.reverse
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    pub fn n_rescales(&self) -> usize {
        self.n_rescales
    }

    /// Last unbiased estimate (NaN before the first episode of a phase).
    pub fn m_hat(&self) -> f64 {
        self.m_hat
    }

    pub fn m_hat_max(&self) -> f64 {
        self.m_hat_max
    }

    /// `(m̂, m̂_max)` as they stood when the last decision was taken, before
    /// any phase reset.
    pub fn last_estimates(&self) -> (f64, f64) {
        self.last
    }

    pub fn r_prev(&self) -> f64 {
        self.r_prev
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn t_stop(&self) -> u64 {
        self.t_stop
    }

    /// Advances the phase counter and folds `ret` into the EMA, returning the
    /// bias-corrected estimate `m_t / (1 - beta^t)`.
    ///
    /// The estimate is carried directly as `m̂_t = m̂_{t-1} + k_t (R_t - m̂_{t-1})`
    /// with `k_t = (1 - beta) / (1 - beta^t)`, which is the same sequence but
    /// keeps `m̂_1 = R_1` and constant streams exact in floating point.
    pub fn ema_update(&mut self, ret: f64) -> Result<f64> {
        if !ret.is_finite() {
            return Err(Error::NonFinite("episode return"));
        }
        let beta = self.params.beta;
        self.t += 1;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let k = (1.0 - beta) / (1.0 - beta.powi(t));
        let prev = if self.t == 1 { 0.0 } else { self.m_hat };
        self.m_hat = prev + k * (ret - prev);
        Ok(self.m_hat)
    }

    /// Feeds one episode return and returns the controller's decision.
    pub fn step(&mut self, ret: f64) -> Result<AnsDecision> {
        if self.stopped {
            return Err(Error::ControllerStopped);
        }
        if !ret.is_finite() {
            return Err(Error::NonFinite("episode return"));
        }
        self.t_stop += 1;
        let m_hat = self.ema_update(ret)?;
        if m_hat > self.m_hat_max {
            self.m_hat_max = m_hat;
            self.t_stop = 0;
        }
        self.last = (m_hat, self.m_hat_max);
        if self.t_stop <= self.params.tolerance {
            return Ok(AnsDecision::Continue);
        }

        let not_better = self.m_hat_max <= self.r_prev;
        if self.reverse && not_better {
            self.stopped = true;
            return Ok(AnsDecision::Stop);
        }
        if !self.reverse && not_better {
            self.c = self.params.c_dec;
            self.reverse = true;
        }
        let c = self.c;
        self.scale *= c;
        self.n_rescales += 1;
        self.r_prev = self.m_hat_max;
        self.t = 0;
        self.t_stop = 0;
        self.m_hat = f64::NAN;
        self.m_hat_max = f64::NEG_INFINITY;
        Ok(AnsDecision::Rescale(c))
    }
}

/// Upper bound on scale changes, `ceil(log_cinc s_max) - floor(log_cdec c_inc)`.
pub fn max_steps_bound(c_inc: f64, c_dec: f64, s_max: f64) -> Result<u64> {
    if !(c_inc > 1.0) || !(c_dec > 0.0 && c_dec < 1.0) || !(s_max >= 1.0) {
        return Err(Error::InvalidArgument(
            "max_steps_bound needs c_inc > 1, 0 < c_dec < 1, s_max >= 1".into(),
        ));
    }
    let up = log_ceil(s_max, c_inc);
    let down = (c_inc.ln() / c_dec.ln()).floor();
    Ok((up - down) as u64)
}

/// `ceil(log_base x)`, snapping values within rounding of an integer.
fn log_ceil(x: f64, base: f64) -> f64 {
    let v = x.ln() / base.ln();
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v.ceil()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn controller(tolerance: u64) -> ScaleController {
        ScaleController::new(AnsParams {
            tolerance,
            ..AnsParams::default()
        })
        .unwrap()
    }

    #[test]
    fn first_estimate_is_exact() {
        for beta in [0.1, 0.5, 0.9, 0.999] {
            let mut c = ScaleController::new(AnsParams {
                beta,
                ..AnsParams::default()
            })
            .unwrap();
            assert_eq!(c.ema_update(10.0).unwrap(), 10.0);
        }
    }

    #[test]
    fn ema_two_values() {
        let mut c = controller(5);
        c.ema_update(10.0).unwrap();
        let m = c.ema_update(20.0).unwrap();
        // m2 = 0.9*1 + 0.1*20 = 2.9; m̂ = 2.9 / 0.19
        assert!((m - 2.9 / 0.19).abs() < 1e-12);
        assert!((m - 15.263157894736842).abs() < 1e-12);
    }

    #[test]
    fn constant_stream_is_fixed_point() {
        let mut c = controller(1000);
        for _ in 0..500 {
            let m = c.ema_update(3.25).unwrap();
            assert!((m - 3.25).abs() <= 1e-12 * 3.25);
        }
    }

    #[test]
    fn non_finite_return_rejected() {
        let mut c = controller(5);
        assert!(c.ema_update(f64::NAN).is_err());
        assert!(c.step(f64::INFINITY).is_err());
    }

    #[test]
    fn first_plateau_scales_up() {
        let mut c = controller(3);
        let mut decisions = Vec::new();
        for r in [1.0, 0.0, 0.0, 0.0, 0.0] {
            decisions.push(c.step(r).unwrap());
        }
        // m̂_max set on episode 1, t_stop reaches 4 > 3 on episode 5
        assert_eq!(&decisions[..4], &[AnsDecision::Continue; 4]);
        assert_eq!(decisions[4], AnsDecision::Rescale(8.0));
        assert_eq!(c.scale(), 8.0);
        assert_eq!(c.r_prev(), 1.0);
    }

    #[test]
    fn worse_phase_reverses_then_stops() {
        let mut c = controller(2);
        let run = |c: &mut ScaleController, r: f64| loop {
            match c.step(r).unwrap() {
                AnsDecision::Continue => continue,
                d => return d,
            }
        };
        assert_eq!(run(&mut c, 5.0), AnsDecision::Rescale(8.0));
        assert_eq!(run(&mut c, 4.0), AnsDecision::Rescale(0.9));
        assert!(c.is_reversed());
        assert_eq!(run(&mut c, 3.0), AnsDecision::Stop);
        assert!(c.is_stopped());
        assert!(matches!(c.step(1.0), Err(Error::ControllerStopped)));
        assert!((c.scale() - 7.2).abs() < 1e-12);
    }

    #[test]
    fn tie_is_not_improvement() {
        let mut c = controller(1);
        assert_eq!(c.step(2.0).unwrap(), AnsDecision::Continue);
        assert_eq!(c.step(2.0).unwrap(), AnsDecision::Continue);
        assert_eq!(c.step(2.0).unwrap(), AnsDecision::Rescale(8.0));
    }

    #[test]
    fn bound_values() {
        assert_eq!(max_steps_bound(8.0, 0.9, 64.0).unwrap(), 22);
        assert_eq!(max_steps_bound(2.0, 0.9, 2.0).unwrap(), 8);
        // s_max = c_inc: first term is 1
        let down = (8f64.ln() / 0.9f64.ln()).floor() as i64;
        assert_eq!(max_steps_bound(8.0, 0.9, 8.0).unwrap() as i64, 1 - down);
        assert!(max_steps_bound(1.0, 0.9, 8.0).is_err());
    }

    #[test]
    fn invalid_params() {
        assert!(ScaleController::new(AnsParams {
            c_inc: 0.5,
            ..AnsParams::default()
        })
        .is_err());
        assert!(ScaleController::new(AnsParams {
            c_dec: 1.5,
            ..AnsParams::default()
        })
        .is_err());
        assert!(ScaleController::new(AnsParams {
            beta: 1.0,
            ..AnsParams::default()
        })
        .is_err());
    }
}
