use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Elementwise nonlinearity applied after a layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Relu,
    /// `max(0,x) + alpha·min(0,x)`.
    LeakyRelu(f64),
    /// `max(0,x) + min(0, alpha·(exp(x)-1))`.
    Elu(f64),
    Tanh,
    Sigmoid,
    Identity,
}

impl ActivationKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::LeakyRelu(a) | ActivationKind::Elu(a) if !(a > 0.0 && a.is_finite()) => {
                Err(Error::InvalidArgument(format!("{self} requires alpha > 0")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::LeakyRelu(a) => x.max(0.0) + a * x.min(0.0),
            ActivationKind::Elu(a) => x.max(0.0) + (a * x.exp_m1()).min(0.0),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Identity => x,
        }
    }

    /// Value and derivative at `x`. The ReLU family uses derivative 0 at
    /// exactly 0 (and the negative-side slope for LeakyReLU).
    #[inline]
    pub fn value_and_grad(&self, x: f64) -> (f64, f64) {
        match *self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            ActivationKind::LeakyRelu(a) => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (a * x, a)
                }
            }
            ActivationKind::Elu(a) => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    let v = a * x.exp_m1();
                    (v, v + a)
                }
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                (s, s * (1.0 - s))
            }
            ActivationKind::Identity => (x, 1.0),
        }
    }

    /// Derivative expressed through the pre-activation; used in backprop.
    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        self.value_and_grad(x).1
    }

    /// `act(c·x) = c·act(x)` for every `c > 0`.
    pub fn is_positively_homogeneous(&self) -> bool {
        matches!(
            self,
            ActivationKind::Relu | ActivationKind::LeakyRelu(_) | ActivationKind::Identity
        )
    }

    pub fn is_relu(&self) -> bool {
        matches!(self, ActivationKind::Relu)
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationKind::Relu => write!(f, "relu"),
            ActivationKind::LeakyRelu(a) => write!(f, "leaky_relu:{a:e}"),
            ActivationKind::Elu(a) => write!(f, "elu:{a:e}"),
            ActivationKind::Tanh => write!(f, "tanh"),
            ActivationKind::Sigmoid => write!(f, "sigmoid"),
            ActivationKind::Identity => write!(f, "identity"),
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    /// Accepts `relu`, `tanh`, `sigmoid`, `identity`, `leaky_relu[:alpha]`
    /// (default 0.01) and `elu[:alpha]` (default 1).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, alpha) = match s.split_once(':') {
            Some((n, a)) => {
                let a: f64 = a
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad activation alpha `{a}`")))?;
                (n.to_string(), Some(a))
            }
            None => (s.clone(), None),
        };
        let kind = match name.as_str() {
            "relu" => ActivationKind::Relu,
            "leaky_relu" | "leakyrelu" => ActivationKind::LeakyRelu(alpha.unwrap_or(0.01)),
            "elu" => ActivationKind::Elu(alpha.unwrap_or(1.0)),
            "tanh" => ActivationKind::Tanh,
            "sigmoid" => ActivationKind::Sigmoid,
            "identity" | "linear" => ActivationKind::Identity,
            other => {
                return Err(Error::InvalidArgument(format!("unknown activation `{other}`")));
            }
        };
        if alpha.is_some()
            && !matches!(kind, ActivationKind::LeakyRelu(_) | ActivationKind::Elu(_))
        {
            return Err(Error::InvalidArgument(format!("`{name}` takes no alpha")));
        }
        kind.validate()?;
        Ok(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_negative_is_dead() {
        assert_eq!(ActivationKind::Relu.value_and_grad(-3.0), (0.0, 0.0));
        assert_eq!(ActivationKind::Relu.value_and_grad(0.0), (0.0, 0.0));
        assert_eq!(ActivationKind::Relu.value_and_grad(2.5), (2.5, 1.0));
    }

    #[test]
    fn leaky_relu_slope() {
        let (v, d) = ActivationKind::LeakyRelu(0.01).value_and_grad(-1.0);
        assert_eq!(v, -0.01);
        assert_eq!(d, 0.01);
    }

    #[test]
    fn elu_at_minus_ln2() {
        let (v, d) = ActivationKind::Elu(1.0).value_and_grad(-std::f64::consts::LN_2);
        // exp(-ln 2) - 1 = -0.5, derivative = value + alpha
        assert!((v + 0.5).abs() < 1e-15);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn elu_derivative_is_value_plus_alpha() {
        for &alpha in &[0.3, 1.0, 2.5] {
            let k = ActivationKind::Elu(alpha);
            for i in 1..200 {
                let x = -(i as f64) * 0.05;
                let (v, d) = k.value_and_grad(x);
                assert_eq!(d, v + alpha);
                // and it is the true derivative
                let h = 1e-6;
                let fd = (k.value(x + h) - k.value(x - h)) / (2.0 * h);
                assert!((fd - d).abs() < 1e-7, "x={x}");
            }
        }
    }

    #[test]
    fn smooth_derivatives_match_finite_differences() {
        for k in [ActivationKind::Tanh, ActivationKind::Sigmoid, ActivationKind::Identity] {
            for i in -20..=20 {
                let x = i as f64 * 0.37;
                let h = 1e-6;
                let fd = (k.value(x + h) - k.value(x - h)) / (2.0 * h);
                assert!((fd - k.grad(x)).abs() < 1e-8, "{k} at {x}");
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for k in [
            ActivationKind::Relu,
            ActivationKind::LeakyRelu(0.2),
            ActivationKind::Elu(1.5),
            ActivationKind::Tanh,
            ActivationKind::Sigmoid,
            ActivationKind::Identity,
        ] {
            assert_eq!(k.to_string().parse::<ActivationKind>().unwrap(), k);
        }
        assert_eq!("elu".parse::<ActivationKind>().unwrap(), ActivationKind::Elu(1.0));
        assert!("leaky_relu:-1".parse::<ActivationKind>().is_err());
        assert!("relu:2".parse::<ActivationKind>().is_err());
        assert!("swish".parse::<ActivationKind>().is_err());
    }
}
