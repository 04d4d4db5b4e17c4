//! Scalar activation functions and their exact derivatives.
//!
//! Two activations are supported: the logistic sigmoid and the rectified
//! sigmoid, a unit ramp clamped to `[0, 1]` that equals
//! `[ReLU(x + 1) - ReLU(x - 1)] / 2`. The rectified sigmoid saturates
//! exactly, which is what the fast network evaluators exploit.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivationKind {
    #[serde(rename = "sigmoid")]
    Sigmoid,
    #[serde(rename = "resigma")]
    RectifiedSigmoid,
}

impl ActivationKind {
    /// Half-width `Δζ` of one neuron's active region in argument units.
    ///
    /// For the rectified sigmoid the ramp spans exactly `[-1, 1]`, so the
    /// half-width is 1. For the sigmoid we use `ln(2 + sqrt(3)) / 2`, the
    /// spacing at which one neuron's derivative bump hands over to its
    /// neighbours with near-unit total mass.
    pub fn half_width(self) -> f64 {
        match self {
            ActivationKind::Sigmoid => (2.0 + 3.0_f64.sqrt()).ln() / 2.0,
            ActivationKind::RectifiedSigmoid => 1.0,
        }
    }

    /// Argument magnitude beyond which the activation is treated as fully
    /// saturated. Exact (1) for the rectified sigmoid; for the sigmoid, 37
    /// is where `σ(x)` is indistinguishable from 0 or 1 in f64.
    pub fn saturation_argument(self) -> f64 {
        match self {
            ActivationKind::Sigmoid => 37.0,
            ActivationKind::RectifiedSigmoid => 1.0,
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationKind::Sigmoid => write!(f, "sigmoid"),
            ActivationKind::RectifiedSigmoid => write!(f, "resigma"),
        }
    }
}

impl FromStr for ActivationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "resigma" => Ok(ActivationKind::RectifiedSigmoid),
            other => Err(format!(
                "unknown activation '{other}' (expected 'sigmoid' or 'resigma')"
            )),
        }
    }
}

/// Activation value. Total over finite inputs; result is always in `[0, 1]`.
pub fn activate(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        ActivationKind::RectifiedSigmoid => {
            if x < -1.0 {
                0.0
            } else if x <= 1.0 {
                0.5 * (x + 1.0)
            } else {
                1.0
            }
        }
    }
}

/// Exact derivative of [`activate`] with respect to its argument.
///
/// The rectified sigmoid's derivative at the kinks `x = ±1` is defined as
/// 1/2 (the ramp-side value) so that grid-point identities stay exact when
/// an argument lands exactly on a kink.
pub fn activate_prime(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Sigmoid => {
            let s = activate(kind, x);
            s * (1.0 - s)
        }
        ActivationKind::RectifiedSigmoid => {
            if x.abs() <= 1.0 {
                0.5
            } else {
                0.0
            }
        }
    }
}
