//! Single-hidden-layer scalar networks: storage, reference evaluation, and a
//! saturation-aware fast evaluator for grid-structured nets.
//!
//! A [`ShallowNet`] computes
//!
//! ```text
//! u(x) = b2 + sum_k w2[k] * act(w1[k] * x + b1[k])
//! ```
//!
//! Nets produced by the initializers in this crate are *grid structured*:
//! all hidden weights equal `2Δζ/Δx` and the biases are `-2kΔζ`, so neuron
//! `k`'s active region is centred on grid point `x_k = kΔx`. On such nets
//! evaluation reduces to a prefix sum of saturated neurons plus a handful of
//! partially active ones ([`FastEvaluator`]).

use crate::activation::{activate, activate_prime, ActivationKind};
use crate::error::{Error, Result};
use crate::util::CompensatedSum;

/// Fully connected net with one hidden layer and scalar input/output.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowNet {
    pub activation: ActivationKind,
    pub hidden_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl ShallowNet {
    pub fn new(
        activation: ActivationKind,
        hidden_weights: Vec<f64>,
        hidden_biases: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    ) -> Result<Self> {
        let n = hidden_weights.len();
        if n == 0 || hidden_biases.len() != n || output_weights.len() != n {
            return Err(Error::Dimension(format!(
                "parameter containers must share a non-zero length (got {}, {}, {})",
                n,
                hidden_biases.len(),
                output_weights.len()
            )));
        }
        let finite = hidden_weights
            .iter()
            .chain(&hidden_biases)
            .chain(&output_weights)
            .all(|v| v.is_finite())
            && output_bias.is_finite();
        if !finite {
            return Err(Error::Numerical("non-finite network parameter".into()));
        }
        Ok(Self {
            activation,
            hidden_weights,
            hidden_biases,
            output_weights,
            output_bias,
        })
    }

    pub fn neuron_count(&self) -> usize {
        self.output_weights.len()
    }

    /// Plain left-to-right summation over all neurons. This is the reference
    /// semantics every other evaluator is checked against.
    pub fn eval_naive(&self, x: f64) -> f64 {
        let mut acc = self.output_bias;
        for k in 0..self.neuron_count() {
            acc += self.output_weights[k]
                * activate(
                    self.activation,
                    self.hidden_weights[k] * x + self.hidden_biases[k],
                );
        }
        acc
    }

    /// Derivative with respect to the input.
    pub fn eval_deriv(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.neuron_count() {
            acc += self.hidden_weights[k]
                * self.output_weights[k]
                * activate_prime(
                    self.activation,
                    self.hidden_weights[k] * x + self.hidden_biases[k],
                );
        }
        acc
    }
}

/// Uniform collocation grid a structured net is built on.
///
/// Grid point `m` sits at `origin + m * step`; `half_width` is the
/// activation half-width `Δζ` used for the hidden parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredGrid {
    pub origin: f64,
    pub step: f64,
    pub count: usize,
    pub half_width: f64,
}

impl StructuredGrid {
    pub fn new(activation: ActivationKind, step: f64, count: usize) -> Self {
        StructuredGrid {
            origin: 0.0,
            step,
            count,
            half_width: activation.half_width(),
        }
    }

    pub fn point(&self, m: usize) -> f64 {
        self.origin + m as f64 * self.step
    }

    /// Hidden-layer parameters every structured net on this grid carries.
    pub(crate) fn hidden_weight(&self) -> f64 {
        2.0 * self.half_width / self.step
    }

    pub(crate) fn hidden_bias(&self, k: usize) -> f64 {
        -2.0 * k as f64 * self.half_width
    }

    /// Fresh net on this grid with zeroed output layer.
    pub(crate) fn blank_net(&self, activation: ActivationKind) -> ShallowNet {
        let w1 = self.hidden_weight();
        ShallowNet {
            activation,
            hidden_weights: vec![w1; self.count],
            hidden_biases: (0..self.count).map(|k| self.hidden_bias(k)).collect(),
            output_weights: vec![0.0; self.count],
            output_bias: 0.0,
        }
    }
}

/// O(1)-per-point evaluator for grid-structured nets.
///
/// Holds a compensated prefix sum of the output weights. At a query point,
/// neurons left of the active band are saturated at 1 (read from the
/// prefix), neurons right of it contribute 0, and only the band itself is
/// evaluated honestly — a single neuron for the rectified sigmoid, a few
/// tens for the sigmoid.
///
/// The prefix is a snapshot: it must be rebuilt if the net's output weights
/// change.
#[derive(Debug, Clone)]
pub struct FastEvaluator {
    grid: StructuredGrid,
    activation: ActivationKind,
    /// prefix[j] = sum of output_weights[..j]; length count + 1.
    prefix: Vec<f64>,
    /// Active band half-width in grid-cell units.
    band: f64,
}

impl FastEvaluator {
    /// Validates that `net` is structured on `grid` and snapshots its
    /// output-weight prefix sums.
    pub fn new(net: &ShallowNet, grid: &StructuredGrid) -> Result<Self> {
        if grid.origin != 0.0 {
            return Err(Error::GridMismatch(format!(
                "structured nets are anchored at origin 0 (got {})",
                grid.origin
            )));
        }
        if !(grid.step > 0.0) || grid.count == 0 {
            return Err(Error::GridMismatch(format!(
                "invalid grid: step {} count {}",
                grid.step, grid.count
            )));
        }
        if net.neuron_count() != grid.count {
            return Err(Error::GridMismatch(format!(
                "net has {} neurons, grid has {} points",
                net.neuron_count(),
                grid.count
            )));
        }
        if net.activation.half_width() != grid.half_width {
            return Err(Error::GridMismatch(
                "grid half-width does not match the net's activation".into(),
            ));
        }
        let w1 = grid.hidden_weight();
        for k in 0..grid.count {
            if net.hidden_weights[k] != w1 || net.hidden_biases[k] != grid.hidden_bias(k) {
                return Err(Error::GridMismatch(format!(
                    "hidden parameters of neuron {k} do not match the grid"
                )));
            }
        }
        let mut prefix = Vec::with_capacity(grid.count + 1);
        let mut acc = CompensatedSum::new();
        prefix.push(0.0);
        for &w in &net.output_weights {
            acc.add(w);
            prefix.push(acc.value());
        }
        Ok(FastEvaluator {
            grid: *grid,
            activation: net.activation,
            prefix,
            band: net.activation.saturation_argument() / (2.0 * grid.half_width),
        })
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    /// Total of all output weights (the fully saturated tail).
    pub fn saturated_sum(&self) -> f64 {
        self.prefix[self.grid.count]
    }

    /// Value of `net` at `x`. `net` must be the net this evaluator was built
    /// from, unchanged.
    pub fn eval(&self, net: &ShallowNet, x: f64) -> f64 {
        debug_assert_eq!(net.neuron_count() + 1, self.prefix.len());
        debug_assert_eq!(net.activation, self.activation);
        let n = self.grid.count;
        let p = x / self.grid.step;
        // neurons j <= p - band are saturated at 1
        let sat = ((p - self.band).floor() + 1.0).clamp(0.0, n as f64) as usize;
        let mut acc = net.output_bias + self.prefix[sat];
        // active band: p - band < j < p + band
        let lo = ((p - self.band).floor() as i64 + 1).max(0) as usize;
        let hi_f = (p + self.band).ceil() - 1.0;
        if hi_f >= 0.0 {
            let hi = (hi_f as usize).min(n - 1);
            let w1 = net.hidden_weights[0];
            for j in lo..=hi {
                acc += net.output_weights[j]
                    * activate(self.activation, w1 * x + net.hidden_biases[j]);
            }
        }
        acc
    }
}
