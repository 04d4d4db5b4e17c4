//! Closed-form, data-driven network initialization.
//!
//! Given reference samples `u_k` of one solution component on the
//! collocation grid, a structured net is filled so that its derivative at
//! every grid point matches the right-hand side there. For the rectified
//! sigmoid the neurons tile the axis exactly and the output weights are
//! simply `Δx · f_l(u_k, x_k)`. For the sigmoid the derivative bumps of
//! neighbouring neurons overlap, so each weight is normalized by the local
//! overlap sum `κ_k`.

use crate::activation::{activate, activate_prime, ActivationKind};
use crate::error::{Error, Result};
use crate::net::{ShallowNet, StructuredGrid};
use crate::problems::OdeSystem;
use crate::solver::GridSolution;

/// Half-window (in neurons) of the sigmoid derivative-overlap sum.
/// Terms beyond ten neighbours are below 1e-6 of the total.
pub const DEFAULT_KAPPA_WINDOW: usize = 10;

/// Shape of an initialization: activation, neuron count, and the
/// activation-dependent constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitRecipe {
    pub activation: ActivationKind,
    pub neuron_count: usize,
    pub delta_zeta: f64,
    /// Overlap half-window; meaningful for the sigmoid only.
    pub kappa_window: usize,
}

impl InitRecipe {
    pub fn resigma(neuron_count: usize) -> Self {
        InitRecipe {
            activation: ActivationKind::RectifiedSigmoid,
            neuron_count,
            delta_zeta: ActivationKind::RectifiedSigmoid.half_width(),
            kappa_window: 0,
        }
    }

    pub fn sigmoid(neuron_count: usize, kappa_window: usize) -> Self {
        InitRecipe {
            activation: ActivationKind::Sigmoid,
            neuron_count,
            delta_zeta: ActivationKind::Sigmoid.half_width(),
            kappa_window,
        }
    }

    pub fn for_activation(activation: ActivationKind, neuron_count: usize) -> Self {
        match activation {
            ActivationKind::RectifiedSigmoid => Self::resigma(neuron_count),
            ActivationKind::Sigmoid => Self::sigmoid(neuron_count, DEFAULT_KAPPA_WINDOW),
        }
    }
}

/// Derivative-overlap normalizer for neuron `k` of `n_total`:
/// the sum of `σ'(2Δζ (k - m))` over the window `m = k-L ..= k+L`, clipped
/// to valid neuron indices at the layer boundaries.
pub fn kappa(k: usize, n_total: usize, window: usize, delta_zeta: f64) -> f64 {
    let lo = k.saturating_sub(window);
    let hi = (k + window).min(n_total - 1);
    let mut acc = 0.0;
    for m in lo..=hi {
        let d = k as f64 - m as f64;
        acc += activate_prime(ActivationKind::Sigmoid, 2.0 * delta_zeta * d);
    }
    acc
}

fn check_inputs(component: usize, data: &GridSolution, problem: &OdeSystem) -> Result<()> {
    if data.dimension != problem.dimension() {
        return Err(Error::Dimension(format!(
            "data has {} components, problem has {}",
            data.dimension,
            problem.dimension()
        )));
    }
    if component >= data.dimension {
        return Err(Error::Dimension(format!(
            "component {component} out of range for dimension {}",
            data.dimension
        )));
    }
    if data.grid.origin != 0.0 || !(data.grid.step > 0.0) || data.grid.count < 2 {
        return Err(Error::GridMismatch(format!(
            "initialization needs a uniform grid from t = 0 (origin {}, step {}, count {})",
            data.grid.origin, data.grid.step, data.grid.count
        )));
    }
    Ok(())
}

/// Builds the net for `component` from reference data. One neuron per grid
/// row; the returned net reproduces the initial value at `x = 0` exactly.
pub fn pidd_init(
    component: usize,
    data: &GridSolution,
    problem: &OdeSystem,
    recipe: &InitRecipe,
) -> Result<ShallowNet> {
    check_inputs(component, data, problem)?;
    if recipe.neuron_count != data.grid.count {
        return Err(Error::GridMismatch(format!(
            "recipe wants {} neurons, data has {} rows",
            recipe.neuron_count, data.grid.count
        )));
    }
    let n = data.grid.count;
    let dx = data.grid.step;
    let grid = StructuredGrid::new(recipe.activation, dx, n);
    let mut net = grid.blank_net(recipe.activation);

    let dim = data.dimension;
    let mut f = vec![0.0; dim];
    for k in 0..n {
        let x_k = data.grid.time(k);
        problem.rhs(data.row(k), x_k, &mut f)?;
        net.output_weights[k] = match recipe.activation {
            ActivationKind::RectifiedSigmoid => dx / recipe.delta_zeta * f[component],
            ActivationKind::Sigmoid => {
                let kap = kappa(k, n, recipe.kappa_window, recipe.delta_zeta);
                dx / (2.0 * recipe.delta_zeta) * f[component] / kap
            }
        };
    }

    // anchor the value at x = 0 to the data
    let mut correction = 0.0;
    for k in 0..n {
        correction += net.output_weights[k] * activate(recipe.activation, net.hidden_biases[k]);
    }
    net.output_bias = data.row(0)[component] - correction;
    Ok(net)
}

/// Rectified-sigmoid initialization with the default recipe.
pub fn pidd_init_resigma(
    component: usize,
    data: &GridSolution,
    problem: &OdeSystem,
) -> Result<ShallowNet> {
    pidd_init(
        component,
        data,
        problem,
        &InitRecipe::resigma(data.grid.count),
    )
}

/// Sigmoid initialization with overlap window `kappa_window`.
pub fn pidd_init_sigmoid(
    component: usize,
    data: &GridSolution,
    problem: &OdeSystem,
    kappa_window: usize,
) -> Result<ShallowNet> {
    pidd_init(
        component,
        data,
        problem,
        &InitRecipe::sigmoid(data.grid.count, kappa_window),
    )
}
