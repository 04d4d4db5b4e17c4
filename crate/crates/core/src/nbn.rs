//! Gradient-free neuron-by-neuron training and the time-window chain.
//!
//! Training is unsupervised: no reference data enters. A window's nets are
//! seeded from the right-hand side frozen at the window's initial state,
//! then swept left to right for a few epochs. Each visit to neuron `k`
//! reads the running value of the net at grid point `x_k` (all weights left
//! of `k` already updated this sweep, plus half of neuron `k`'s own weight —
//! its ramp midpoint), evaluates the right-hand side there, and overwrites
//! the weight:
//!
//! ```text
//! W2[k] <- Δx · f_l(u(x_k), x_k)
//! ```
//!
//! The sweep is a fixed-point iteration; at convergence consecutive grid
//! values satisfy the trapezoid relation
//! `u(x_{k+1}) - u(x_k) = (W2[k] + W2[k+1]) / 2`, anchored at the window's
//! initial state. The update never evaluates the activation, so the fitted
//! weights are shared by both readouts; the activation enters through the
//! hidden parameters and the evaluation of the finished nets.
//!
//! The window grid places its last point exactly on the window boundary
//! (`Δx = len / (N-1)`), so the handoff state for the next window is the
//! trained value at a collocation point, not an extrapolation.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::net::{FastEvaluator, ShallowNet, StructuredGrid};
use crate::problems::OdeSystem;

/// Time-window schedule for a whole-horizon training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPlan {
    pub window_count: usize,
    pub neurons_per_window: usize,
    pub epochs: usize,
}

impl Default for WindowPlan {
    fn default() -> Self {
        WindowPlan {
            window_count: 20,
            neurons_per_window: 10_000,
            epochs: 3,
        }
    }
}

impl WindowPlan {
    fn validate(&self) -> Result<()> {
        if self.window_count == 0 || self.epochs == 0 || self.neurons_per_window < 2 {
            return Err(Error::config(format!(
                "window plan needs windows >= 1, epochs >= 1, neurons >= 2 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Weight-update scaling for sigmoid nets during sweeps.
///
/// A net's value gains exactly one output weight per grid cell (the
/// activation transitions across the layer telescope to one), so the
/// default scales updates by `Δx` alone, for either activation. The
/// alternatives normalize by the derivative-overlap sum instead; their
/// `2Δζκ - 1 ≈ 1.9e-5` speed bias accumulates over long horizons, so they
/// exist for comparison runs only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmoidScaling {
    /// `Δx` exactly (trapezoid-consistent). The default.
    #[default]
    UnitMass,
    /// `Δx / (2Δζ κ_k)` with the boundary-clipped overlap sum.
    KappaNormalized,
    /// `2Δx / Δζ`: the overlap sum truncated to the neuron itself
    /// (`κ = σ'(0) = 1/4`). Kept for compatibility; roughly triples the
    /// effective dynamics and is not usable for accurate runs.
    SelfOverlapOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NbnOptions {
    pub sigmoid_scaling: SigmoidScaling,
}

/// One trained window: `n` nets on a shared local grid.
#[derive(Debug)]
pub struct WindowOutcome {
    pub nets: Vec<ShallowNet>,
    pub grid: StructuredGrid,
    /// Trained value at the window's right boundary (the last grid point),
    /// per component; the next window's initial state.
    pub boundary_state: Vec<f64>,
    /// Largest weight change seen in each epoch, over all components.
    pub epoch_deltas: Vec<f64>,
}

/// Trains the `n` component nets of one window.
///
/// Local coordinate `s = t - window_start` runs over `[0, window_len]`,
/// with `neurons` grid points at spacing `window_len / (neurons - 1)`. The
/// right-hand side is always evaluated at the absolute time
/// `window_start + s_k`.
pub fn nbn_train_window(
    problem: &OdeSystem,
    window_start: f64,
    window_len: f64,
    init_state: &[f64],
    neurons: usize,
    epochs: usize,
    activation: ActivationKind,
) -> Result<WindowOutcome> {
    nbn_train_window_with(
        problem,
        window_start,
        window_len,
        init_state,
        neurons,
        epochs,
        activation,
        NbnOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn nbn_train_window_with(
    problem: &OdeSystem,
    window_start: f64,
    window_len: f64,
    init_state: &[f64],
    neurons: usize,
    epochs: usize,
    activation: ActivationKind,
    options: NbnOptions,
) -> Result<WindowOutcome> {
    let dim = problem.dimension();
    if init_state.len() != dim {
        return Err(Error::Dimension(format!(
            "initial state has {} components, problem has {dim}",
            init_state.len()
        )));
    }
    if !(window_len > 0.0) || neurons < 2 || epochs == 0 {
        return Err(Error::config(format!(
            "window needs positive length, >= 2 neurons, >= 1 epochs \
             (len {window_len}, neurons {neurons}, epochs {epochs})"
        )));
    }
    if init_state.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite window initial state".into()));
    }

    let dx = window_len / (neurons - 1) as f64;
    let grid = StructuredGrid::new(activation, dx, neurons);
    let delta_zeta = activation.half_width();

    // per-neuron update coefficient
    let coef: Vec<f64> = match (activation, options.sigmoid_scaling) {
        (ActivationKind::RectifiedSigmoid, _) => vec![dx / delta_zeta; neurons],
        (ActivationKind::Sigmoid, SigmoidScaling::UnitMass) => vec![dx; neurons],
        (ActivationKind::Sigmoid, SigmoidScaling::KappaNormalized) => (0..neurons)
            .map(|k| {
                dx / (2.0
                    * delta_zeta
                    * crate::pidd::kappa(k, neurons, crate::pidd::DEFAULT_KAPPA_WINDOW, delta_zeta))
            })
            .collect(),
        (ActivationKind::Sigmoid, SigmoidScaling::SelfOverlapOnly) => {
            vec![2.0 * dx / delta_zeta; neurons]
        }
    };

    // seed: rhs frozen at the window's initial state, sampled along the grid
    let mut weights: Vec<Vec<f64>> = vec![vec![0.0; neurons]; dim];
    let mut f = vec![0.0; dim];
    for k in 0..neurons {
        let t_k = window_start + k as f64 * dx;
        problem.rhs(init_state, t_k, &mut f)?;
        for l in 0..dim {
            weights[l][k] = coef[k] * f[l];
        }
    }
    // bias keeps the value at s = 0 equal to the initial state: the only
    // neuron contributing there is neuron 0, at its midpoint
    let mut bias: Vec<f64> = (0..dim)
        .map(|l| init_state[l] - 0.5 * weights[l][0])
        .collect();

    let mut epoch_deltas = Vec::with_capacity(epochs);
    let mut state = vec![0.0; dim];
    let mut run = vec![0.0; dim];
    for epoch in 0..epochs {
        run.copy_from_slice(&bias);
        let mut delta_max = 0.0_f64;
        for k in 0..neurons {
            let t_k = window_start + k as f64 * dx;
            for l in 0..dim {
                state[l] = run[l] + 0.5 * weights[l][k];
            }
            #[cfg(debug_assertions)]
            if k % 1000 == 999 {
                recheck_running_sum(&weights, &bias, &run, k);
            }
            problem.rhs(&state, t_k, &mut f).map_err(|e| {
                if let Error::RhsDomain { t, detail } = e {
                    Error::RhsDomain {
                        t,
                        detail: format!("epoch {epoch}, neuron {k}: {detail}"),
                    }
                } else {
                    e
                }
            })?;
            for l in 0..dim {
                let next = coef[k] * f[l];
                let delta = next - weights[l][k];
                delta_max = delta_max.max(delta.abs());
                if k == 0 {
                    // keep the s = 0 anchor exact as neuron 0 moves
                    bias[l] -= 0.5 * delta;
                    run[l] -= 0.5 * delta;
                }
                weights[l][k] = next;
                run[l] += next;
            }
        }
        if !delta_max.is_finite() {
            return Err(Error::Numerical(format!(
                "weight updates diverged in epoch {epoch}"
            )));
        }
        epoch_deltas.push(delta_max);
    }

    // boundary value: running sum at the last grid point, midpoint rule
    let boundary_state: Vec<f64> = (0..dim)
        .map(|l| run[l] - 0.5 * weights[l][neurons - 1])
        .collect();

    let nets = (0..dim)
        .map(|l| {
            let mut net = grid.blank_net(activation);
            net.output_weights = std::mem::take(&mut weights[l]);
            net.output_bias = bias[l];
            net
        })
        .collect();

    Ok(WindowOutcome {
        nets,
        grid,
        boundary_state,
        epoch_deltas,
    })
}

/// Drift guard for the incrementally maintained running sum: recompute the
/// prefix from scratch and compare.
#[cfg(debug_assertions)]
fn recheck_running_sum(weights: &[Vec<f64>], bias: &[f64], run: &[f64], k: usize) {
    for (l, w) in weights.iter().enumerate() {
        let fresh: f64 = bias[l] + w[..k].iter().sum::<f64>();
        debug_assert!(
            (fresh - run[l]).abs() <= 1e-10 * (1.0 + fresh.abs()),
            "running sum drifted at neuron {k}, component {l}: {} vs {}",
            run[l],
            fresh
        );
    }
}

/// A horizon split into equal windows, each holding `n` trained nets.
#[derive(Debug)]
pub struct PiecewiseModel {
    windows: Vec<TrainedWindow>,
    window_len: f64,
    horizon: f64,
    dimension: usize,
    activation: ActivationKind,
}

#[derive(Debug)]
pub struct TrainedWindow {
    pub t_start: f64,
    pub nets: Vec<ShallowNet>,
    pub grid: StructuredGrid,
    evaluators: Vec<FastEvaluator>,
}

impl PiecewiseModel {
    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    pub fn window(&self, w: usize) -> &TrainedWindow {
        &self.windows[w]
    }

    pub fn window_len(&self) -> f64 {
        self.window_len
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    fn dispatch(&self, t: f64) -> (usize, f64) {
        let w = ((t / self.window_len).floor() as i64)
            .clamp(0, self.windows.len() as i64 - 1) as usize;
        (w, t - self.windows[w].t_start)
    }

    /// Value of component `l` at absolute time `t` (clamped to the horizon's
    /// windows at either end).
    pub fn eval_component(&self, l: usize, t: f64) -> f64 {
        let (w, s) = self.dispatch(t);
        let win = &self.windows[w];
        win.evaluators[l].eval(&win.nets[l], s)
    }

    /// All components at time `t`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let (w, s) = self.dispatch(t);
        let win = &self.windows[w];
        for l in 0..self.dimension {
            out[l] = win.evaluators[l].eval(&win.nets[l], s);
        }
    }
}

/// Whole-horizon training result.
#[derive(Debug)]
pub struct NbnOutcome {
    pub model: PiecewiseModel,
    /// Largest weight change per epoch, maximized over windows.
    pub epoch_deltas: Vec<f64>,
}

/// Trains windows left to right over the problem's horizon. Window 0 starts
/// from the problem's initial state; each later window starts from the
/// previous window's trained boundary value.
pub fn nbn_train(
    problem: &OdeSystem,
    plan: &WindowPlan,
    activation: ActivationKind,
) -> Result<NbnOutcome> {
    nbn_train_with(problem, plan, activation, NbnOptions::default())
}

pub fn nbn_train_with(
    problem: &OdeSystem,
    plan: &WindowPlan,
    activation: ActivationKind,
    options: NbnOptions,
) -> Result<NbnOutcome> {
    plan.validate()?;
    let window_len = problem.horizon() / plan.window_count as f64;
    let mut state = problem.initial_state().to_vec();
    let mut windows = Vec::with_capacity(plan.window_count);
    let mut epoch_deltas = vec![0.0_f64; plan.epochs];

    for w in 0..plan.window_count {
        let t_start = w as f64 * window_len;
        let outcome = nbn_train_window_with(
            problem,
            t_start,
            window_len,
            &state,
            plan.neurons_per_window,
            plan.epochs,
            activation,
            options,
        )
        .map_err(|e| Error::Window {
            index: w,
            source: Box::new(e),
        })?;
        for (slot, d) in epoch_deltas.iter_mut().zip(&outcome.epoch_deltas) {
            *slot = slot.max(*d);
        }
        state = outcome.boundary_state.clone();
        let evaluators = outcome
            .nets
            .iter()
            .map(|net| FastEvaluator::new(net, &outcome.grid))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Window {
                index: w,
                source: Box::new(e),
            })?;
        windows.push(TrainedWindow {
            t_start,
            nets: outcome.nets,
            grid: outcome.grid,
            evaluators,
        });
    }

    Ok(NbnOutcome {
        model: PiecewiseModel {
            windows,
            window_len,
            horizon: problem.horizon(),
            dimension: problem.dimension(),
            activation,
        },
        epoch_deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::harmonic_exact;

    #[test]
    fn zero_rhs_trains_to_constant() {
        let sys = OdeSystem::new("still", vec![3.5], 2.0, |_u, _t, out| {
            out.fill(0.0);
            Ok(())
        })
        .unwrap();
        let out = nbn_train_window(&sys, 0.0, 2.0, &[3.5], 50, 3, ActivationKind::RectifiedSigmoid)
            .unwrap();
        assert!(out.nets[0].output_weights.iter().all(|&w| w == 0.0));
        assert!(out.epoch_deltas.iter().all(|&d| d == 0.0));
        assert_eq!(out.boundary_state[0], 3.5);
        assert_eq!(out.nets[0].eval_naive(1.3), 3.5);
    }

    #[test]
    fn window_initial_value_is_exact() {
        let sys = OdeSystem::harmonic(1.0);
        for kind in [ActivationKind::RectifiedSigmoid, ActivationKind::Sigmoid] {
            let out = nbn_train_window(&sys, 0.0, 5.0, &[1.0, 0.0], 500, 3, kind).unwrap();
            // the trained running sum anchors s = 0 at the initial state
            let v0 = out.nets[0].output_bias + 0.5 * out.nets[0].output_weights[0];
            assert!((v0 - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn harmonic_single_window_matches_exact_solution() {
        let sys = OdeSystem::harmonic(1.0);
        let out = nbn_train_window(
            &sys,
            0.0,
            5.0,
            &[1.0, 0.0],
            2000,
            3,
            ActivationKind::RectifiedSigmoid,
        )
        .unwrap();
        let grid = out.grid;
        let mut worst = 0.0_f64;
        for k in 0..grid.count {
            let t = grid.point(k);
            let exact = harmonic_exact(t, 1.0);
            for l in 0..2 {
                worst = worst.max((out.nets[l].eval_naive(t) - exact[l]).abs());
            }
        }
        // trapezoid-limited accuracy at dx = 5/1999
        assert!(worst < 5e-6, "worst deviation {worst}");
        // boundary state approximates the exact solution at the window end
        let exact = harmonic_exact(5.0, 1.0);
        for l in 0..2 {
            assert!((out.boundary_state[l] - exact[l]).abs() < 5e-6);
        }
    }

    /// Interior residual: the net's derivative at grid points equals the
    /// right-hand side evaluated on the net itself.
    #[test]
    fn resigma_residual_vanishes_at_grid_points() {
        let sys = OdeSystem::harmonic(1.0);
        let out = nbn_train_window(
            &sys,
            0.0,
            2.0,
            &[1.0, 0.0],
            400,
            4,
            ActivationKind::RectifiedSigmoid,
        )
        .unwrap();
        let mut f = [0.0; 2];
        let mut state = [0.0; 2];
        for k in (1..399).step_by(13) {
            let x = out.grid.point(k);
            for l in 0..2 {
                state[l] = out.nets[l].eval_naive(x);
            }
            sys.rhs(&state, x, &mut f).unwrap();
            for l in 0..2 {
                let d = out.nets[l].eval_deriv(x);
                assert!(
                    (d - f[l]).abs() <= 1e-8 * (1.0 + f[l].abs()),
                    "k {k} l {l}: deriv {d} vs f {}",
                    f[l]
                );
            }
        }
    }

    /// Longer fixed-point iterations stop moving the weights: E = 3 already
    /// sits at the fixed point to ~1e-13 on a unit window.
    #[test]
    fn three_epochs_reach_fixed_point_on_unit_window() {
        let sys = OdeSystem::harmonic(1.0);
        let short = nbn_train_window(
            &sys,
            0.0,
            1.0,
            &[1.0, 0.0],
            1000,
            3,
            ActivationKind::RectifiedSigmoid,
        )
        .unwrap();
        let long = nbn_train_window(
            &sys,
            0.0,
            1.0,
            &[1.0, 0.0],
            1000,
            10,
            ActivationKind::RectifiedSigmoid,
        )
        .unwrap();
        let mut gap = 0.0_f64;
        let mut scale = 0.0_f64;
        for l in 0..2 {
            for k in 0..1000 {
                gap = gap.max((short.nets[l].output_weights[k] - long.nets[l].output_weights[k]).abs());
                scale = scale.max(long.nets[l].output_weights[k].abs());
            }
        }
        assert!(gap <= 1e-8 * scale, "gap {gap}, scale {scale}");
    }

    #[test]
    fn epoch_deltas_contract() {
        let sys = OdeSystem::harmonic(1.0);
        let out = nbn_train_window(
            &sys,
            0.0,
            5.0,
            &[1.0, 0.0],
            2000,
            3,
            ActivationKind::RectifiedSigmoid,
        )
        .unwrap();
        let d = &out.epoch_deltas;
        assert!(d[2] <= d[1] && d[1] <= d[0], "deltas {d:?}");
    }

    #[test]
    fn single_window_plan_degenerates_to_window_trainer() {
        let sys = OdeSystem::harmonic(1.0).with_horizon(4.0).unwrap();
        let plan = WindowPlan {
            window_count: 1,
            neurons_per_window: 300,
            epochs: 3,
        };
        let chained = nbn_train(&sys, &plan, ActivationKind::RectifiedSigmoid).unwrap();
        let direct = nbn_train_window(
            &sys,
            0.0,
            4.0,
            &[1.0, 0.0],
            300,
            3,
            ActivationKind::RectifiedSigmoid,
        )
        .unwrap();
        for l in 0..2 {
            assert_eq!(
                chained.model.window(0).nets[l].output_weights,
                direct.nets[l].output_weights
            );
            assert_eq!(
                chained.model.window(0).nets[l].output_bias,
                direct.nets[l].output_bias
            );
            for t in [0.0, 1.7, 3.999] {
                let fast = chained.model.eval_component(l, t);
                let naive = direct.nets[l].eval_naive(t);
                assert!((fast - naive).abs() <= 1e-12 * (1.0 + naive.abs()));
            }
        }
    }

    /// Window boundaries are continuous for the rectified sigmoid readout:
    /// each window starts exactly where the previous one ended.
    #[test]
    fn resigma_model_is_continuous_at_boundaries() {
        let sys = OdeSystem::harmonic(1.0).with_horizon(10.0).unwrap();
        let plan = WindowPlan {
            window_count: 5,
            neurons_per_window: 400,
            epochs: 3,
        };
        let out = nbn_train(&sys, &plan, ActivationKind::RectifiedSigmoid).unwrap();
        let model = &out.model;
        for w in 0..4 {
            let left = model.window(w);
            let right = model.window(w + 1);
            for l in 0..2 {
                let a = left.evaluators[l].eval(&left.nets[l], model.window_len());
                let b = right.evaluators[l].eval(&right.nets[l], 0.0);
                assert!((a - b).abs() <= 1e-10, "w {w} l {l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn trainer_consumes_no_reference_data() {
        // the signature admits only the problem and the plan; this test
        // pins the chain's accuracy so a future data leak that changes
        // behaviour would surface
        let sys = OdeSystem::harmonic(1.0).with_horizon(10.0).unwrap();
        let plan = WindowPlan {
            window_count: 5,
            neurons_per_window: 500,
            epochs: 3,
        };
        let out = nbn_train(&sys, &plan, ActivationKind::RectifiedSigmoid).unwrap();
        let mut worst = 0.0_f64;
        for t in [0.0, 2.5, 5.0, 7.5, 9.99] {
            let exact = harmonic_exact(t, 1.0);
            for l in 0..2 {
                worst = worst.max((out.model.eval_component(l, t) - exact[l]).abs());
            }
        }
        assert!(worst < 1e-4, "worst {worst}");
    }

    #[test]
    fn rhs_failure_reports_window_index() {
        let sys = OdeSystem::new("explode", vec![1.0], 4.0, |u, t, out| {
            if t > 2.0 {
                return Err(Error::RhsDomain {
                    t,
                    detail: "boom".into(),
                });
            }
            out[0] = u[0];
            Ok(())
        })
        .unwrap();
        let plan = WindowPlan {
            window_count: 4,
            neurons_per_window: 50,
            epochs: 2,
        };
        match nbn_train(&sys, &plan, ActivationKind::RectifiedSigmoid) {
            Err(Error::Window { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected window error, got {other:?}"),
        }
    }
}
