//! Shallow networks as ODE solvers.
//!
//! This crate solves initial-value problems `du/dt = f(u, t), u(0) = g` with
//! single-hidden-layer networks whose neurons tile the time axis, one per
//! collocation point. Two construction routes are provided:
//!
//! * **Data-driven initialization** ([`pidd`]): given a reference solution
//!   on the grid, every parameter is written in closed form — no training
//!   at all. The network reproduces the data to quadrature accuracy.
//! * **Neuron-by-neuron training** ([`nbn`]): unsupervised and
//!   gradient-free. Output weights are updated one at a time from the ODE
//!   residual at their own grid point; a few sequential sweeps reach the
//!   fixed point. Long horizons are split into time windows chained through
//!   their boundary values.
//!
//! Both routes support the logistic sigmoid and the rectified sigmoid (a
//! clamped unit ramp) as activations; the rectified variant saturates
//! exactly, which makes evaluation O(1) per point and the grid-point
//! calculus exact. An embedded Runge-Kutta pair ([`solver`]) supplies
//! reference solutions and error baselines, [`metrics`] the relative-L2
//! accuracy measure, [`plot`] static SVG figures, and [`runner`] the
//! config-driven experiment pipeline behind the CLI.

pub mod activation;
pub mod error;
pub mod metrics;
pub mod nbn;
pub mod net;
pub mod pidd;
pub mod plot;
pub mod problems;
pub mod runner;
pub mod solver;
mod util;

pub use activation::{activate, activate_prime, ActivationKind};
pub use error::{Error, Result};
pub use metrics::{abs_error_series, relative_l2, ErrorVector};
pub use nbn::{
    nbn_train, nbn_train_window, NbnOptions, NbnOutcome, PiecewiseModel, SigmoidScaling,
    WindowPlan,
};
pub use net::{FastEvaluator, ShallowNet, StructuredGrid};
pub use pidd::{kappa, pidd_init, pidd_init_resigma, pidd_init_sigmoid, InitRecipe};
pub use plot::{emit_plot, SeriesPair};
pub use problems::{
    harmonic_exact, rhs_harmonic, rhs_lorenz, rhs_slingshot, OdeSystem, SlingshotParams,
};
pub use runner::{
    run_experiment, run_nbn_experiment, run_pidd_experiment, ErrorReport, ExperimentArtifacts,
    ExperimentConfig, Mode,
};
pub use solver::{integrate_on, integrate_to_grid, rk4_fixed, GridSolution, TimeGrid};
