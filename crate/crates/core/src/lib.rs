//! Global Bayesian thermometry: posterior inference on a logarithmic
//! temperature grid, optimal-error bounds, seeded simulation and the
//! local and histogram-fit baselines.
//!
//! Temperatures are dimensionless, `y = k_B θ / ħω`, and every model
//! carries its own energy scale.

pub mod baselines;
pub mod bounds;
pub mod error;
pub mod grid;
pub mod inference;
pub mod models;
pub mod simulate;

pub use baselines::{
    histogram_fit_estimate, local_estimate, GaussianProfile, Histogram, HistogramFit, LocalEstimate,
};
pub use bounds::{
    bound_point, eps_cr, eps_flat, eps_opt, fit_asymptotic, sweep, tolerance_spins, AsymptoticFit,
    BoundPoint, GlobalOptimum,
};
pub use error::{Error, Result};
pub use grid::{LogGrid, Support, DEFAULT_NODE_COUNT};
pub use inference::{
    global_estimate, posterior, prior_estimate, DeviationParams, GlobalEstimate, Posterior,
    PriorEstimate,
};
pub use models::{ModelSpec, OscillatorModel, OutcomeKind, SpinGasModel, ThermalModel};
pub use simulate::{sample, Outcomes, RngStream, Trace};
