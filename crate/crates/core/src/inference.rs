//! Posterior construction, the optimal logarithmic estimator and
//! outcome-conditioned risks.
//!
//! The prior is uniform in `u = ln(y / reference)`, so a posterior density in
//! `u` is just the normalized likelihood. The estimator minimizing the mean
//! logarithmic error is `ϑ = reference · exp(E[u])`; its risk conditioned on
//! the record is the posterior variance of `u`.

use crate::error::{Error, Result};
use crate::grid::{LogGrid, Support};
use crate::models::ThermalModel;

/// Grid cells at each edge checked for posterior pile-up.
pub const EDGE_CELLS: usize = 3;

/// Edge mass above which an estimate is flagged as clipped by the support.
pub const EDGE_MASS_THRESHOLD: f64 = 0.5;

/// Deviation `|α ln(θ̃/θ)|^k`. The defaults `(1, 2)` give the mean
/// logarithmic error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationParams {
    alpha: f64,
    k: f64,
}

impl Default for DeviationParams {
    fn default() -> Self {
        Self { alpha: 1.0, k: 2.0 }
    }
}

impl DeviationParams {
    pub fn new(alpha: f64, k: f64) -> Result<Self> {
        for (name, value) in [("alpha", alpha), ("k", k)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(Self { alpha, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    fn deviation(&self, log_ratio: f64) -> f64 {
        let d = (self.alpha * log_ratio).abs();
        if self.k == 2.0 {
            d * d
        } else {
            d.powf(self.k)
        }
    }
}

/// Normalized posterior density over log temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    grid: LogGrid,
    log_density: Vec<f64>,
    density: Vec<f64>,
}

impl Posterior {
    /// Normalizes `exp(log_likelihood)` against the grid. Entries may be
    /// `-inf`; the likelihood is shifted by its maximum before exponentiating.
    pub fn from_log_likelihood(grid: LogGrid, log_likelihood: Vec<f64>) -> Result<Self> {
        if log_likelihood.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                got: log_likelihood.len(),
            });
        }
        if let Some((index, &value)) = log_likelihood
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_nan() || **v == f64::INFINITY)
        {
            return Err(Error::NonFiniteValue { index, value });
        }
        let max = log_likelihood
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::DegeneratePosterior);
        }
        let shifted: Vec<f64> = log_likelihood.iter().map(|v| (v - max).exp()).collect();
        let mass = grid.dot(&shifted);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::DegeneratePosterior);
        }
        let log_mass = mass.ln();
        let log_density = log_likelihood.iter().map(|v| v - max - log_mass).collect();
        let density = shifted.into_iter().map(|d| d / mass).collect();
        Ok(Self {
            grid,
            log_density,
            density,
        })
    }

    /// Posterior of `record` on a prepared grid.
    pub fn from_record<M: ThermalModel>(
        model: &M,
        grid: LogGrid,
        record: &[M::Outcome],
    ) -> Result<Self> {
        if record.is_empty() {
            return Err(Error::EmptyRecord);
        }
        let log_likelihood = model.record_log_likelihood(record, &grid.temperatures())?;
        Self::from_log_likelihood(grid, log_likelihood)
    }

    /// The prior itself: uniform in `u`.
    pub fn prior(grid: LogGrid) -> Self {
        let n = grid.node_count();
        Self::from_log_likelihood(grid, vec![0.0; n])
            .expect("flat likelihood is always normalizable")
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    /// Density in `u` at each node.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `E[f(u)]` under the posterior.
    pub fn expectation_in_log(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .u_nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.density)
            .map(|((&u, &w), &d)| w * d * f(u))
            .sum()
    }

    /// Posterior mean of `u`.
    pub fn mean_log_temperature(&self) -> f64 {
        self.expectation_in_log(|u| u)
    }

    /// `ϑ = reference · exp(E[u])`.
    pub fn optimal_estimate(&self) -> f64 {
        self.grid.reference() * self.mean_log_temperature().exp()
    }

    /// `∫ density(u) |α (ln(θ̃/reference) - u)|^k du`.
    pub fn conditional_risk(&self, theta_tilde: f64, dev: DeviationParams) -> Result<f64> {
        if !(theta_tilde.is_finite() && theta_tilde > 0.0) {
            return Err(Error::InvalidTemperature(theta_tilde));
        }
        let log_estimate = self.grid.log_temperature(theta_tilde);
        Ok(self.expectation_in_log(|u| dev.deviation(log_estimate - u)))
    }

    /// Posterior noise-to-signal ratio `E[(θ̃/θ - 1)²]`, the narrow-window
    /// limit of the logarithmic error.
    pub fn noise_to_signal(&self, theta_tilde: f64) -> Result<f64> {
        if !(theta_tilde.is_finite() && theta_tilde > 0.0) {
            return Err(Error::InvalidTemperature(theta_tilde));
        }
        let log_estimate = self.grid.log_temperature(theta_tilde);
        Ok(self.expectation_in_log(|u| (log_estimate - u).exp_m1().powi(2)))
    }

    /// Posterior mass on the first and last `cells + 1` nodes.
    pub fn edge_mass(&self, cells: usize) -> f64 {
        let n = self.grid.node_count();
        let w = self.grid.weights();
        let edge = cells.min(n / 2);
        (0..=edge)
            .chain(n.saturating_sub(edge + 1)..n)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|i| w[i] * self.density[i])
            .sum()
    }

    /// Posterior probability of `y ≤ y_cut`, by quadrature over the nodes
    /// below the cut.
    pub fn mass_below(&self, y_cut: f64) -> f64 {
        let cut = self.grid.log_temperature(y_cut);
        let w = self.grid.weights();
        self.grid
            .u_nodes()
            .iter()
            .enumerate()
            .take_while(|(_, &u)| u <= cut)
            .map(|(i, _)| w[i] * self.density[i])
            .sum()
    }
}

/// Global estimate `ϑ ± ϑ √ε_mle(record)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalEstimate {
    pub theta_hat: f64,
    pub eps_mle: f64,
    pub error_bar: f64,
    /// More than half the posterior mass sits within a few cells of a
    /// support edge.
    pub edge_warning: bool,
}

impl GlobalEstimate {
    pub fn from_posterior(post: &Posterior, dev: DeviationParams) -> Result<Self> {
        let theta_hat = post.optimal_estimate();
        let eps_mle = post.conditional_risk(theta_hat, dev)?;
        Ok(Self {
            theta_hat,
            eps_mle,
            error_bar: theta_hat * eps_mle.sqrt(),
            edge_warning: post.edge_mass(EDGE_CELLS) > EDGE_MASS_THRESHOLD,
        })
    }

    /// Whether `y` lies within `k` error bars of the estimate.
    pub fn covers(&self, y: f64, k: f64) -> bool {
        (self.theta_hat - y).abs() <= k * self.error_bar
    }
}

/// Optimal prior-only estimate and its risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorEstimate {
    pub theta_p: f64,
    pub eps_p: f64,
}

/// Posterior of `record` on `support`, with the grid referenced to the
/// model's energy scale.
pub fn posterior<M: ThermalModel>(
    model: &M,
    support: Support,
    record: &[M::Outcome],
    node_count: usize,
) -> Result<Posterior> {
    let grid = LogGrid::with_reference(support, node_count, model.energy_scale())?;
    Posterior::from_record(model, grid, record)
}

/// Posterior with no data.
pub fn prior_posterior(support: Support, node_count: usize) -> Result<Posterior> {
    Ok(Posterior::prior(LogGrid::new(support, node_count)?))
}

pub fn optimal_estimate(post: &Posterior) -> f64 {
    post.optimal_estimate()
}

pub fn conditional_risk(post: &Posterior, theta_tilde: f64, dev: DeviationParams) -> Result<f64> {
    post.conditional_risk(theta_tilde, dev)
}

pub fn global_estimate<M: ThermalModel>(
    model: &M,
    support: Support,
    record: &[M::Outcome],
    node_count: usize,
    dev: DeviationParams,
) -> Result<GlobalEstimate> {
    GlobalEstimate::from_posterior(&posterior(model, support, record, node_count)?, dev)
}

/// Closed forms for the uniform-in-log prior: the geometric midpoint and
/// `ln²(y_max/y_min) / 12`.
pub fn prior_estimate(support: Support) -> PriorEstimate {
    PriorEstimate {
        theta_p: (support.y_min() * support.y_max()).sqrt(),
        eps_p: support.log_width().powi(2) / 12.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DEFAULT_NODE_COUNT;
    use crate::models::{OscillatorModel, SpinGasModel};
    use approx::assert_relative_eq;

    fn window() -> Support {
        Support::new(0.1, 10.0).unwrap()
    }

    fn gaussian_posterior(y0: f64, width: f64) -> Posterior {
        let grid = LogGrid::new(window(), DEFAULT_NODE_COUNT).unwrap();
        let u0 = y0.ln();
        let ll = grid
            .u_nodes()
            .iter()
            .map(|u| -0.5 * ((u - u0) / width).powi(2))
            .collect();
        Posterior::from_log_likelihood(grid, ll).unwrap()
    }

    #[test]
    fn deviation_params_validate() {
        assert_eq!(
            DeviationParams::default(),
            DeviationParams::new(1.0, 2.0).unwrap()
        );
        assert!(DeviationParams::new(0.0, 2.0).is_err());
        assert!(DeviationParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn prior_is_uniform_with_geometric_mean_estimate() {
        let post = prior_posterior(window(), DEFAULT_NODE_COUNT).unwrap();
        let d0 = post.density()[0];
        assert!(post.density().iter().all(|d| (d - d0).abs() < 1e-15));
        assert_relative_eq!(d0, 1.0 / 100f64.ln(), max_relative = 1e-12);
        assert!((post.optimal_estimate() - 1.0).abs() < 1e-12);

        let skew = prior_posterior(Support::new(0.5, 8.0).unwrap(), 501).unwrap();
        assert_relative_eq!(skew.optimal_estimate(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn uniform_posterior_risk_is_uniform_variance() {
        let post = prior_posterior(window(), DEFAULT_NODE_COUNT).unwrap();
        let risk = post
            .conditional_risk(1.0, DeviationParams::default())
            .unwrap();
        assert_relative_eq!(risk, 100f64.ln().powi(2) / 12.0, max_relative = 1e-10);
        assert_relative_eq!(risk, 1.7672980, max_relative = 1e-6);
    }

    #[test]
    fn narrow_posterior_behaves_like_a_point_mass() {
        // Width 1e-4 is far below the node spacing, so centre on a node.
        let grid = LogGrid::new(window(), DEFAULT_NODE_COUNT).unwrap();
        let k = grid.temperatures().iter().position(|&y| y >= 2.5).unwrap();
        let y0 = grid.temperature(k);
        let post = gaussian_posterior(y0, 1e-4);
        assert!((post.optimal_estimate() - y0).abs() < 1e-6);
        let risk = post
            .conditional_risk(y0, DeviationParams::default())
            .unwrap();
        assert!(risk < 1e-7);
    }

    #[test]
    fn rejects_bad_estimates_and_records() {
        let post = gaussian_posterior(2.5, 0.1);
        assert!(post
            .conditional_risk(0.0, DeviationParams::default())
            .is_err());
        assert!(post
            .conditional_risk(-1.0, DeviationParams::default())
            .is_err());
        let gas = SpinGasModel::new(3);
        assert_eq!(posterior(&gas, window(), &[], 101), Err(Error::EmptyRecord));
        assert!(matches!(
            posterior(&gas, window(), &[4], 101),
            Err(Error::OutcomeOutOfRange { .. })
        ));
        let grid = LogGrid::new(window(), 5).unwrap();
        assert_eq!(
            Posterior::from_log_likelihood(grid.clone(), vec![f64::NEG_INFINITY; 5]),
            Err(Error::DegeneratePosterior)
        );
        assert!(Posterior::from_log_likelihood(grid, vec![f64::NAN; 5]).is_err());
    }

    #[test]
    fn posterior_is_normalized() {
        let gas = SpinGasModel::new(10);
        let post = posterior(&gas, window(), &[3], DEFAULT_NODE_COUNT).unwrap();
        assert!((post.grid().integrate(post.density()).unwrap() - 1.0).abs() < 1e-10);
        assert!(post.density().iter().all(|&d| d >= 0.0));
        let logs: Vec<f64> = post.log_density().iter().map(|l| l.exp()).collect();
        for (a, b) in logs.iter().zip(post.density()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
    }

    #[test]
    fn cold_record_piles_up_at_the_lower_edge() {
        let gas = SpinGasModel::new(1);
        let record = vec![0u32; 500];
        let post = posterior(&gas, window(), &record, DEFAULT_NODE_COUNT).unwrap();
        assert!(post.mass_below(0.2) > 0.9);
        let est = GlobalEstimate::from_posterior(&post, DeviationParams::default()).unwrap();
        assert!(est.theta_hat < 0.2);
        assert!(post.density()[0] > post.density()[DEFAULT_NODE_COUNT / 2]);
    }

    #[test]
    fn edge_warning_flags_clipped_posteriors() {
        let grid = LogGrid::new(window(), 201).unwrap();
        let ll = grid
            .u_nodes()
            .iter()
            .map(|u| -200.0 * (u - 0.1f64.ln()))
            .collect();
        let post = Posterior::from_log_likelihood(grid, ll).unwrap();
        let est = GlobalEstimate::from_posterior(&post, DeviationParams::default()).unwrap();
        assert!(est.edge_warning);

        let est = GlobalEstimate::from_posterior(
            &gaussian_posterior(2.0, 0.05),
            DeviationParams::default(),
        )
        .unwrap();
        assert!(!est.edge_warning);
    }

    #[test]
    fn error_bar_is_estimate_times_root_risk() {
        let gas = SpinGasModel::new(150);
        let record = [60, 70, 66, 64];
        let est = global_estimate(
            &gas,
            window(),
            &record,
            DEFAULT_NODE_COUNT,
            DeviationParams::default(),
        )
        .unwrap();
        assert_eq!(est.error_bar, est.theta_hat * est.eps_mle.sqrt());
        assert!(window().contains(est.theta_hat));
    }

    #[test]
    fn prior_estimate_closed_forms() {
        let p = prior_estimate(window());
        assert!((p.theta_p - 1.0).abs() < 1e-15);
        assert_relative_eq!(p.eps_p, 1.7672980, max_relative = 1e-6);

        for (lo, hi) in [(0.1, 10.0), (0.3, 50.0), (2.0, 3.0)] {
            let s = Support::new(lo, hi).unwrap();
            let grid = LogGrid::new(s, DEFAULT_NODE_COUNT).unwrap();
            let mean = grid.prior_expectation(|y| y.ln());
            let second = grid.prior_expectation(|y| y.ln().powi(2));
            let closed = prior_estimate(s);
            assert_relative_eq!(mean.exp(), closed.theta_p, max_relative = 1e-10);
            assert_relative_eq!(second - mean * mean, closed.eps_p, max_relative = 1e-10);
        }
    }

    #[test]
    fn general_deviation_family() {
        let post = prior_posterior(window(), 2001).unwrap();
        // E|u|^1 for uniform on [-L/2, L/2] is L/4
        let l = 100f64.ln();
        let risk = post
            .conditional_risk(1.0, DeviationParams::new(1.0, 1.0).unwrap())
            .unwrap();
        assert_relative_eq!(risk, l / 4.0, max_relative = 1e-6);
        let scaled = post
            .conditional_risk(1.0, DeviationParams::new(3.0, 2.0).unwrap())
            .unwrap();
        assert_relative_eq!(scaled, 9.0 * l * l / 12.0, max_relative = 1e-10);
    }

    #[test]
    fn oscillator_posterior_tracks_spread() {
        let osc = OscillatorModel::new();
        let sd = osc.variance(6.0).unwrap().sqrt();
        let record: Vec<f64> = (0..400)
            .map(|i| sd * (((i as f64) + 0.5) / 400.0 * 2.0 - 1.0) * 3f64.sqrt())
            .collect();
        let est = global_estimate(
            &osc,
            window(),
            &record,
            DEFAULT_NODE_COUNT,
            DeviationParams::default(),
        )
        .unwrap();
        assert!(est.covers(6.0, 2.0), "{est:?}");
    }
}
