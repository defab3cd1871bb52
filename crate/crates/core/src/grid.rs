//! Bounded temperature window and the log-space quadrature behind every
//! integral over temperature.
//!
//! Temperatures are dimensionless (`y = k_B θ / ħω` for the default unit).
//! Integrals run over `u = ln(y / reference)`, where the scale-invariant
//! prior `p(θ) ∝ 1/θ` is uniform with density `1 / ln(y_max / y_min)`.

use crate::error::{check_temperature, Error, Result};

/// Default number of quadrature nodes.
pub const DEFAULT_NODE_COUNT: usize = 2001;

/// End-correction coefficients of the fourth-order Gregory rule.
const GREGORY_END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

/// A finite, strictly positive temperature window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    y_min: f64,
    y_max: f64,
}

impl Support {
    pub fn new(y_min: f64, y_max: f64) -> Result<Self> {
        let valid = y_min.is_finite() && y_max.is_finite() && y_min > 0.0 && y_min < y_max;
        if !valid {
            return Err(Error::InvalidSupport { y_min, y_max });
        }
        Ok(Self { y_min, y_max })
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    /// `ln(y_max / y_min)`, the width of the window in log temperature.
    pub fn log_width(&self) -> f64 {
        (self.y_max / self.y_min).ln()
    }

    /// Normalization of the prior density in `u`: `1 / ln(y_max / y_min)`.
    pub fn prior_normalization(&self) -> f64 {
        1.0 / self.log_width()
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.y_min && y <= self.y_max
    }

    /// The window with both ends multiplied by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma * self.y_min, gamma * self.y_max)
    }
}

/// Uniform grid in log temperature with positive quadrature weights.
///
/// With at least six nodes the weights are the trapezoid rule with
/// fourth-order Gregory end corrections; below that, plain trapezoid.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    support: Support,
    reference: f64,
    u_nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LogGrid {
    /// Grid with `u = ln y`.
    pub fn new(support: Support, node_count: usize) -> Result<Self> {
        Self::with_reference(support, node_count, 1.0)
    }

    /// Grid with `u = ln(y / reference)`. Estimates computed on the grid do
    /// not depend on `reference` beyond rounding.
    pub fn with_reference(support: Support, node_count: usize, reference: f64) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::TooFewNodes(node_count));
        }
        let reference = check_temperature(reference).map_err(|_| Error::InvalidParameter {
            name: "reference",
            value: reference,
            reason: "must be positive and finite",
        })?;
        let lo = (support.y_min / reference).ln();
        let hi = (support.y_max / reference).ln();
        let last = (node_count - 1) as f64;
        let u_nodes: Vec<f64> = (0..node_count)
            .map(|i| {
                let t = i as f64 / last;
                lo * (1.0 - t) + hi * t
            })
            .collect();
        let h = support.log_width() / last;
        Ok(Self {
            support,
            reference,
            u_nodes,
            weights: quadrature_weights(node_count, h),
        })
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// Temperature unit subtracted inside the logarithm.
    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn node_count(&self) -> usize {
        self.u_nodes.len()
    }

    pub fn u_nodes(&self) -> &[f64] {
        &self.u_nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        self.support.log_width() / (self.node_count() - 1) as f64
    }

    /// Temperature at node `i`.
    pub fn temperature(&self, i: usize) -> f64 {
        self.reference * self.u_nodes[i].exp()
    }

    pub fn temperatures(&self) -> Vec<f64> {
        (0..self.node_count())
            .map(|i| self.temperature(i))
            .collect()
    }

    /// Log temperature relative to the grid reference.
    pub fn log_temperature(&self, y: f64) -> f64 {
        (y / self.reference).ln()
    }

    /// Quadrature estimate of `∫ f(u) du` from values at the nodes.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.node_count() {
            return Err(Error::LengthMismatch {
                expected: self.node_count(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index, value });
        }
        Ok(self.dot(values))
    }

    /// `∫ f(u) du` for a closure in `u`.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.u_nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }

    /// Expectation of `f(y)` under the normalized scale-invariant prior.
    pub fn prior_expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        let reference = self.reference;
        self.integrate_fn(|u| f(reference * u.exp())) * self.support.prior_normalization()
    }

    pub(crate) fn dot(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Builds the log-space grid for `support`.
pub fn build_grid(support: Support, node_count: usize) -> Result<LogGrid> {
    LogGrid::new(support, node_count)
}

fn quadrature_weights(node_count: usize, h: f64) -> Vec<f64> {
    let mut weights = vec![h; node_count];
    if node_count >= 2 * GREGORY_END.len() {
        for (i, c) in GREGORY_END.iter().enumerate() {
            weights[i] = c * h;
            weights[node_count - 1 - i] = c * h;
        }
    } else {
        weights[0] = 0.5 * h;
        weights[node_count - 1] = 0.5 * h;
    }
    weights
}

/// `ln Σ exp(v)` with a single max subtraction. Empty or all `-inf` input
/// gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn default_window() -> Support {
        Support::new(0.1, 10.0).unwrap()
    }

    #[test]
    fn rejects_bad_supports() {
        for (lo, hi) in [
            (0.0, 1.0),
            (-1.0, 1.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, f64::INFINITY),
            (f64::NAN, 1.0),
        ] {
            assert!(matches!(
                Support::new(lo, hi),
                Err(Error::InvalidSupport { .. })
            ));
        }
    }

    #[test]
    fn prior_normalization_matches_log_width() {
        let s = default_window();
        assert_relative_eq!(
            s.prior_normalization(),
            1.0 / (2.0 * 10f64.ln()),
            max_relative = 1e-15
        );
    }

    #[test]
    fn rejects_too_few_nodes() {
        assert_eq!(build_grid(default_window(), 1), Err(Error::TooFewNodes(1)));
        assert_eq!(build_grid(default_window(), 0), Err(Error::TooFewNodes(0)));
    }

    #[test]
    fn three_nodes_hit_the_geometric_midpoint() {
        let g = build_grid(default_window(), 3).unwrap();
        let u = g.u_nodes();
        assert_relative_eq!(u[0], 0.1f64.ln(), max_relative = 1e-15);
        assert!(u[1].abs() < 1e-15);
        assert_relative_eq!(u[2], 10f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn weights_sum_to_log_width_for_any_size() {
        for n in [2, 3, 5, 6, 7, 11, 100, 2001] {
            let g = build_grid(default_window(), n).unwrap();
            assert!(g.weights().iter().all(|&w| w > 0.0));
            let sum: f64 = g.weights().iter().sum();
            assert_relative_eq!(sum, 100f64.ln(), max_relative = 1e-12);
        }
    }

    #[test]
    fn endpoints_are_exact() {
        let g = build_grid(Support::new(0.3, 7.0).unwrap(), 101).unwrap();
        assert_eq!(g.u_nodes()[0], 0.3f64.ln());
        assert_eq!(g.u_nodes()[100], 7f64.ln());
    }

    #[test]
    fn prior_integrates_to_one() {
        let g = build_grid(default_window(), DEFAULT_NODE_COUNT).unwrap();
        assert_relative_eq!(g.prior_expectation(|_| 1.0), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn prior_mean_temperature() {
        // ∫ y p(θ) dθ = (y_max - y_min) / ln(y_max / y_min)
        let g = build_grid(default_window(), DEFAULT_NODE_COUNT).unwrap();
        let exact = 9.9 / 100f64.ln();
        assert_relative_eq!(g.prior_expectation(|y| y), exact, max_relative = 1e-8);
    }

    #[test]
    fn integrate_examples() {
        let g = build_grid(default_window(), DEFAULT_NODE_COUNT).unwrap();
        let ones = vec![1.0; g.node_count()];
        assert_relative_eq!(
            g.integrate(&ones).unwrap(),
            100f64.ln(),
            max_relative = 1e-12
        );
        let odd: Vec<f64> = g.u_nodes().to_vec();
        assert!(g.integrate(&odd).unwrap().abs() < 1e-12);

        let g = build_grid(Support::new(1.0, E).unwrap(), DEFAULT_NODE_COUNT).unwrap();
        let exp: Vec<f64> = g.u_nodes().iter().map(|u| u.exp()).collect();
        assert_relative_eq!(g.integrate(&exp).unwrap(), E - 1.0, max_relative = 1e-8);
    }

    #[test]
    fn integrate_rejects_bad_input() {
        let g = build_grid(default_window(), 11).unwrap();
        assert_eq!(
            g.integrate(&[1.0; 10]),
            Err(Error::LengthMismatch {
                expected: 11,
                got: 10
            })
        );
        let mut v = vec![1.0; 11];
        v[4] = f64::NAN;
        assert!(matches!(
            g.integrate(&v),
            Err(Error::NonFiniteValue { index: 4, .. })
        ));
    }

    #[test]
    fn refinement_changes_smooth_integrals_negligibly() {
        let f = |y: f64| y * (0.5 / y).cosh().powi(2);
        let coarse = build_grid(default_window(), 2001)
            .unwrap()
            .prior_expectation(f);
        let fine = build_grid(default_window(), 4001)
            .unwrap()
            .prior_expectation(f);
        assert!(((coarse - fine) / fine).abs() < 1e-8);
    }

    #[test]
    fn reference_shifts_nodes_only() {
        let a = LogGrid::with_reference(default_window(), 51, 1.0).unwrap();
        let b = LogGrid::with_reference(default_window(), 51, 3.7).unwrap();
        for i in 0..51 {
            assert_relative_eq!(a.temperature(i), b.temperature(i), max_relative = 1e-14);
        }
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_relative_eq!(
            log_sum_exp(&[-1000.0, -1000.0]),
            -1000.0 + 2f64.ln(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            log_sum_exp(&[0.0, 1.0f64.ln()]),
            2f64.ln(),
            max_relative = 1e-15
        );
    }
}
