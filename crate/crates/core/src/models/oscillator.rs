use std::f64::consts::PI;

use super::{check_energy_scale, OutcomeKind, ThermalModel};
use crate::error::{check_temperature, Error, Result};

/// Position measurement on a thermal harmonic oscillator. Outcomes are the
/// dimensionless coordinate `x = q √(mω/ħ)`, Gaussian with variance
/// `σ²(y) = ½ coth(a/2)`, `a = energy_scale / y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorModel {
    energy_scale: f64,
}

impl Default for OscillatorModel {
    fn default() -> Self {
        Self { energy_scale: 1.0 }
    }
}

impl OscillatorModel {
    pub const IDENTIFIER: &'static str = "oscillator";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_energy_scale(energy_scale: f64) -> Result<Self> {
        Ok(Self {
            energy_scale: check_energy_scale(energy_scale)?,
        })
    }

    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        Self::with_energy_scale(gamma * self.energy_scale)
    }

    /// Position variance `½ coth(a/2)`; tends to ½ as `y → 0`.
    pub fn variance(&self, y: f64) -> Result<f64> {
        let a = self.energy_scale / check_temperature(y)?;
        Ok(0.5 / (0.5 * a).tanh())
    }

    /// Inverse of [`variance`](Self::variance): `y = energy_scale / (2 arcoth(2σ²))`.
    pub fn temperature_from_variance(&self, variance: f64) -> Result<f64> {
        if !(variance.is_finite() && variance > 0.5) {
            return Err(Error::InversionUndefined(variance));
        }
        let z = 2.0 * variance;
        Ok(self.energy_scale / (2.0 / (z - 1.0)).ln_1p())
    }
}

impl ThermalModel for OscillatorModel {
    type Outcome = f64;

    fn identifier(&self) -> &'static str {
        Self::IDENTIFIER
    }

    fn outcome_kind(&self) -> OutcomeKind {
        OutcomeKind::Continuous
    }

    fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    fn check_outcome(&self, x: f64) -> Result<()> {
        if x.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteOutcome(x))
        }
    }

    fn log_likelihood(&self, x: f64, y: f64) -> Result<f64> {
        self.check_outcome(x)?;
        let v = self.variance(y)?;
        Ok(-x * x / (2.0 * v) - 0.5 * (2.0 * PI * v).ln())
    }

    /// Gaussian scale family: `F = (∂_y σ²)² / (2σ⁴) = a² / (2 y² sinh²(a))`.
    fn fisher_information(&self, y: f64) -> Result<f64> {
        let a = self.energy_scale / check_temperature(y)?;
        if a > 350.0 {
            return Ok(0.0);
        }
        Ok((a / (y * a.sinh())).powi(2) / 2.0)
    }

    /// Uses the sufficient statistic `Σ x²`.
    fn record_log_likelihood(&self, record: &[f64], temperatures: &[f64]) -> Result<Vec<f64>> {
        let mut squares = 0.0;
        for &x in record {
            self.check_outcome(x)?;
            squares += x * x;
        }
        let count = record.len() as f64;
        temperatures
            .iter()
            .map(|&y| {
                let v = self.variance(y)?;
                Ok(-squares / (2.0 * v) - 0.5 * count * (2.0 * PI * v).ln())
            })
            .collect()
    }
}
