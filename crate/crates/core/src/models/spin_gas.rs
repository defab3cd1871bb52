use statrs::function::gamma::ln_gamma;

use super::{check_energy_scale, sech, OutcomeKind, ThermalModel};
use crate::error::{check_temperature, Error, Result};

/// Total-energy measurement on `n` non-interacting two-level systems with
/// gap `energy_scale`. The outcome `r` counts excited spins:
///
/// `p(r | y) = C(n, r) exp(-r a) / (1 + exp(-a))^n`, with `a = energy_scale / y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinGasModel {
    n: u32,
    energy_scale: f64,
}

impl SpinGasModel {
    pub const IDENTIFIER: &'static str = "spin-gas";

    /// Gas of `n` spins with unit gap. `n = 0` is a valid degenerate gas.
    pub fn new(n: u32) -> Self {
        Self {
            n,
            energy_scale: 1.0,
        }
    }

    pub fn with_energy_scale(n: u32, energy_scale: f64) -> Result<Self> {
        Ok(Self {
            n,
            energy_scale: check_energy_scale(energy_scale)?,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Same gas with the gap multiplied by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        Self::with_energy_scale(self.n, gamma * self.energy_scale)
    }

    fn ratio(&self, y: f64) -> Result<f64> {
        Ok(self.energy_scale / check_temperature(y)?)
    }

    /// `ln C(n, r)` via log-gamma.
    pub fn log_binomial(&self, r: u32) -> f64 {
        let n = self.n as f64;
        let r = r as f64;
        ln_gamma(n + 1.0) - ln_gamma(r + 1.0) - ln_gamma(n - r + 1.0)
    }

    /// `ln Z = n ln(1 + exp(-a))`.
    pub fn log_partition(&self, y: f64) -> Result<f64> {
        let a = self.ratio(y)?;
        Ok(self.n as f64 * (-a).exp().ln_1p())
    }

    /// Mean number of excited spins, `n / (exp(a) + 1)`.
    pub fn mean_excitations(&self, y: f64) -> Result<f64> {
        let a = self.ratio(y)?;
        Ok(self.n as f64 * fermi(a))
    }

    /// `∂_y ln p(r | y) = (a / y) (r - n / (exp(a) + 1))`.
    pub fn score(&self, r: u32, y: f64) -> Result<f64> {
        self.check_outcome(r)?;
        let a = self.ratio(y)?;
        Ok(a / y * (r as f64 - self.n as f64 * fermi(a)))
    }

    /// Cumulative distribution `f(r) = Σ_{m ≤ r} p(m | y)` for `r = 0..=n`.
    pub fn outcome_cdf(&self, y: f64) -> Result<Vec<f64>> {
        let a = self.ratio(y)?;
        let log_z = self.n as f64 * (-a).exp().ln_1p();
        let mut total = 0.0;
        Ok((0..=self.n)
            .map(|r| {
                total += (self.log_binomial(r) - r as f64 * a - log_z).exp();
                total
            })
            .collect())
    }
}

/// Occupation `1 / (exp(a) + 1)`.
fn fermi(a: f64) -> f64 {
    let e = (-a).exp();
    e / (1.0 + e)
}

impl ThermalModel for SpinGasModel {
    type Outcome = u32;

    fn identifier(&self) -> &'static str {
        Self::IDENTIFIER
    }

    fn outcome_kind(&self) -> OutcomeKind {
        OutcomeKind::Discrete { max: self.n }
    }

    fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    fn check_outcome(&self, r: u32) -> Result<()> {
        if r > self.n {
            return Err(Error::OutcomeOutOfRange {
                outcome: r as u64,
                max: self.n as u64,
            });
        }
        Ok(())
    }

    fn log_likelihood(&self, r: u32, y: f64) -> Result<f64> {
        self.check_outcome(r)?;
        let a = self.ratio(y)?;
        Ok(self.log_binomial(r) - r as f64 * a - self.n as f64 * (-a).exp().ln_1p())
    }

    /// `F(y) = n a² / (4 y² cosh²(a/2))`.
    fn fisher_information(&self, y: f64) -> Result<f64> {
        let a = self.ratio(y)?;
        let s = sech(0.5 * a);
        Ok(self.n as f64 * (a * s / y).powi(2) / 4.0)
    }

    /// Uses the sufficient statistic `Σ r`; binomial factors are dropped.
    fn record_log_likelihood(&self, record: &[u32], temperatures: &[f64]) -> Result<Vec<f64>> {
        let mut total = 0.0;
        for &r in record {
            self.check_outcome(r)?;
            total += r as f64;
        }
        let spins = record.len() as f64 * self.n as f64;
        temperatures
            .iter()
            .map(|&y| {
                let a = self.ratio(y)?;
                Ok(-total * a - spins * (-a).exp().ln_1p())
            })
            .collect()
    }
}
