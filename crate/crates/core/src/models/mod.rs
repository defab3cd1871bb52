//! Thermal likelihood models.
//!
//! Every model depends on temperature only through `energy_scale / y`, so
//! scaling the window and the energy quantum together leaves all
//! likelihoods unchanged.

pub mod oracle;
mod oscillator;
mod spin_gas;

pub use oscillator::OscillatorModel;
pub use spin_gas::SpinGasModel;

use std::fmt;

use crate::error::{check_temperature, Error, Result};

/// Shape of a model's outcome space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    /// Integers `0..=max`.
    Discrete {
        max: u32,
    },
    Continuous,
}

/// A normalized likelihood `p(outcome | y)` over a dimensionless
/// temperature `y`.
pub trait ThermalModel: Send + Sync {
    type Outcome: Copy + Send + Sync + fmt::Debug;

    fn identifier(&self) -> &'static str;

    fn outcome_kind(&self) -> OutcomeKind;

    /// The energy quantum `ħω` expressed in temperature units.
    fn energy_scale(&self) -> f64;

    fn check_outcome(&self, outcome: Self::Outcome) -> Result<()>;

    fn log_likelihood(&self, outcome: Self::Outcome, y: f64) -> Result<f64>;

    /// Fisher information with respect to `y`.
    fn fisher_information(&self, y: f64) -> Result<f64> {
        check_temperature(y)?;
        Err(Error::NoFisherInformation(self.identifier()))
    }

    /// `Σ_i ln p(record_i | y)` at each temperature, up to an additive
    /// constant that does not depend on `y`.
    fn record_log_likelihood(
        &self,
        record: &[Self::Outcome],
        temperatures: &[f64],
    ) -> Result<Vec<f64>> {
        for &o in record {
            self.check_outcome(o)?;
        }
        temperatures
            .iter()
            .map(|&y| {
                record
                    .iter()
                    .try_fold(0.0, |acc, &o| Ok(acc + self.log_likelihood(o, y)?))
            })
            .collect()
    }
}

/// A model chosen by identifier, as used by configuration files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    SpinGas(SpinGasModel),
    Oscillator(OscillatorModel),
}

impl ModelSpec {
    /// `"spin-gas"` needs `n`; `"oscillator"` ignores it.
    pub fn from_identifier(identifier: &str, n: Option<u32>, energy_scale: f64) -> Result<Self> {
        match identifier {
            SpinGasModel::IDENTIFIER => {
                let n = n.ok_or(Error::InvalidParameter {
                    name: "n",
                    value: f64::NAN,
                    reason: "spin-gas model needs a spin count",
                })?;
                Ok(Self::SpinGas(SpinGasModel::with_energy_scale(
                    n,
                    energy_scale,
                )?))
            }
            OscillatorModel::IDENTIFIER => Ok(Self::Oscillator(
                OscillatorModel::with_energy_scale(energy_scale)?,
            )),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    pub fn identifier(&self) -> &'static str {
        match self {
            Self::SpinGas(m) => m.identifier(),
            Self::Oscillator(m) => m.identifier(),
        }
    }

    pub fn energy_scale(&self) -> f64 {
        match self {
            Self::SpinGas(m) => m.energy_scale(),
            Self::Oscillator(m) => m.energy_scale(),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SpinGas(m) => write!(
                f,
                "model={} n={} gap={}",
                m.identifier(),
                m.n(),
                m.energy_scale()
            ),
            Self::Oscillator(m) => write!(f, "model={} gap={}", m.identifier(), m.energy_scale()),
        }
    }
}

pub(crate) fn check_energy_scale(energy_scale: f64) -> Result<f64> {
    if energy_scale.is_finite() && energy_scale > 0.0 {
        Ok(energy_scale)
    } else {
        Err(Error::InvalidParameter {
            name: "energy_scale",
            value: energy_scale,
            reason: "must be positive and finite",
        })
    }
}

/// `sech(x)` without overflow.
pub(crate) fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}
