//! Brute-force Fisher information for discrete models, used as test oracles
//! against the closed forms. Not meant for production paths.

use super::{OutcomeKind, SpinGasModel, ThermalModel};
use crate::error::{check_temperature, Error, Result};

/// `Σ_r p(r|y) (∂_y ln p(r|y))²` with the analytic spin-gas score.
pub fn spin_gas_fisher_by_enumeration(model: &SpinGasModel, y: f64) -> Result<f64> {
    check_temperature(y)?;
    (0..=model.n()).try_fold(0.0, |acc, r| {
        let p = model.log_likelihood(r, y)?.exp();
        let s = model.score(r, y)?;
        Ok(acc + p * s * s)
    })
}

/// Fisher information of any discrete model from central differences of
/// `ln p` (step `1e-5 y`), summed over every outcome.
pub fn fisher_by_finite_difference<M>(model: &M, y: f64) -> Result<f64>
where
    M: ThermalModel<Outcome = u32>,
{
    check_temperature(y)?;
    let OutcomeKind::Discrete { max } = model.outcome_kind() else {
        return Err(Error::NoFisherInformation(model.identifier()));
    };
    let h = 1e-5 * y;
    (0..=max).try_fold(0.0, |acc, r| {
        let p = model.log_likelihood(r, y)?.exp();
        let s = (model.log_likelihood(r, y + h)? - model.log_likelihood(r, y - h)?) / (2.0 * h);
        Ok(acc + p * s * s)
    })
}
