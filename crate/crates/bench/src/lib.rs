//! Fixtures shared by the criterion benches.

use thermometry_core::{sample, ModelSpec, OscillatorModel, RngStream, SpinGasModel, Support};

pub fn default_support() -> Support {
    Support::new(0.1, 10.0).expect("valid support")
}

/// Seeded spin-gas record for `n = 150` spins at `y = 4`.
pub fn spin_gas_record(mu: usize) -> Vec<u32> {
    let spec = ModelSpec::SpinGas(SpinGasModel::new(150));
    let trace = sample(&spec, 4.0, mu, &mut RngStream::new(1)).expect("valid request");
    match trace.outcomes {
        thermometry_core::Outcomes::Counts(c) => c,
        thermometry_core::Outcomes::Positions(_) => unreachable!(),
    }
}

/// Seeded oscillator positions at `y = 6`.
pub fn oscillator_positions(mu: usize) -> Vec<f64> {
    let spec = ModelSpec::Oscillator(OscillatorModel::new());
    let trace = sample(&spec, 6.0, mu, &mut RngStream::new(3)).expect("valid request");
    match trace.outcomes {
        thermometry_core::Outcomes::Positions(p) => p,
        thermometry_core::Outcomes::Counts(_) => unreachable!(),
    }
}
