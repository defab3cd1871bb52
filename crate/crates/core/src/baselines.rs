//! Comparison estimators: the local Cramér–Rao estimator for the spin gas
//! and Gaussian histogram fitting for the oscillator.

use crate::error::{check_temperature, Error, Result};
use crate::models::{OscillatorModel, SpinGasModel, ThermalModel};

const GN_MAX_ITERATIONS: usize = 100;
const GN_STEP_TOLERANCE: f64 = 1e-10;

/// Local estimate linearized around the hint `theta0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEstimate {
    pub theta0: f64,
    pub theta_l: f64,
    pub delta_l: f64,
}

/// `θ_L = θ₀ + score(θ₀) / (μ F(θ₀))` and `Δ_L = 1/√(μ F(θ₀))`.
///
/// For the spin gas with `a₀ = ħω/θ₀` this is affine in the mean outcome:
/// `θ_L = θ₀ + (4θ₀² cosh²(a₀/2) / (n ħω)) (r̄ − n/(e^{a₀}+1))`.
pub fn local_estimate(model: &SpinGasModel, record: &[u32], theta0: f64) -> Result<LocalEstimate> {
    check_temperature(theta0)?;
    if record.is_empty() {
        return Err(Error::EmptyRecord);
    }
    if model.n() == 0 {
        return Err(Error::ZeroFisherInformation(theta0));
    }
    let mut total = 0.0;
    for &r in record {
        model.check_outcome(r)?;
        total += r as f64;
    }
    let mu = record.len() as f64;
    let n = model.n() as f64;
    let gap = model.energy_scale();
    let half = 0.5 * gap / theta0;
    let mean = total / mu;
    let slope = 4.0 * theta0 * theta0 * half.cosh().powi(2) / (n * gap);
    let theta_l = theta0 + slope * (mean - model.mean_excitations(theta0)?);
    let delta_l = 2.0 * theta0 * theta0 * half.cosh() / (gap * (mu * n).sqrt());
    Ok(LocalEstimate {
        theta0,
        theta_l,
        delta_l,
    })
}

/// Counts over equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `bin_count` bins over `[min − w, max + w]` where `w` is the bin width
    /// itself, i.e. `w = (max − min) / (bin_count − 2)`.
    pub fn padded(samples: &[f64], bin_count: usize) -> Result<Self> {
        if bin_count < 3 {
            return Err(Error::InvalidParameter {
                name: "bin_count",
                value: bin_count as f64,
                reason: "need at least 3 bins",
            });
        }
        if let Some(&x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFiniteOutcome(x));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / (bin_count - 2) as f64
        } else {
            1.0
        };
        let start = lo - width;
        let edges: Vec<f64> = (0..=bin_count).map(|i| start + i as f64 * width).collect();
        // Samples occupy bins 1..=k−2; the outer two stay empty.
        let mut counts = vec![0usize; bin_count];
        for &x in samples {
            let i = 1 + (((x - lo) / width).floor() as usize).min(bin_count - 3);
            counts[i] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    /// Counts normalized to a probability density.
    pub fn densities(&self) -> Vec<f64> {
        let total: usize = self.counts.iter().sum();
        let scale = 1.0 / (total as f64 * self.width());
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }
}

/// Least-squares fit of `A exp(−x²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    pub sigma: f64,
    pub sigma_stderr: f64,
    pub iterations: usize,
}

impl GaussianProfile {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (-x * x / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Gauss–Newton on `(A, σ)` with the analytic Jacobian, starting at
/// `initial`. Steps are halved while they increase the residual.
pub fn fit_gaussian_profile(
    xs: &[f64],
    values: &[f64],
    initial: (f64, f64),
) -> Result<GaussianProfile> {
    if xs.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: values.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints {
            need: 3,
            got: xs.len(),
        });
    }
    let (mut amp, mut sigma) = initial;
    let residual_sum = |a: f64, s: f64| -> f64 {
        xs.iter()
            .zip(values)
            .map(|(&x, &v)| (v - a * (-x * x / (2.0 * s * s)).exp()).powi(2))
            .sum()
    };
    let mut ssr = residual_sum(amp, sigma);
    for iteration in 1..=GN_MAX_ITERATIONS {
        let normal = normal_equations(xs, values, amp, sigma);
        let (da, ds) = solve_2x2(normal.jtj, normal.jtr).ok_or(Error::SingularFit)?;
        let mut step = 1.0;
        let (mut next_a, mut next_s, mut next_ssr);
        loop {
            next_a = amp + step * da;
            next_s = (sigma + step * ds).abs();
            next_ssr = residual_sum(next_a, next_s);
            if next_ssr <= ssr || step < 1e-6 {
                break;
            }
            step *= 0.5;
        }
        let moved = (step * da).abs() <= GN_STEP_TOLERANCE * amp.abs().max(1e-300)
            && (step * ds).abs() <= GN_STEP_TOLERANCE * sigma.abs().max(1e-300);
        amp = next_a;
        sigma = next_s;
        ssr = next_ssr;
        if moved || ssr == 0.0 {
            return Ok(profile_with_errors(xs, values, amp, sigma, ssr, iteration));
        }
    }
    Err(Error::FitDidNotConverge(GN_MAX_ITERATIONS))
}

struct Normal {
    jtj: [[f64; 2]; 2],
    jtr: [f64; 2],
}

fn normal_equations(xs: &[f64], values: &[f64], amp: f64, sigma: f64) -> Normal {
    let mut jtj = [[0.0; 2]; 2];
    let mut jtr = [0.0; 2];
    for (&x, &v) in xs.iter().zip(values) {
        let e = (-x * x / (2.0 * sigma * sigma)).exp();
        let j = [e, amp * e * x * x / sigma.powi(3)];
        let r = v - amp * e;
        for a in 0..2 {
            jtr[a] += j[a] * r;
            for b in 0..2 {
                jtj[a][b] += j[a] * j[b];
            }
        }
    }
    Normal { jtj, jtr }
}

fn solve_2x2(m: [[f64; 2]; 2], b: [f64; 2]) -> Option<(f64, f64)> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some((
        (b[0] * m[1][1] - b[1] * m[0][1]) / det,
        (m[0][0] * b[1] - m[1][0] * b[0]) / det,
    ))
}

fn profile_with_errors(
    xs: &[f64],
    values: &[f64],
    amp: f64,
    sigma: f64,
    ssr: f64,
    iterations: usize,
) -> GaussianProfile {
    let Normal { jtj, .. } = normal_equations(xs, values, amp, sigma);
    let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let s2 = ssr / dof;
    GaussianProfile {
        amplitude: amp,
        amplitude_stderr: (s2 * jtj[1][1] / det).sqrt(),
        sigma,
        sigma_stderr: (s2 * jtj[0][0] / det).sqrt(),
        iterations,
    }
}

/// Histogram-fit temperature estimate for oscillator positions.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFit {
    pub histogram: Histogram,
    pub profile: GaussianProfile,
    pub theta_f: f64,
    pub delta_f: f64,
}

/// `dθ/dσ` for `θ = ħω / ln((z+1)/(z−1))`, `z = 2σ²`.
fn temperature_sensitivity(model: &OscillatorModel, sigma: f64) -> f64 {
    let z = 2.0 * sigma * sigma;
    let log_ratio = (2.0 / (z - 1.0)).ln_1p();
    8.0 * model.energy_scale() * sigma / (log_ratio * log_ratio * (z * z - 1.0))
}

/// Fits the histogram of `samples` and inverts `σ² = ½ coth(ħω/2θ)`.
/// `bin_count` defaults to `⌈√μ⌉`.
pub fn histogram_fit_estimate(
    model: &OscillatorModel,
    samples: &[f64],
    bin_count: Option<usize>,
) -> Result<HistogramFit> {
    const MIN_SAMPLES: usize = 10;
    const MIN_BINS: usize = 5;
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewPoints {
            need: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let bins = bin_count.unwrap_or_else(|| (samples.len() as f64).sqrt().ceil() as usize);
    if bins < MIN_BINS {
        return Err(Error::InvalidParameter {
            name: "bin_count",
            value: bins as f64,
            reason: "need at least 5 bins",
        });
    }
    let histogram = Histogram::padded(samples, bins)?;
    let densities = histogram.densities();
    let peak = densities.iter().copied().fold(0.0, f64::max);
    let mu = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / mu;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (mu - 1.0)).sqrt();
    let profile = fit_gaussian_profile(&histogram.centers(), &densities, (peak, sd))?;
    let theta_f = model.temperature_from_variance(profile.sigma * profile.sigma)?;
    let delta_f = temperature_sensitivity(model, profile.sigma).abs() * profile.sigma_stderr;
    Ok(HistogramFit {
        histogram,
        profile,
        theta_f,
        delta_f,
    })
}
