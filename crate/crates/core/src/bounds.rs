//! Precision limits for the spin gas: the global optimum `ε_opt = ε_p − K`,
//! the local Cramér–Rao-like bound `ε_cr`, the non-invariant comparator
//! `ε̄ = ∫ p(θ)/F(θ) dθ`, and the power-law fit of `ε_cr − ε_opt`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{LogGrid, Support};
use crate::models::{SpinGasModel, ThermalModel};

/// Largest spin count whose outcomes are enumerated exactly.
pub const MAX_ENUMERATED_SPINS: u32 = 1_000_000;

/// Outcomes with `p(r)` below this are dropped from the sums.
const LOG_TINY_MASS: f64 = -690.7755278982137; // ln(1e-300)

const MAX_DROPPED_MASS: f64 = 1e-12;

const DECOMPOSITION_TOLERANCE: f64 = 1e-8;

/// `ε_opt` together with its prior and information-gain parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalOptimum {
    pub eps_opt: f64,
    pub eps_p: f64,
    pub info_gain: f64,
}

/// All bounds for one probe size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub n: u32,
    pub eps_opt: f64,
    pub eps_cr: f64,
    pub eps_p: f64,
    pub info_gain: f64,
    pub eps_flat: f64,
}

/// Per-outcome summary: `ln p(r)` and the posterior mean of `u`.
#[derive(Debug, Clone, Copy)]
struct OutcomeSummary {
    log_marginal: f64,
    mean_log: f64,
}

/// Mean logarithmic error of the optimal estimator for a single
/// measurement, summing exactly over all `n + 1` outcomes.
///
/// `ε_opt = ∫ p(θ) u² − Σ_r p(r) ū(r)²` is computed directly and checked
/// against `ε_p − K` with `K = Σ_r p(r) (ū(r) − ū_p)²`.
pub fn eps_opt(model: &SpinGasModel, support: Support, node_count: usize) -> Result<GlobalOptimum> {
    if model.n() > MAX_ENUMERATED_SPINS {
        return Err(Error::EnumerationTooLarge {
            outcomes: model.n() as u64 + 1,
            cap: MAX_ENUMERATED_SPINS as u64 + 1,
        });
    }
    let grid = LogGrid::with_reference(support, node_count, model.energy_scale())?;
    let u = grid.u_nodes();
    let prior = support.prior_normalization();
    let log_prior_weight: Vec<f64> = grid.weights().iter().map(|w| (w * prior).ln()).collect();
    let ratio: Vec<f64> = grid
        .temperatures()
        .iter()
        .map(|y| model.energy_scale() / y)
        .collect();
    let log_binomial: Vec<f64> = (0..=model.n()).map(|r| model.log_binomial(r)).collect();

    // Normalize p(r|u_j) numerically at each node so that Σ_r p(r|u_j) = 1
    // holds to rounding regardless of log-gamma error.
    let log_norm: Vec<f64> = ratio
        .par_iter()
        .map(|&a| {
            let terms: Vec<f64> = log_binomial
                .iter()
                .enumerate()
                .map(|(r, lb)| lb - r as f64 * a)
                .collect();
            crate::grid::log_sum_exp(&terms)
        })
        .collect();

    let summaries: Vec<Option<OutcomeSummary>> = (0..=model.n() as usize)
        .into_par_iter()
        .map(|r| {
            let lb = log_binomial[r];
            let rf = r as f64;
            let mut max = f64::NEG_INFINITY;
            let mut terms = Vec::with_capacity(u.len());
            for j in 0..u.len() {
                let v = log_prior_weight[j] + lb - rf * ratio[j] - log_norm[j];
                max = max.max(v);
                terms.push(v);
            }
            if max + (u.len() as f64).ln() < LOG_TINY_MASS {
                return None;
            }
            let (mut mass, mut first) = (0.0, 0.0);
            for (v, uj) in terms.iter().zip(u) {
                let e = (v - max).exp();
                mass += e;
                first += e * uj;
            }
            Some(OutcomeSummary {
                log_marginal: max + mass.ln(),
                mean_log: first / mass,
            })
        })
        .collect();

    let mut dropped = 0.0;
    let mut kept = Vec::with_capacity(summaries.len());
    for s in summaries.into_iter().flatten() {
        if s.log_marginal < LOG_TINY_MASS {
            dropped += s.log_marginal.exp();
        } else {
            kept.push((s.log_marginal.exp(), s.mean_log));
        }
    }
    // Skipped outcomes each carry at most 1e-300 by construction.
    if dropped > MAX_DROPPED_MASS {
        return Err(Error::TailMassTooLarge(dropped));
    }

    let prior_mean = grid.integrate_fn(|u| u) * prior;
    let prior_second = grid.integrate_fn(|u| u * u) * prior;
    let eps_p = prior_second - prior_mean * prior_mean;
    let eps_direct = prior_second - kept.iter().map(|(p, m)| p * m * m).sum::<f64>();
    let info_gain: f64 = kept.iter().map(|(p, m)| p * (m - prior_mean).powi(2)).sum();

    let decomposed = eps_p - info_gain;
    if (eps_direct - decomposed).abs()
        > DECOMPOSITION_TOLERANCE * eps_direct.abs().max(f64::MIN_POSITIVE)
    {
        return Err(Error::DecompositionMismatch {
            eps_opt: eps_direct,
            decomposed,
        });
    }
    Ok(GlobalOptimum {
        eps_opt: eps_direct,
        eps_p,
        info_gain,
    })
}

/// Local bound `ε_cr = ∫ dθ p(θ) / (θ² F(θ))`.
pub fn eps_cr<M: ThermalModel>(model: &M, support: Support, node_count: usize) -> Result<f64> {
    prior_average_inverse_fisher(model, support, node_count, |y, f| 1.0 / (y * y * f))
}

/// Non-invariant comparator `ε̄ = ∫ dθ p(θ) / F(θ)`; carries units of
/// temperature squared.
pub fn eps_flat<M: ThermalModel>(model: &M, support: Support, node_count: usize) -> Result<f64> {
    prior_average_inverse_fisher(model, support, node_count, |_, f| 1.0 / f)
}

fn prior_average_inverse_fisher<M: ThermalModel>(
    model: &M,
    support: Support,
    node_count: usize,
    integrand: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let grid = LogGrid::with_reference(support, node_count, model.energy_scale())?;
    let values = grid
        .temperatures()
        .into_iter()
        .map(|y| {
            let f = model.fisher_information(y)?;
            if f > 0.0 {
                Ok(integrand(y, f))
            } else {
                Err(Error::ZeroFisherInformation(y))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(grid.integrate(&values)? * support.prior_normalization())
}

/// All bounds at one spin count. With no spins the Fisher-based bounds
/// are infinite.
pub fn bound_point(
    model: &SpinGasModel,
    support: Support,
    node_count: usize,
) -> Result<BoundPoint> {
    let opt = eps_opt(model, support, node_count)?;
    let (cr, flat) = if model.n() == 0 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (
            eps_cr(model, support, node_count)?,
            eps_flat(model, support, node_count)?,
        )
    };
    Ok(BoundPoint {
        n: model.n(),
        eps_opt: opt.eps_opt,
        eps_cr: cr,
        eps_p: opt.eps_p,
        info_gain: opt.info_gain,
        eps_flat: flat,
    })
}

/// Bound points for each spin count, computed in parallel. Output order
/// follows `counts`.
pub fn sweep(
    counts: &[u32],
    energy_scale: f64,
    support: Support,
    node_count: usize,
) -> Result<Vec<BoundPoint>> {
    counts
        .par_iter()
        .map(|&n| {
            bound_point(
                &SpinGasModel::with_energy_scale(n, energy_scale)?,
                support,
                node_count,
            )
        })
        .collect()
}

/// `count` integers log-spaced between `lo` and `hi` inclusive.
pub fn log_spaced_counts(lo: u32, hi: u32, count: usize) -> Vec<u32> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u32> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u32)
        .collect();
    out.dedup();
    out
}

/// Least-squares fit `ln(ε_cr − ε_opt) = q ln n + ln b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub q: f64,
    pub log_b: f64,
    pub stderr_q: f64,
    pub stderr_log_b: f64,
    pub n_values: Vec<u32>,
    pub residuals: Vec<f64>,
}

impl AsymptoticFit {
    pub fn b(&self) -> f64 {
        self.log_b.exp()
    }
}

/// Fits the power law to at least five points with `ε_cr > ε_opt > 0`.
pub fn fit_asymptotic(points: &[BoundPoint]) -> Result<AsymptoticFit> {
    const MIN_POINTS: usize = 5;
    if points.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            need: MIN_POINTS,
            got: points.len(),
        });
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for p in points {
        let gap = p.eps_cr - p.eps_opt;
        if !(gap > 0.0 && p.eps_opt > 0.0 && p.n > 0) {
            return Err(Error::NonPositiveGap { n: p.n, gap });
        }
        xs.push((p.n as f64).ln());
        ys.push(gap.ln());
    }
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::SingularFit);
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let q = sxy / sxx;
    let log_b = y_mean - q * x_mean;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (q * x + log_b))
        .collect();
    let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / (m - 2.0);
    Ok(AsymptoticFit {
        q,
        log_b,
        stderr_q: (s2 / sxx).sqrt(),
        stderr_log_b: (s2 * (1.0 / m + x_mean * x_mean / sxx)).sqrt(),
        n_values: points.iter().map(|p| p.n).collect(),
        residuals,
    })
}

/// Smallest probe size at which `|ε_cr − ε_opt| = τ ε_opt`, given
/// `ε_opt ≈ c1/n − c2 n^q`:  `n = [(c2/c1)(1 + 1/τ)]^{1/(−1−q)}`.
pub fn tolerance_spins(tau: f64, c1: f64, c2: f64, q: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
            reason: "must lie in (0, 1)",
        });
    }
    for (name, value) in [("c1", c1), ("c2", c2)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter {
                name,
                value,
                reason: "must be positive and finite",
            });
        }
    }
    if q.is_nan() || q >= -1.0 {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            reason: "must be below -1",
        });
    }
    Ok(((c2 / c1) * (1.0 + 1.0 / tau)).powf(1.0 / (-1.0 - q)))
}
