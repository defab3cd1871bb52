//! Seeded measurement records: inverse-CDF sampling for the spin gas and
//! Gaussian sampling for the oscillator.

use std::fmt::Write as _;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{check_temperature, Error, Result};
use crate::models::{ModelSpec, OscillatorModel, SpinGasModel, ThermalModel};

/// Above this many outcomes the CDF is inverted by binary search.
const LINEAR_SCAN_LIMIT: usize = 1_000;

/// Deterministic uniform stream on ChaCha8, seeded from a `u64`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    draws: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            draws: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Stream for task `index` of a parallel run: seed `seed + index`.
    pub fn for_task(seed: u64, index: u64) -> Self {
        Self::new(seed.wrapping_add(index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 64-bit words consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by the Marsaglia polar method.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let a = 2.0 * self.uniform() - 1.0;
            let b = 2.0 * self.uniform() - 1.0;
            let s = a * a + b * b;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(b * f);
                return a * f;
            }
        }
    }
}

/// Outcomes of a simulated record.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcomes {
    Counts(Vec<u32>),
    Positions(Vec<f64>),
}

impl Outcomes {
    pub fn len(&self) -> usize {
        match self {
            Self::Counts(v) => v.len(),
            Self::Positions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A simulated measurement record with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub model: ModelSpec,
    pub true_y: f64,
    pub seed: u64,
    pub outcomes: Outcomes,
}

impl Trace {
    /// One outcome per row after a `#` line recording model, parameters
    /// and seed. Positions are written with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# trace {} true_y={:.16e} seed={} mu={}",
            self.model,
            self.true_y,
            self.seed,
            self.outcomes.len()
        );
        out.push_str("outcome\n");
        match &self.outcomes {
            Outcomes::Counts(v) => v.iter().for_each(|r| {
                let _ = writeln!(out, "{r}");
            }),
            Outcomes::Positions(v) => v.iter().for_each(|x| {
                let _ = writeln!(out, "{x:.16e}");
            }),
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let fail = |msg: &str| Error::TraceFormat(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        // Other comment lines may precede the trace header.
        let fields = loop {
            let line = lines
                .next()
                .ok_or_else(|| fail("missing '# trace' header"))?;
            if let Some(fields) = line.strip_prefix("# trace") {
                break fields;
            }
            if !line.starts_with('#') {
                return Err(fail("missing '# trace' header"));
            }
        };
        let mut model = None;
        let mut n = None;
        let mut gap = 1.0;
        let mut true_y = None;
        let mut seed = None;
        let mut mu = None;
        for kv in fields.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| fail("malformed header field"))?;
            let bad = |_| Error::TraceFormat(format!("bad value for {k}: {v}"));
            match k {
                "model" => model = Some(v.to_string()),
                "n" => n = Some(v.parse::<u32>().map_err(|e| bad(e.to_string()))?),
                "gap" => gap = v.parse::<f64>().map_err(|e| bad(e.to_string()))?,
                "true_y" => true_y = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                "mu" => mu = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                _ => {}
            }
        }
        let model =
            ModelSpec::from_identifier(&model.ok_or_else(|| fail("header lacks model"))?, n, gap)?;
        if lines.next().map(str::trim) != Some("outcome") {
            return Err(fail("missing 'outcome' column header"));
        }
        let rows: Vec<&str> = lines.map(str::trim).collect();
        let outcomes = match model {
            ModelSpec::SpinGas(m) => Outcomes::Counts(
                rows.iter()
                    .map(|r| {
                        let v = r.parse::<u32>().map_err(|_| {
                            Error::TraceFormat(format!("bad spin-gas outcome '{r}'"))
                        })?;
                        m.check_outcome(v)?;
                        Ok(v)
                    })
                    .collect::<Result<_>>()?,
            ),
            ModelSpec::Oscillator(m) => Outcomes::Positions(
                rows.iter()
                    .map(|r| {
                        let v = r
                            .parse::<f64>()
                            .map_err(|_| Error::TraceFormat(format!("bad position '{r}'")))?;
                        m.check_outcome(v)?;
                        Ok(v)
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        if let Some(mu) = mu {
            if mu != outcomes.len() {
                return Err(Error::TraceFormat(format!(
                    "header declares {mu} outcomes, found {}",
                    outcomes.len()
                )));
            }
        }
        Ok(Self {
            model,
            true_y: true_y.ok_or_else(|| fail("header lacks true_y"))?,
            seed: seed.ok_or_else(|| fail("header lacks seed"))?,
            outcomes,
        })
    }
}

/// Smallest `r` with `cdf[r] ≥ u`; `cdf.len() - 1` if rounding leaves the
/// final entry below `u`.
pub fn invert_cdf(cdf: &[f64], u: f64) -> u32 {
    let last = cdf.len() - 1;
    let r = if cdf.len() > LINEAR_SCAN_LIMIT {
        cdf.partition_point(|&f| f < u)
    } else {
        cdf.iter().position(|&f| f >= u).unwrap_or(last)
    };
    r.min(last) as u32
}

fn check_count(mu: usize) -> Result<()> {
    if mu == 0 {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: 0.0,
            reason: "need at least one outcome",
        });
    }
    Ok(())
}

/// `mu` i.i.d. spin-gas outcomes at `true_y` by CDF inversion.
pub fn sample_spin_gas(
    model: &SpinGasModel,
    true_y: f64,
    mu: usize,
    rng: &mut RngStream,
) -> Result<Trace> {
    check_temperature(true_y)?;
    check_count(mu)?;
    let seed = rng.seed();
    let cdf = model.outcome_cdf(true_y)?;
    let outcomes = (0..mu).map(|_| invert_cdf(&cdf, rng.uniform())).collect();
    Ok(Trace {
        model: ModelSpec::SpinGas(*model),
        true_y,
        seed,
        outcomes: Outcomes::Counts(outcomes),
    })
}

/// `mu` zero-mean Gaussian positions with variance `σ²(true_y)`.
pub fn sample_oscillator(
    model: &OscillatorModel,
    true_y: f64,
    mu: usize,
    rng: &mut RngStream,
) -> Result<Trace> {
    check_count(mu)?;
    let sd = model.variance(true_y)?.sqrt();
    let seed = rng.seed();
    let outcomes = (0..mu).map(|_| sd * rng.standard_normal()).collect();
    Ok(Trace {
        model: ModelSpec::Oscillator(*model),
        true_y,
        seed,
        outcomes: Outcomes::Positions(outcomes),
    })
}

/// Dispatches on the model kind.
pub fn sample(model: &ModelSpec, true_y: f64, mu: usize, rng: &mut RngStream) -> Result<Trace> {
    match model {
        ModelSpec::SpinGas(m) => sample_spin_gas(m, true_y, mu, rng),
        ModelSpec::Oscillator(m) => sample_oscillator(m, true_y, mu, rng),
    }
}
