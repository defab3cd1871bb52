//! Experiment configuration: a flat `key = value` file merged under
//! command-line flags, then resolved against per-command defaults.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thermometry_core::bounds::log_spaced_counts;
use thermometry_core::{ModelSpec, OscillatorModel, SpinGasModel, Support, DEFAULT_NODE_COUNT};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bounds,
    Sequential,
    Oscillator,
    Fit,
    Simulate,
    Estimate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::Sequential => "sequential",
            Command::Oscillator => "oscillator",
            Command::Fit => "fit",
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
        }
    }
}

/// Partially specified settings. Each source (flags, config file) fills
/// one of these; [`Overrides::or`] layers them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<String>,
    pub n: Option<u32>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub nodes: Option<usize>,
    pub true_y: Option<f64>,
    pub mu: Option<usize>,
    pub seed: Option<u64>,
    pub theta0: Option<f64>,
    pub n_sweep: Option<Vec<u32>>,
    pub tau: Option<f64>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value.parse().map_err(|_| {
        CliError::Config(format!(
            "line {line}: cannot parse '{value}' for key '{key}'"
        ))
    })
}

/// A spin count written as an integer or in exponent form (`1e5`).
pub fn parse_count(text: &str) -> Result<u32, String> {
    let s = text.trim();
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v >= 0.0 && v.fract() == 0.0 && *v <= u32::MAX as f64)
        .map(|v| v as u32)
        .ok_or_else(|| format!("'{s}' is not a non-negative integer spin count"))
}

pub fn parse_sweep(text: &str) -> Result<Vec<u32>, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_count)
        .collect()
}

impl Overrides {
    /// Parses `key = value` lines. Blank lines and `#` comments are
    /// skipped; keys accept `-` or `_` separators.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut o = Overrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "line {line_no}: expected key = value, got '{line}'"
                ))
            })?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "model" => o.model = Some(value.to_string()),
                "n" => o.n = Some(parse_value(&key, value, line_no)?),
                "ymin" | "y-min" => o.y_min = Some(parse_value(&key, value, line_no)?),
                "ymax" | "y-max" => o.y_max = Some(parse_value(&key, value, line_no)?),
                "nodes" => o.nodes = Some(parse_value(&key, value, line_no)?),
                "true-y" => o.true_y = Some(parse_value(&key, value, line_no)?),
                "mu" => o.mu = Some(parse_value(&key, value, line_no)?),
                "seed" => o.seed = Some(parse_value(&key, value, line_no)?),
                "theta0" => o.theta0 = Some(parse_value(&key, value, line_no)?),
                "tau" => o.tau = Some(parse_value(&key, value, line_no)?),
                "n-sweep" => {
                    o.n_sweep = Some(
                        parse_sweep(value)
                            .map_err(|e| CliError::Config(format!("line {line_no}: {e}")))?,
                    )
                }
                "out" => o.out = Some(PathBuf::from(value)),
                "input" => o.input = Some(PathBuf::from(value)),
                other => {
                    return Err(CliError::Config(format!(
                        "line {line_no}: unknown key '{other}'"
                    )))
                }
            }
        }
        Ok(o)
    }

    /// Fields set in `self` win over `fallback`.
    pub fn or(self, fallback: Overrides) -> Overrides {
        Overrides {
            model: self.model.or(fallback.model),
            n: self.n.or(fallback.n),
            y_min: self.y_min.or(fallback.y_min),
            y_max: self.y_max.or(fallback.y_max),
            nodes: self.nodes.or(fallback.nodes),
            true_y: self.true_y.or(fallback.true_y),
            mu: self.mu.or(fallback.mu),
            seed: self.seed.or(fallback.seed),
            theta0: self.theta0.or(fallback.theta0),
            n_sweep: self.n_sweep.or(fallback.n_sweep),
            tau: self.tau.or(fallback.tau),
            out: self.out.or(fallback.out),
            input: self.input.or(fallback.input),
        }
    }
}

/// Fully resolved and validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: ModelSpec,
    pub support: Support,
    pub node_count: usize,
    pub true_y: f64,
    pub mu: usize,
    pub seed: u64,
    pub theta0: Option<f64>,
    pub n_sweep: Vec<u32>,
    pub tau: f64,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "--{name} must be positive and finite, got {v}"
        )))
    }
}

impl ExperimentConfig {
    pub fn resolve(command: Command, o: Overrides) -> Result<Self, CliError> {
        let oscillator_default = command == Command::Oscillator;
        let model_id = o.model.clone().unwrap_or_else(|| {
            if oscillator_default {
                OscillatorModel::IDENTIFIER.to_string()
            } else {
                SpinGasModel::IDENTIFIER.to_string()
            }
        });
        let model = ModelSpec::from_identifier(&model_id, Some(o.n.unwrap_or(150)), 1.0)
            .map_err(|e| CliError::Config(format!("--model: {e}")))?;
        let is_oscillator = matches!(model, ModelSpec::Oscillator(_));
        match command {
            Command::Bounds | Command::Fit | Command::Sequential if is_oscillator => {
                return Err(CliError::Config(format!(
                    "the {} run needs --model spin-gas; use the oscillator subcommand for positions",
                    command.name()
                )))
            }
            Command::Oscillator if !is_oscillator => {
                return Err(CliError::Config("the oscillator run needs --model oscillator".into()))
            }
            _ => {}
        }

        let support = Support::new(o.y_min.unwrap_or(0.1), o.y_max.unwrap_or(10.0))
            .map_err(|e| CliError::Config(format!("--ymin/--ymax: {e}")))?;
        let node_count = o.nodes.unwrap_or(DEFAULT_NODE_COUNT);
        if node_count < 2 {
            return Err(CliError::Config(format!(
                "--nodes must be at least 2, got {node_count}"
            )));
        }
        let true_y = positive(
            "true-y",
            o.true_y.unwrap_or(if is_oscillator { 6.0 } else { 4.0 }),
        )?;
        let mu = o.mu.unwrap_or(if is_oscillator { 200 } else { 500 });
        if mu == 0 {
            return Err(CliError::Config("--mu must be at least 1".into()));
        }
        if command == Command::Oscillator && mu < 10 {
            return Err(CliError::Config(format!(
                "--mu must be at least 10 for the oscillator run (histogram fits need data), got {mu}"
            )));
        }
        let seed = o.seed.unwrap_or(if is_oscillator { 3 } else { 1 });
        let theta0 = match o.theta0 {
            Some(t) => Some(positive("theta0", t)?),
            None if command == Command::Sequential => Some(3.0),
            None => None,
        };
        let n_sweep = match o.n_sweep {
            Some(v) => v,
            None if command == Command::Fit => log_spaced_counts(100, 100_000, 12),
            None => log_spaced_counts(10, 100_000, 12),
        };
        if n_sweep.is_empty() {
            return Err(CliError::Config(
                "--n-sweep must list at least one spin count".into(),
            ));
        }
        let tau = o.tau.unwrap_or(0.05);
        if !(tau > 0.0 && tau < 1.0) {
            return Err(CliError::Config(format!(
                "--tau must lie in (0, 1), got {tau}"
            )));
        }
        if command == Command::Estimate && o.input.is_none() {
            return Err(CliError::Config("estimate needs a trace CSV path".into()));
        }
        Ok(Self {
            command,
            model,
            support,
            node_count,
            true_y,
            mu,
            seed,
            theta0,
            n_sweep,
            tau,
            out: o.out,
            input: o.input,
        })
    }

    /// Settings that determine the output, one `key=value` per line in a
    /// fixed order. The output path is excluded.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command.name());
        let _ = writeln!(s, "{}", self.model);
        let _ = writeln!(s, "ymin={:.16e}", self.support.y_min());
        let _ = writeln!(s, "ymax={:.16e}", self.support.y_max());
        let _ = writeln!(s, "nodes={}", self.node_count);
        let _ = writeln!(s, "true_y={:.16e}", self.true_y);
        let _ = writeln!(s, "mu={}", self.mu);
        let _ = writeln!(s, "seed={}", self.seed);
        match self.theta0 {
            Some(t) => _ = writeln!(s, "theta0={t:.16e}"),
            None => _ = writeln!(s, "theta0=none"),
        }
        let sweep: Vec<String> = self.n_sweep.iter().map(u32::to_string).collect();
        let _ = writeln!(s, "n_sweep={}", sweep.join(","));
        let _ = writeln!(s, "tau={:.16e}", self.tau);
        if let Some(p) = &self.input {
            let _ = writeln!(s, "input={}", p.display());
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Comment line opening every CSV this configuration produces.
    pub fn header(&self) -> String {
        format!(
            "# thermometry {VERSION} config={} seed={}",
            self.hash(),
            self.seed
        )
    }
}
