//! Experiment runners behind the `thermometry` binary. Each runner turns
//! an [`ExperimentConfig`] into one or more CSV artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use thermometry_core::baselines::{histogram_fit_estimate, local_estimate};
use thermometry_core::bounds::{bound_point, fit_asymptotic, tolerance_spins};
use thermometry_core::{
    global_estimate, sample, BoundPoint, DeviationParams, Error, GlobalEstimate, HistogramFit,
    LocalEstimate, ModelSpec, OscillatorModel, Outcomes, RngStream, SpinGasModel, ThermalModel,
    Trace,
};

pub mod config;

pub use config::{Command, ExperimentConfig, Overrides};

/// Constants of the nominal asymptote `c1/n − c2 n^q`.
pub const NOMINAL_C1: f64 = 51.7;
pub const NOMINAL_C2: f64 = 143.0;
pub const NOMINAL_Q: f64 = -1.25;

/// Prefix lengths at which the oscillator histogram is fitted.
pub const FIT_PREFIXES: [usize; 3] = [50, 100, 200];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Core(#[from] Error),
}

impl CliError {
    /// 1 for validation and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// One output file. The main artifact has an empty suffix; companions are
/// written next to it as `<stem>.<suffix>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub suffix: &'static str,
    pub contents: String,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// `c1/n − c2 n^q` with the nominal constants.
pub fn nominal_asymptote(n: u32) -> f64 {
    let n = n as f64;
    NOMINAL_C1 / n - NOMINAL_C2 * n.powf(NOMINAL_Q)
}

fn spin_gas(cfg: &ExperimentConfig) -> CliResult<SpinGasModel> {
    match cfg.model {
        ModelSpec::SpinGas(m) => Ok(m),
        ModelSpec::Oscillator(_) => Err(CliError::Config("this run needs --model spin-gas".into())),
    }
}

fn oscillator(cfg: &ExperimentConfig) -> CliResult<OscillatorModel> {
    match cfg.model {
        ModelSpec::Oscillator(m) => Ok(m),
        ModelSpec::SpinGas(_) => Err(CliError::Config("this run needs --model oscillator".into())),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Bound points for every `n` in the sweep, in sweep order.
pub fn bound_rows(cfg: &ExperimentConfig) -> CliResult<Vec<BoundPoint>> {
    let gap = spin_gas(cfg)?.energy_scale();
    Ok(cfg
        .n_sweep
        .par_iter()
        .map(|&n| {
            let model = SpinGasModel::with_energy_scale(n, gap)?;
            bound_point(&model, cfg.support, cfg.node_count)
        })
        .collect::<Result<Vec<_>, Error>>()?)
}

pub fn run_bounds(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let rows = bound_rows(cfg)?;
    let mut out = String::new();
    let _ = writeln!(out, "{}", cfg.header());
    out.push_str("n,eps_opt,eps_cr,eps_p,K,eps_flat,asymptote\n");
    for p in &rows {
        let asymptote = if p.n == 0 {
            f64::INFINITY
        } else {
            nominal_asymptote(p.n)
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.n,
            fmt(p.eps_opt),
            fmt(p.eps_cr),
            fmt(p.eps_p),
            fmt(p.info_gain),
            fmt(p.eps_flat),
            fmt(asymptote)
        );
    }
    Ok(vec![Artifact {
        suffix: "",
        contents: out,
    }])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialRow {
    pub m: usize,
    pub global: GlobalEstimate,
    pub local: Option<LocalEstimate>,
}

fn counts(trace: Trace) -> Vec<u32> {
    match trace.outcomes {
        Outcomes::Counts(c) => c,
        Outcomes::Positions(_) => unreachable!("spin-gas traces hold counts"),
    }
}

fn positions(trace: Trace) -> Vec<f64> {
    match trace.outcomes {
        Outcomes::Positions(p) => p,
        Outcomes::Counts(_) => unreachable!("oscillator traces hold positions"),
    }
}

/// Simulates one spin-gas record and estimates from every prefix.
pub fn sequential_rows(cfg: &ExperimentConfig) -> CliResult<Vec<SequentialRow>> {
    let model = spin_gas(cfg)?;
    let record = counts(sample(
        &cfg.model,
        cfg.true_y,
        cfg.mu,
        &mut RngStream::new(cfg.seed),
    )?);
    (1..=record.len())
        .map(|m| {
            let prefix = &record[..m];
            let global = global_estimate(
                &model,
                cfg.support,
                prefix,
                cfg.node_count,
                DeviationParams::default(),
            )?;
            let local = cfg
                .theta0
                .map(|t| local_estimate(&model, prefix, t))
                .transpose()?;
            Ok(SequentialRow { m, global, local })
        })
        .collect()
}

pub fn run_sequential(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let rows = sequential_rows(cfg)?;
    let mut out = String::new();
    let _ = writeln!(out, "{}", cfg.header());
    out.push_str("m,theta_hat,error_bar,eps_mle,edge_warning,theta_l,delta_l\n");
    for r in &rows {
        let (tl, dl) = r
            .local
            .map_or((f64::NAN, f64::NAN), |l| (l.theta_l, l.delta_l));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.m,
            fmt(r.global.theta_hat),
            fmt(r.global.error_bar),
            fmt(r.global.eps_mle),
            r.global.edge_warning,
            fmt(tl),
            fmt(dl)
        );
    }
    Ok(vec![Artifact {
        suffix: "",
        contents: out,
    }])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub mu: usize,
    pub result: Result<HistogramFit, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorRun {
    pub prefixes: Vec<(usize, GlobalEstimate)>,
    pub fits: Vec<FitRow>,
}

/// Simulates one oscillator trace, estimates from every prefix and fits
/// histograms at the prefixes in [`FIT_PREFIXES`] that the trace reaches.
/// Fit failures are recorded, not raised.
pub fn oscillator_run(cfg: &ExperimentConfig) -> CliResult<OscillatorRun> {
    let model = oscillator(cfg)?;
    let xs = positions(sample(
        &cfg.model,
        cfg.true_y,
        cfg.mu,
        &mut RngStream::new(cfg.seed),
    )?);
    let prefixes = (1..=xs.len())
        .map(|m| {
            let est = global_estimate(
                &model,
                cfg.support,
                &xs[..m],
                cfg.node_count,
                DeviationParams::default(),
            )?;
            Ok((m, est))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let fits = FIT_PREFIXES
        .iter()
        .filter(|&&mu| mu <= xs.len())
        .map(|&mu| FitRow {
            mu,
            result: histogram_fit_estimate(&model, &xs[..mu], None),
        })
        .collect();
    Ok(OscillatorRun { prefixes, fits })
}

pub fn run_oscillator(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let run = oscillator_run(cfg)?;
    let header = cfg.header();

    let mut main = String::new();
    let _ = writeln!(main, "{header}");
    main.push_str("m,theta_hat,error_bar,eps_mle,edge_warning\n");
    for (m, g) in &run.prefixes {
        let _ = writeln!(
            main,
            "{m},{},{},{},{}",
            fmt(g.theta_hat),
            fmt(g.error_bar),
            fmt(g.eps_mle),
            g.edge_warning
        );
    }

    let mut fits = String::new();
    let _ = writeln!(fits, "{header}");
    fits.push_str("mu,status,theta_f,delta_f,sigma,sigma_se,amplitude,amplitude_se\n");
    let mut bins = String::new();
    let _ = writeln!(bins, "{header}");
    bins.push_str("mu,left,right,count,density,fitted\n");
    for row in &run.fits {
        match &row.result {
            Ok(f) => {
                let p = &f.profile;
                let _ = writeln!(
                    fits,
                    "{},ok,{},{},{},{},{},{}",
                    row.mu,
                    fmt(f.theta_f),
                    fmt(f.delta_f),
                    fmt(p.sigma),
                    fmt(p.sigma_stderr),
                    fmt(p.amplitude),
                    fmt(p.amplitude_stderr)
                );
                let h = &f.histogram;
                for ((e, &c), d) in h.edges.windows(2).zip(&h.counts).zip(h.densities()) {
                    let centre = 0.5 * (e[0] + e[1]);
                    let _ = writeln!(
                        bins,
                        "{},{},{},{c},{},{}",
                        row.mu,
                        fmt(e[0]),
                        fmt(e[1]),
                        fmt(d),
                        fmt(p.eval(centre))
                    );
                }
            }
            Err(e) => {
                let status = format!("failed: {e}").replace(',', ";");
                let nan = fmt(f64::NAN);
                let _ = writeln!(
                    fits,
                    "{},{status},{nan},{nan},{nan},{nan},{nan},{nan}",
                    row.mu
                );
            }
        }
    }
    Ok(vec![
        Artifact {
            suffix: "",
            contents: main,
        },
        Artifact {
            suffix: "fits",
            contents: fits,
        },
        Artifact {
            suffix: "bins",
            contents: bins,
        },
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub fit: thermometry_core::AsymptoticFit,
    /// `n · ε_cr`, constant in `n`.
    pub c1: f64,
    pub n_tau: f64,
    pub n_tau_nominal: f64,
}

/// Reads bound rows from a CSV written by [`run_bounds`]. Rows with
/// `n < 100` are skipped.
pub fn parse_bounds_csv(text: &str) -> CliResult<Vec<BoundPoint>> {
    let bad = |msg: String| CliError::Config(format!("bounds CSV: {msg}"));
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("no header row".into()))?
        .split(',')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing column '{name}'")))
    };
    let (ci_n, ci_opt, ci_cr) = (col("n")?, col("eps_opt")?, col("eps_cr")?);
    let optional = |name: &str| header.iter().position(|h| h.trim() == name);
    let (ci_p, ci_k, ci_flat) = (optional("eps_p"), optional("K"), optional("eps_flat"));
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let num = |c: usize| -> CliResult<f64> {
            cells
                .get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    bad(format!(
                        "row {}: unreadable value in column {}",
                        i + 1,
                        c + 1
                    ))
                })
        };
        let n = cells
            .get(ci_n)
            .and_then(|s| s.trim().parse::<u32>().ok())
            .ok_or_else(|| bad(format!("row {}: unreadable n", i + 1)))?;
        if n < 100 {
            continue;
        }
        let or_nan = |c: Option<usize>| c.map_or(Ok(f64::NAN), num);
        points.push(BoundPoint {
            n,
            eps_opt: num(ci_opt)?,
            eps_cr: num(ci_cr)?,
            eps_p: or_nan(ci_p)?,
            info_gain: or_nan(ci_k)?,
            eps_flat: or_nan(ci_flat)?,
        });
    }
    Ok(points)
}

/// Fits the asymptotic gap either to the bounds CSV named by `input` or to
/// a fresh sweep.
pub fn fit_report(cfg: &ExperimentConfig) -> CliResult<FitReport> {
    let points = match &cfg.input {
        Some(path) => parse_bounds_csv(&read(path)?)?,
        None => {
            let mut rows = bound_rows(cfg)?;
            rows.retain(|p| p.n >= 100);
            rows
        }
    };
    let fit = fit_asymptotic(&points)?;
    let c1 = points.iter().map(|p| p.n as f64 * p.eps_cr).sum::<f64>() / points.len() as f64;
    Ok(FitReport {
        n_tau: tolerance_spins(cfg.tau, c1, fit.b(), fit.q)?,
        n_tau_nominal: tolerance_spins(cfg.tau, NOMINAL_C1, NOMINAL_C2, NOMINAL_Q)?,
        c1,
        fit,
    })
}

pub fn run_fit(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let r = fit_report(cfg)?;
    let mut out = String::new();
    let _ = writeln!(out, "{}", cfg.header());
    out.push_str("quantity,value,stderr\n");
    let nan = fmt(f64::NAN);
    let _ = writeln!(out, "q,{},{}", fmt(r.fit.q), fmt(r.fit.stderr_q));
    let _ = writeln!(
        out,
        "b,{},{}",
        fmt(r.fit.b()),
        fmt(r.fit.b() * r.fit.stderr_log_b)
    );
    let _ = writeln!(out, "c1,{},{nan}", fmt(r.c1));
    let _ = writeln!(out, "tau,{},{nan}", fmt(cfg.tau));
    let _ = writeln!(out, "n_tau,{},{nan}", fmt(r.n_tau));
    let _ = writeln!(out, "n_tau_nominal,{},{nan}", fmt(r.n_tau_nominal));
    Ok(vec![Artifact {
        suffix: "",
        contents: out,
    }])
}

pub fn run_simulate(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let trace = sample(
        &cfg.model,
        cfg.true_y,
        cfg.mu,
        &mut RngStream::new(cfg.seed),
    )?;
    let contents = format!("{}\n{}", cfg.header(), trace.to_csv());
    Ok(vec![Artifact {
        suffix: "",
        contents,
    }])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEstimates {
    pub trace: Trace,
    pub global: GlobalEstimate,
    pub local: Option<LocalEstimate>,
}

/// Global estimate (and local, for a spin gas with `theta0` set) from the
/// trace CSV named by `input`.
pub fn trace_estimates(cfg: &ExperimentConfig) -> CliResult<TraceEstimates> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Config("estimate needs a trace CSV path".into()))?;
    let trace = Trace::from_csv(&read(path)?)?;
    let dev = DeviationParams::default();
    let (global, local) = match (&trace.model, &trace.outcomes) {
        (ModelSpec::SpinGas(m), Outcomes::Counts(r)) => (
            global_estimate(m, cfg.support, r, cfg.node_count, dev)?,
            cfg.theta0.map(|t| local_estimate(m, r, t)).transpose()?,
        ),
        (ModelSpec::Oscillator(m), Outcomes::Positions(x)) => (
            global_estimate(m, cfg.support, x, cfg.node_count, dev)?,
            None,
        ),
        _ => {
            return Err(CliError::Config(
                "trace outcomes do not match its model".into(),
            ))
        }
    };
    Ok(TraceEstimates {
        trace,
        global,
        local,
    })
}

pub fn run_estimate(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    let e = trace_estimates(cfg)?;
    let mut out = String::new();
    let _ = writeln!(out, "{}", cfg.header());
    out.push_str("estimator,theta,uncertainty,eps_mle,edge_warning\n");
    let _ = writeln!(
        out,
        "global,{},{},{},{}",
        fmt(e.global.theta_hat),
        fmt(e.global.error_bar),
        fmt(e.global.eps_mle),
        e.global.edge_warning
    );
    if let Some(l) = e.local {
        let _ = writeln!(
            out,
            "local,{},{},{},false",
            fmt(l.theta_l),
            fmt(l.delta_l),
            fmt(f64::NAN)
        );
    }
    Ok(vec![Artifact {
        suffix: "",
        contents: out,
    }])
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<Vec<Artifact>> {
    match cfg.command {
        Command::Bounds => run_bounds(cfg),
        Command::Sequential => run_sequential(cfg),
        Command::Oscillator => run_oscillator(cfg),
        Command::Fit => run_fit(cfg),
        Command::Simulate => run_simulate(cfg),
        Command::Estimate => run_estimate(cfg),
    }
}

/// Path for a companion artifact: `runs/osc.csv` with suffix `fits`
/// becomes `runs/osc.fits.csv`.
pub fn companion_path(main: &Path, suffix: &str) -> PathBuf {
    if suffix.is_empty() {
        return main.to_path_buf();
    }
    let stem = main
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    main.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// Writes artifacts under `out`, or concatenates them to stdout.
pub fn write_artifacts(out: Option<&Path>, artifacts: &[Artifact]) -> CliResult<()> {
    match out {
        Some(path) => {
            for a in artifacts {
                let target = companion_path(path, a.suffix);
                fs::write(&target, &a.contents).map_err(|source| CliError::Io {
                    path: target,
                    source,
                })?;
            }
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            for a in artifacts {
                stdout
                    .write_all(a.contents.as_bytes())
                    .map_err(|source| CliError::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command, o: Overrides) -> ExperimentConfig {
        ExperimentConfig::resolve(command, o).unwrap()
    }

    #[test]
    fn nominal_asymptote_values() {
        assert!((nominal_asymptote(1000) - (0.0517 - 143.0 / 1000f64.powf(1.25))).abs() < 1e-15);
    }

    #[test]
    fn companion_paths() {
        assert_eq!(
            companion_path(Path::new("runs/osc.csv"), "fits"),
            PathBuf::from("runs/osc.fits.csv")
        );
        assert_eq!(
            companion_path(Path::new("runs/osc.csv"), ""),
            PathBuf::from("runs/osc.csv")
        );
    }

    #[test]
    fn empty_spin_gas_row_reduces_to_prior() {
        let c = cfg(
            Command::Bounds,
            Overrides {
                n_sweep: Some(vec![0]),
                nodes: Some(201),
                ..Default::default()
            },
        );
        let csv = &run_bounds(&c).unwrap()[0].contents;
        let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(row[0], "0");
        let opt: f64 = row[1].parse().unwrap();
        let prior: f64 = row[3].parse().unwrap();
        assert!(((opt - prior) / prior).abs() < 1e-12);
        assert_eq!(row[2], "inf");
    }

    #[test]
    fn single_shot_error_bar_is_bounded_by_the_prior() {
        let c = cfg(
            Command::Sequential,
            Overrides {
                mu: Some(1),
                ..Default::default()
            },
        );
        let rows = sequential_rows(&c).unwrap();
        assert_eq!(rows.len(), 1);
        let g = rows[0].global;
        assert!(g.eps_mle <= 100f64.ln().powi(2) / 12.0 * (1.0 + 1e-9));
        assert!(g.error_bar > 0.0);
    }

    #[test]
    fn oscillator_defaults_fit_three_histograms() {
        let c = cfg(Command::Oscillator, Overrides::default());
        let run = oscillator_run(&c).unwrap();
        assert_eq!(run.prefixes.len(), 200);
        let mus: Vec<usize> = run.fits.iter().map(|f| f.mu).collect();
        assert_eq!(mus, vec![50, 100, 200]);
        let arts = run_oscillator(&c).unwrap();
        assert_eq!(arts.len(), 3);
        assert_eq!(arts[1].contents.lines().count(), 2 + 3);
    }

    #[test]
    fn fit_rejects_short_sweeps() {
        let c = cfg(
            Command::Fit,
            Overrides {
                n_sweep: Some(vec![100, 200, 400]),
                nodes: Some(401),
                ..Default::default()
            },
        );
        assert!(matches!(
            fit_report(&c),
            Err(CliError::Core(Error::TooFewPoints { .. }))
        ));
    }

    #[test]
    fn bounds_csv_parsing() {
        let text = "# thermometry\nn,eps_opt,eps_cr\n10,0.4,0.5\n100,0.1,0.5\n200,0.05,0.25\n";
        let pts = parse_bounds_csv(text).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].n, 200);
        assert!(pts[1].eps_p.is_nan());
        assert!(parse_bounds_csv("n,eps_cr\n100,1\n").is_err());
        assert!(parse_bounds_csv("n,eps_opt,eps_cr\n100,x,1\n").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
        assert_eq!(CliError::Core(Error::EmptyRecord).exit_code(), 1);
        assert_eq!(CliError::Core(Error::DegeneratePosterior).exit_code(), 2);
    }
}
