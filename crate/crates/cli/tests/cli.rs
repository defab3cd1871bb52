use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn thermometry(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermometry"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sequential", "--mu", "40", "--seed", "12"];
    let a = thermometry(&args, dir.path());
    let b = thermometry(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# thermometry "));
    assert_eq!(
        lines.next().unwrap(),
        "m,theta_hat,error_bar,eps_mle,edge_warning,theta_l,delta_l"
    );
    assert_eq!(lines.count(), 40);

    let c = thermometry(&["sequential", "--mu", "40", "--seed", "13"], dir.path());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn bounds_are_deterministic_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bounds", "--n-sweep", "0,10,100,1000", "--out", "b.csv"];
    assert!(thermometry(&args, dir.path()).status.success());
    let first = fs::read(dir.path().join("b.csv")).unwrap();
    assert!(thermometry(&args, dir.path()).status.success());
    assert_eq!(first, fs::read(dir.path().join("b.csv")).unwrap());

    let text = String::from_utf8(first).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(((rows[0][1] - rows[0][3]) / rows[0][3]).abs() < 1e-12);
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1]);
    }
    for r in &rows[1..] {
        assert!(r[1] <= r[2]);
        assert!(((r[3] - r[4]) - r[1]).abs() / r[1] < 1e-8);
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# spin gas\nn = 40\nmu = 7\nseed = 2\n",
    )
    .unwrap();
    let from_file = stdout(&thermometry(
        &["simulate", "--config", "run.cfg"],
        dir.path(),
    ));
    assert!(from_file.contains("n=40"));
    assert!(from_file.contains("mu=7"));
    assert!(from_file.contains("seed=2"));
    let overridden = stdout(&thermometry(
        &["simulate", "--config", "run.cfg", "--mu", "3"],
        dir.path(),
    ));
    assert!(overridden.contains("mu=3"));
    assert!(overridden.contains("n=40"));
}

#[test]
fn simulate_then_estimate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let sim = thermometry(
        &[
            "simulate",
            "--mu",
            "200",
            "--seed",
            "4",
            "--out",
            "trace.csv",
        ],
        dir.path(),
    );
    assert!(sim.status.success());
    let est = thermometry(&["estimate", "trace.csv", "--theta0", "3"], dir.path());
    assert!(
        est.status.success(),
        "{}",
        String::from_utf8_lossy(&est.stderr)
    );
    let text = stdout(&est);
    let global: Vec<&str> = text
        .lines()
        .find(|l| l.starts_with("global,"))
        .unwrap()
        .split(',')
        .collect();
    let theta: f64 = global[1].parse().unwrap();
    let bar: f64 = global[2].parse().unwrap();
    assert!((theta - 4.0).abs() < 3.0 * bar);
    assert!(text.lines().any(|l| l.starts_with("local,")));
}

#[test]
fn oscillator_writes_companion_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = thermometry(&["oscillator", "--out", "osc.csv"], dir.path());
    assert!(out.status.success());
    let fits = fs::read_to_string(dir.path().join("osc.fits.csv")).unwrap();
    assert_eq!(fits.lines().filter(|l| l.contains(",ok,")).count(), 3);
    let bins = fs::read_to_string(dir.path().join("osc.bins.csv")).unwrap();
    assert!(bins.lines().nth(1).unwrap().starts_with("mu,left,right"));
    let header = |s: &str| s.lines().next().unwrap().to_string();
    assert_eq!(
        header(&fits),
        header(&fs::read_to_string(dir.path().join("osc.csv")).unwrap())
    );
}

#[test]
fn fit_reads_a_bounds_file() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = "100,200,400,800,1600,3200";
    let b = thermometry(
        &[
            "bounds",
            "--n-sweep",
            sweep,
            "--nodes",
            "801",
            "--out",
            "b.csv",
        ],
        dir.path(),
    );
    assert!(b.status.success());
    let fit = thermometry(&["fit", "b.csv"], dir.path());
    assert!(
        fit.status.success(),
        "{}",
        String::from_utf8_lossy(&fit.stderr)
    );
    let text = stdout(&fit);
    let q: f64 = text
        .lines()
        .find(|l| l.starts_with("q,"))
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((-1.5..-1.0).contains(&q), "{q}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = thermometry(&["oscillator", "--mu", "5"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("--mu"));
    assert_eq!(
        thermometry(&["estimate", "missing.csv"], dir.path())
            .status
            .code(),
        Some(1)
    );

    // Rows whose local bound sits below the optimum cannot be fitted.
    let rows: String = [100, 200, 400, 800, 1600]
        .iter()
        .map(|n| format!("{n},0.5,0.4\n"))
        .collect();
    fs::write(
        dir.path().join("b.csv"),
        format!("n,eps_opt,eps_cr\n{rows}"),
    )
    .unwrap();
    let numeric = thermometry(&["fit", "b.csv"], dir.path());
    assert_eq!(numeric.status.code(), Some(2));
    let short = thermometry(
        &["fit", "--n-sweep", "100,200", "--nodes", "201"],
        dir.path(),
    );
    assert_eq!(short.status.code(), Some(1));
}
