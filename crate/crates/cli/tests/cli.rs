use std::fs;
use std::path::Path;
use std::process::Command;

use optimist_cli::config::{ExperimentConfig, ExperimentKind};
use optimist_cli::output::{emit_svg, Aggregate};
use optimist_cli::run::{read_trace_curve, run};

fn optimist(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_optimist")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn small_bandit(out: &Path) -> String {
    format!(
        r#"kind = "bandit"
seed = 7
n = 300
num_seeds = 4
delta = 0.05
out_dir = "{}"

[bandit]
instance = "grid"
link = "sigmoid"
s = 2.0
grid_step = 0.5
theta_star = [1.0, -0.5]
num_arms = 8
"#,
        out.display()
    )
}

fn svg_root(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed SVG");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    text
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(optimist(&["--help"]).0, 0);
    assert_eq!(optimist(&["--version"]).0, 0);
    assert_eq!(optimist(&["bandit-run", "--help"]).0, 0);
}

#[test]
fn bad_arguments_and_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(optimist(&["no-such-command"]).0, 1);

    let p = dir.path().join("bad.toml");
    fs::write(&p, small_bandit(dir.path()).replace("delta = 0.05", "delta = 1.5")).unwrap();
    let (code, _, err) = optimist(&["bandit-run", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("delta"), "{err}");

    fs::write(&p, small_bandit(dir.path()).replace("num_arms", "arm_count")).unwrap();
    let (code, _, err) = optimist(&["bandit-run", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("bandit"), "{err}");

    fs::write(&p, small_bandit(dir.path())).unwrap();
    let (code, _, err) = optimist(&["rl-run", "--config", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("kind"), "{err}");
}

#[test]
fn bandit_run_writes_reproducible_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg_path = a.path().join("in.toml");
    fs::write(&cfg_path, small_bandit(a.path())).unwrap();
    for out in [a.path(), b.path()] {
        let (code, stdout, err) = optimist(&[
            "bandit-run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--check",
        ]);
        assert_eq!(code, 0, "{stdout}{err}");
    }
    for name in ["bandit_grid_seed000.csv", "bandit_grid_seed003.csv", "bandit_runs.csv", "summary.csv", "regret.svg"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between reruns");
    }
    let svg = svg_root(&a.path().join("regret.svg"));
    assert!(svg.contains(">t<") && svg.contains("cumulative regret"));

    let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 301);
    assert!(summary.starts_with("experiment,t,mean,median,q25,q75,iqr"));
}

#[test]
fn written_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg_path = a.path().join("in.toml");
    fs::write(&cfg_path, small_bandit(a.path())).unwrap();
    assert_eq!(optimist(&["bandit-run", "--config", cfg_path.to_str().unwrap(), "--seed", "99"]).0, 0);

    let written = ExperimentConfig::load(&a.path().join("config.toml")).unwrap();
    assert_eq!(written.seed, 99);
    let again = ExperimentConfig::from_toml(&written.to_toml()).unwrap();
    assert_eq!(again, written);

    let replay = b.path().join("replay.toml");
    fs::write(&replay, fs::read_to_string(a.path().join("config.toml")).unwrap()).unwrap();
    assert_eq!(
        optimist(&["bandit-run", "--config", replay.to_str().unwrap(), "--out", b.path().to_str().unwrap()]).0,
        0
    );
    assert_eq!(
        fs::read(a.path().join("summary.csv")).unwrap(),
        fs::read(b.path().join("summary.csv")).unwrap()
    );
}

#[test]
fn report_rebuilds_summary_from_traces() {
    let a = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_toml(&small_bandit(a.path())).unwrap();
    run(&cfg).unwrap();
    let original = fs::read_to_string(a.path().join("summary.csv")).unwrap();

    let b = tempfile::tempdir().unwrap();
    cfg = ExperimentConfig::default_for(ExperimentKind::Report);
    cfg.out_dir = b.path().to_string_lossy().into_owned();
    cfg.report.as_mut().unwrap().input_dir = Some(a.path().to_string_lossy().into_owned());
    let outcome = run(&cfg).unwrap();
    assert!(outcome.check_pass);
    let rebuilt = fs::read_to_string(b.path().join("summary.csv")).unwrap();
    assert!(rebuilt == original, "summary rebuilt from traces differs");
    svg_root(&b.path().join("regret.svg"));
}

#[test]
fn report_on_empty_directory_is_a_config_error() {
    let a = tempfile::tempdir().unwrap();
    let (code, _, err) = optimist(&["report", "--out", a.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("report.input_dir"), "{err}");
}

#[test]
fn rl_run_small() {
    let a = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default_for(ExperimentKind::Rl);
    cfg.n = 200;
    cfg.num_seeds = 3;
    cfg.out_dir = a.path().to_string_lossy().into_owned();
    let o = run(&cfg).unwrap();
    assert!(o.check_pass, "{:?}", o.messages);
    let curve = read_trace_curve(&a.path().join("rl_seed001.csv")).unwrap();
    assert_eq!(curve.len(), 200);
    assert!(curve.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 201);
    svg_root(&a.path().join("regret.svg"));
}

#[test]
fn eluder_witness_end_to_end() {
    let a = tempfile::tempdir().unwrap();
    let (code, stdout, err) = optimist(&["eluder-witness", "--out", a.path().to_str().unwrap(), "--check"]);
    assert_eq!(code, 0, "{stdout}{err}");
    let cert = fs::read_to_string(a.path().join("eluder_certificate.txt")).unwrap();
    assert!(!cert.is_empty());
    let mut rdr = csv::Reader::from_path(a.path().join("eluder_summary.csv")).unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    let len: f64 = row[7].parse().unwrap();
    let lb: f64 = row[8].parse().unwrap();
    assert_eq!(&row[9], "true");
    assert!(len >= lb);
}

#[test]
fn verify_losses_small_grid() {
    let a = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default_for(ExperimentKind::Losses);
    cfg.losses.as_mut().unwrap().grid_step = 0.05;
    cfg.losses.as_mut().unwrap().random_draws = 2000;
    cfg.out_dir = a.path().to_string_lossy().into_owned();
    let o = run(&cfg).unwrap();
    assert!(o.check_pass, "{:?}", o.messages);
    let text = fs::read_to_string(a.path().join("losses.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("squared_triangle_witness") && l.ends_with("true")));
}

#[test]
fn bernstein_small() {
    let a = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default_for(ExperimentKind::Bernstein);
    cfg.n = 100;
    cfg.num_seeds = 100;
    cfg.out_dir = a.path().to_string_lossy().into_owned();
    let o = run(&cfg).unwrap();
    assert!(o.check_pass, "{:?}", o.messages);
    assert!(a.path().join("coverage.csv").exists());
}

#[test]
fn flat_zero_svg_is_well_formed() {
    let agg = Aggregate::from_curves("flat", &[vec![0.0; 50], vec![0.0; 50]]);
    let svg = emit_svg(&[agg], "zero & <flat>");
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert!(svg.contains("zero &amp; &lt;flat&gt;"));
    assert!(!svg.contains("NaN") && !svg.contains("inf"));
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 1);
}

#[test]
fn two_regime_overlay_has_a_band_and_curve_each() {
    let big: Vec<Vec<f64>> = (0..5).map(|k| (1..=1000).map(|t| (t as f64).sqrt() * (1.0 + 0.1 * k as f64)).collect()).collect();
    let small: Vec<Vec<f64>> = (0..5).map(|k| (1..=1000).map(|t| (t as f64).ln() * (1.0 + 0.1 * k as f64)).collect()).collect();
    let svg = emit_svg(
        &[Aggregate::from_curves("eta 0.5", &big), Aggregate::from_curves("eta 0.02", &small)],
        "overlay",
    );
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polygon")).count(), 2);
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(lines.len(), 2);
    for l in lines {
        assert!(l.attribute("points").unwrap().split(' ').count() <= 401);
    }
}

#[test]
fn failed_check_exits_two() {
    let a = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default_for(ExperimentKind::Losses);
    cfg.losses.as_mut().unwrap().grid_step = 0.1;
    cfg.losses.as_mut().unwrap().random_draws = 100;
    cfg.losses.as_mut().unwrap().squared_gamma = 1e12;
    cfg.out_dir = a.path().join("o").to_string_lossy().into_owned();
    let p = a.path().join("c.toml");
    fs::write(&p, cfg.to_toml()).unwrap();
    assert_eq!(optimist(&["verify-losses", "--config", p.to_str().unwrap()]).0, 0);
    assert_eq!(optimist(&["verify-losses", "--config", p.to_str().unwrap(), "--check"]).0, 2);
}
