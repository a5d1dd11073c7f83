//! Experiment orchestration: build instances from a config, run seeds on the
//! worker pool, and write traces, summaries and plots.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use optimist_core::bandit::{check_avg_excess_bound, Optimizer, RunTrace};
use optimist_core::concentration::{coverage_experiment, write_coverage_csv, BernoulliExcessFixture};
use optimist_core::confidence::BetaRule;
use optimist_core::eluder::{build_lower_bound_instance, certificate_report, lower_bound_value, verify_eluder_sequence};
use optimist_core::glm::LinkFunction;
use optimist_core::instances::{
    ball_grid, circle_arms, first_order_instance, nearest, rl_fixture, sublinear_instance, validity_instance,
    BanditInstance,
};
use optimist_core::rl::{run_golf, RlTrace};
use optimist_core::seed;
use rayon::prelude::*;

use crate::acceptance::{loss_condition_checks, squared_loss_witness, validity_threshold, LOSS_CSV_HEADER};
use crate::config::{BanditPreset, BanditSection, ConfigError, ExperimentConfig, ExperimentKind, RlPreset};
use crate::output::{emit_svg, write_summary_csv, Aggregate};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl From<optimist_core::Error> for RunError {
    fn from(e: optimist_core::Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Runtime(format!("io: {e}"))
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Runtime(format!("csv: {e}"))
    }
}

/// What a run produced and whether its built-in checks held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub check_pass: bool,
    pub messages: Vec<String>,
}

/// Seed of run `r` in setting `k`: root → experiment → setting → run.
pub fn run_seed(cfg: &ExperimentConfig, k: u64, r: u64) -> u64 {
    seed::derive_path(cfg.seed, &[cfg.kind.seed_label(), k, r])
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    cfg.validate()?;
    let out = Path::new(&cfg.out_dir);
    fs::create_dir_all(out)?;
    let mut outcome = match cfg.kind {
        ExperimentKind::Bandit => run_bandit_experiment(cfg, out)?,
        ExperimentKind::Rl => run_rl_experiment(cfg, out)?,
        ExperimentKind::Losses => run_losses(cfg, out)?,
        ExperimentKind::Eluder => run_eluder(cfg, out)?,
        ExperimentKind::Bernstein => run_bernstein(cfg, out)?,
        ExperimentKind::Report => run_report(cfg, out)?,
    };
    let cfg_path = out.join("config.toml");
    fs::write(&cfg_path, cfg.to_toml())?;
    outcome.files.push(cfg_path);
    Ok(outcome)
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

pub fn bandit_instances(b: &BanditSection) -> Result<Vec<BanditInstance>, ConfigError> {
    let key_err = |key: &str, e: optimist_core::Error| ConfigError {
        key: key.to_string(),
        message: e.to_string(),
    };
    Ok(match b.instance {
        BanditPreset::Validity => vec![validity_instance()],
        BanditPreset::Sublinear => vec![sublinear_instance()],
        BanditPreset::FirstOrder => b.eta_star.iter().flatten().map(|&e| first_order_instance(e)).collect(),
        BanditPreset::Grid => {
            let s = b.s.expect("validated");
            let ts = b.theta_star.clone().expect("validated");
            let link = LinkFunction::new(b.link.unwrap_or(optimist_core::LinkKind::Sigmoid), s)
                .map_err(|e| key_err("bandit.s", e))?;
            let thetas = ball_grid(ts.len(), s, b.grid_step.expect("validated"));
            let i = nearest(&thetas, &ts);
            let arms = match &b.arms {
                Some(a) => a.clone(),
                None => circle_arms(b.num_arms.expect("validated"), 0.0),
            };
            vec![BanditInstance::new("grid", link, arms, thetas, i).map_err(|e| key_err("bandit", e))?]
        }
    })
}

fn run_bandit_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, RunError> {
    let sec = cfg.bandit.as_ref().expect("validated");
    let insts = bandit_instances(sec)?;
    let mut files = Vec::new();
    let mut aggs = Vec::new();
    let mut check_pass = true;
    let mut messages = Vec::new();
    let runs_path = out.join("bandit_runs.csv");
    let mut runs_csv = csv::Writer::from_writer(BufWriter::new(fs::File::create(&runs_path)?));
    runs_csv.write_record([
        "setting",
        "run",
        "seed",
        "eta_star",
        "regret",
        "valid_throughout",
        "optimism_violations",
        "avg_excess_pass",
        "rogue_count",
    ])?;
    for (k, inst) in insts.iter().enumerate() {
        let mut ucb = inst.ucb_config(cfg.delta, cfg.n)?;
        ucb.optimizer = sec.optimizer;
        ucb.bernoullise = sec.bernoullise;
        let env = inst.env(run_seed(cfg, k as u64, u64::MAX))?;
        let traces: Vec<RunTrace> = (0..cfg.num_seeds as u64)
            .into_par_iter()
            .map(|r| optimist_core::bandit::run_bandit(&env, &ucb, cfg.n, run_seed(cfg, k as u64, r)))
            .collect::<optimist_core::Result<_>>()?;
        let label = slug(&inst.name);
        let excess = inst.excess_table();
        let exact = sec.optimizer == Optimizer::ExactEnumeration;
        let mut valid = 0;
        let mut bad_runs = 0;
        for (r, tr) in traces.iter().enumerate() {
            let path = out.join(format!("bandit_{label}_seed{r:03}.csv"));
            tr.write_csv(BufWriter::new(fs::File::create(&path)?))?;
            files.push(path);
            let ok_valid = tr.valid_throughout();
            let opt_viol = tr.optimism_violations(1e-12);
            let avg_ok = if exact { check_avg_excess_bound(tr, &excess)?.pass() } else { true };
            valid += usize::from(ok_valid);
            if ok_valid && exact && (opt_viol > 0 || !avg_ok) {
                bad_runs += 1;
            }
            runs_csv.write_record([
                label.clone(),
                r.to_string(),
                tr.seed.to_string(),
                tr.eta_star.to_string(),
                tr.regret().to_string(),
                ok_valid.to_string(),
                opt_viol.to_string(),
                avg_ok.to_string(),
                tr.rogue_count().to_string(),
            ])?;
        }
        let frac = valid as f64 / traces.len() as f64;
        let thr = validity_threshold(cfg.delta, traces.len());
        let ok = frac >= thr && bad_runs == 0;
        check_pass &= ok;
        messages.push(format!(
            "{label}: mean regret {:.3}, valid {valid}/{} (threshold {thr:.3}), good runs breaking optimism or the excess bound: {bad_runs}",
            traces.iter().map(RunTrace::regret).sum::<f64>() / traces.len() as f64,
            traces.len()
        ));
        let curves: Vec<Vec<f64>> = traces.iter().map(RunTrace::cumulative_regret).collect();
        aggs.push(Aggregate::from_curves(format!("bandit_{label}"), &curves));
    }
    runs_csv.flush()?;
    files.push(runs_path);
    files.extend(write_aggregates(out, &aggs, "ℓ-UCB cumulative regret")?);
    Ok(Outcome {
        files,
        check_pass,
        messages,
    })
}

fn write_aggregates(out: &Path, aggs: &[Aggregate], title: &str) -> Result<Vec<PathBuf>, RunError> {
    let summary = out.join("summary.csv");
    write_summary_csv(aggs, BufWriter::new(fs::File::create(&summary)?))?;
    let svg = out.join("regret.svg");
    fs::write(&svg, emit_svg(aggs, title))?;
    Ok(vec![summary, svg])
}

fn run_rl_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, RunError> {
    let fx = match cfg.rl.as_ref().expect("validated").fixture {
        RlPreset::ThreeState => rl_fixture(),
    };
    let beta = BetaRule::Schedule(fx.beta_schedule(cfg.delta, cfg.n)?);
    let traces: Vec<RlTrace> = (0..cfg.num_seeds as u64)
        .into_par_iter()
        .map(|r| run_golf(&fx.mdp, &fx.f_class, &fx.g_class, fx.loss(), beta, cfg.n, run_seed(cfg, 0, r)))
        .collect::<optimist_core::Result<_>>()?;
    let mut files = Vec::new();
    let runs_path = out.join("rl_runs.csv");
    let mut runs_csv = csv::Writer::from_writer(BufWriter::new(fs::File::create(&runs_path)?));
    runs_csv.write_record(["run", "seed", "regret", "q_star_active_throughout", "backward_violations"])?;
    let mut active = 0;
    let mut backward = 0;
    for (r, tr) in traces.iter().enumerate() {
        let path = out.join(format!("rl_seed{r:03}.csv"));
        tr.write_csv(BufWriter::new(fs::File::create(&path)?))?;
        files.push(path);
        active += usize::from(tr.q_star_active_throughout());
        backward += tr.backward_violations();
        runs_csv.write_record([
            r.to_string(),
            tr.seed.to_string(),
            tr.regret().to_string(),
            tr.q_star_active_throughout().to_string(),
            tr.backward_violations().to_string(),
        ])?;
    }
    runs_csv.flush()?;
    files.push(runs_path);
    let thr = validity_threshold(cfg.delta, traces.len());
    let frac = active as f64 / traces.len() as f64;
    let curves: Vec<Vec<f64>> = traces.iter().map(RlTrace::cumulative_regret).collect();
    files.extend(write_aggregates(out, &[Aggregate::from_curves("rl", &curves)], "ℓ-GOLF cumulative regret")?);
    Ok(Outcome {
        files,
        check_pass: frac >= thr && backward == 0,
        messages: vec![format!(
            "q⋆ active throughout in {active}/{} runs (threshold {thr:.3}); backward-bound violations {backward}; mean regret {:.3}",
            traces.len(),
            traces.iter().map(RlTrace::regret).sum::<f64>() / traces.len() as f64
        )],
    })
}

fn run_losses(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, RunError> {
    let sec = cfg.losses.as_ref().expect("validated");
    let checks = loss_condition_checks(sec.grid_step, sec.random_draws, run_seed(cfg, 0, 0));
    let ((p, q), ratio) = squared_loss_witness(sec.grid_step);
    let path = out.join("losses.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(&path)?));
    w.write_record(LOSS_CSV_HEADER)?;
    for c in &checks {
        w.write_record([
            c.check.clone(),
            c.points.to_string(),
            c.violations.to_string(),
            c.observed.to_string(),
            c.bound.to_string(),
            c.pass.to_string(),
        ])?;
    }
    let witness_ok = ratio > sec.squared_gamma;
    w.write_record([
        "squared_triangle_witness".to_string(),
        "1".to_string(),
        usize::from(witness_ok).to_string(),
        ratio.to_string(),
        sec.squared_gamma.to_string(),
        witness_ok.to_string(),
    ])?;
    w.flush()?;
    let mut messages: Vec<String> = checks
        .iter()
        .map(|c| format!("{}: {} ({} points)", c.check, if c.pass { "pass" } else { "FAIL" }, c.points))
        .collect();
    messages.push(format!(
        "squared loss witness p={p:e}, q={q:e}: Δ/φ̄ = {ratio:.1} vs γ = {}",
        sec.squared_gamma
    ));
    Ok(Outcome {
        files: vec![path],
        check_pass: witness_ok && checks.iter().all(|c| c.pass),
        messages,
    })
}

fn run_eluder(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, RunError> {
    let sec = cfg.eluder.as_ref().expect("validated");
    let inst = build_lower_bound_instance(sec.d, sec.s, sec.link, sec.zeta, run_seed(cfg, 0, 0))?;
    let table = inst.excess_table()?;
    let seq = inst.certificate();
    let verified = verify_eluder_sequence(&seq, &table)?;
    let lb = lower_bound_value(sec.d, sec.s, inst.m_const, sec.link);
    let cert = out.join("eluder_certificate.txt");
    fs::write(&cert, certificate_report(&seq, &table))?;
    let summary = out.join("eluder_summary.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(&summary)?));
    w.write_record(["link", "d", "s", "block", "blocks", "pack_size", "omega", "length", "lower_bound", "verified"])?;
    w.write_record([
        sec.link.name().to_string(),
        sec.d.to_string(),
        sec.s.to_string(),
        inst.block.to_string(),
        inst.block_count.to_string(),
        inst.pack_size.to_string(),
        seq.omega.to_string(),
        seq.len().to_string(),
        lb.to_string(),
        verified.to_string(),
    ])?;
    w.flush()?;
    Ok(Outcome {
        files: vec![cert, summary],
        check_pass: verified && seq.len() as f64 >= lb,
        messages: vec![format!(
            "certificate of length {} at ω = {} verified: {verified}; lower bound {lb:.3}",
            seq.len(),
            seq.omega
        )],
    })
}

fn run_bernstein(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, RunError> {
    let sec = cfg.bernstein.as_ref().expect("validated");
    let fixture = BernoulliExcessFixture::random(sec.num_arms, sec.num_functions, run_seed(cfg, 0, 0))?;
    let sg = fixture.config(cfg.delta, cfg.n)?;
    let rep = coverage_experiment(&fixture, &sg, cfg.n, cfg.num_seeds, run_seed(cfg, 1, 0))?;
    let path = out.join("coverage.csv");
    write_coverage_csv(std::slice::from_ref(&rep), BufWriter::new(fs::File::create(&path)?))?;
    Ok(Outcome {
        files: vec![path],
        check_pass: rep.pass(),
        messages: vec![format!(
            "{} failures in {} replications: rate {:.4}, allowed {:.4}",
            rep.failures,
            rep.reps,
            rep.failure_rate,
            rep.upper_band()
        )],
    })
}

/// Cumulative regret of one trace CSV: the `cum_regret` column for bandit
/// traces, or the running sum of per-episode `inst_regret` for RL traces.
pub fn read_trace_curve(path: &Path) -> Result<Vec<f64>, RunError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut curve = Vec::new();
    if let Some(c) = col("cum_regret") {
        for rec in rdr.records() {
            curve.push(parse_f64(&rec?[c], path)?);
        }
    } else if let (Some(e), Some(c)) = (col("episode"), col("inst_regret")) {
        let mut last = String::new();
        let mut acc = 0.0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec[e] != last {
                last = rec[e].to_string();
                acc += parse_f64(&rec[c], path)?;
                curve.push(acc);
            }
        }
    } else {
        return Err(RunError::Runtime(format!("{} is not a trace CSV", path.display())));
    }
    Ok(curve)
}

fn parse_f64(s: &str, path: &Path) -> Result<f64, RunError> {
    s.parse()
        .map_err(|_| RunError::Runtime(format!("{}: cannot parse `{s}` as a number", path.display())))
}

fn run_report(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, RunError> {
    let input = cfg
        .report
        .as_ref()
        .and_then(|r| r.input_dir.clone())
        .unwrap_or_else(|| cfg.out_dir.clone());
    let mut names: Vec<String> = fs::read_dir(&input)
        .map_err(|e| ConfigError {
            key: "report.input_dir".into(),
            message: format!("cannot read {input}: {e}"),
        })?
        .filter_map(|e| e.ok().and_then(|e| e.file_name().into_string().ok()))
        .filter(|n| n.ends_with(".csv") && n.contains("_seed"))
        .collect();
    names.sort();
    let mut groups: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for name in &names {
        let label = name[..name.rfind("_seed").expect("filtered")].to_string();
        let curve = read_trace_curve(&Path::new(&input).join(name))?;
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(curve),
            None => groups.push((label, vec![curve])),
        }
    }
    if groups.is_empty() {
        return Err(ConfigError {
            key: "report.input_dir".into(),
            message: format!("no trace CSVs found in {input}"),
        }
        .into());
    }
    let aggs: Vec<Aggregate> = groups.iter().map(|(l, c)| Aggregate::from_curves(l.clone(), c)).collect();
    let files = write_aggregates(out, &aggs, "cumulative regret")?;
    Ok(Outcome {
        files,
        check_pass: true,
        messages: groups.iter().map(|(l, c)| format!("{l}: {} traces", c.len())).collect(),
    })
}
