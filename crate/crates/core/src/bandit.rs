//! Bounded-cost bandits and the ℓ-UCB algorithm.
//!
//! The learner ([`UcbLearner`]) only sees the loss, the model class and the
//! width schedule. Everything that needs the true parameter (localisation
//! flags, rogue counts, the φ̄ budget check) is computed by [`run_bandit`]
//! and the checkers below, on the simulator side.

use rand::Rng;
use serde::Serialize;
use std::io;

use crate::confidence::{min_linear_over_ellipsoid, BetaRule, EllipsoidalSet, VersionSpace, DEFAULT_RIDGE};
use crate::error::{invalid, Error, Result};
use crate::glm::{dot, GlmModel, LinkFunction};
use crate::loss::{FiniteCostDist, LossFunction, LossKind};
use crate::seed;

/// Tolerance used to identify the true mean vector inside a class table.
pub const REALISABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BanditEnv {
    pub arms: Vec<Vec<f64>>,
    pub cost_dists: Vec<FiniteCostDist>,
    pub eta: Vec<f64>,
    pub a_star_index: usize,
    pub rng_seed: u64,
    /// Simulator-side parameter, used only for diagnostics.
    pub theta_star: Option<Vec<f64>>,
}

impl BanditEnv {
    pub fn new(arms: Vec<Vec<f64>>, cost_dists: Vec<FiniteCostDist>, rng_seed: u64) -> Result<Self> {
        if cost_dists.is_empty() {
            return Err(invalid("bandit needs at least one arm"));
        }
        if arms.len() != cost_dists.len() {
            return Err(invalid(format!(
                "{} arm vectors but {} cost distributions",
                arms.len(),
                cost_dists.len()
            )));
        }
        let eta: Vec<f64> = cost_dists.iter().map(FiniteCostDist::mean).collect();
        let a_star_index = crate::confidence::argmin_first(&eta).expect("nonempty");
        Ok(BanditEnv {
            arms,
            cost_dists,
            eta,
            a_star_index,
            rng_seed,
            theta_star: None,
        })
    }

    /// Bernoulli costs with means μ(⟨a, θ⋆⟩).
    pub fn glm_bernoulli(link: &LinkFunction, theta_star: &[f64], arms: Vec<Vec<f64>>, rng_seed: u64) -> Result<Self> {
        let mut dists = Vec::with_capacity(arms.len());
        for a in &arms {
            if a.len() != theta_star.len() {
                return Err(invalid("arm and parameter dimensions differ"));
            }
            dists.push(FiniteCostDist::bernoulli(link.eval(dot(a, theta_star))?)?);
        }
        let mut env = Self::new(arms, dists, rng_seed)?;
        env.theta_star = Some(theta_star.to_vec());
        Ok(env)
    }

    pub fn num_arms(&self) -> usize {
        self.eta.len()
    }

    pub fn eta_star(&self) -> f64 {
        self.eta[self.a_star_index]
    }

    pub fn sample<R: Rng>(&self, arm: usize, rng: &mut R) -> f64 {
        self.cost_dists[arm].sample_with(rng.random::<f64>())
    }
}

/// The hypothesis class handed to the learner.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Glm(GlmModel),
    /// Explicit arm-to-mean tables, one row per candidate.
    Table(Vec<Vec<f64>>),
}

impl ModelSpec {
    pub fn mean_table(&self) -> Vec<Vec<f64>> {
        match self {
            ModelSpec::Glm(m) => m.mean_table(),
            ModelSpec::Table(t) => t.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ModelSpec::Glm(m) => m.thetas.len(),
            ModelSpec::Table(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    ExactEnumeration,
    EllipsoidRelaxation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcbConfig {
    pub loss: LossFunction,
    pub model: ModelSpec,
    pub beta: BetaRule,
    pub optimizer: Optimizer,
    /// Radius for the localisation diagnostic only.
    pub localization_radius: f64,
    /// Feed the learner Bernoulli(Y_t) instead of Y_t.
    pub bernoullise: bool,
}

impl UcbConfig {
    pub fn exact(loss: LossFunction, model: ModelSpec, beta: BetaRule) -> Self {
        UcbConfig {
            loss,
            model,
            beta,
            optimizer: Optimizer::ExactEnumeration,
            localization_radius: 1.0,
            bernoullise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.localization_radius > 0.0) {
            return Err(invalid(format!(
                "localization_radius = {} must be positive",
                self.localization_radius
            )));
        }
        if self.model.is_empty() {
            return Err(invalid("model class is empty"));
        }
        if self.optimizer == Optimizer::EllipsoidRelaxation {
            let ModelSpec::Glm(m) = &self.model else {
                return Err(invalid("EllipsoidRelaxation requires a GLM model"));
            };
            m.link.check_compatible(&self.loss)?;
        }
        let table = self.model.mean_table();
        let width = table[0].len();
        for (k, row) in table.iter().enumerate() {
            if row.len() != width {
                return Err(invalid(format!("candidate {k} has {} arms, expected {width}", row.len())));
            }
            for &p in row {
                if !p.is_finite() {
                    return Err(invalid(format!("candidate {k} has a non-finite mean")));
                }
                // every candidate must be a valid prediction for every outcome
                self.loss.eval(0.0, p)?;
                self.loss.eval(1.0, p)?;
            }
        }
        Ok(())
    }
}

/// What the learner reports alongside its choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub opt_value: f64,
    pub beta: f64,
    /// ⟨A_t, θ_t⟩ for the optimistic parameter when the model is a GLM.
    pub inner: Option<f64>,
    pub active_count: usize,
}

/// Policy state of ℓ-UCB. Holds no simulator knowledge.
#[derive(Debug, Clone)]
pub struct UcbLearner {
    loss: LossFunction,
    beta: BetaRule,
    optimizer: Optimizer,
    glm: Option<GlmModel>,
    num_arms: usize,
    num_cands: usize,
    /// Per-candidate best arm and its mean, ties to the lowest arm.
    cand_min: Vec<f64>,
    cand_arg: Vec<usize>,
    /// Arm-major loss tables: ℓ(0, f_k(a)) and ℓ(1, f_k(a)).
    loss0: Vec<f64>,
    loss1: Vec<f64>,
    /// Arm-major means f_k(a), used when the outcome is not 0 or 1.
    means: Vec<f64>,
    /// Arm-major ⟨a, θ_k⟩ for GLM classes.
    inner: Option<Vec<f64>>,
    pub version_space: VersionSpace,
    pub counts: Vec<usize>,
}

impl UcbLearner {
    pub fn new(config: &UcbConfig) -> Result<Self> {
        config.validate()?;
        let table = config.model.mean_table();
        let k = table.len();
        let a = table[0].len();
        let mut cand_min = Vec::with_capacity(k);
        let mut cand_arg = Vec::with_capacity(k);
        for row in &table {
            let j = crate::confidence::argmin_first(row).expect("nonempty");
            cand_min.push(row[j]);
            cand_arg.push(j);
        }
        let mut loss0 = vec![0.0; a * k];
        let mut loss1 = vec![0.0; a * k];
        let mut means = vec![0.0; a * k];
        for (ki, row) in table.iter().enumerate() {
            for (ai, &p) in row.iter().enumerate() {
                loss0[ai * k + ki] = config.loss.eval_unchecked(0.0, p);
                loss1[ai * k + ki] = config.loss.eval_unchecked(1.0, p);
                means[ai * k + ki] = p;
            }
        }
        let (glm, inner) = match &config.model {
            ModelSpec::Glm(m) => {
                let mut u = vec![0.0; a * k];
                for (ki, th) in m.thetas.iter().enumerate() {
                    for (ai, arm) in m.arms.iter().enumerate() {
                        u[ai * k + ki] = dot(arm, th);
                    }
                }
                (Some(m.clone()), Some(u))
            }
            ModelSpec::Table(_) => (None, None),
        };
        Ok(UcbLearner {
            loss: config.loss,
            beta: config.beta,
            optimizer: config.optimizer,
            glm,
            num_arms: a,
            num_cands: k,
            cand_min,
            cand_arg,
            loss0,
            loss1,
            means,
            inner,
            version_space: VersionSpace::new(k),
            counts: vec![0; a],
        })
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn num_candidates(&self) -> usize {
        self.num_cands
    }

    /// Refresh F_t with β_t and pick the optimistic pair for round t.
    ///
    /// Returns the arm, the optimistic candidate (exact mode only) and
    /// diagnostics.
    pub fn ucb_step(&mut self, t: usize) -> Result<(usize, Option<usize>, StepDiagnostics)> {
        let beta = self.beta.beta(t);
        self.version_space.recompute(beta);
        let active_count = self.version_space.active.iter().filter(|&&a| a).count();
        match self.optimizer {
            Optimizer::ExactEnumeration => {
                let mut best: Option<usize> = None;
                for (k, &act) in self.version_space.active.iter().enumerate() {
                    if act && best.map_or(true, |b| self.cand_min[k] < self.cand_min[b]) {
                        best = Some(k);
                    }
                }
                let k = best.ok_or(Error::EmptyConfidenceSet)?;
                let arm = self.cand_arg[k];
                let inner = self.inner.as_ref().map(|u| u[arm * self.num_cands + k]);
                Ok((
                    arm,
                    Some(k),
                    StepDiagnostics {
                        opt_value: self.cand_min[k],
                        beta,
                        inner,
                        active_count,
                    },
                ))
            }
            Optimizer::EllipsoidRelaxation => {
                let (arm, u, value) = self.relaxed_choice(beta)?;
                Ok((
                    arm,
                    None,
                    StepDiagnostics {
                        opt_value: value,
                        beta,
                        inner: Some(u),
                        active_count,
                    },
                ))
            }
        }
    }

    fn relaxed_choice(&self, beta: f64) -> Result<(usize, f64, f64)> {
        let m = self.glm.as_ref().expect("validated GLM");
        let link = &m.link;
        let theta_hat = &m.thetas[self.version_space.erm_index];
        let d = m.d;
        let mut hessian = nalgebra::DMatrix::zeros(d, d);
        for (a, &n) in m.arms.iter().zip(&self.counts) {
            if n > 0 {
                let av = nalgebra::DVector::from_column_slice(a);
                hessian.ger(n as f64 * link.mu_dot(dot(a, theta_hat)), &av, &av, 1.0);
            }
        }
        let m_const = crate::glm::glm_constants(link)?.m;
        let set = EllipsoidalSet {
            center: nalgebra::DVector::from_column_slice(theta_hat),
            hessian,
            radius: 2.0 * (1.0 + link.s * m_const) * beta,
        };
        let mut best = (0, 0.0, f64::INFINITY);
        for (j, a) in m.arms.iter().enumerate() {
            let u = link.clamp(min_linear_over_ellipsoid(a, &set, DEFAULT_RIDGE)?);
            let v = link.mu(u);
            if v < best.2 {
                best = (j, u, v);
            }
        }
        Ok(best)
    }

    /// Add the loss of every candidate on (arm, y).
    pub fn observe(&mut self, arm: usize, y: f64) {
        let k = self.num_cands;
        let base = arm * k;
        let cum = &mut self.version_space.cum_loss;
        if y == 0.0 {
            for (c, l) in cum.iter_mut().zip(&self.loss0[base..base + k]) {
                *c += l;
            }
        } else if y == 1.0 {
            for (c, l) in cum.iter_mut().zip(&self.loss1[base..base + k]) {
                *c += l;
            }
        } else {
            for (c, &p) in cum.iter_mut().zip(&self.means[base..base + k]) {
                *c += self.loss.eval_unchecked(y, p);
            }
        }
        self.counts[arm] += 1;
    }
}

/// One row of a bandit trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Round {
    pub t: usize,
    pub arm: usize,
    /// Cost drawn from the environment.
    pub cost: f64,
    /// Outcome shown to the learner (differs from `cost` under Bernoullisation).
    pub observed: f64,
    pub opt_value: f64,
    pub candidate: Option<usize>,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub beta_t: f64,
    pub localized: Option<bool>,
    pub eta_in_ft: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub eta_star: f64,
    pub a_star_index: usize,
    pub rounds: Vec<Round>,
}

#[derive(Serialize)]
struct CsvRow {
    t: usize,
    arm: usize,
    cost: f64,
    opt_value: f64,
    inst_regret: f64,
    cum_regret: f64,
    beta_t: f64,
    localized: String,
    #[serde(rename = "eta_in_Ft")]
    eta_in_ft: bool,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn cumulative_regret(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.cum_regret).collect()
    }

    /// True when η stayed in the confidence set on every round.
    pub fn valid_throughout(&self) -> bool {
        self.rounds.iter().all(|r| r.eta_in_ft)
    }

    /// Rounds whose optimistic parameter was outside the localisation radius.
    pub fn rogue_count(&self) -> usize {
        self.rounds.iter().filter(|r| r.localized == Some(false)).count()
    }

    /// Rounds where η ∈ F_t but f_t(A_t) > η(a⋆).
    pub fn optimism_violations(&self, tol: f64) -> usize {
        self.rounds
            .iter()
            .filter(|r| r.eta_in_ft && r.opt_value > self.eta_star + tol)
            .count()
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.rounds {
            wtr.serialize(CsvRow {
                t: r.t,
                arm: r.arm,
                cost: r.cost,
                opt_value: r.opt_value,
                inst_regret: r.inst_regret,
                cum_regret: r.cum_regret,
                beta_t: r.beta_t,
                localized: r.localized.map_or_else(|| "NA".to_string(), |b| b.to_string()),
                eta_in_ft: r.eta_in_ft,
            })
            .map_err(|e| invalid(format!("csv: {e}")))?;
        }
        if self.rounds.is_empty() {
            wtr.write_record(BANDIT_CSV_HEADER)
                .map_err(|e| invalid(format!("csv: {e}")))?;
        }
        wtr.flush().map_err(|e| invalid(format!("csv: {e}")))?;
        Ok(())
    }
}

pub const BANDIT_CSV_HEADER: [&str; 9] = [
    "t",
    "arm",
    "cost",
    "opt_value",
    "inst_regret",
    "cum_regret",
    "beta_t",
    "localized",
    "eta_in_Ft",
];

/// Rows of the class table that equal η to within [`REALISABILITY_TOL`].
pub fn truth_rows(table: &[Vec<f64>], eta: &[f64]) -> Vec<usize> {
    table
        .iter()
        .enumerate()
        .filter(|(_, row)| {
            row.len() == eta.len() && row.iter().zip(eta).all(|(p, q)| (p - q).abs() <= REALISABILITY_TOL)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Run ℓ-UCB for n rounds. The environment and the Bernoullisation coins
/// draw from separate streams derived from `seed`.
pub fn run_bandit(env: &BanditEnv, config: &UcbConfig, n: usize, seed_value: u64) -> Result<RunTrace> {
    let mut learner = UcbLearner::new(config)?;
    if learner.num_arms() != env.num_arms() {
        return Err(invalid(format!(
            "model has {} arms but the environment has {}",
            learner.num_arms(),
            env.num_arms()
        )));
    }
    let truth = truth_rows(&config.model.mean_table(), &env.eta);
    let star_inner: Option<Vec<f64>> = env
        .theta_star
        .as_ref()
        .map(|ts| env.arms.iter().map(|a| dot(a, ts)).collect());
    let mut env_rng = seed::rng(seed::derive(seed_value, seed::STREAM_ENV));
    let mut coin_rng = seed::rng(seed::derive(seed_value, seed::STREAM_BERNOULLI));
    let eta_star = env.eta_star();
    let mut rounds = Vec::with_capacity(n);
    let mut cum = 0.0;
    for t in 1..=n {
        let (arm, cand, diag) = learner.ucb_step(t)?;
        let eta_in_ft = truth.iter().any(|&k| learner.version_space.active[k]);
        let cost = env.sample(arm, &mut env_rng);
        let observed = if config.bernoullise {
            bernoulli_flip(cost, coin_rng.random::<f64>())
        } else {
            cost
        };
        learner.observe(arm, observed);
        let inst = env.eta[arm] - eta_star;
        cum += inst;
        let localized = match (&star_inner, diag.inner) {
            (Some(us), Some(u)) => Some((u - us[arm]).abs() <= config.localization_radius),
            _ => None,
        };
        rounds.push(Round {
            t,
            arm,
            cost,
            observed,
            opt_value: diag.opt_value,
            candidate: cand,
            inst_regret: inst,
            cum_regret: cum,
            beta_t: diag.beta,
            localized,
            eta_in_ft,
        });
    }
    Ok(RunTrace {
        seed: seed_value,
        eta_star,
        a_star_index: env.a_star_index,
        rounds,
    })
}

/// Γ_n = γ(1 + (d_n+1)b + 4 d_n β_n ln(1 + nb)).
pub fn gamma_n(gamma: f64, d_n: f64, b: f64, beta_n: f64, n: usize) -> f64 {
    gamma * (1.0 + (d_n + 1.0) * b + 4.0 * d_n * beta_n * (n as f64 * b).ln_1p())
}

/// 3√(n η⋆ Γ_n) + 6Γ_n + rogue.
pub fn regret_bound_rhs(n: usize, eta_star: f64, gamma_n: f64, rogue_count: usize) -> f64 {
    3.0 * (n as f64 * eta_star * gamma_n).sqrt() + 6.0 * gamma_n + rogue_count as f64
}

/// 64 d κ M² β ln(1 + (64/3) κ² M² S² β).
pub fn rogue_step_bound(d: usize, kappa: f64, m: f64, s: f64, beta_n: f64) -> f64 {
    let m2 = m * m;
    64.0 * d as f64 * kappa * m2 * beta_n * (64.0 / 3.0 * kappa * kappa * m2 * s * s * beta_n).ln_1p()
}

/// 1 with probability y, else 0, given a uniform draw u ∈ [0,1).
#[inline]
pub fn bernoulli_flip(y: f64, u: f64) -> f64 {
    if u < y {
        1.0
    } else {
        0.0
    }
}

/// Replace each y ∈ [0,1] by a Bernoulli(y) draw.
pub fn bernoullise(ys: &[f64], seed_value: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed_value);
    ys.iter().map(|&y| bernoulli_flip(y, rng.random::<f64>())).collect()
}

/// sup |φ_f(y, a)| over the class and y ∈ {0, 1}. All three losses are
/// affine in y up to a candidate-independent term, so the extremes over
/// [0,1] sit at the endpoints.
pub fn excess_bound(loss: &LossFunction, table: &[Vec<f64>], eta: &[f64]) -> f64 {
    let mut b: f64 = 0.0;
    for row in table {
        for (&p, &q) in row.iter().zip(eta) {
            for y in [0.0, 1.0] {
                b = b.max((loss.eval_unchecked(y, p) - loss.eval_unchecked(y, q)).abs());
            }
        }
    }
    b
}

/// φ̄_f(a) = E ℓ(Y, f(a)) − ℓ(Y, η(a)), rows are candidates.
pub fn expected_excess_table(loss: &LossFunction, table: &[Vec<f64>], eta: &[f64]) -> Vec<Vec<f64>> {
    table
        .iter()
        .map(|row| {
            row.iter()
                .zip(eta)
                .map(|(&p, &q)| match loss.kind {
                    LossKind::Squared => (p - q) * (p - q),
                    _ => loss.mean_excess(p, q),
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvgExcessReport {
    pub rounds_checked: usize,
    pub violations: usize,
    /// Largest Σφ̄ / (4β_t) seen.
    pub worst_ratio: f64,
    pub first_violation: Option<usize>,
}

impl AvgExcessReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

/// Check Σ_{i<t} φ̄_{f_t}(A_i) ≤ 4β_t on every round up to which η stayed in
/// the confidence set. `excess` is the candidate × arm φ̄ table.
pub fn check_avg_excess_bound(trace: &RunTrace, excess: &[Vec<f64>]) -> Result<AvgExcessReport> {
    let arms = excess.first().map_or(0, Vec::len);
    let mut counts = vec![0usize; arms];
    let mut rep = AvgExcessReport {
        rounds_checked: 0,
        violations: 0,
        worst_ratio: 0.0,
        first_violation: None,
    };
    for r in &trace.rounds {
        if !r.eta_in_ft {
            break;
        }
        let k = r
            .candidate
            .ok_or_else(|| invalid("avg-excess check needs an exact-enumeration trace"))?;
        let row = excess.get(k).ok_or_else(|| invalid(format!("candidate {k} outside the table")))?;
        let sum: f64 = counts.iter().zip(row).map(|(&c, &v)| c as f64 * v).sum();
        let bound = 4.0 * r.beta_t;
        rep.rounds_checked += 1;
        if bound > 0.0 {
            rep.worst_ratio = rep.worst_ratio.max(sum / bound);
        }
        if sum > bound * (1.0 + 1e-12) + 1e-12 {
            rep.violations += 1;
            rep.first_violation.get_or_insert(r.t);
        }
        counts[r.arm] += 1;
    }
    Ok(rep)
}
