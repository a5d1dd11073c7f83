//! Sub-gamma tail bounds and Monte-Carlo coverage of the uniform Bernstein
//! inequality Σ E[φ(Z_t)|F_{t−1}] ≤ 2Σ φ(Z_t) + 2β.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::io;

use crate::confidence::h_t;
use crate::error::{invalid, Result};
use crate::loss::LossFunction;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubGammaConfig {
    /// Bound on |E[φ(Z_t)|F_{t−1}] − φ(Z_t)|.
    pub b: f64,
    /// Variance-condition constant.
    pub c: f64,
    pub delta: f64,
    /// Cover scale.
    pub epsilon: f64,
    /// Cover size at scale `epsilon`.
    pub cover_size: usize,
    pub horizon: usize,
}

impl SubGammaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.c > 0.0) {
            return Err(invalid(format!("b = {} and c = {} must be positive", self.b, self.c)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta = {} must lie in (0,1)", self.delta)));
        }
        if !(self.epsilon >= 0.0) || self.cover_size == 0 {
            return Err(invalid("epsilon must be nonnegative and the cover nonempty"));
        }
        Ok(())
    }
}

/// β(n) = 5nε/2 + 15(b+c) ln(N h_n/δ).
pub fn uniform_beta(cfg: &SubGammaConfig, n: usize) -> f64 {
    2.5 * n as f64 * cfg.epsilon + 15.0 * (cfg.b + cfg.c) * (cfg.cover_size as f64 * h_t(n as f64) / cfg.delta).ln()
}

/// 4√(V ln(H/δ)) + 11(c+ρ) ln(H/δ) with H = ln(1 + V/ρ²) + e.
pub fn subgamma_tail(v: f64, c: f64, rho: f64, delta: f64) -> f64 {
    let l = ((v / (rho * rho)).ln_1p() + E).ln() - delta.ln();
    4.0 * (v * l).sqrt() + 11.0 * (c + rho) * l
}

/// An adapted process together with a finite class Φ. Each step reports
/// φ(Z_t) and E[φ(Z_t)|F_{t−1}] for every φ.
pub trait IncrementProcess: Sync {
    fn name(&self) -> &str;
    fn num_functions(&self) -> usize;
    fn step<R: Rng>(&self, t: usize, rng: &mut R, phi: &mut [f64], mean: &mut [f64]);
}

/// Log-loss excess losses of N candidate mean vectors over Bernoulli arms.
/// Arms are drawn uniformly at random each round, and the conditioning
/// includes the drawn arm.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliExcessFixture {
    pub eta: Vec<f64>,
    pub table: Vec<Vec<f64>>,
    /// Arm-major tables of φ(0, a), φ(1, a) and φ̄(a), each of width N.
    phi0: Vec<f64>,
    phi1: Vec<f64>,
    mean: Vec<f64>,
}

impl BernoulliExcessFixture {
    pub fn new(eta: Vec<f64>, table: Vec<Vec<f64>>) -> Result<Self> {
        let loss = LossFunction::log();
        let k = eta.len();
        let n = table.len();
        if k == 0 || n == 0 {
            return Err(invalid("fixture needs arms and functions"));
        }
        for &q in &eta {
            if !(q > 0.0 && q < 1.0) {
                return Err(invalid(format!("arm mean {q} must lie in (0,1)")));
            }
        }
        let mut phi0 = vec![0.0; k * n];
        let mut phi1 = vec![0.0; k * n];
        let mut mean = vec![0.0; k * n];
        for (f, row) in table.iter().enumerate() {
            if row.len() != k {
                return Err(invalid(format!("function {f} has {} entries, expected {k}", row.len())));
            }
            for (a, (&p, &q)) in row.iter().zip(&eta).enumerate() {
                phi0[a * n + f] = loss.eval(0.0, p)? - loss.eval(0.0, q)?;
                phi1[a * n + f] = loss.eval(1.0, p)? - loss.eval(1.0, q)?;
                mean[a * n + f] = (1.0 - q) * phi0[a * n + f] + q * phi1[a * n + f];
            }
        }
        Ok(BernoulliExcessFixture {
            eta,
            table,
            phi0,
            phi1,
            mean,
        })
    }

    /// Arm means in [0.1, 0.9] and N candidates in [0.05, 0.95], the first
    /// candidate being η itself.
    pub fn random(num_arms: usize, num_functions: usize, seed_value: u64) -> Result<Self> {
        let mut rng = seed::rng(seed_value);
        let eta: Vec<f64> = (0..num_arms).map(|_| 0.1 + 0.8 * rng.random::<f64>()).collect();
        let mut table = vec![eta.clone()];
        while table.len() < num_functions {
            table.push((0..num_arms).map(|_| 0.05 + 0.9 * rng.random::<f64>()).collect());
        }
        table.truncate(num_functions);
        Self::new(eta, table)
    }

    pub fn num_arms(&self) -> usize {
        self.eta.len()
    }

    /// sup |φ̄ − φ| over functions, arms and outcomes.
    pub fn centered_bound(&self) -> f64 {
        self.mean
            .iter()
            .zip(self.phi0.iter().zip(&self.phi1))
            .map(|(m, (p0, p1))| (m - p0).abs().max((m - p1).abs()))
            .fold(0.0, f64::max)
    }

    /// sup |φ| over functions, arms and outcomes.
    pub fn absolute_bound(&self) -> f64 {
        self.phi0.iter().chain(&self.phi1).map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// max Var(φ)/φ̄ over pairs with φ̄ > 0, computed exactly.
    pub fn variance_ratio(&self) -> f64 {
        let n = self.table.len();
        let mut worst: f64 = 0.0;
        for (a, &q) in self.eta.iter().enumerate() {
            for f in 0..n {
                let i = a * n + f;
                let m = self.mean[i];
                if m > 1e-14 {
                    let var = (1.0 - q) * (self.phi0[i] - m).powi(2) + q * (self.phi1[i] - m).powi(2);
                    worst = worst.max(var / m);
                }
            }
        }
        worst
    }

    /// Configuration with b the centered bound and c = sup|φ| + 4. Fails if
    /// the variance condition does not hold with that c.
    pub fn config(&self, delta: f64, horizon: usize) -> Result<SubGammaConfig> {
        let c = LossFunction::log().variance_constant(self.absolute_bound());
        if self.variance_ratio() > c {
            return Err(invalid(format!(
                "variance ratio {} exceeds c = {c}",
                self.variance_ratio()
            )));
        }
        let cfg = SubGammaConfig {
            b: self.centered_bound(),
            c,
            delta,
            epsilon: 1.0 / horizon.max(1) as f64,
            cover_size: self.table.len(),
            horizon,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl IncrementProcess for BernoulliExcessFixture {
    fn name(&self) -> &str {
        "bernoulli_excess"
    }

    fn num_functions(&self) -> usize {
        self.table.len()
    }

    fn step<R: Rng>(&self, _t: usize, rng: &mut R, phi: &mut [f64], mean: &mut [f64]) {
        let n = self.table.len();
        let a = rng.random_range(0..self.num_arms());
        let y = rng.random::<f64>() < self.eta[a];
        let src = if y { &self.phi1 } else { &self.phi0 };
        phi.copy_from_slice(&src[a * n..(a + 1) * n]);
        mean.copy_from_slice(&self.mean[a * n..(a + 1) * n]);
    }
}

/// φ(Z_t) = v_φ with no randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicFixture {
    pub values: Vec<f64>,
}

impl IncrementProcess for DeterministicFixture {
    fn name(&self) -> &str {
        "deterministic"
    }

    fn num_functions(&self) -> usize {
        self.values.len()
    }

    fn step<R: Rng>(&self, _t: usize, _rng: &mut R, phi: &mut [f64], mean: &mut [f64]) {
        phi.copy_from_slice(&self.values);
        mean.copy_from_slice(&self.values);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub fixture: String,
    pub reps: usize,
    pub n: usize,
    pub delta: f64,
    pub failures: usize,
    pub failure_rate: f64,
}

impl CoverageReport {
    /// δ + 3√(δ(1−δ)/reps).
    pub fn upper_band(&self) -> f64 {
        self.delta + 3.0 * (self.delta * (1.0 - self.delta) / self.reps.max(1) as f64).sqrt()
    }

    pub fn pass(&self) -> bool {
        self.failure_rate <= self.upper_band()
    }
}

pub const COVERAGE_CSV_HEADER: [&str; 6] = ["fixture", "reps", "n", "delta", "failures", "failure_rate"];

pub fn write_coverage_csv<W: io::Write>(reports: &[CoverageReport], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let err = |e: csv::Error| invalid(format!("csv: {e}"));
    wtr.write_record(COVERAGE_CSV_HEADER).map_err(err)?;
    for r in reports {
        wtr.serialize(r).map_err(err)?;
    }
    wtr.flush().map_err(|e| invalid(format!("csv: {e}")))?;
    Ok(())
}

/// True when some φ and some prefix n' ≤ n break the inequality.
pub fn replicate_fails<P: IncrementProcess, R: Rng>(process: &P, cfg: &SubGammaConfig, n: usize, rng: &mut R) -> bool {
    let k = process.num_functions();
    let mut phi = vec![0.0; k];
    let mut mean = vec![0.0; k];
    let mut sum_phi = vec![0.0; k];
    let mut sum_mean = vec![0.0; k];
    let mut failed = false;
    for t in 1..=n {
        process.step(t, rng, &mut phi, &mut mean);
        let beta2 = 2.0 * uniform_beta(cfg, t);
        for i in 0..k {
            sum_phi[i] += phi[i];
            sum_mean[i] += mean[i];
            if sum_mean[i] > 2.0 * sum_phi[i] + beta2 {
                failed = true;
            }
        }
    }
    failed
}

/// Fraction of replications with a time-uniform violation. Replication r
/// draws from the stream derived from (seed, r).
pub fn coverage_experiment<P: IncrementProcess>(
    process: &P,
    cfg: &SubGammaConfig,
    n: usize,
    reps: usize,
    seed_value: u64,
) -> Result<CoverageReport> {
    cfg.validate()?;
    let failures = (0..reps)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = seed::rng(seed::derive(seed_value, r as u64));
            replicate_fails(process, cfg, n, &mut rng)
        })
        .count();
    Ok(CoverageReport {
        fixture: process.name().to_string(),
        reps,
        n,
        delta: cfg.delta,
        failures,
        failure_rate: if reps == 0 { 0.0 } else { failures as f64 / reps as f64 },
    })
}
