//! Losses on [0,1]-valued costs, excess losses, the triangular discrimination,
//! and grid verifiers for the boundedness, variance and triangle conditions.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, LOG2_E};

use crate::error::{invalid, Error, Result};

/// Boundary tolerance used when checking that a prediction lies in its domain.
pub const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Log,
    Poisson,
    Squared,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Log => "log",
            LossKind::Poisson => "poisson",
            LossKind::Squared => "squared",
        }
    }
}

/// A loss together with the interval of predictions it accepts.
///
/// The natural domains are (0,1) for log-loss, (0,1] for Poisson loss and
/// [0,1] for squared loss. A link-induced restriction `[lo, hi]` can be
/// layered on top with [`LossFunction::restricted`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossFunction {
    pub kind: LossKind,
    pub domain: Option<(f64, f64)>,
}

impl LossFunction {
    pub const fn new(kind: LossKind) -> Self {
        LossFunction { kind, domain: None }
    }

    pub const fn log() -> Self {
        Self::new(LossKind::Log)
    }

    pub const fn poisson() -> Self {
        Self::new(LossKind::Poisson)
    }

    pub const fn squared() -> Self {
        Self::new(LossKind::Squared)
    }

    pub fn restricted(kind: LossKind, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || lo < 0.0 || hi > 1.0 {
            return Err(invalid(format!("prediction domain [{lo}, {hi}] is not a sub-interval of [0,1]")));
        }
        Ok(LossFunction {
            kind,
            domain: Some((lo, hi)),
        })
    }

    /// Closed interval of admissible predictions. Open ends of the natural
    /// domain are reported as the endpoint itself.
    pub fn prediction_domain(&self) -> (f64, f64) {
        self.domain.unwrap_or((0.0, 1.0))
    }

    fn check_prediction(&self, y: f64, p: f64) -> Result<()> {
        let domain_err = |lo, hi| Error::Domain {
            what: "prediction",
            value: p,
            lo,
            hi,
        };
        if !p.is_finite() {
            return Err(domain_err(0.0, 1.0));
        }
        if let Some((lo, hi)) = self.domain {
            if p < lo - DOMAIN_TOL || p > hi + DOMAIN_TOL {
                return Err(domain_err(lo, hi));
            }
        }
        let ok = match self.kind {
            // p = 1 is only finite when the outcome is exactly 1.
            LossKind::Log => p > 0.0 && (p < 1.0 || (p == 1.0 && y == 1.0)),
            LossKind::Poisson => p > 0.0 && p <= 1.0,
            LossKind::Squared => (0.0..=1.0).contains(&p),
        };
        if ok {
            Ok(())
        } else {
            Err(domain_err(0.0, 1.0))
        }
    }

    pub fn eval(&self, y: f64, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain {
                what: "outcome",
                value: y,
                lo: 0.0,
                hi: 1.0,
            });
        }
        self.check_prediction(y, p)?;
        Ok(self.eval_unchecked(y, p))
    }

    /// Loss value without domain checks. Uses 0·ln 0 = 0.
    #[inline]
    pub fn eval_unchecked(&self, y: f64, p: f64) -> f64 {
        match self.kind {
            LossKind::Log => -xlny(y, p) - xlny(1.0 - y, 1.0 - p),
            LossKind::Poisson => p - xlny(y, p),
            LossKind::Squared => (y - p) * (y - p),
        }
    }

    /// φ = ℓ(y, f) − ℓ(y, η).
    pub fn excess(&self, y: f64, f_val: f64, eta_val: f64) -> Result<f64> {
        Ok(self.eval(y, f_val)? - self.eval(y, eta_val)?)
    }

    /// φ̄ = Σ prob·φ(y) with η taken as the mean of `dist`.
    pub fn expected_excess(&self, f_val: f64, dist: &FiniteCostDist) -> Result<f64> {
        let eta = dist.mean();
        self.check_prediction(0.5, eta)?;
        self.check_prediction(0.5, f_val)?;
        let mut acc = 0.0;
        for &(y, w) in dist.atoms() {
            if w > 0.0 {
                acc += w * self.excess(y, f_val, eta)?;
            }
        }
        Ok(acc)
    }

    /// Closed form of the expected excess loss as a function of the
    /// prediction `p` and the true mean `q` alone.
    pub fn mean_excess(&self, p: f64, q: f64) -> f64 {
        match self.kind {
            LossKind::Log => kl_bernoulli(q, p),
            LossKind::Poisson => poisson_excess(q, p),
            LossKind::Squared => (p - q) * (p - q),
        }
    }

    /// Sharp triangle constant, when the loss has one.
    pub fn triangle_constant(&self) -> Option<f64> {
        match self.kind {
            LossKind::Log => Some(LOG_TRIANGLE_GAMMA),
            LossKind::Poisson => Some(POISSON_TRIANGLE_GAMMA),
            LossKind::Squared => None,
        }
    }

    /// Rounded triangle constant quoted alongside the sharp one.
    pub fn rounded_triangle_constant(&self) -> Option<f64> {
        match self.kind {
            LossKind::Log => Some(2.0),
            LossKind::Poisson => Some(5.0),
            LossKind::Squared => None,
        }
    }

    /// Variance constant c for a loss whose excess losses are bounded by b.
    pub fn variance_constant(&self, b: f64) -> f64 {
        match self.kind {
            LossKind::Log => b + 4.0,
            LossKind::Poisson => b + 2.0,
            // Var φ = (p−q)²·4Var(Y) ≤ (p−q)² = φ̄.
            LossKind::Squared => 1.0,
        }
    }

    /// (α(p), σ(p)) with ℓ(y,p) = α(p) + y·σ(p) + ρ(y) and ρ from
    /// [`outcome_part`](Self::outcome_part). Needs p inside the open domain
    /// for the log and Poisson losses.
    #[inline]
    pub fn affine_parts(&self, p: f64) -> (f64, f64) {
        match self.kind {
            LossKind::Log => {
                let l1 = (-p).ln_1p();
                (-l1, l1 - p.ln())
            }
            LossKind::Poisson => (p, -p.ln()),
            LossKind::Squared => (p * p, -2.0 * p),
        }
    }

    /// The prediction-free part ρ(y) of the loss.
    #[inline]
    pub fn outcome_part(&self, y: f64) -> f64 {
        match self.kind {
            LossKind::Log | LossKind::Poisson => 0.0,
            LossKind::Squared => y * y,
        }
    }
}

/// 2 / log₂ e.
pub const LOG_TRIANGLE_GAMMA: f64 = 2.0 * LN_2;
/// 4√e / log₂ e.
pub const POISSON_TRIANGLE_GAMMA: f64 = 4.0 * 1.648_721_270_700_128_2 * LN_2;

#[inline]
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Δ(p,q) = (p−q)²/(p+q), with Δ(0,0) = 0.
#[inline]
pub fn triangular_discrimination(p: f64, q: f64) -> f64 {
    let s = p + q;
    if s == 0.0 {
        0.0
    } else {
        (p - q) * (p - q) / s
    }
}

/// KL(Bern(q) ‖ Bern(p)).
pub fn kl_bernoulli(q: f64, p: f64) -> f64 {
    xlny(q, q) - xlny(q, p) + xlny(1.0 - q, 1.0 - q) - xlny(1.0 - q, 1.0 - p)
}

/// p − q + q ln(q/p): KL between Poisson laws with means q and p, and the
/// expected Poisson-loss excess of predicting p when the mean is q.
pub fn poisson_excess(q: f64, p: f64) -> f64 {
    p - q + xlny(q, q) - xlny(q, p)
}

/// Squared Hellinger distance between Bernoulli laws, ∫(√p − √q)² without ½.
pub fn hellinger_sq_bernoulli(p: f64, q: f64) -> f64 {
    let a = p.sqrt() - q.sqrt();
    let b = (1.0 - p).sqrt() - (1.0 - q).sqrt();
    a * a + b * b
}

/// 1 − exp(−(√p − √q)²/2) for Poisson laws with means p and q.
pub fn hellinger_sq_poisson(p: f64, q: f64) -> f64 {
    let a = p.sqrt() - q.sqrt();
    -(-(a * a) / 2.0).exp_m1()
}

/// A cost distribution with finitely many atoms in [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteCostDist {
    atoms: Vec<(f64, f64)>,
}

impl FiniteCostDist {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("cost distribution has no atoms"));
        }
        let mut total = 0.0;
        for &(y, w) in &atoms {
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::Domain {
                    what: "cost atom",
                    value: y,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            if !(w >= 0.0) {
                return Err(invalid(format!("negative atom probability {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("atom probabilities sum to {total}, not 1")));
        }
        Ok(FiniteCostDist { atoms })
    }

    pub fn bernoulli(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain {
                what: "Bernoulli mean",
                value: q,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(FiniteCostDist {
            atoms: vec![(0.0, 1.0 - q), (1.0, q)],
        })
    }

    /// Point mass at y.
    pub fn dirac(y: f64) -> Result<Self> {
        Self::new(vec![(y, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(y, w)| y * w).sum()
    }

    /// Draw from the distribution using a uniform variate in [0,1).
    pub fn sample_with(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(y, w) in &self.atoms {
            acc += w;
            if u < acc {
                return y;
            }
        }
        self.atoms.iter().rev().find(|a| a.1 > 0.0).map_or(self.atoms[0].0, |a| a.0)
    }
}

/// Outcome of a grid check of a scalar inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub points: usize,
    pub violations: usize,
    /// Largest amount by which the inequality failed (≤ 0 when it held).
    pub worst_gap: f64,
    pub first_violation: Option<Vec<f64>>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            points: 0,
            violations: 0,
            worst_gap: f64::NEG_INFINITY,
            first_violation: None,
        }
    }

    /// Record `lhs ≤ rhs + slack` at `point`.
    fn record(&mut self, lhs: f64, rhs: f64, slack: f64, point: &[f64]) {
        self.record_gap(lhs - rhs, slack, point);
    }

    fn record_gap(&mut self, gap: f64, slack: f64, point: &[f64]) {
        self.points += 1;
        if gap > self.worst_gap || gap.is_nan() {
            self.worst_gap = gap;
        }
        if !(gap <= slack) {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(point.to_vec());
            }
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleReport {
    pub loss: LossKind,
    pub points: usize,
    pub max_ratio: f64,
    pub argmax: Option<(f64, f64)>,
    /// Sharp constant; `None` for squared loss, which has none.
    pub gamma_claimed: Option<f64>,
    pub pass: bool,
    pub gamma_rounded: Option<f64>,
    pub rounded_pass: bool,
    /// A pair with Δ/φ̄ above `max_ratio`-based claims, for squared loss.
    pub witness: Option<(f64, f64)>,
}

/// Relative slack used by the ratio verifiers.
pub const REL_SLACK: f64 = 1e-9;

/// Max of Δ(p,q)/φ̄(p;q) over the grid of (prediction p, mean q) pairs.
pub fn verify_triangle_condition(loss: &LossFunction, grid: &[(f64, f64)]) -> TriangleReport {
    let mut max_ratio: f64 = 0.0;
    let mut argmax = None;
    for &(p, q) in grid {
        let delta = triangular_discrimination(p, q);
        let phi = loss.mean_excess(p, q);
        if delta == 0.0 && phi <= 0.0 {
            continue;
        }
        let ratio = if phi > 0.0 { delta / phi } else { f64::INFINITY };
        if ratio > max_ratio || argmax.is_none() {
            max_ratio = ratio.max(max_ratio);
            argmax = Some((p, q));
        }
    }
    let gamma = loss.triangle_constant();
    let rounded = loss.rounded_triangle_constant();
    let within = |g: Option<f64>| g.is_some_and(|g| max_ratio <= g * (1.0 + REL_SLACK));
    let witness = match loss.kind {
        LossKind::Squared => Some(argmax.unwrap_or_else(|| squared_triangle_witness(1.0))),
        _ => None,
    };
    TriangleReport {
        loss: loss.kind,
        points: grid.len(),
        max_ratio,
        argmax,
        gamma_claimed: gamma,
        pass: within(gamma),
        gamma_rounded: rounded,
        rounded_pass: within(rounded),
        witness,
    }
}

/// A pair (p, q) at which squared loss has Δ(p,q)/(p−q)² = 2γ > γ.
///
/// Δ/(p−q)² = 1/(p+q), so shrinking p and q at a fixed ratio beats any γ.
pub fn squared_triangle_witness(gamma: f64) -> (f64, f64) {
    let t = 1.0 / (6.0 * gamma.max(1.0));
    (2.0 * t, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub loss: LossKind,
    pub points: usize,
    pub b: f64,
    pub max_ratio: f64,
    pub c_claimed: f64,
    pub pass: bool,
}

/// Max of Var φ/φ̄ over (prediction, distribution) pairs; b is the largest
/// |φ| seen on any atom of the supplied grid.
pub fn verify_variance_condition(
    loss: &LossFunction,
    grid: &[(f64, FiniteCostDist)],
) -> Result<VarianceReport> {
    let mut b: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for (p, dist) in grid {
        let q = dist.mean();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for &(y, w) in dist.atoms() {
            if w == 0.0 {
                continue;
            }
            let phi = loss.excess(y, *p, q)?;
            b = b.max(phi.abs());
            m1 += w * phi;
            m2 += w * phi * phi;
        }
        let var = (m2 - m1 * m1).max(0.0);
        if m1 <= 0.0 && var <= 1e-15 {
            continue;
        }
        let ratio = if m1 > 0.0 { var / m1 } else { f64::INFINITY };
        max_ratio = max_ratio.max(ratio);
    }
    let c = loss.variance_constant(b);
    Ok(VarianceReport {
        loss: loss.kind,
        points: grid.len(),
        b,
        max_ratio,
        c_claimed: c,
        pass: max_ratio <= c * (1.0 + REL_SLACK),
    })
}

/// (√p − √q)² ≤ Δ(p,q) ≤ 2(√p − √q)².
pub fn verify_delta_sandwich(grid: &[(f64, f64)]) -> CheckReport {
    let mut rep = CheckReport::new("delta_sandwich");
    for &(p, q) in grid {
        let h = (p.sqrt() - q.sqrt()).powi(2);
        let d = triangular_discrimination(p, q);
        rep.record_gap((h - d).max(d - 2.0 * h), 1e-12, &[p, q]);
    }
    rep
}

/// x − z ≤ 3√(zΔ(x,y)) + 6Δ(x,y) whenever y ≤ z.
pub fn verify_triangle_cost_bound(grid: &[(f64, f64, f64)]) -> CheckReport {
    let mut rep = CheckReport::new("triangle_cost_bound");
    for &(x, y, z) in grid {
        if y > z {
            continue;
        }
        let d = triangular_discrimination(x, y);
        rep.record(x - z, 3.0 * (z * d).sqrt() + 6.0 * d, 1e-12, &[x, y, z]);
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Bernoulli,
    Poisson,
}

/// KL(Q‖P) ≥ log₂e · H²(P,Q) in nats, for pairs (q, p).
///
/// This fails for some Bernoulli pairs far apart (e.g. q = 1, p = 0.5);
/// the report records them rather than hiding them.
pub fn kl_hellinger_check(family: Family, pairs: &[(f64, f64)]) -> CheckReport {
    let mut rep = CheckReport::new(match family {
        Family::Bernoulli => "kl_hellinger_bernoulli",
        Family::Poisson => "kl_hellinger_poisson",
    });
    for &(q, p) in pairs {
        let (kl, h2) = match family {
            Family::Bernoulli => (kl_bernoulli(q, p), hellinger_sq_bernoulli(p, q)),
            Family::Poisson => (poisson_excess(q, p), hellinger_sq_poisson(p, q)),
        };
        rep.record(LOG2_E * h2, kl, 1e-12, &[q, p]);
    }
    rep
}

/// E exp(−λφ) ≤ 1 with λ = 1/2 for log-loss and λ = 1 for Poisson loss.
pub fn verify_mixability(loss: &LossFunction, grid: &[(f64, FiniteCostDist)]) -> Result<CheckReport> {
    let lambda = match loss.kind {
        LossKind::Log => 0.5,
        LossKind::Poisson => 1.0,
        LossKind::Squared => return Err(invalid("squared loss has no mixability constant here")),
    };
    let mut rep = CheckReport::new("mixability");
    for (p, dist) in grid {
        let q = dist.mean();
        let mut e = 0.0;
        for &(y, w) in dist.atoms() {
            if w > 0.0 {
                e += w * (-lambda * loss.excess(y, *p, q)?).exp();
            }
        }
        rep.record(e, 1.0, 1e-12, &[*p, q]);
    }
    Ok(rep)
}

/// Points {step, 2·step, …} strictly inside (0,1).
pub fn interior_grid(step: f64) -> Vec<f64> {
    let k = (1.0 / step).round() as usize;
    (1..k).map(|i| i as f64 * step).collect()
}

/// All pairs drawn from `interior_grid(step)`.
pub fn pair_grid(step: f64) -> Vec<(f64, f64)> {
    let g = interior_grid(step);
    g.iter().flat_map(|&p| g.iter().map(move |&q| (p, q))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn loss_values() {
        assert_eq!(LossFunction::log().eval(1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(LossFunction::log().eval(1.0, 0.5).unwrap(), LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(LossFunction::poisson().eval(0.0, 0.3).unwrap(), 0.3, epsilon = 1e-15);
        assert!(LossFunction::log().eval(1.0, 0.0).is_err());
        assert!(LossFunction::log().eval(0.5, 1.0).is_err());
        assert!(LossFunction::poisson().eval(0.5, 0.0).is_err());
        assert!(LossFunction::squared().eval(0.5, 0.0).is_ok());
        assert!(LossFunction::squared().eval(0.5, 1.01).is_err());
    }

    #[test]
    fn affine_split_reassembles_the_loss() {
        for loss in [LossFunction::log(), LossFunction::poisson(), LossFunction::squared()] {
            for &p in &[0.01, 0.3, 0.77, 0.99] {
                for &y in &[0.0, 0.2, 0.5, 1.0] {
                    let (a, s) = loss.affine_parts(p);
                    let v = a + y * s + loss.outcome_part(y);
                    assert_abs_diff_eq!(v, loss.eval_unchecked(y, p), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn restricted_domain_is_enforced() {
        let l = LossFunction::restricted(LossKind::Poisson, 0.1, 1.0).unwrap();
        assert!(l.eval(0.0, 0.05).is_err());
        assert!(l.eval(0.0, 0.1).is_ok());
    }

    #[test]
    fn triangular_discrimination_values() {
        assert_eq!(triangular_discrimination(0.3, 0.3), 0.0);
        assert_eq!(triangular_discrimination(1.0, 0.0), 1.0);
        assert_eq!(triangular_discrimination(0.0, 0.0), 0.0);
        assert_abs_diff_eq!(triangular_discrimination(0.5, 0.25), 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn excess_values() {
        let log = LossFunction::log();
        assert_abs_diff_eq!(log.excess(1.0, 0.5, 0.25).unwrap(), -LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(LossFunction::poisson().excess(0.0, 0.6, 0.2).unwrap(), 0.4, epsilon = 1e-15);
        assert_eq!(log.excess(0.3, 0.4, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn expected_excess_matches_kl() {
        let d = FiniteCostDist::bernoulli(0.5).unwrap();
        let v = LossFunction::log().expected_excess(0.25, &d).unwrap();
        let oracle = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.143_841, epsilon = 1e-6);
        assert_abs_diff_eq!(LossFunction::log().expected_excess(0.5, &d).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn poisson_expected_excess_depends_on_mean_only() {
        let d = FiniteCostDist::new(vec![(0.0, 0.3), (0.5, 0.4), (1.0, 0.3)]).unwrap();
        let q = d.mean();
        let p = 0.8;
        let v = LossFunction::poisson().expected_excess(p, &d).unwrap();
        assert_abs_diff_eq!(v, p - q + q * (q / p).ln(), epsilon = 1e-12);
    }

    #[test]
    fn distribution_validation() {
        assert!(FiniteCostDist::new(vec![(0.5, 0.5)]).is_err());
        assert!(FiniteCostDist::new(vec![(1.5, 1.0)]).is_err());
        assert!(FiniteCostDist::new(vec![(0.5, -0.1), (0.2, 1.1)]).is_err());
        let d = FiniteCostDist::new(vec![(0.2, 0.5), (0.6, 0.5)]).unwrap();
        assert_abs_diff_eq!(d.mean(), 0.4, epsilon = 1e-15);
        assert_eq!(d.sample_with(0.1), 0.2);
        assert_eq!(d.sample_with(0.7), 0.6);
    }

    #[test]
    fn triangle_condition_on_default_grid() {
        let grid = pair_grid(0.01);
        let log = verify_triangle_condition(&LossFunction::log(), &grid);
        assert!(log.pass && log.rounded_pass, "{log:?}");
        let poi = verify_triangle_condition(&LossFunction::poisson(), &grid);
        assert!(poi.pass && poi.rounded_pass, "{poi:?}");
        let sq = verify_triangle_condition(&LossFunction::squared(), &grid);
        assert!(!sq.pass && sq.witness.is_some());
    }

    #[test]
    fn diagonal_grid_is_vacuous() {
        let grid: Vec<_> = interior_grid(0.1).into_iter().map(|q| (q, q)).collect();
        let r = verify_triangle_condition(&LossFunction::log(), &grid);
        assert_eq!(r.max_ratio, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn squared_witness_beats_gamma() {
        for gamma in [1.0, 10.0, 1e3, 1e6] {
            let (p, q) = squared_triangle_witness(gamma);
            let ratio = triangular_discrimination(p, q) / LossFunction::squared().mean_excess(p, q);
            assert!(ratio > gamma);
        }
    }

    #[test]
    fn variance_condition() {
        let g = interior_grid(0.05);
        let grid: Vec<_> = g
            .iter()
            .flat_map(|&p| g.iter().map(move |&q| (p, FiniteCostDist::bernoulli(q).unwrap())))
            .collect();
        let r = verify_variance_condition(&LossFunction::log(), &grid).unwrap();
        assert!(r.pass, "{r:?}");
        let three: Vec<_> = g
            .iter()
            .flat_map(|&p| {
                g.iter().map(move |&w| {
                    (p, FiniteCostDist::new(vec![(0.0, (1.0 - w) / 2.0), (0.5, w), (1.0, (1.0 - w) / 2.0)]).unwrap())
                })
            })
            .collect();
        let r = verify_variance_condition(&LossFunction::poisson(), &three).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn sandwich_and_cost_bound_examples() {
        assert!(verify_delta_sandwich(&[(0.0, 0.0), (1.0, 0.0)]).pass());
        assert!(verify_triangle_cost_bound(&[(0.2, 0.2, 0.2), (0.9, 0.1, 0.2)]).pass());
        // The y ≤ z precondition filters points rather than failing them.
        assert_eq!(verify_triangle_cost_bound(&[(0.9, 0.5, 0.1)]).points, 0);
    }

    #[test]
    fn kl_hellinger_examples() {
        assert!(kl_hellinger_check(Family::Bernoulli, &[(0.5, 0.25), (0.4, 0.4)]).pass());
        assert!(kl_hellinger_check(Family::Poisson, &[(0.5, 0.25)]).pass());
        // Far-apart Bernoulli laws break the inequality in nats.
        assert!(!kl_hellinger_check(Family::Bernoulli, &[(1.0, 0.5)]).pass());
    }

    #[test]
    fn mixability_on_grids() {
        let g = interior_grid(0.05);
        let grid: Vec<_> = g
            .iter()
            .flat_map(|&p| g.iter().map(move |&q| (p, FiniteCostDist::bernoulli(q).unwrap())))
            .collect();
        assert!(verify_mixability(&LossFunction::log(), &grid).unwrap().pass());
        assert!(verify_mixability(&LossFunction::poisson(), &grid).unwrap().pass());
    }

    proptest! {
        #[test]
        fn delta_is_symmetric(p in 0.0..=1.0f64, q in 0.0..=1.0f64) {
            prop_assert_eq!(triangular_discrimination(p, q), triangular_discrimination(q, p));
            prop_assert!(triangular_discrimination(p, q) >= 0.0);
        }

        #[test]
        fn expected_excess_nonnegative(p in 0.001..0.999f64, q in 0.0..=1.0f64) {
            let d = FiniteCostDist::bernoulli(q).unwrap();
            prop_assert!(LossFunction::log().expected_excess(p, &d).unwrap() >= -1e-15);
            prop_assert!(LossFunction::poisson().expected_excess(p, &d).unwrap() >= -1e-15);
        }

        #[test]
        fn log_excess_is_bernoulli_kl(p in 0.001..0.999f64, q in 0.0..=1.0f64) {
            let d = FiniteCostDist::bernoulli(q).unwrap();
            let v = LossFunction::log().expected_excess(p, &d).unwrap();
            prop_assert!((v - kl_bernoulli(q, p)).abs() <= 1e-12);
        }

        #[test]
        fn poisson_excess_mean_only(
            p in 0.001..=1.0f64,
            ys in proptest::collection::vec(0.0..=1.0f64, 1..6),
            ws in proptest::collection::vec(0.01..1.0f64, 6),
        ) {
            let total: f64 = ws[..ys.len()].iter().sum();
            let atoms: Vec<_> = ys.iter().zip(&ws).map(|(&y, &w)| (y, w / total)).collect();
            let Ok(d) = FiniteCostDist::new(atoms) else { return Ok(()); };
            let q = d.mean();
            prop_assume!(q > 0.0);
            let v = LossFunction::poisson().expected_excess(p, &d).unwrap();
            prop_assert!((v - (p - q + q * (q / p).ln())).abs() <= 1e-12);
        }

        #[test]
        fn sandwich_holds(p in 0.0..=1.0f64, q in 0.0..=1.0f64) {
            prop_assert!(verify_delta_sandwich(&[(p, q)]).pass());
        }

        #[test]
        fn cost_bound_holds(x in 1e-6..=1.0f64, y in 1e-6..=1.0f64, z in 1e-6..=1.0f64) {
            let (y, z) = if y <= z { (y, z) } else { (z, y) };
            prop_assert!(verify_triangle_cost_bound(&[(x, y, z)]).pass());
        }
    }
}
