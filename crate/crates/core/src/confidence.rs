//! Confidence widths, ERM fitting, version spaces and their ellipsoidal
//! enclosures.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use crate::error::{invalid, Error, Result};
use crate::glm::{dot, GlmModel, LinkFunction, LinkKind};
use crate::loss::{LossFunction, LossKind};

/// h_t = e + ln(1 + t).
#[inline]
pub fn h_t(t: f64) -> f64 {
    E + t.ln_1p()
}

/// 5/2 + 15(b+c)(log N + ln(h_t/δ)).
pub fn beta_formula(b: f64, c: f64, log_n: f64, delta: f64, t: usize) -> f64 {
    2.5 + 15.0 * (b + c) * (log_n + (h_t(t as f64) / delta).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub delta: f64,
    pub n: usize,
    pub b: f64,
    pub c: f64,
    /// Log of the cover size at scale 1/n (log |F| for a finite class).
    pub log_n: f64,
}

impl BetaSchedule {
    pub fn new(delta: f64, n: usize, b: f64, c: f64, log_n: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("delta = {delta} must lie in (0,1]")));
        }
        if !(b >= 0.0 && c >= 0.0 && log_n >= 0.0) {
            return Err(invalid("b, c and log N must be nonnegative"));
        }
        Ok(BetaSchedule { delta, n, b, c, log_n })
    }

    /// Width for a finite class, using log |F| as the cover.
    pub fn finite_class(delta: f64, n: usize, b: f64, c: f64, class_size: usize) -> Result<Self> {
        Self::new(delta, n, b, c, (class_size.max(1) as f64).ln())
    }

    /// Width for a GLM grid, using the parametric cover bound at scale 1/n.
    pub fn glm_cover(delta: f64, n: usize, b: f64, c: f64, s: f64, d: usize) -> Result<Self> {
        Self::new(delta, n, b, c, glm_cover_log(s, d, 1.0 / n.max(1) as f64))
    }

    pub fn beta(&self, t: usize) -> f64 {
        beta_formula(self.b, self.c, self.log_n, self.delta, t)
    }
}

/// d·ln(1 + 8S/ε), the log of the parametric cover bound.
pub fn glm_cover_log(s: f64, d: usize, eps: f64) -> f64 {
    d as f64 * (8.0 * s / eps).ln_1p()
}

/// 5/2 + 60(2S+1)[d ln(1+8Sn) + ln(h_t/δ)].
pub fn logistic_beta(s: f64, d: usize, n: usize, delta: f64, t: usize) -> f64 {
    2.5 + 60.0 * (2.0 * s + 1.0) * (d as f64 * (8.0 * s * n as f64).ln_1p() + (h_t(t as f64) / delta).ln())
}

/// How the width β_t is produced each round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BetaRule {
    Schedule(BetaSchedule),
    Logistic { s: f64, d: usize, n: usize, delta: f64 },
    Constant { value: f64 },
}

impl BetaRule {
    pub fn beta(&self, t: usize) -> f64 {
        match *self {
            BetaRule::Schedule(s) => s.beta(t),
            BetaRule::Logistic { s, d, n, delta } => logistic_beta(s, d, n, delta, t),
            BetaRule::Constant { value } => value,
        }
    }
}

/// Index of the smallest entry, ties broken by lowest index.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if v < values[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

/// Empirical risk Σ ℓ(y_i, μ(⟨a_i,θ⟩)) of every grid parameter.
pub fn grid_risks(loss: &LossFunction, model: &GlmModel, data: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    model
        .thetas
        .iter()
        .map(|th| {
            data.iter()
                .map(|(a, y)| loss.eval(*y, model.link.mu(dot(a, th))))
                .sum::<Result<f64>>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErmMode {
    /// Exact argmin over the model's finite parameter grid.
    Grid,
    /// Damped Newton over the S-ball.
    Continuous,
}

/// Newton settings for continuous ERM.
pub const NEWTON_MAX_ITER: usize = 500;
pub const NEWTON_TOL: f64 = 1e-8;
pub const ARMIJO: f64 = 1e-4;

pub fn erm_fit(loss: &LossFunction, model: &GlmModel, data: &[(Vec<f64>, f64)], mode: ErmMode) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Ok(vec![0.0; model.d]);
    }
    match mode {
        ErmMode::Grid => {
            let risks = grid_risks(loss, model, data)?;
            let i = argmin_first(&risks).ok_or_else(|| invalid("parameter grid is empty"))?;
            Ok(model.thetas[i].clone())
        }
        ErmMode::Continuous => erm_continuous(loss, &model.link, model.d, data),
    }
}

/// Projection onto the Euclidean ball of radius s.
fn project_ball(v: &DVector<f64>, s: f64) -> DVector<f64> {
    let n = v.norm();
    if n > s {
        v * (s / n)
    } else {
        v.clone()
    }
}

struct LogisticRisk<'a> {
    data: &'a [(Vec<f64>, f64)],
    d: usize,
}

impl LogisticRisk<'_> {
    fn scale(&self) -> f64 {
        1.0 / self.data.len() as f64
    }

    /// Mean of −y u + ln(1+e^u), which equals the mean log-loss of μ(u).
    fn value(&self, th: &DVector<f64>) -> f64 {
        let s: f64 = self
            .data
            .iter()
            .map(|(a, y)| {
                let u = dot(a, th.as_slice());
                softplus(u) - y * u
            })
            .sum();
        s * self.scale()
    }

    fn grad_hess(&self, th: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let mut g = DVector::zeros(self.d);
        let mut h = DMatrix::zeros(self.d, self.d);
        for (a, y) in self.data {
            let av = DVector::from_column_slice(a);
            let u = dot(a, th.as_slice());
            let m = crate::glm::sigmoid(u);
            g.axpy(m - y, &av, 1.0);
            h.ger(m * (1.0 - m), &av, &av, 1.0);
        }
        (g * self.scale(), h * self.scale())
    }
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// argmin over ‖x‖ ≤ s of g·(x−θ) + ½(x−θ)ᵀH(x−θ), via (H + λI)x = Hθ − g
/// with λ ≥ 0 found by bisection on ‖x(λ)‖ = s.
fn ball_constrained_model_min(h: &DMatrix<f64>, g: &DVector<f64>, th: &DVector<f64>, s: f64) -> Option<DVector<f64>> {
    let d = th.len();
    let rhs = h * th - g;
    let solve = |lam: f64| (h + DMatrix::identity(d, d) * lam).cholesky().map(|c| c.solve(&rhs));
    let x0 = solve(0.0)?;
    if x0.norm() <= s {
        return Some(x0);
    }
    let (mut lo, mut hi) = (0.0, rhs.norm() / s);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if solve(mid)?.norm() > s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi) {
            break;
        }
    }
    solve(hi).map(|x| project_ball(&x, s))
}

/// Projected damped Newton on the mean log-loss over the S-ball.
///
/// Each step moves toward the minimiser of the local quadratic model over the
/// ball, with Armijo backtracking, and falls back to a projected gradient step
/// when that fails to decrease. The stopping rule is ‖θ − P(θ − ∇)‖ ≤ 1e-8 on the mean risk.
pub fn erm_continuous(loss: &LossFunction, link: &LinkFunction, d: usize, data: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    if link.kind != LinkKind::Sigmoid || loss.kind != LossKind::Log {
        return Err(invalid(
            "continuous ERM is implemented for the sigmoid link with log-loss only; use grid mode",
        ));
    }
    if data.is_empty() {
        return Ok(vec![0.0; d]);
    }
    for (a, y) in data {
        if a.len() != d || !(0.0..=1.0).contains(y) {
            return Err(invalid("data point has the wrong dimension or an outcome outside [0,1]"));
        }
    }
    let risk = LogisticRisk { data, d };
    let s = link.s;
    let mut th = DVector::zeros(d);
    let mut f = risk.value(&th);
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let (g, h) = risk.grad_hess(&th);
        residual = (&th - project_ball(&(&th - &g), s)).norm();
        if residual <= NEWTON_TOL {
            return Ok(th.as_slice().to_vec());
        }
        let ridge = 1e-12 * (1.0 + h.trace());
        let hr = &h + DMatrix::identity(d, d) * ridge;
        let newton = ball_constrained_model_min(&hr, &g, &th, s).unwrap_or_else(|| project_ball(&(&th - &g), s));
        let mut moved = false;
        for target in [newton, project_ball(&(&th - &g), s)] {
            let dir = &target - &th;
            let mut step = 1.0;
            for _ in 0..60 {
                let cand = project_ball(&(&th + &dir * step), s);
                let fc = risk.value(&cand);
                if fc <= f + ARMIJO * g.dot(&(&cand - &th)) {
                    moved = (&cand - &th).norm() > 0.0;
                    th = cand;
                    f = fc;
                    break;
                }
                step *= 0.5;
            }
            if moved {
                break;
            }
        }
        if !moved {
            // No decrease is possible at machine precision.
            let (g, _) = risk.grad_hess(&th);
            residual = (&th - project_ball(&(&th - &g), s)).norm();
            if residual <= NEWTON_TOL.sqrt() {
                return Ok(th.as_slice().to_vec());
            }
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: NEWTON_MAX_ITER,
        residual,
    })
}

/// Running empirical risks of a finite class and the active set they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionSpace {
    pub cum_loss: Vec<f64>,
    pub erm_value: f64,
    pub erm_index: usize,
    pub active: Vec<bool>,
    pub beta: f64,
}

impl VersionSpace {
    pub fn new(class_size: usize) -> Self {
        VersionSpace {
            cum_loss: vec![0.0; class_size],
            erm_value: 0.0,
            erm_index: 0,
            active: vec![true; class_size],
            beta: f64::INFINITY,
        }
    }

    pub fn len(&self) -> usize {
        self.cum_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum_loss.is_empty()
    }

    /// Add ℓ(y, pred_i) to every candidate's running loss.
    pub fn observe(&mut self, loss: &LossFunction, preds: &[f64], y: f64) -> Result<()> {
        if preds.len() != self.len() {
            return Err(invalid("prediction vector does not match the class size"));
        }
        for (c, &p) in self.cum_loss.iter_mut().zip(preds) {
            *c += loss.eval(y, p)?;
        }
        Ok(())
    }

    /// Add precomputed per-candidate losses.
    pub fn observe_losses(&mut self, losses: &[f64]) {
        for (c, l) in self.cum_loss.iter_mut().zip(losses) {
            *c += l;
        }
    }

    /// Recompute the ERM and the mask {cum_loss ≤ erm + β}.
    pub fn recompute(&mut self, beta: f64) {
        if let Some(i) = argmin_first(&self.cum_loss) {
            self.erm_index = i;
            self.erm_value = self.cum_loss[i];
        }
        self.beta = beta;
        let thr = self.erm_value + beta;
        for (a, &c) in self.active.iter_mut().zip(&self.cum_loss) {
            *a = c <= thr;
        }
    }

    pub fn update(&mut self, loss: &LossFunction, preds: &[f64], y: f64, beta: f64) -> Result<()> {
        self.observe(loss, preds, y)?;
        self.recompute(beta);
        Ok(())
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.active.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect()
    }

    /// Excess empirical risk of candidate i over the ERM.
    pub fn excess(&self, i: usize) -> f64 {
        self.cum_loss[i] - self.erm_value
    }
}

/// {θ : ‖θ − center‖²_H ≤ radius}.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidalSet {
    pub center: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub radius: f64,
}

impl EllipsoidalSet {
    /// ‖θ − center‖²_H.
    pub fn norm_sq(&self, theta: &[f64]) -> f64 {
        let v = DVector::from_column_slice(theta) - &self.center;
        v.dot(&(&self.hessian * &v))
    }

    pub fn contains(&self, theta: &[f64], rel_slack: f64) -> bool {
        self.norm_sq(theta) <= self.radius * (1.0 + rel_slack) + 1e-12
    }
}

/// Ellipsoid centred at the ERM with the compatible-loss Hessian
/// Σ μ̇(⟨a_i,θ̂⟩)a_i a_iᵀ and radius 2(1+SM)β.
pub fn ellipsoid_enclosure(
    theta_hat: &[f64],
    data: &[(Vec<f64>, f64)],
    loss: &LossFunction,
    link: &LinkFunction,
    m: f64,
    beta: f64,
) -> Result<EllipsoidalSet> {
    link.check_compatible(loss)?;
    let d = theta_hat.len();
    let mut h = DMatrix::zeros(d, d);
    for (a, _) in data {
        if a.len() != d {
            return Err(invalid("data point has the wrong dimension"));
        }
        let av = DVector::from_column_slice(a);
        h.ger(link.mu_dot(dot(a, theta_hat)), &av, &av, 1.0);
    }
    Ok(EllipsoidalSet {
        center: DVector::from_column_slice(theta_hat),
        hessian: h,
        radius: 2.0 * (1.0 + link.s * m) * beta,
    })
}

pub const DEFAULT_RIDGE: f64 = 1e-10;

/// ⟨a, center⟩ − √radius·‖a‖_{(H + ridge·I)⁻¹}, a lower bound on ⟨a,θ⟩ over
/// the ellipsoid.
pub fn min_linear_over_ellipsoid(a: &[f64], set: &EllipsoidalSet, ridge: f64) -> Result<f64> {
    let d = set.center.len();
    if a.len() != d {
        return Err(invalid("arm and ellipsoid dimensions differ"));
    }
    let av = DVector::from_column_slice(a);
    let centre = av.dot(&set.center);
    if set.radius == 0.0 || av.norm() == 0.0 {
        return Ok(centre);
    }
    let h = &set.hessian + DMatrix::identity(d, d) * ridge;
    let chol = h.cholesky().ok_or(Error::SingularMatrix)?;
    let w = chol.solve(&av);
    let q = av.dot(&w);
    if !q.is_finite() || q < 0.0 {
        return Err(Error::SingularMatrix);
    }
    Ok(centre - (set.radius * q).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn beta_examples() {
        let h1 = h_t(1.0);
        // δ = h_1 is outside (0,1], so evaluate the formula directly.
        assert_abs_diff_eq!(beta_formula(0.0, 0.0, 0.0, h1, 1), 2.5, epsilon = 1e-15);
        let s = BetaSchedule::finite_class(0.05, 100, 4.0, 8.0, 10).unwrap();
        let oracle = 2.5 + 180.0 * (10.0 * (E + 2f64.ln()) / 0.05).ln();
        assert_abs_diff_eq!(s.beta(1), oracle, epsilon = 1e-9);
        assert!(s.beta(10) >= s.beta(1));
    }

    #[test]
    fn cover_examples() {
        assert_abs_diff_eq!(glm_cover_log(1.0, 2, 1.0), 2.0 * 9f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(glm_cover_log(1.0, 1, 8.0), 2f64.ln(), epsilon = 1e-14);
        assert!(glm_cover_log(1.0, 2, 1e300) < 1e-290);
    }

    #[test]
    fn logistic_beta_examples() {
        let v = logistic_beta(1.0, 2, 100, 0.05, 1);
        let oracle = 2.5 + 180.0 * (2.0 * 801f64.ln() + (h_t(1.0) / 0.05).ln());
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-9);
        assert!(logistic_beta(1.0, 2, 100, 0.05, 2) > v);
        assert!(logistic_beta(2.0, 2, 100, 0.05, 1) > v);
        assert!(logistic_beta(1.0, 3, 100, 0.05, 1) > v);
    }

    #[test]
    fn version_space_examples() {
        let log = LossFunction::log();
        let mut vs = VersionSpace::new(2);
        vs.update(&log, &[0.9, 0.1], 1.0, 1.0).unwrap();
        assert_eq!(vs.active, vec![true, false]);
        vs.recompute(f64::INFINITY);
        assert_eq!(vs.active, vec![true, true]);
        let mut vs = VersionSpace::new(3);
        vs.update(&log, &[0.5, 0.9, 0.9], 1.0, 0.0).unwrap();
        assert_eq!(vs.active_indices(), vec![1, 2]);
        assert_eq!(vs.erm_index, 1);
    }

    fn logistic_model(grid: &[f64]) -> GlmModel {
        let thetas = grid.iter().map(|&t| vec![t]).collect();
        GlmModel::new(LinkFunction::sigmoid(2.0), thetas, vec![vec![1.0], vec![-1.0]]).unwrap()
    }

    #[test]
    fn erm_examples() {
        let model = logistic_model(&[-1.0, 0.0, 1.0]);
        let log = LossFunction::log();
        assert_eq!(erm_fit(&log, &model, &[], ErmMode::Grid).unwrap(), vec![0.0]);
        assert_eq!(erm_fit(&log, &model, &[], ErmMode::Continuous).unwrap(), vec![0.0]);
        let data = vec![(vec![1.0], 1.0); 20];
        let th = erm_fit(&log, &model, &data, ErmMode::Continuous).unwrap();
        assert_abs_diff_eq!(th[0], 2.0, epsilon = 1e-9);
        assert_eq!(erm_fit(&log, &model, &data, ErmMode::Grid).unwrap(), vec![1.0]);
    }

    #[test]
    fn continuous_erm_matches_grid_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let theta_star = 0.7;
        let link = LinkFunction::sigmoid(2.0);
        let data: Vec<_> = (0..10_000)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let y = if rng.random::<f64>() < link.mu(a * theta_star) { 1.0 } else { 0.0 };
                (vec![a], y)
            })
            .collect();
        let grid: Vec<f64> = (0..=4000).map(|i| -2.0 + i as f64 * 1e-3).collect();
        let model = logistic_model(&grid);
        let log = LossFunction::log();
        let cont = erm_fit(&log, &model, &data, ErmMode::Continuous).unwrap();
        let scan = erm_fit(&log, &model, &data, ErmMode::Grid).unwrap();
        assert!((cont[0] - scan[0]).abs() <= 1e-3, "{cont:?} vs {scan:?}");
        assert!((cont[0] - theta_star).abs() <= 0.1);
    }

    #[test]
    fn continuous_erm_rejects_exponential_link() {
        let link = LinkFunction::exponential(1.0);
        let data = vec![(vec![1.0], 0.3)];
        assert!(erm_continuous(&LossFunction::poisson(), &link, 1, &data).is_err());
    }

    #[test]
    fn ellipsoid_examples() {
        let link = LinkFunction::sigmoid(2.0);
        let log = LossFunction::log();
        let e = ellipsoid_enclosure(&[0.0, 0.0], &[], &log, &link, 1.0, 3.0).unwrap();
        assert_eq!(e.hessian, DMatrix::zeros(2, 2));
        assert!(e.contains(&[2.0, 0.0], 0.0));
        let data = vec![(vec![1.0], 1.0); 100];
        let e = ellipsoid_enclosure(&[0.3], &data, &log, &link, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e.hessian[(0, 0)], 100.0 * link.mu_dot(0.3), epsilon = 1e-12);
        assert_abs_diff_eq!(e.radius, 2.0 * 3.0, epsilon = 1e-15);
    }

    #[test]
    fn min_linear_examples() {
        let set = EllipsoidalSet {
            center: DVector::from_vec(vec![0.0]),
            hessian: DMatrix::from_element(1, 1, 4.0),
            radius: 1.0,
        };
        assert_abs_diff_eq!(min_linear_over_ellipsoid(&[1.0], &set, 1e-14).unwrap(), -0.5, epsilon = 1e-12);
        assert_eq!(min_linear_over_ellipsoid(&[0.0], &set, 1e-10).unwrap(), 0.0);
        let flat = EllipsoidalSet {
            center: DVector::from_vec(vec![0.2, 0.1]),
            hessian: DMatrix::zeros(2, 2),
            radius: 0.0,
        };
        assert_abs_diff_eq!(min_linear_over_ellipsoid(&[1.0, 1.0], &flat, 0.0).unwrap(), 0.3, epsilon = 1e-15);
        let singular = EllipsoidalSet { radius: 1.0, ..flat };
        assert_eq!(min_linear_over_ellipsoid(&[1.0, 1.0], &singular, 0.0), Err(Error::SingularMatrix));
    }

    proptest! {
        #[test]
        fn beta_is_monotone(t in 1usize..10_000, b in 0.0..10.0f64, c in 0.0..10.0f64, delta in 0.001..1.0f64) {
            let s = BetaSchedule::new(delta, 10_000, b, c, 3.0).unwrap();
            prop_assert!(s.beta(t + 1) >= s.beta(t));
        }

        #[test]
        fn erm_stays_active(preds in proptest::collection::vec(0.01..0.99f64, 1..8), ys in proptest::collection::vec(0.0..=1.0f64, 1..20), beta in 0.0..3.0f64) {
            let log = LossFunction::log();
            let mut vs = VersionSpace::new(preds.len());
            for (k, y) in ys.iter().enumerate() {
                let shifted: Vec<f64> = preds.iter().map(|p| (p + 0.1 * k as f64).fract().clamp(0.01, 0.99)).collect();
                vs.update(&log, &shifted, *y, beta).unwrap();
                prop_assert!(vs.active[vs.erm_index]);
            }
        }

        #[test]
        fn min_linear_lower_bounds_boundary(
            h in proptest::collection::vec(-1.0..1.0f64, 4),
            a in proptest::collection::vec(-1.0..1.0f64, 2),
            radius in 0.01..5.0f64,
            seed in 0u64..1000,
        ) {
            let b = DMatrix::from_row_slice(2, 2, &h);
            let hess = &b * b.transpose() + DMatrix::identity(2, 2) * 0.1;
            let set = EllipsoidalSet { center: DVector::from_vec(vec![0.3, -0.2]), hessian: hess.clone(), radius };
            let lb = min_linear_over_ellipsoid(&a, &set, DEFAULT_RIDGE).unwrap();
            let chol = hess.cholesky().unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let z = DVector::from_vec(vec![ang.cos(), ang.sin()]) * radius.sqrt();
                // θ = c + L⁻ᵀ z has ‖θ − c‖²_H = ‖z‖².
                let off = chol.l().transpose().solve_upper_triangular(&z).unwrap();
                let th = &set.center + off;
                // The ridge tightens the bound by O(ridge·‖H⁻¹a‖²).
                prop_assert!(lb <= dot(&a, th.as_slice()) + 1e-7);
            }
        }
    }
}
