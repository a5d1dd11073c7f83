//! Generalised linear models: links, curvature constants, and the
//! mean-value form of the expected excess loss.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::loss::{LossFunction, LossKind};

/// Tolerance for ⟨a,θ⟩ sitting on the boundary of the valid domain.
pub const U_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Sigmoid,
    Exponential,
}

impl LinkKind {
    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Sigmoid => "sigmoid",
            LinkKind::Exponential => "exponential",
        }
    }
}

/// An increasing link μ on U, with U = [−S,S] for the sigmoid and
/// U = [−S,0] for the exponential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFunction {
    pub kind: LinkKind,
    pub s: f64,
}

impl LinkFunction {
    pub fn new(kind: LinkKind, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(invalid(format!("parameter radius S = {s} must be finite and nonnegative")));
        }
        Ok(LinkFunction { kind, s })
    }

    pub fn sigmoid(s: f64) -> Self {
        Self::new(LinkKind::Sigmoid, s).expect("valid radius")
    }

    pub fn exponential(s: f64) -> Self {
        Self::new(LinkKind::Exponential, s).expect("valid radius")
    }

    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            LinkKind::Sigmoid => (-self.s, self.s),
            LinkKind::Exponential => (-self.s, 0.0),
        }
    }

    pub fn contains(&self, u: f64) -> bool {
        let (lo, hi) = self.domain();
        u >= lo - U_TOL && u <= hi + U_TOL
    }

    pub fn check(&self, u: f64) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            let (lo, hi) = self.domain();
            Err(Error::Domain {
                what: "linear predictor",
                value: u,
                lo,
                hi,
            })
        }
    }

    /// Clamp u into U.
    pub fn clamp(&self, u: f64) -> f64 {
        let (lo, hi) = self.domain();
        u.clamp(lo, hi)
    }

    #[inline]
    pub fn mu(&self, u: f64) -> f64 {
        match self.kind {
            LinkKind::Sigmoid => sigmoid(u),
            LinkKind::Exponential => u.exp(),
        }
    }

    #[inline]
    pub fn mu_dot(&self, u: f64) -> f64 {
        match self.kind {
            LinkKind::Sigmoid => {
                let m = sigmoid(u);
                m * (1.0 - m)
            }
            LinkKind::Exponential => u.exp(),
        }
    }

    #[inline]
    pub fn mu_ddot(&self, u: f64) -> f64 {
        match self.kind {
            LinkKind::Sigmoid => {
                let m = sigmoid(u);
                m * (1.0 - m) * (1.0 - 2.0 * m)
            }
            LinkKind::Exponential => u.exp(),
        }
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        Ok(self.mu(u))
    }

    pub fn deriv(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        Ok(self.mu_dot(u))
    }

    pub fn second(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        Ok(self.mu_ddot(u))
    }

    /// The loss whose Bregman geometry matches this link, restricted to μ(U).
    pub fn compatible_loss(&self) -> LossFunction {
        let (lo, hi) = self.domain();
        let kind = match self.kind {
            LinkKind::Sigmoid => LossKind::Log,
            LinkKind::Exponential => LossKind::Poisson,
        };
        LossFunction::restricted(kind, self.mu(lo), self.mu(hi)).expect("μ(U) ⊂ [0,1]")
    }

    pub fn check_compatible(&self, loss: &LossFunction) -> Result<()> {
        match (self.kind, loss.kind) {
            (LinkKind::Sigmoid, LossKind::Log) | (LinkKind::Exponential, LossKind::Poisson) => Ok(()),
            _ => Err(Error::Incompatible {
                link: self.kind.name(),
                loss: loss.kind.name(),
            }),
        }
    }
}

#[inline]
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmConstants {
    /// Lipschitz constant of μ on U.
    pub l: f64,
    /// Self-concordance constant, clamped up to 1.
    pub m: f64,
    /// Closed-form bound on sup 1/μ̇ over U, clamped up to 1.
    pub kappa: f64,
    pub s: f64,
    /// Smallest M the grid check supports before clamping.
    pub m_raw: f64,
    /// Grid value of sup 1/μ̇ before clamping.
    pub kappa_raw: f64,
    /// Whether the closed-form κ bounds 1/μ̇ on U. The sigmoid formula 3e^S
    /// falls short of sup 1/μ̇ = e^S + 2 + e^{−S} for S below ln((1+√3)/2).
    pub kappa_holds: bool,
}

/// Closed-form constants for the link, checked on a grid of step 1e-3.
///
/// A failure of the L or M bound is an error; the κ comparison is reported
/// in [`GlmConstants::kappa_holds`].
pub fn glm_constants(link: &LinkFunction) -> Result<GlmConstants> {
    let (l, m, kappa) = match link.kind {
        LinkKind::Sigmoid => (0.25, 1.0, 3.0 * link.s.exp()),
        LinkKind::Exponential => (1.0, 1.0, link.s.exp()),
    };
    let (lo, hi) = link.domain();
    let steps = ((hi - lo) / 1e-3).ceil().max(1.0) as usize;
    let mut kappa_raw: f64 = 0.0;
    let mut m_raw: f64 = 0.0;
    let mut l_raw: f64 = 0.0;
    for i in 0..=steps {
        let u = (lo + (hi - lo) * i as f64 / steps as f64).min(hi);
        let d1 = link.mu_dot(u);
        let d2 = link.mu_ddot(u);
        kappa_raw = kappa_raw.max(1.0 / d1);
        m_raw = m_raw.max(d2.abs() / d1);
        l_raw = l_raw.max(d1);
    }
    let tol = 1.0 + 1e-12;
    if m_raw > m * tol || l_raw > l * tol {
        return Err(Error::Verification(format!(
            "{} link violates its constants: sup |μ̈|/μ̇ = {m_raw}, sup μ̇ = {l_raw}",
            link.kind.name()
        )));
    }
    Ok(GlmConstants {
        l,
        m: m.max(1.0),
        kappa: kappa.max(1.0),
        s: link.s,
        m_raw,
        kappa_raw,
        kappa_holds: kappa_raw <= kappa * tol,
    })
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A GLM over finite parameter and action sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmModel {
    pub link: LinkFunction,
    pub thetas: Vec<Vec<f64>>,
    pub arms: Vec<Vec<f64>>,
    pub d: usize,
}

impl GlmModel {
    pub fn new(link: LinkFunction, thetas: Vec<Vec<f64>>, arms: Vec<Vec<f64>>) -> Result<Self> {
        let d = arms
            .first()
            .or(thetas.first())
            .map(|v| v.len())
            .ok_or_else(|| invalid("model needs at least one arm or parameter"))?;
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        for (i, th) in thetas.iter().enumerate() {
            if th.len() != d {
                return Err(invalid(format!("parameter {i} has length {} instead of {d}", th.len())));
            }
            if norm(th) > link.s + U_TOL {
                return Err(invalid(format!("parameter {i} has norm {} > S = {}", norm(th), link.s)));
            }
        }
        for (i, a) in arms.iter().enumerate() {
            if a.len() != d {
                return Err(invalid(format!("arm {i} has length {} instead of {d}", a.len())));
            }
            if norm(a) > 1.0 + U_TOL {
                return Err(invalid(format!("arm {i} has norm {} > 1", norm(a))));
            }
        }
        for (i, th) in thetas.iter().enumerate() {
            for (j, a) in arms.iter().enumerate() {
                let u = dot(a, th);
                if !link.contains(u) {
                    return Err(invalid(format!(
                        "<arm {j}, parameter {i}> = {u} lies outside the valid domain {:?}",
                        link.domain()
                    )));
                }
            }
        }
        Ok(GlmModel { link, thetas, arms, d })
    }

    /// Mean table: rows are parameters, columns are arms.
    pub fn mean_table(&self) -> Vec<Vec<f64>> {
        self.thetas
            .iter()
            .map(|th| self.arms.iter().map(|a| self.link.mu(dot(a, th))).collect())
            .collect()
    }
}

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Quadrature tolerance for α.
pub const ALPHA_TOL: f64 = 1e-10;

fn segment(link: &LinkFunction, a: &[f64], theta: &[f64], theta_star: &[f64]) -> Result<(f64, f64)> {
    if a.len() != theta.len() || a.len() != theta_star.len() {
        return Err(invalid("dimension mismatch between arm and parameters"));
    }
    let u_star = dot(a, theta_star);
    let u = dot(a, theta);
    // The segment is linear in t, so checking its ends covers it.
    link.check(u_star)?;
    link.check(u)?;
    Ok((u_star, u))
}

/// α(a,θ) = 2∫₀¹(1−t)μ̇(⟨a,θ(t)⟩)dt with θ(t) = θ⋆ + t(θ − θ⋆).
///
/// The factor 2 makes α a weighted average of μ̇ along the segment, so that
/// φ̄ = ½α⟨a,θ−θ⋆⟩² and μ̇(ζ) = α for some ζ on the segment.
pub fn alpha(link: &LinkFunction, a: &[f64], theta: &[f64], theta_star: &[f64]) -> Result<f64> {
    let (u_star, u) = segment(link, a, theta, theta_star)?;
    Ok(alpha_scalar(link, u_star, u))
}

fn alpha_scalar(link: &LinkFunction, u_star: f64, u: f64) -> f64 {
    let du = u - u_star;
    let g = |t: f64| (1.0 - t) * link.mu_dot(u_star + t * du);
    2.0 * adaptive_simpson(&g, 0.0, 1.0, ALPHA_TOL)
}

/// Expected excess loss of θ at arm a under realisable costs with mean
/// μ(⟨a,θ⋆⟩), in the mean-value form ½α(a,θ)⟨a,θ−θ⋆⟩².
pub fn expected_excess_glm(
    link: &LinkFunction,
    a: &[f64],
    theta: &[f64],
    theta_star: &[f64],
    loss: &LossFunction,
) -> Result<f64> {
    link.check_compatible(loss)?;
    let (u_star, u) = segment(link, a, theta, theta_star)?;
    let du = u - u_star;
    if du == 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * alpha_scalar(link, u_star, u) * du * du)
}

/// Closed form of the same quantity from the loss alone.
pub fn expected_excess_closed_form(link: &LinkFunction, u: f64, u_star: f64) -> f64 {
    let loss = LossFunction::new(match link.kind {
        LinkKind::Sigmoid => LossKind::Log,
        LinkKind::Exponential => LossKind::Poisson,
    });
    loss.mean_excess(link.mu(u), link.mu(u_star))
}

/// A point ζ on the segment between ⟨a,θ⋆⟩ and ⟨a,θ⟩ with μ̇(ζ) = α(a,θ),
/// found by scanning for a sign change of μ̇ − α and bisecting.
pub fn mean_value_point(link: &LinkFunction, a: &[f64], theta: &[f64], theta_star: &[f64]) -> Result<f64> {
    let (u_star, u) = segment(link, a, theta, theta_star)?;
    let target = alpha_scalar(link, u_star, u);
    let g = |x: f64| link.mu_dot(x) - target;
    let (lo, hi) = if u_star <= u { (u_star, u) } else { (u, u_star) };
    if hi - lo < 1e-15 {
        return Ok(lo);
    }
    let n = 256;
    let mut best = (lo, g(lo).abs());
    let mut prev_x = lo;
    let mut prev = g(lo);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = g(x);
        if v.abs() < best.1 {
            best = (x, v.abs());
        }
        if prev == 0.0 {
            return Ok(prev_x);
        }
        if prev.signum() != v.signum() {
            let (mut l, mut r, mut gl) = (prev_x, x, prev);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                let gm = g(m);
                if gm.signum() == gl.signum() {
                    l = m;
                    gl = gm;
                } else {
                    r = m;
                }
                if r - l < 1e-15 {
                    break;
                }
            }
            return Ok(0.5 * (l + r));
        }
        prev_x = x;
        prev = v;
    }
    // A tangency root shows up as a near-zero minimum without a sign change.
    if best.1 <= 1e-9 * target.abs().max(1e-300) + ALPHA_TOL {
        Ok(best.0)
    } else {
        Err(Error::Verification(format!(
            "no point on [{lo}, {hi}] has μ̇ equal to α = {target}"
        )))
    }
}

/// μ̇(u) ≤ exp(cM)·μ̇(u′) for |u − u′| ≤ c.
pub fn self_concordance_growth_check(link: &LinkFunction, u: f64, u_prime: f64, c: f64, m: f64) -> bool {
    if (u - u_prime).abs() > c + U_TOL {
        return false;
    }
    link.mu_dot(u) <= (c * m).exp() * link.mu_dot(u_prime) * (1.0 + 1e-12)
}
