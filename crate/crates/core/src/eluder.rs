//! ℓ₁-eluder dimension tooling: value tables, independence tests, greedy and
//! exhaustive certificates, the explicit GLM lower-bound construction, and
//! closed-form upper bounds.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::glm::{dot, expected_excess_closed_form, expected_excess_glm, glm_constants, norm, LinkFunction, LinkKind};
use crate::seed;

/// Values ψ(z) for a finite class Ψ (rows) on a finite domain Z (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionClassTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl FunctionClassTable {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let rows = values.len();
        let cols = values.first().map_or(0, |r| r.len());
        if values.iter().any(|r| r.len() != cols) {
            return Err(invalid("table rows have different lengths"));
        }
        let flat: Vec<f64> = values.into_iter().flatten().collect();
        Self::from_flat(rows, cols, flat)
    }

    pub fn from_flat(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(invalid("table size does not match its shape"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("table entry ({}, {}) is not finite", i / cols.max(1), i % cols.max(1))));
        }
        Ok(FunctionClassTable {
            rows,
            cols,
            values,
            row_labels: (0..rows).map(|i| format!("psi{i}")).collect(),
            col_labels: (0..cols).map(|j| format!("z{j}")).collect(),
        })
    }

    /// Build the table by evaluating `f(row, col)`, in parallel over rows.
    pub fn from_fn<F>(rows: usize, cols: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let values: Vec<f64> = (0..rows)
            .into_par_iter()
            .flat_map_iter(|r| (0..cols).map(move |c| (r, c)).collect::<Vec<_>>())
            .map(|(r, c)| f(r, c))
            .collect();
        Self::from_flat(rows, cols, values)
    }

    pub fn with_labels(mut self, rows: Vec<String>, cols: Vec<String>) -> Result<Self> {
        if rows.len() != self.rows || cols.len() != self.cols {
            return Err(invalid("label counts do not match the table shape"));
        }
        self.row_labels = rows;
        self.col_labels = cols;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    /// Keep only the listed rows.
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let values = keep.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        FunctionClassTable {
            rows: keep.len(),
            cols: self.cols,
            values,
            row_labels: keep.iter().map(|&r| self.row_labels[r].clone()).collect(),
            col_labels: self.col_labels.clone(),
        }
    }
}

/// First row ψ with Σ_{z ∈ history}|ψ(z)| ≤ eps and |ψ(x)| > eps, if any.
pub fn is_eps_independent(x: usize, history: &[usize], table: &FunctionClassTable, eps: f64) -> Option<usize> {
    (0..table.rows()).find(|&r| {
        table.get(r, x).abs() > eps && history.iter().map(|&z| table.get(r, z).abs()).sum::<f64>() <= eps
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EluderSequence {
    pub point_indices: Vec<usize>,
    pub witness_indices: Vec<usize>,
    pub omega: f64,
}

impl EluderSequence {
    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }
}

/// Check every step of `seq` against its recorded witness.
pub fn verify_eluder_sequence(seq: &EluderSequence, table: &FunctionClassTable) -> Result<bool> {
    if seq.point_indices.len() != seq.witness_indices.len() {
        return Err(Error::WitnessMismatch {
            step: seq.point_indices.len().min(seq.witness_indices.len()),
            reason: "point and witness lists differ in length".into(),
        });
    }
    let failure = (0..seq.len()).into_par_iter().find_first(|&t| step_failure(seq, table, t).is_some());
    match failure {
        None => Ok(true),
        Some(t) => Err(Error::WitnessMismatch {
            step: t,
            reason: step_failure(seq, table, t).unwrap_or_default(),
        }),
    }
}

fn step_failure(seq: &EluderSequence, table: &FunctionClassTable, t: usize) -> Option<String> {
    let x = seq.point_indices[t];
    let w = seq.witness_indices[t];
    if x >= table.cols() || w >= table.rows() {
        return Some(format!("point {x} or witness {w} is out of range"));
    }
    let prefix: f64 = seq.point_indices[..t].iter().map(|&z| table.get(w, z).abs()).sum();
    let new = table.get(w, x).abs();
    if prefix > seq.omega {
        Some(format!("prefix sum {prefix} exceeds omega {}", seq.omega))
    } else if new <= seq.omega {
        Some(format!("|psi(x)| = {new} does not exceed omega {}", seq.omega))
    } else {
        None
    }
}

/// Greedy eps-eluder sequence: scan columns in index order and append a
/// column, with its first witness, for as long as it stays independent.
///
/// Prefix sums only grow, so a column that fails once fails forever and a
/// single pass is maximal for this scan order.
pub fn greedy_eluder_certificate(table: &FunctionClassTable, eps: f64, max_len: usize) -> EluderSequence {
    let mut sums = vec![0.0; table.rows()];
    let mut seq = EluderSequence {
        point_indices: Vec::new(),
        witness_indices: Vec::new(),
        omega: eps,
    };
    'cols: for x in 0..table.cols() {
        loop {
            if seq.len() >= max_len {
                break 'cols;
            }
            let w = (0..table.rows()).find(|&r| sums[r] <= eps && table.get(r, x).abs() > eps);
            let Some(w) = w else { break };
            seq.point_indices.push(x);
            seq.witness_indices.push(w);
            for (r, s) in sums.iter_mut().enumerate() {
                *s += table.get(r, x).abs();
            }
        }
    }
    seq
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub dim: usize,
    /// A scale ω ≥ eps at which a longest sequence is ω-eluder.
    pub omega: f64,
    /// Set when the search stopped at `cap`; the true value may be larger.
    pub cap_reached: bool,
    pub sequence: EluderSequence,
}

/// Longest ω-eluder sequence over all ω ≥ eps, by exhaustive search up to `cap`.
///
/// A witnessed sequence is ω-eluder for some ω ≥ eps exactly when every new
/// value |ψ_t(x_t)| is at least some table magnitude τ > eps and every
/// prefix sum is below τ. Scanning the finitely many τ makes the search exact;
/// the certifying ω is max(eps, largest prefix sum).
pub fn brute_force_eluder_dim(table: &FunctionClassTable, eps: f64, cap: usize) -> Result<BruteForceResult> {
    if cap > 8 {
        return Err(invalid("brute-force cap must be at most 8"));
    }
    let mut taus: Vec<f64> = (0..table.rows())
        .flat_map(|r| table.row(r).iter().map(|v| v.abs()))
        .filter(|&v| v > eps)
        .collect();
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    taus.dedup();

    let mut best = BruteForceResult {
        dim: 0,
        omega: eps,
        cap_reached: false,
        sequence: EluderSequence {
            point_indices: vec![],
            witness_indices: vec![],
            omega: eps,
        },
    };
    for &tau in &taus {
        let mut path = Vec::new();
        let mut found = Vec::new();
        let mut sums = vec![0.0; table.rows()];
        dfs(table, tau, cap, &mut sums, &mut path, &mut found);
        if found.len() > best.dim {
            let points: Vec<usize> = found.iter().map(|p: &(usize, usize)| p.0).collect();
            let witnesses: Vec<usize> = found.iter().map(|p| p.1).collect();
            let max_prefix = (0..points.len())
                .map(|t| points[..t].iter().map(|&z| table.get(witnesses[t], z).abs()).sum::<f64>())
                .fold(0.0, f64::max);
            let omega = eps.max(max_prefix);
            best = BruteForceResult {
                dim: found.len(),
                omega,
                cap_reached: found.len() >= cap,
                sequence: EluderSequence {
                    point_indices: points,
                    witness_indices: witnesses,
                    omega,
                },
            };
            if best.cap_reached {
                break;
            }
        }
    }
    Ok(best)
}

fn dfs(
    table: &FunctionClassTable,
    tau: f64,
    cap: usize,
    sums: &mut [f64],
    path: &mut Vec<(usize, usize)>,
    best: &mut Vec<(usize, usize)>,
) {
    if path.len() > best.len() {
        *best = path.clone();
    }
    if path.len() >= cap || best.len() >= cap {
        return;
    }
    for x in 0..table.cols() {
        let w = (0..table.rows()).find(|&r| sums[r] < tau && table.get(r, x).abs() >= tau);
        if let Some(w) = w {
            // Copy rather than add-then-subtract so sums never drift.
            let mut next = sums.to_vec();
            for (r, s) in next.iter_mut().enumerate() {
                *s += table.get(r, x).abs();
            }
            path.push((x, w));
            dfs(table, tau, cap, &mut next, path, best);
            path.pop();
            if best.len() >= cap {
                return;
            }
        }
    }
}

/// Plain-text certificate: ω, then one line per step with the witness, its
/// prefix sum and its value at the new point.
pub fn certificate_report(seq: &EluderSequence, table: &FunctionClassTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "omega {:.17e}", seq.omega);
    let _ = writeln!(out, "length {}", seq.len());
    let _ = writeln!(out, "step point witness prefix_sum new_value");
    for t in 0..seq.len() {
        let x = seq.point_indices[t];
        let w = seq.witness_indices[t];
        let prefix: f64 = seq.point_indices[..t].iter().map(|&z| table.get(w, z).abs()).sum();
        let _ = writeln!(
            out,
            "{t} {} {} {:.17e} {:.17e}",
            table.col_labels[x],
            table.row_labels[w],
            prefix,
            table.get(w, x).abs()
        );
    }
    out
}

/// Attempts before a packing batch is restarted, and restarts before giving up.
pub const JL_MAX_REJECTIONS: usize = 1_000_000;
pub const JL_MAX_RESTARTS: usize = 100;

/// floor(exp(Dζ²/8)).
pub fn jl_target(dim: usize, zeta: f64) -> usize {
    (dim as f64 * zeta * zeta / 8.0).exp().floor() as usize
}

/// `target` unit vectors in R^dim with pairwise |⟨x,y⟩| ≤ ζ, by seeded
/// rejection sampling. The result is verified before it is returned.
pub fn jl_pack_n(dim: usize, zeta: f64, target: usize, seed_value: u64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || !(zeta > 0.0 && zeta < 1.0) {
        return Err(invalid(format!("packing needs dim ≥ 1 and ζ in (0,1), got dim = {dim}, ζ = {zeta}")));
    }
    let mut rng = seed::rng(seed_value);
    for _ in 0..JL_MAX_RESTARTS {
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(target);
        let mut rejections = 0;
        while kept.len() < target && rejections < JL_MAX_REJECTIONS {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = norm(&v);
            if n == 0.0 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= n);
            if kept.iter().all(|k| dot(k, &v).abs() <= zeta) {
                kept.push(v);
                rejections = 0;
            } else {
                rejections += 1;
            }
        }
        if kept.len() == target {
            for i in 0..kept.len() {
                for j in 0..i {
                    if dot(&kept[i], &kept[j]).abs() > zeta + 1e-12 {
                        return Err(Error::Verification(format!("packed vectors {i} and {j} are too close")));
                    }
                }
            }
            return Ok(kept);
        }
    }
    Err(Error::PackingFailure {
        dim,
        target,
        zeta,
        restarts: JL_MAX_RESTARTS,
    })
}

pub fn jl_pack(dim: usize, zeta: f64, seed_value: u64) -> Result<Vec<Vec<f64>>> {
    jl_pack_n(dim, zeta, jl_target(dim, zeta).max(1), seed_value)
}

/// κ̃ = μ̇(0)/(2μ̇(−S/2)).
pub fn kappa_tilde(link: &LinkFunction) -> f64 {
    link.mu_dot(0.0) / (2.0 * link.mu_dot(-link.s / 2.0))
}

/// Largest packing coherence the lower-bound proof allows,
/// 2(√(M² + (2/S)ln κ̃) − M), capped at 0.999.
pub fn default_zeta(link: &LinkFunction, m: f64) -> f64 {
    let kt = kappa_tilde(link).ln();
    (2.0 * ((m * m + 2.0 / link.s * kt).sqrt() - m)).min(0.999)
}

/// b = min(floor S, d − 1).
pub fn block_size(d: usize, s: f64) -> usize {
    (s.floor() as usize).min(d - 1).max(1)
}

/// The explicit arm and parameter sets on which every GLM class has a long
/// eluder sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundInstance {
    pub d: usize,
    pub s: f64,
    pub m_const: f64,
    pub link: LinkFunction,
    pub theta_star: Vec<f64>,
    /// Arms a_ij in lexicographic (i, j) order.
    pub arms: Vec<Vec<f64>>,
    /// Parameters θ_ij in the same order as `arms`.
    pub thetas: Vec<Vec<f64>>,
    pub block: usize,
    pub block_count: usize,
    pub pack_size: usize,
    pub zeta: f64,
    pub packing: Vec<Vec<f64>>,
}

pub fn build_lower_bound_instance(d: usize, s: f64, kind: LinkKind, zeta: Option<f64>, seed_value: u64) -> Result<LowerBoundInstance> {
    let link = LinkFunction::new(kind, s)?;
    if d < 2 {
        return Err(invalid("the lower-bound construction needs d ≥ 2"));
    }
    let m_const = glm_constants(&link)?.m;
    if s < 4.0 / m_const {
        return Err(invalid(format!("the construction needs S ≥ 4/M = {}", 4.0 / m_const)));
    }
    if !(link.contains(-s) && link.contains(0.0)) {
        return Err(invalid("the valid domain must contain [−S, 0]"));
    }
    let b = block_size(d, s);
    let m = (d - 1) / b;
    let zeta = zeta.unwrap_or_else(|| default_zeta(&link, m_const));
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(invalid(format!("ζ = {zeta} must lie in (0,1)")));
    }
    let n = jl_target(b, zeta).max(1);
    let packing = jl_pack_n(b, zeta, n, seed_value)?;

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut theta_star = vec![0.0; d];
    theta_star[0] = -r * s;
    let embed = |i: usize, x: &[f64]| {
        let mut v = vec![0.0; d];
        for (l, &xl) in x.iter().enumerate() {
            v[1 + i * b + l] = xl;
        }
        v
    };
    let mut arms = Vec::with_capacity(m * n);
    let mut thetas = Vec::with_capacity(m * n);
    for i in 0..m {
        for x in &packing {
            let e = embed(i, x);
            thetas.push(theta_star.iter().zip(&e).map(|(t, v)| t + r * s * v).collect());
            arms.push(theta_star.iter().zip(&e).map(|(t, v)| -t / s + r * v).collect());
        }
    }
    let inst = LowerBoundInstance {
        d,
        s,
        m_const,
        link,
        theta_star,
        arms,
        thetas,
        block: b,
        block_count: m,
        pack_size: n,
        zeta,
        packing,
    };
    inst.check_identities(1e-10)?;
    Ok(inst)
}

impl LowerBoundInstance {
    fn index(&self, i: usize, j: usize) -> usize {
        i * self.pack_size + j
    }

    /// Largest deviation from each of the four inner-product identities, and
    /// the norm constraints.
    pub fn identity_errors(&self) -> [f64; 4] {
        let half = -self.s / 2.0;
        let mut err = [0.0f64; 4];
        for i in 0..self.block_count {
            for j in 0..self.pack_size {
                let a = &self.arms[self.index(i, j)];
                err[0] = err[0].max((dot(a, &self.theta_star) - half).abs());
                err[1] = err[1].max(dot(a, &self.thetas[self.index(i, j)]).abs());
                for i2 in (0..self.block_count).filter(|&i2| i2 != i) {
                    err[2] = err[2].max((dot(a, &self.thetas[self.index(i2, j)]) - half).abs());
                }
                for j2 in (0..self.pack_size).filter(|&j2| j2 != j) {
                    let u = dot(a, &self.thetas[self.index(i, j2)]);
                    let lo = half * (1.0 + self.zeta);
                    let hi = half * (1.0 - self.zeta);
                    err[3] = err[3].max((lo - u).max(u - hi).max(0.0));
                }
            }
        }
        err
    }

    pub fn check_identities(&self, tol: f64) -> Result<()> {
        let err = self.identity_errors();
        if let Some(k) = err.iter().position(|&e| e > tol) {
            return Err(Error::Verification(format!("inner-product identity {} off by {}", k + 1, err[k])));
        }
        for a in &self.arms {
            if norm(a) > 1.0 + tol {
                return Err(Error::Verification(format!("arm norm {} exceeds 1", norm(a))));
            }
        }
        for t in &self.thetas {
            if norm(t) > self.s + tol {
                return Err(Error::Verification(format!("parameter norm {} exceeds S", norm(t))));
            }
        }
        Ok(())
    }

    /// ω = μ̇(0)/(2M²).
    pub fn omega(&self) -> f64 {
        self.link.mu_dot(0.0) / (2.0 * self.m_const * self.m_const)
    }

    /// Table of φ̄(a, θ_ij) over parameters (rows) and arms (columns), with
    /// φ̄ from the mean-value quadrature.
    pub fn excess_table(&self) -> Result<FunctionClassTable> {
        let loss = self.link.compatible_loss();
        let mut rows = Vec::with_capacity(self.thetas.len());
        for th in &self.thetas {
            let row = self
                .arms
                .iter()
                .map(|a| expected_excess_glm(&self.link, a, th, &self.theta_star, &loss))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let labels = |p: &str| {
            (0..self.block_count)
                .flat_map(|i| (0..self.pack_size).map(move |j| (i, j)))
                .map(|(i, j)| format!("{p}_{}_{}", i + 1, j + 1))
                .collect::<Vec<_>>()
        };
        FunctionClassTable::new(rows)?.with_labels(labels("theta"), labels("a"))
    }

    /// The lexicographic sequence a_11, …, a_mN witnessed by φ̄_ij at ω.
    pub fn certificate(&self) -> EluderSequence {
        let k = self.arms.len();
        EluderSequence {
            point_indices: (0..k).collect(),
            witness_indices: (0..k).collect(),
            omega: self.omega(),
        }
    }
}

/// (d−1)/(4b)·exp(min(b/16, ln(κ̃)²/(8SM² + 4ln κ̃))).
pub fn lower_bound_value(d: usize, s: f64, m: f64, kind: LinkKind) -> f64 {
    let b = block_size(d, s) as f64;
    let kt = kappa_tilde(&LinkFunction { kind, s }).ln();
    let expo = (b / 16.0).min(kt * kt / (8.0 * s * m * m + 4.0 * kt));
    (d as f64 - 1.0) / (4.0 * b) * expo.exp()
}

/// (d−1)/(4b)·exp(b/4300), the sigmoid specialisation.
pub fn sigmoid_lower_bound_value(d: usize, s: f64) -> f64 {
    let b = block_size(d, s) as f64;
    (d as f64 - 1.0) / (4.0 * b) * (b / 4300.0).exp()
}

/// d·e^{2rM}·ln(1 + 2S²L·e^{2rM}/ε).
pub fn localized_eluder_upper(d: usize, s: f64, l: f64, m: f64, r: f64, eps: f64) -> f64 {
    let g = (2.0 * r * m).exp();
    d as f64 * g * (2.0 * s * s * l * g / eps).ln_1p()
}

/// (d+1)B + dβ·ln(1 + B/ω) + tω.
pub fn elliptical_sum_bound(big_b: f64, beta: f64, omega: f64, d: f64, t: f64) -> f64 {
    (d + 1.0) * big_b + d * beta * (big_b / omega).ln_1p() + t * omega
}

/// Parameters θ with |⟨a, θ − θ⋆⟩| ≤ r for every arm a.
pub fn localized_indices(thetas: &[Vec<f64>], arms: &[Vec<f64>], theta_star: &[f64], r: f64) -> Vec<usize> {
    (0..thetas.len())
        .filter(|&i| {
            arms.iter().all(|a| (dot(a, &thetas[i]) - dot(a, theta_star)).abs() <= r + 1e-12)
        })
        .collect()
}

/// Expected-excess table φ̄(a, θ) for θ in the r-localised parameter set,
/// using the closed form of the compatible loss.
pub fn glm_excess_table(
    link: &LinkFunction,
    thetas: &[Vec<f64>],
    arms: &[Vec<f64>],
    theta_star: &[f64],
    r: f64,
) -> Result<FunctionClassTable> {
    let keep = localized_indices(thetas, arms, theta_star, r);
    for &i in &keep {
        for a in arms {
            link.check(dot(a, &thetas[i]))?;
        }
    }
    for a in arms {
        link.check(dot(a, theta_star))?;
    }
    let u_star: Vec<f64> = arms.iter().map(|a| dot(a, theta_star)).collect();
    let table = FunctionClassTable::from_fn(keep.len(), arms.len(), |r, c| {
        expected_excess_closed_form(link, dot(&arms[c], &thetas[keep[r]]), u_star[c]).max(0.0)
    })?;
    let labels = keep.iter().map(|i| format!("theta{i}")).collect();
    let cols = (0..arms.len()).map(|j| format!("a{j}")).collect();
    table.with_labels(labels, cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn identity_table(d: usize) -> FunctionClassTable {
        FunctionClassTable::new((0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()).unwrap()
    }

    #[test]
    fn independence_examples() {
        let t = FunctionClassTable::new(vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(is_eps_independent(1, &[], &t, 0.5), Some(0));
        assert_eq!(is_eps_independent(1, &[1], &t, 0.5), None);
        let zero = FunctionClassTable::new(vec![vec![0.0; 3]; 2]).unwrap();
        assert_eq!(is_eps_independent(0, &[], &zero, 1e-9), None);
    }

    #[test]
    fn verification_examples() {
        let t = identity_table(3);
        let empty = EluderSequence { point_indices: vec![], witness_indices: vec![], omega: 0.5 };
        assert!(verify_eluder_sequence(&empty, &t).unwrap());
        let one = EluderSequence { point_indices: vec![2], witness_indices: vec![2], omega: 0.5 };
        assert!(verify_eluder_sequence(&one, &t).unwrap());
        let bad = EluderSequence { point_indices: vec![0, 0], witness_indices: vec![0, 0], omega: 0.5 };
        match verify_eluder_sequence(&bad, &t) {
            Err(Error::WitnessMismatch { step, .. }) => assert_eq!(step, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn greedy_and_brute_force_on_indicators() {
        assert_eq!(greedy_eluder_certificate(&FunctionClassTable::new(vec![vec![0.0; 4]; 3]).unwrap(), 0.1, 100).len(), 0);
        for d in 1..=4 {
            let t = identity_table(d);
            let g = greedy_eluder_certificate(&t, 0.5, 100);
            assert_eq!(g.len(), d);
            assert!(verify_eluder_sequence(&g, &t).unwrap());
            let bf = brute_force_eluder_dim(&t, 0.5, 8).unwrap();
            assert_eq!(bf.dim, d);
            assert!(verify_eluder_sequence(&bf.sequence, &t).unwrap());
        }
        assert_eq!(brute_force_eluder_dim(&FunctionClassTable::new(vec![vec![0.0; 3]]).unwrap(), 0.1, 8).unwrap().dim, 0);
    }

    #[test]
    fn brute_force_scans_omega_above_eps() {
        // At ω = eps = 0.1 only one step fits; at ω ∈ [0.3, 1) either row
        // can follow the other.
        let t = FunctionClassTable::new(vec![vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap();
        assert_eq!(greedy_eluder_certificate(&t, 0.1, 10).len(), 1);
        let bf = brute_force_eluder_dim(&t, 0.1, 8).unwrap();
        assert_eq!(bf.dim, 2);
        assert!(bf.omega >= 0.3 && bf.omega < 1.0);
        assert!(verify_eluder_sequence(&bf.sequence, &t).unwrap());
    }

    #[test]
    fn certificate_report_lists_every_step() {
        let t = identity_table(2);
        let g = greedy_eluder_certificate(&t, 0.5, 10);
        let rep = certificate_report(&g, &t);
        assert_eq!(rep.lines().count(), 3 + 2);
        assert!(rep.contains("z1 psi1"));
    }

    #[test]
    fn packing_examples() {
        assert_eq!(jl_pack(2, 0.99, 1).unwrap().len(), 1);
        assert_eq!(jl_target(16, 0.5), 1);
        let p = jl_pack_n(8, 0.5, 12, 9).unwrap();
        for i in 0..p.len() {
            assert_abs_diff_eq!(norm(&p[i]), 1.0, epsilon = 1e-12);
            for j in 0..i {
                assert!(dot(&p[i], &p[j]).abs() <= 0.5 + 1e-12);
            }
        }
        assert!(matches!(jl_pack_n(2, 0.1, 5, 1), Err(Error::PackingFailure { .. })));
    }

    #[test]
    fn lower_bound_instance_sigmoid() {
        let inst = build_lower_bound_instance(17, 4.0, LinkKind::Sigmoid, None, 5).unwrap();
        assert_eq!((inst.block, inst.block_count, inst.pack_size), (4, 4, 1));
        for e in inst.identity_errors() {
            assert!(e <= 1e-10);
        }
        for a in &inst.arms {
            assert_abs_diff_eq!(dot(a, &inst.theta_star), -2.0, epsilon = 1e-12);
        }
        assert_eq!(inst.omega(), 0.125);
        let table = inst.excess_table().unwrap();
        let cert = inst.certificate();
        assert!(verify_eluder_sequence(&cert, &table).unwrap());
        let lb = lower_bound_value(17, 4.0, 1.0, LinkKind::Sigmoid);
        assert!(cert.len() as f64 >= lb);
        // Hand evaluation of the bound: b = 4, ln κ̃ ≈ 0.1745.
        let kt = (0.25 / (2.0 * LinkFunction::sigmoid(4.0).mu_dot(-2.0))).ln();
        assert_abs_diff_eq!(lb, (kt * kt / (32.0 + 4.0 * kt)).exp(), epsilon = 1e-15);
        // Any smaller scale admits the same witnesses.
        for eps in [1e-3f64, 0.05, 0.125] {
            let s = EluderSequence { omega: eps.max(cert.omega), ..cert.clone() };
            assert!(verify_eluder_sequence(&s, &table).unwrap());
        }
    }

    #[test]
    fn lower_bound_instance_with_larger_packing() {
        let inst = build_lower_bound_instance(9, 8.0, LinkKind::Sigmoid, Some(0.6), 2).unwrap();
        assert_eq!(inst.block, 8);
        assert_eq!(inst.pack_size, jl_target(8, 0.6));
        assert!(inst.identity_errors().iter().all(|&e| e <= 1e-10));
    }

    #[test]
    fn formula_examples() {
        let v = localized_eluder_upper(2, 1.0, 0.25, 1.0, 1.0, 0.01);
        let e2 = 1f64.exp().powi(2);
        assert_abs_diff_eq!(v, 2.0 * e2 * (1.0 + 0.5 * e2 / 0.01).ln(), epsilon = 1e-12);
        assert!(localized_eluder_upper(2, 1.0, 0.25, 1.0, 1.0, 1e300) < 1e-280);
        assert_abs_diff_eq!(elliptical_sum_bound(1.0, 1.0, 1.0, 1.0, 1.0), 3.0 + 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(sigmoid_lower_bound_value(17, 4.0), (1.0f64 / 1075.0).exp(), epsilon = 1e-15);
        assert!(lower_bound_value(18, 4.0, 1.0, LinkKind::Sigmoid) >= lower_bound_value(17, 4.0, 1.0, LinkKind::Sigmoid));
    }

    #[test]
    fn localisation_filters_parameters() {
        let thetas = vec![vec![0.0], vec![0.5], vec![2.0]];
        let arms = vec![vec![1.0], vec![-0.5]];
        assert_eq!(localized_indices(&thetas, &arms, &[0.0], 1.0), vec![0, 1]);
        let t = glm_excess_table(&LinkFunction::sigmoid(2.0), &thetas, &arms, &[0.0], 1.0).unwrap();
        assert_eq!((t.rows(), t.cols()), (2, 2));
        assert_eq!(t.get(0, 0), 0.0);
    }

    proptest! {
        #[test]
        fn greedy_is_valid_and_below_brute_force(vals in proptest::collection::vec(0.0..1.0f64, 12), eps in 0.05..0.5f64) {
            let t = FunctionClassTable::from_flat(3, 4, vals).unwrap();
            let g = greedy_eluder_certificate(&t, eps, 8);
            prop_assert!(verify_eluder_sequence(&g, &t).unwrap());
            let bf = brute_force_eluder_dim(&t, eps, 8).unwrap();
            prop_assert!(g.len() <= bf.dim);
            prop_assert!(bf.dim <= 8);
            prop_assert!(verify_eluder_sequence(&bf.sequence, &t).unwrap());
        }
    }
}
