//! Reference problem instances: parameter grids, arm sets, logistic bandit
//! fixtures, enclosure instances and a small episodic MDP with finite
//! value-function classes.

use std::f64::consts::PI;

use rand::Rng;

use crate::bandit::{excess_bound, expected_excess_table, BanditEnv, ModelSpec, UcbConfig};
use crate::confidence::{erm_continuous, grid_risks, BetaRule, BetaSchedule, EllipsoidalSet};
use crate::eluder::{greedy_eluder_certificate, FunctionClassTable};
use crate::error::{invalid, Result};
use crate::glm::{dot, glm_constants, norm, GlmModel, LinkFunction};
use crate::loss::LossFunction;
use crate::rl::{bellman_apply, bellman_excess_bound, q_star, FiniteMdp, QFunction};
use crate::seed;

/// Lattice points k·step (integer k) in the closed S-ball, lexicographic order.
pub fn ball_grid(d: usize, s: f64, step: f64) -> Vec<Vec<f64>> {
    box_grid(&vec![0.0; d], s, step, s)
}

/// Points centre + k·step with every |k·step| ≤ half_width, kept if inside
/// the S-ball. Lexicographic order in k.
pub fn box_grid(center: &[f64], half_width: f64, step: f64, s: f64) -> Vec<Vec<f64>> {
    let k = (half_width / step + 1e-9).floor() as i64;
    let d = center.len();
    let mut out = Vec::new();
    let mut idx = vec![-k; d];
    if d == 0 {
        return out;
    }
    loop {
        let p: Vec<f64> = center.iter().zip(&idx).map(|(c, &i)| c + i as f64 * step).collect();
        if norm(&p) <= s + 1e-12 {
            out.push(p);
        }
        let mut j = d;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if idx[j] < k {
                idx[j] += 1;
                break;
            }
            idx[j] = -k;
        }
    }
}

/// Index of the point nearest to `target`, ties to the lowest index.
pub fn nearest(points: &[Vec<f64>], target: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d: f64 = p.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// k unit vectors at angles 2πj/k + offset.
pub fn circle_arms(k: usize, offset: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / k as f64 + offset;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// k unit vectors at evenly spaced angles in [−half_angle, half_angle].
pub fn arc_arms(k: usize, half_angle: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|j| {
            let a = if k == 1 {
                0.0
            } else {
                -half_angle + 2.0 * half_angle * j as f64 / (k - 1) as f64
            };
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// A finite-class GLM bandit with Bernoulli costs and a realisable truth.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    pub name: String,
    pub link: LinkFunction,
    pub loss: LossFunction,
    pub arms: Vec<Vec<f64>>,
    pub thetas: Vec<Vec<f64>>,
    pub theta_star_index: usize,
}

impl BanditInstance {
    pub fn new(
        name: impl Into<String>,
        link: LinkFunction,
        arms: Vec<Vec<f64>>,
        thetas: Vec<Vec<f64>>,
        theta_star_index: usize,
    ) -> Result<Self> {
        if theta_star_index >= thetas.len() {
            return Err(invalid("theta_star_index is out of range"));
        }
        let inst = BanditInstance {
            name: name.into(),
            loss: link.compatible_loss(),
            link,
            arms,
            thetas,
            theta_star_index,
        };
        inst.model()?;
        Ok(inst)
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.thetas[self.theta_star_index]
    }

    pub fn model(&self) -> Result<GlmModel> {
        GlmModel::new(self.link, self.thetas.clone(), self.arms.clone())
    }

    pub fn eta(&self) -> Vec<f64> {
        self.arms.iter().map(|a| self.link.mu(dot(a, self.theta_star()))).collect()
    }

    pub fn eta_star(&self) -> f64 {
        self.eta().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn env(&self, rng_seed: u64) -> Result<BanditEnv> {
        BanditEnv::glm_bernoulli(&self.link, self.theta_star(), self.arms.clone(), rng_seed)
    }

    pub fn mean_table(&self) -> Vec<Vec<f64>> {
        self.thetas
            .iter()
            .map(|th| self.arms.iter().map(|a| self.link.mu(dot(a, th))).collect())
            .collect()
    }

    /// Exact sup |φ| over the class and outcomes {0, 1}.
    pub fn excess_bound(&self) -> f64 {
        excess_bound(&self.loss, &self.mean_table(), &self.eta())
    }

    /// β schedule for the finite class with exact b and c.
    pub fn beta_schedule(&self, delta: f64, n: usize) -> Result<BetaSchedule> {
        let b = self.excess_bound();
        BetaSchedule::finite_class(delta, n, b, self.loss.variance_constant(b), self.thetas.len())
    }

    pub fn ucb_config(&self, delta: f64, n: usize) -> Result<UcbConfig> {
        let mut cfg = UcbConfig::exact(
            self.loss,
            ModelSpec::Glm(self.model()?),
            BetaRule::Schedule(self.beta_schedule(delta, n)?),
        );
        cfg.localization_radius = 1.0 / glm_constants(&self.link)?.m;
        Ok(cfg)
    }

    /// Expected excess φ̄_θ(a), rows are parameters.
    pub fn excess_table(&self) -> Vec<Vec<f64>> {
        expected_excess_table(&self.loss, &self.mean_table(), &self.eta())
    }

    /// Greedy certificate length on the global excess table at scale ε.
    pub fn certificate_dimension(&self, eps: f64) -> Result<usize> {
        let t = FunctionClassTable::new(self.excess_table())?;
        Ok(greedy_eluder_certificate(&t, eps, 10_000).len())
    }
}

/// Logistic bandit on 20 circle arms, S = 3, grid step 1/4, with θ⋆ the grid
/// point nearest 2.5(cos 2.2, sin 2.2).
pub fn validity_instance() -> BanditInstance {
    let s = 3.0;
    let thetas = ball_grid(2, s, 0.25);
    let i = nearest(&thetas, &[2.5 * 2.2f64.cos(), 2.5 * 2.2f64.sin()]);
    BanditInstance::new("validity", LinkFunction::sigmoid(s), circle_arms(20, 0.0), thetas, i).expect("valid instance")
}

/// Two logistic bandits on the same 20 intercept arms (0.6, 0.8cos φ, 0.8 sin φ),
/// differing only in the intercept of θ⋆ so that the best mean cost is
/// `eta_star`. The class is a box of half-width 2 and step 1/2 around θ⋆.
pub fn first_order_instance(eta_star: f64) -> BanditInstance {
    let s = 7.0;
    let arms: Vec<Vec<f64>> = (0..20)
        .map(|k| {
            let p = 2.0 * PI * k as f64 / 20.0 + 0.1;
            vec![0.6, 0.8 * p.cos(), 0.8 * p.sin()]
        })
        .collect();
    let slope = [0.0, -2.0, 0.0];
    let umin = arms.iter().map(|a| dot(a, &slope)).fold(f64::INFINITY, f64::min);
    let c = ((eta_star / (1.0 - eta_star)).ln() - umin) / 0.6;
    let ts = vec![c, -2.0, 0.0];
    let thetas = box_grid(&ts, 2.0, 0.5, s);
    let i = nearest(&thetas, &ts);
    BanditInstance::new(format!("eta_{eta_star}"), LinkFunction::sigmoid(s), arms, thetas, i).expect("valid instance")
}

/// Four well-separated parameters on the radius-4 circle, 20 circle arms.
/// The truth is the last index so that optimistic distractors come first.
pub fn sublinear_instance() -> BanditInstance {
    let s = 4.0;
    let ang = 2.2f64;
    let mut thetas = Vec::new();
    for j in 1..=3 {
        let a = ang + j as f64 * 2.0 * PI / 4.0;
        thetas.insert(0, vec![s * a.cos(), s * a.sin()]);
    }
    thetas.push(vec![s * ang.cos(), s * ang.sin()]);
    let i = thetas.len() - 1;
    BanditInstance::new("sublinear", LinkFunction::sigmoid(s), circle_arms(20, 0.0), thetas, i).expect("valid instance")
}

/// Sigmoid class for the localisation comparison: 200 arms on the arc of
/// half-angle 1, θ⋆ = (−4, 0), parameter grid of step 1/10 in the 4-ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationInstance {
    pub link: LinkFunction,
    pub arms: Vec<Vec<f64>>,
    pub thetas: Vec<Vec<f64>>,
    pub theta_star: Vec<f64>,
}

pub fn localization_instance() -> LocalizationInstance {
    let s = 4.0;
    LocalizationInstance {
        link: LinkFunction::sigmoid(s),
        arms: arc_arms(200, 1.0),
        thetas: ball_grid(2, s, 0.1),
        theta_star: vec![-s, 0.0],
    }
}

/// Logistic data set over a parameter grid, for the ellipsoid enclosure check.
#[derive(Debug, Clone, PartialEq)]
pub struct EnclosureInstance {
    pub link: LinkFunction,
    pub thetas: Vec<Vec<f64>>,
    pub theta_star: Vec<f64>,
    pub data: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnclosureReport {
    pub version_space: usize,
    pub outside: usize,
    pub worst_ratio: f64,
}

impl EnclosureInstance {
    /// d ∈ {1,2,3}, S ∈ [1,3], n ≤ 200, grid ≤ 10⁴ points, random arms in the
    /// unit ball and Bernoulli outcomes from a random grid θ⋆.
    pub fn random(seed_value: u64) -> Result<Self> {
        let mut rng = seed::rng(seed::derive(seed_value, seed::STREAM_INSTANCE));
        let d = rng.random_range(1..=3usize);
        let s = rng.random_range(1.0..3.0);
        let step = match d {
            1 => s / 50.0,
            2 => s / 20.0,
            _ => s / 8.0,
        };
        let thetas = ball_grid(d, s, step);
        let theta_star = thetas[rng.random_range(0..thetas.len())].clone();
        let link = LinkFunction::sigmoid(s);
        let n = rng.random_range(1..=200usize);
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let a = loop {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                if norm(&v) <= 1.0 {
                    break v;
                }
            };
            let y = if rng.random::<f64>() < link.mu(dot(&a, &theta_star)) { 1.0 } else { 0.0 };
            data.push((a, y));
        }
        Ok(EnclosureInstance {
            link,
            thetas,
            theta_star,
            data,
        })
    }

    /// Grid points within β of the grid ERM risk must lie in the ellipsoid of
    /// radius 2(1+SM)β around the continuous ERM.
    pub fn check(&self, beta: f64) -> Result<EnclosureReport> {
        let loss = self.link.compatible_loss();
        let model = GlmModel::new(self.link, self.thetas.clone(), vec![])?;
        let risks = grid_risks(&loss, &model, &self.data)?;
        let best = risks.iter().cloned().fold(f64::INFINITY, f64::min);
        let d = self.theta_star.len();
        let theta_hat = erm_continuous(&loss, &self.link, d, &self.data)?;
        let m = glm_constants(&self.link)?.m;
        let set: EllipsoidalSet =
            crate::confidence::ellipsoid_enclosure(&theta_hat, &self.data, &loss, &self.link, m, beta)?;
        let mut rep = EnclosureReport {
            version_space: 0,
            outside: 0,
            worst_ratio: 0.0,
        };
        for (th, &r) in self.thetas.iter().zip(&risks) {
            if r <= best + beta {
                rep.version_space += 1;
                let ratio = set.norm_sq(th) / set.radius;
                rep.worst_ratio = rep.worst_ratio.max(ratio);
                if !set.contains(th, 1e-9) {
                    rep.outside += 1;
                }
            }
        }
        Ok(rep)
    }
}

/// 3-state, 2-action, horizon-3 MDP with finite F and G classes for ℓ-GOLF.
#[derive(Debug, Clone, PartialEq)]
pub struct RlFixture {
    pub mdp: FiniteMdp,
    pub f_class: Vec<QFunction>,
    pub g_class: Vec<QFunction>,
    pub q_star_index: usize,
}

impl RlFixture {
    pub fn loss(&self) -> LossFunction {
        LossFunction::log()
    }

    pub fn excess_bound(&self) -> Result<f64> {
        bellman_excess_bound(&self.mdp, &self.f_class, &self.g_class, &self.loss())
    }

    /// Finite-class β with N = |F||G|, exact b and c = b + 4.
    pub fn beta_schedule(&self, delta: f64, n: usize) -> Result<BetaSchedule> {
        let b = self.excess_bound()?;
        BetaSchedule::finite_class(delta, n, b, self.loss().variance_constant(b), self.f_class.len() * self.g_class.len())
    }
}

/// q with entry (h, s, a) multiplied by `factor`, clamped to [0.01, 0.99].
fn scaled(q: &QFunction, h: usize, s: usize, a: usize, factor: f64) -> QFunction {
    let mut out = q.clone();
    out.set(h, s, a, (q.get(h, s, a) * factor).clamp(0.01, 0.99));
    out
}

fn push_unique(class: &mut Vec<QFunction>, q: QFunction) -> bool {
    if class.iter().any(|x| x.max_abs_diff(&q) <= 1e-12) {
        return false;
    }
    class.push(q);
    true
}

pub fn rl_fixture() -> RlFixture {
    let costs = vec![
        vec![vec![0.10, 0.90], vec![0.2, 0.5], vec![0.4, 0.3]],
        vec![vec![0.01, 0.03], vec![0.02, 0.04], vec![0.04, 0.02]],
        vec![vec![0.02, 0.01], vec![0.03, 0.04], vec![0.01, 0.03]],
    ];
    let (ns, na, horizon) = (3usize, 2usize, 3usize);
    let trans: Vec<Vec<Vec<Vec<f64>>>> = (0..horizon)
        .map(|h| {
            (0..ns)
                .map(|s| {
                    (0..na)
                        .map(|a| {
                            let hot = (s + a + h) % ns;
                            (0..ns).map(|j| if j == hot { 0.8 } else { 0.1 }).collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mdp = FiniteMdp::new(costs, trans, 0).expect("valid fixture MDP");
    let qs = q_star(&mdp);
    let entries: Vec<(usize, usize, usize)> = (0..horizon)
        .flat_map(|h| (0..ns).flat_map(move |s| (0..na).map(move |a| (h, s, a))))
        .collect();

    let mut f_class = vec![qs.clone()];
    for (&(h, s, a), factor) in entries.iter().flat_map(|e| [(e, 0.7), (e, 1.3)]) {
        if f_class.len() == 16 {
            break;
        }
        push_unique(&mut f_class, scaled(&qs, h, s, a, factor));
    }
    f_class.rotate_left(1);
    let q_star_index = f_class.len() - 1;
    let mut distractor = qs.clone();
    distractor.set(0, 0, 1, 0.01);
    f_class.push(distractor.clone());
    for (&(h, s, a), factor) in entries.iter().filter(|e| e.0 > 0).flat_map(|e| [(e, 1.3), (e, 0.7)]) {
        if f_class.len() == 32 {
            break;
        }
        push_unique(&mut f_class, scaled(&distractor, h, s, a, factor));
    }

    let mut g_class: Vec<QFunction> = Vec::new();
    for f in &f_class {
        push_unique(&mut g_class, bellman_apply(f, &mdp).expect("shapes agree"));
    }
    for (&(h, s, a), factor) in entries.iter().flat_map(|e| [(e, 1.3), (e, 0.7)]) {
        if g_class.len() >= 32 {
            break;
        }
        push_unique(&mut g_class, scaled(&qs, h, s, a, factor));
    }
    RlFixture {
        mdp,
        f_class,
        g_class,
        q_star_index,
    }
}
