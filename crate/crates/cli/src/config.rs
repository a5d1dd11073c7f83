//! Experiment configuration, read from and written to TOML.

use std::fmt;
use std::path::Path;

use optimist_core::bandit::Optimizer;
use optimist_core::glm::LinkKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Bandit,
    Rl,
    Losses,
    Eluder,
    Bernstein,
    Report,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Bandit => "bandit",
            ExperimentKind::Rl => "rl",
            ExperimentKind::Losses => "losses",
            ExperimentKind::Eluder => "eluder",
            ExperimentKind::Bernstein => "bernstein",
            ExperimentKind::Report => "report",
        }
    }

    /// Label of the experiment hop in the seed path.
    pub fn seed_label(self) -> u64 {
        match self {
            ExperimentKind::Bandit => 11,
            ExperimentKind::Rl => 12,
            ExperimentKind::Losses => 13,
            ExperimentKind::Eluder => 14,
            ExperimentKind::Bernstein => 15,
            ExperimentKind::Report => 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BanditPreset {
    /// 20 circle arms, S = 3, grid step 1/4.
    Validity,
    /// Four parameters on the radius-4 circle.
    Sublinear,
    /// Intercept arms, one run set per entry of `eta_star`.
    FirstOrder,
    /// Lattice in the S-ball with user-given arms or circle arms.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditSection {
    pub instance: BanditPreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_arms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
    #[serde(default)]
    pub bernoullise: bool,
}

fn default_optimizer() -> Optimizer {
    Optimizer::ExactEnumeration
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RlPreset {
    ThreeState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlSection {
    pub fixture: RlPreset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossesSection {
    pub grid_step: f64,
    pub random_draws: usize,
    pub squared_gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EluderSection {
    pub link: LinkKind,
    pub s: f64,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinSection {
    pub num_functions: usize,
    pub num_arms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Directory holding trace CSVs; defaults to `out_dir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Rounds, episodes or steps per run.
    pub n: usize,
    /// Runs per setting (replications for `bernstein`).
    pub num_seeds: usize,
    pub delta: f64,
    pub out_dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandit: Option<BanditSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rl: Option<RlSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub losses: Option<LossesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eluder: Option<EluderSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bernstein: Option<BernsteinSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportSection>,
}

/// A configuration problem, tied to the key that caused it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config key `{}`: {}", self.key, self.message)
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    fn base(kind: ExperimentKind, n: usize, num_seeds: usize) -> Self {
        ExperimentConfig {
            kind,
            seed: 20_240_601,
            n,
            num_seeds,
            delta: 0.05,
            out_dir: format!("out/{}", kind.name()),
            bandit: None,
            rl: None,
            losses: None,
            eluder: None,
            bernstein: None,
            report: None,
        }
    }

    /// The configuration each subcommand runs when no file is given.
    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Bandit => ExperimentConfig {
                bandit: Some(BanditSection {
                    instance: BanditPreset::FirstOrder,
                    eta_star: Some(vec![0.5, 0.02]),
                    link: None,
                    s: None,
                    d: None,
                    grid_step: None,
                    theta_star: None,
                    num_arms: None,
                    arms: None,
                    optimizer: Optimizer::ExactEnumeration,
                    bernoullise: false,
                }),
                ..Self::base(kind, 5000, 50)
            },
            ExperimentKind::Rl => ExperimentConfig {
                rl: Some(RlSection {
                    fixture: RlPreset::ThreeState,
                }),
                ..Self::base(kind, 2000, 200)
            },
            ExperimentKind::Losses => ExperimentConfig {
                losses: Some(LossesSection {
                    grid_step: 0.01,
                    random_draws: 100_000,
                    squared_gamma: 1000.0,
                }),
                ..Self::base(kind, 1, 1)
            },
            ExperimentKind::Eluder => ExperimentConfig {
                eluder: Some(EluderSection {
                    link: LinkKind::Sigmoid,
                    s: 4.0,
                    d: 17,
                    zeta: None,
                }),
                ..Self::base(kind, 1, 1)
            },
            ExperimentKind::Bernstein => ExperimentConfig {
                bernstein: Some(BernsteinSection {
                    num_functions: 50,
                    num_arms: 10,
                }),
                ..Self::base(kind, 500, 2000)
            },
            ExperimentKind::Report => ExperimentConfig {
                report: Some(ReportSection { input_dir: None }),
                ..Self::base(kind, 1, 1)
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let key = e.span().map(|sp| key_at(text, sp.start)).unwrap_or_default();
            bad(&key, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(bad("n", "must be at least 1"));
        }
        if self.num_seeds == 0 {
            return Err(bad("num_seeds", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(bad("delta", format!("{} is not in (0,1)", self.delta)));
        }
        if self.out_dir.is_empty() {
            return Err(bad("out_dir", "must not be empty"));
        }
        let section_present = match self.kind {
            ExperimentKind::Bandit => self.bandit.is_some(),
            ExperimentKind::Rl => self.rl.is_some(),
            ExperimentKind::Losses => self.losses.is_some(),
            ExperimentKind::Eluder => self.eluder.is_some(),
            ExperimentKind::Bernstein => self.bernstein.is_some(),
            ExperimentKind::Report => true,
        };
        if !section_present {
            return Err(bad(self.kind.name(), format!("a [{}] table is required", self.kind.name())));
        }
        if let Some(b) = &self.bandit {
            validate_bandit(b)?;
        }
        if let Some(l) = &self.losses {
            if !(l.grid_step > 0.0 && l.grid_step < 0.5) {
                return Err(bad("losses.grid_step", format!("{} is not in (0, 0.5)", l.grid_step)));
            }
            if !(l.squared_gamma > 0.0) {
                return Err(bad("losses.squared_gamma", "must be positive"));
            }
        }
        if let Some(e) = &self.eluder {
            if e.d < 2 {
                return Err(bad("eluder.d", "the construction needs d ≥ 2"));
            }
            if !(e.s > 0.0) {
                return Err(bad("eluder.s", "must be positive"));
            }
            if let Some(z) = e.zeta {
                if !(z > 0.0 && z < 1.0) {
                    return Err(bad("eluder.zeta", format!("{z} is not in (0,1)")));
                }
            }
        }
        if let Some(b) = &self.bernstein {
            if b.num_functions < 2 {
                return Err(bad("bernstein.num_functions", "needs the truth plus at least one candidate"));
            }
            if b.num_arms == 0 {
                return Err(bad("bernstein.num_arms", "must be at least 1"));
            }
        }
        Ok(())
    }
}

fn validate_bandit(b: &BanditSection) -> Result<(), ConfigError> {
    if b.instance == BanditPreset::FirstOrder {
        let etas = b.eta_star.as_deref().unwrap_or(&[]);
        if etas.is_empty() {
            return Err(bad("bandit.eta_star", "first_order needs at least one target cost"));
        }
        if let Some(e) = etas.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(bad("bandit.eta_star", format!("{e} is not in (0,1)")));
        }
    }
    if b.instance == BanditPreset::Grid {
        let s = b.s.ok_or_else(|| bad("bandit.s", "required for the grid instance"))?;
        if !(s > 0.0) {
            return Err(bad("bandit.s", "must be positive"));
        }
        let step = b.grid_step.ok_or_else(|| bad("bandit.grid_step", "required for the grid instance"))?;
        if !(step > 0.0 && step <= s) {
            return Err(bad("bandit.grid_step", format!("{step} is not in (0, S]")));
        }
        let ts = b.theta_star.as_ref().ok_or_else(|| bad("bandit.theta_star", "required for the grid instance"))?;
        let d = b.d.unwrap_or(ts.len());
        if d == 0 || ts.len() != d {
            return Err(bad("bandit.theta_star", format!("has length {} but d = {d}", ts.len())));
        }
        let points = (2.0 * (s / step).floor() + 1.0).powi(d as i32);
        if points > 1e6 {
            return Err(bad("bandit.grid_step", format!("grid would hold about {points:.0} points")));
        }
        match (&b.arms, b.num_arms) {
            (Some(arms), _) => {
                if arms.is_empty() {
                    return Err(bad("bandit.arms", "must not be empty"));
                }
                if let Some(i) = arms.iter().position(|a| a.len() != d) {
                    return Err(bad("bandit.arms", format!("arm {i} does not have length {d}")));
                }
            }
            (None, Some(k)) => {
                if d != 2 || k == 0 {
                    return Err(bad("bandit.num_arms", "circle arms need d = 2 and at least one arm"));
                }
            }
            (None, None) => return Err(bad("bandit.arms", "give `arms` or `num_arms`")),
        }
    }
    Ok(())
}

/// Best-effort dotted key for the TOML line containing byte `pos`.
fn key_at(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.lines() {
        let t = line.trim();
        if t.starts_with('[') && t.ends_with(']') {
            table = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
        offset += line.len() + 1;
        if offset > pos {
            break;
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ExperimentKind; 6] = [
        ExperimentKind::Bandit,
        ExperimentKind::Rl,
        ExperimentKind::Losses,
        ExperimentKind::Eluder,
        ExperimentKind::Bernstein,
        ExperimentKind::Report,
    ];

    #[test]
    fn defaults_round_trip() {
        for k in KINDS {
            let cfg = ExperimentConfig::default_for(k);
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
    }

    #[test]
    fn errors_name_the_key() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Bandit);
        cfg.delta = 1.5;
        assert_eq!(cfg.validate().unwrap_err().key, "delta");
        let text = ExperimentConfig::default_for(ExperimentKind::Losses)
            .to_toml()
            .replace("grid_step = 0.01", "grid_step = 0.9");
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap_err().key, "losses.grid_step");
        let text = ExperimentConfig::default_for(ExperimentKind::Rl).to_toml().replace("three_state", "four_state");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert_eq!(err.key, "rl.fixture");
        assert!(err.to_string().contains("rl.fixture"));
    }

    #[test]
    fn missing_section_is_reported() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Eluder);
        cfg.eluder = None;
        assert_eq!(cfg.validate().unwrap_err().key, "eluder");
    }

    #[test]
    fn grid_instance_checks_dimensions() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Bandit);
        let b = cfg.bandit.as_mut().unwrap();
        b.instance = BanditPreset::Grid;
        b.s = Some(2.0);
        b.grid_step = Some(0.5);
        b.theta_star = Some(vec![1.0, 0.0]);
        b.arms = Some(vec![vec![1.0, 0.0], vec![0.0]]);
        assert_eq!(cfg.validate().unwrap_err().key, "bandit.arms");
        cfg.bandit.as_mut().unwrap().arms = None;
        cfg.bandit.as_mut().unwrap().num_arms = Some(8);
        cfg.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
