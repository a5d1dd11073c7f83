//! Loss-calibrated optimistic algorithms over generalised linear models.
//!
//! The crate covers losses and their curvature conditions ([`loss`]),
//! GLM links ([`glm`]), confidence sets ([`confidence`]), eluder-dimension
//! tooling ([`eluder`]), the ℓ-UCB bandit ([`bandit`]), ℓ-GOLF for episodic
//! MDPs ([`rl`]), Bernstein-type concentration bounds ([`concentration`]) and
//! reference instances ([`instances`]).

pub mod bandit;
pub mod concentration;
pub mod confidence;
pub mod eluder;
pub mod error;
pub mod glm;
pub mod instances;
pub mod loss;
pub mod rl;
pub mod seed;

pub use error::{Error, Result};
pub use glm::{GlmConstants, GlmModel, LinkFunction, LinkKind};
pub use loss::{FiniteCostDist, LossFunction, LossKind};
pub use bandit::{BanditEnv, ModelSpec, Optimizer, RunTrace, UcbConfig, UcbLearner};
pub use confidence::{BetaRule, BetaSchedule, EllipsoidalSet, VersionSpace};
pub use eluder::{EluderSequence, FunctionClassTable};
pub use instances::{BanditInstance, RlFixture};
pub use rl::{FiniteMdp, GolfState, Policy, QFunction, RlTrace};
