//! Simulation of composite-loss bandit games.
//!
//! Round losses are formed from an oblivious loss table through a combining
//! function of the last few realized losses (`min`, `max`, or a nonnegative
//! linear combination). The crate builds hard min/max adversaries from a
//! multi-scale random walk, runs players against realized environments, and
//! measures policy regret across horizons.

pub mod adversary;
pub mod dump;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod oracles;
pub mod parent;
pub mod players;
pub mod process;
pub mod types;

/// Random generator used for every sampled quantity.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub use adversary::{build_max_adversary, build_min_adversary, default_schedule, HardnessParams};
pub use engine::{policy_regret, run_game, Feedback, FeedbackModel, RealizedEnvironment, Transcript};
pub use error::{Error, Result};
pub use experiment::{execute, fit_exponent, run_experiment, EnvSpec, ExperimentConfig, ScalingFit};
pub use montecarlo::{derive_seed, monte_carlo, RegretStats};
pub use parent::ParentFunction;
pub use players::{Player, PlayerSpec};
pub use types::{Action, CombiningFunction, ObliviousLossTable};
