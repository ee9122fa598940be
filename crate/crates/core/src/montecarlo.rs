//! Seeded, order-independent replication of games.
//!
//! Replication `r` under master seed `s` uses `derive_seed(s, r)`; the
//! environment RNG is seeded with `derive_seed(rep_seed, 0)` and the player
//! RNG with `derive_seed(rep_seed, 1)`. Results are reduced in replication
//! order, so aggregates do not depend on the thread count.

use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{policy_regret, run_game, FeedbackModel, RealizedEnvironment};
use crate::error::{Error, Result};
use crate::players::Player;
use crate::SimRng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(master ^ splitmix64(index))`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepOutcome {
    pub regret: f64,
    pub switches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretStats {
    pub n_reps: usize,
    pub mean_regret: f64,
    /// sample standard deviation (zero for a single replication)
    pub std_regret: f64,
    pub q05_regret: f64,
    pub median_regret: f64,
    pub q95_regret: f64,
    pub mean_switches: f64,
    pub std_switches: f64,
    pub outcomes: Vec<RepOutcome>,
}

impl RegretStats {
    pub fn from_outcomes(outcomes: Vec<RepOutcome>) -> Self {
        let regrets: Vec<f64> = outcomes.iter().map(|o| o.regret).collect();
        let switches: Vec<f64> = outcomes.iter().map(|o| o.switches as f64).collect();
        let (mean_regret, std_regret) = mean_std(&regrets);
        let (mean_switches, std_switches) = mean_std(&switches);
        let mut sorted = regrets.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            n_reps: outcomes.len(),
            mean_regret,
            std_regret,
            q05_regret: quantile(&sorted, 0.05),
            median_regret: quantile(&sorted, 0.5),
            q95_regret: quantile(&sorted, 0.95),
            mean_switches,
            std_switches,
            outcomes,
        }
    }

    /// `std / sqrt(n)`.
    pub fn stderr_regret(&self) -> f64 {
        self.std_regret / (self.n_reps as f64).sqrt()
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// One replication: build the environment, build the player, play, score.
pub fn run_replication<E, P>(env_factory: &E, player_factory: &P, feedback: FeedbackModel, rep_seed: u64) -> Result<RepOutcome>
where
    E: Fn(&mut SimRng) -> Result<RealizedEnvironment>,
    P: Fn(&RealizedEnvironment) -> Result<Box<dyn Player>>,
{
    let mut env_rng = SimRng::seed_from_u64(derive_seed(rep_seed, 0));
    let env = env_factory(&mut env_rng)?.with_seed(rep_seed);
    let mut player = player_factory(&env)?;
    let mut rng = SimRng::seed_from_u64(derive_seed(rep_seed, 1));
    let transcript = run_game(&env, player.as_mut(), feedback, &mut rng)?;
    Ok(RepOutcome {
        regret: policy_regret(&env, &transcript),
        switches: transcript.num_switches,
    })
}

/// Runs `n_reps` independent games. `parallelism = 0` uses all cores.
pub fn monte_carlo<E, P>(
    env_factory: E,
    player_factory: P,
    feedback: FeedbackModel,
    n_reps: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<RegretStats>
where
    E: Fn(&mut SimRng) -> Result<RealizedEnvironment> + Sync,
    P: Fn(&RealizedEnvironment) -> Result<Box<dyn Player>> + Sync,
{
    if n_reps == 0 {
        return Err(Error::InvalidParameter("n_reps must be at least 1".into()));
    }
    let run = || -> Result<Vec<RepOutcome>> {
        (0..n_reps)
            .into_par_iter()
            .map(|r| run_replication(&env_factory, &player_factory, feedback, derive_seed(master_seed, r as u64)))
            .collect()
    };
    let outcomes = if parallelism == 1 {
        (0..n_reps)
            .map(|r| run_replication(&env_factory, &player_factory, feedback, derive_seed(master_seed, r as u64)))
            .collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        pool.install(run)?
    };
    Ok(RegretStats::from_outcomes(outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::players::{ConstantPlayer, Exp3};
    use crate::types::{Action, CombiningFunction, ObliviousLossTable};
    use rand::Rng;

    fn uniform_env(rng: &mut SimRng) -> Result<RealizedEnvironment> {
        let values = (0..200).map(|_| rng.random::<f64>()).collect();
        Ok(RealizedEnvironment::composite(
            ObliviousLossTable::new(100, 2, values)?,
            CombiningFunction::min(),
        ))
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
    }

    #[test]
    fn single_rep_matches_direct_run() {
        let player = |_: &RealizedEnvironment| -> Result<Box<dyn Player>> { Ok(Box::new(Exp3::new(2, 100))) };
        let stats = monte_carlo(uniform_env, player, FeedbackModel::CompositeBandit, 1, 17, 1).unwrap();
        let direct = run_replication(&uniform_env, &player, FeedbackModel::CompositeBandit, derive_seed(17, 0)).unwrap();
        assert_eq!(stats.mean_regret, direct.regret);
        assert_eq!(stats.std_regret, 0.0);
        assert_eq!(stats.mean_switches, direct.switches as f64);
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let player = |_: &RealizedEnvironment| -> Result<Box<dyn Player>> { Ok(Box::new(Exp3::new(2, 100))) };
        let a = monte_carlo(uniform_env, player, FeedbackModel::CompositeBandit, 24, 5, 1).unwrap();
        let b = monte_carlo(uniform_env, player, FeedbackModel::CompositeBandit, 24, 5, 4).unwrap();
        let c = monte_carlo(uniform_env, player, FeedbackModel::CompositeBandit, 24, 5, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn constant_player_never_switches() {
        let player = |_: &RealizedEnvironment| -> Result<Box<dyn Player>> { Ok(Box::new(ConstantPlayer::new(Action(1), 2))) };
        let stats = monte_carlo(uniform_env, player, FeedbackModel::CompositeBandit, 8, 3, 2).unwrap();
        assert_eq!(stats.mean_switches, 0.0);
        assert!(stats.outcomes.iter().all(|o| o.regret >= 0.0));
    }

    #[test]
    fn rejects_zero_reps() {
        let player = |_: &RealizedEnvironment| -> Result<Box<dyn Player>> { Ok(Box::new(Exp3::new(2, 100))) };
        assert!(monte_carlo(uniform_env, player, FeedbackModel::CompositeBandit, 0, 0, 1).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let outcomes = (0..5).map(|i| RepOutcome { regret: i as f64, switches: 0 }).collect();
        let s = RegretStats::from_outcomes(outcomes);
        assert_eq!(s.median_regret, 2.0);
        assert!((s.q05_regret - 0.2).abs() < 1e-12);
        assert!((s.q95_regret - 3.8).abs() < 1e-12);
        assert!((s.std_regret - 2.5f64.sqrt()).abs() < 1e-12);
    }
}
