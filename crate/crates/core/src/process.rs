//! Gaussian noise, the walk `W_t = W_{rho(t)} + xi_t`, the gap process
//! `Z_t(x) = W_t + 1/2 - eps * 1{x = chi}` and its clipped loss table.
//!
//! All constructions here are two-armed.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::adversary::SpikeSequence;
use crate::engine::RealizedEnvironment;
use crate::error::{Error, Result};
use crate::parent::ParentFunction;
use crate::types::{clip, Action, ObliviousLossTable, RawLossTable};

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSequence {
    /// `values[t - 1] = xi_t`.
    pub values: Vec<f64>,
    pub sigma: f64,
}

/// `T` independent `N(0, sigma^2)` draws in round order.
pub fn sample_noise<R: Rng + ?Sized>(horizon: usize, sigma: f64, rng: &mut R) -> Result<NoiseSequence> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let values = (0..horizon).map(|_| normal.sample(rng)).collect();
    Ok(NoiseSequence { values, sigma })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkSequence {
    /// `values[t] = W_t` for `t in 0..=T`; `values[0] = 0`.
    pub values: Vec<f64>,
}

impl WalkSequence {
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, t: usize) -> f64 {
        self.values[t]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, w| acc.max(w.abs()))
    }
}

/// `W_0 = 0`, `W_t = W_{rho(t)} + xi_t`.
pub fn build_walk(rho: &ParentFunction, noise: &NoiseSequence) -> Result<WalkSequence> {
    if rho.horizon() != noise.values.len() {
        return Err(Error::LengthMismatch {
            expected: rho.horizon(),
            got: noise.values.len(),
        });
    }
    let mut values = Vec::with_capacity(rho.horizon() + 1);
    values.push(0.0);
    for (i, xi) in noise.values.iter().enumerate() {
        let w = values[rho.parent(i + 1)] + xi;
        values.push(w);
    }
    Ok(WalkSequence { values })
}

/// Two-armed gap process over a walk.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProcess {
    pub chi: Action,
    pub epsilon: f64,
    pub walk: WalkSequence,
}

impl GapProcess {
    pub fn horizon(&self) -> usize {
        self.walk.horizon()
    }

    /// `Z_t(x)`, unclipped.
    pub fn z(&self, t: usize, x: Action) -> f64 {
        let gap = if x == self.chi { self.epsilon } else { 0.0 };
        self.walk.at(t) + 0.5 - gap
    }
}

pub fn build_gap_process(walk: WalkSequence, chi: Action, epsilon: f64) -> Result<GapProcess> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if chi.0 > 1 {
        return Err(Error::ActionOutOfRange { action: chi.0, k: 2 });
    }
    Ok(GapProcess { chi, epsilon, walk })
}

/// Clipped table plus the unclipped values it was clipped from.
#[derive(Debug, Clone)]
pub struct LossTables {
    pub clipped: ObliviousLossTable,
    pub unclipped: RawLossTable,
}

/// `L_t(x) = clip(Z_t(x) + S_t(x))`, with `S = 0` when no spikes are given.
pub fn clip_to_table(z: &GapProcess, spikes: Option<&SpikeSequence>) -> Result<LossTables> {
    let horizon = z.horizon();
    if let Some(s) = spikes {
        if s.horizon() != horizon {
            return Err(Error::LengthMismatch {
                expected: horizon,
                got: s.horizon(),
            });
        }
    }
    let mut raw = Vec::with_capacity(2 * horizon);
    for t in 1..=horizon {
        for x in [Action(0), Action(1)] {
            let spike = spikes.map_or(0.0, |s| s.value(t, x));
            raw.push(z.z(t, x) + spike);
        }
    }
    let clipped = raw.iter().map(|&v| clip(v)).collect();
    Ok(LossTables {
        clipped: ObliviousLossTable::new(horizon, 2, clipped)?,
        unclipped: RawLossTable::new(horizon, 2, raw)?,
    })
}

/// `sigma = (d * ln(T / delta))^{-1/2}`, the scale that keeps the unclipped
/// process inside `[0, 1]` with probability about `1 - delta`.
pub fn tuned_sigma(depth: usize, horizon: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let log_term = (horizon as f64 / delta).ln();
    if depth == 0 || log_term <= 0.0 {
        return Err(Error::InvalidParameter("degenerate depth or horizon for sigma tuning".into()));
    }
    Ok((depth as f64 * log_term).powf(-0.5))
}

/// High-probability envelope `sigma * sqrt(2 d ln(T / delta))` on `max_t |W_t|`.
pub fn walk_bound(sigma: f64, depth: usize, horizon: usize, delta: f64) -> f64 {
    sigma * (2.0 * depth as f64 * (horizon as f64 / delta).ln()).sqrt()
}

/// Oblivious losses plus a unit switching cost: round `t` costs
/// `l_t(x_t) + 1{x_t != x_{t-1}}`, with no penalty on round 1.
pub fn switching_cost_env(table: ObliviousLossTable) -> RealizedEnvironment {
    RealizedEnvironment::switching(table)
}
