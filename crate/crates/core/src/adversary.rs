//! Min and max adversaries: a switching cost simulated with spikes.
//!
//! Both adversaries sample a random parent, a walk, a better action `chi`
//! and a gap process, then look for trigger rounds `t` where the walk is
//! flat between `t - 1` and `t`. Around each trigger a pair of spikes is
//! placed on rounds `t - 1` and `t` with a random orientation `Lambda_t`.
//! Under min combining the pair only bites a player that switches onto
//! `Lambda_t`; under max combining it bites a player who stays on it.
//!
//! Draw order from the caller's RNG is fixed: parent bits, noise, `chi`,
//! orientations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{EnvMetadata, HardInstance, RealizedEnvironment};
use crate::error::{Error, Result};
use crate::parent::build_random_parent;
use crate::process::{build_gap_process, build_walk, clip_to_table, sample_noise, WalkSequence};
use crate::types::{Action, CombiningFunction};

/// Gap `epsilon`, noise scale `sigma`, flatness tolerance `tau`, spike size `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardnessParams {
    pub epsilon: f64,
    pub sigma: f64,
    pub tau: f64,
    pub eta: f64,
}

impl HardnessParams {
    /// Positivity plus `eta > tau`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("eta", self.eta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.eta <= self.tau {
            return Err(Error::InvalidParameter(format!(
                "spike size eta = {} must exceed tolerance tau = {}",
                self.eta, self.tau
            )));
        }
        Ok(())
    }

    /// `eta * tau / (sigma * epsilon)`. The lower-bound argument needs this
    /// to grow without bound; for the default schedule it equals
    /// `T^{1/3} / ln^5 T`, which stays below 1 until `ln T` is about 62.
    pub fn separation_ratio(&self) -> f64 {
        self.eta * self.tau / (self.sigma * self.epsilon)
    }
}

/// `eta = ln^-2 T`, `sigma = ln^-1 T`, `tau = ln^-5 T`, `epsilon = T^{-1/3} / ln T`.
pub fn default_schedule(horizon: usize) -> Result<HardnessParams> {
    if horizon < 16 {
        return Err(Error::Schedule {
            horizon,
            reason: "horizon must be at least 16".into(),
        });
    }
    let t = horizon as f64;
    let l = t.ln();
    let params = HardnessParams {
        epsilon: t.powf(-1.0 / 3.0) / l,
        sigma: 1.0 / l,
        tau: l.powi(-5),
        eta: l.powi(-2),
    };
    params.validate().map_err(|e| Error::Schedule {
        horizon,
        reason: e.to_string(),
    })?;
    Ok(params)
}

/// Trigger flags `E_t`, indexed `0..=T`; only `2..=T-2` can be set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSequence {
    flags: Vec<bool>,
}

impl EventSequence {
    pub fn none(horizon: usize) -> Self {
        Self {
            flags: vec![false; horizon + 1],
        }
    }

    pub fn horizon(&self) -> usize {
        self.flags.len() - 1
    }

    pub fn is_set(&self, t: usize) -> bool {
        self.flags.get(t).copied().unwrap_or(false)
    }

    /// Rounds with `E_t` set, ascending.
    pub fn rounds(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags.iter().enumerate().filter(|(_, f)| **f).map(|(t, _)| t)
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    /// `E_t` excludes `E_{t+1}` and `E_{t+2}`.
    pub fn is_well_spaced(&self) -> bool {
        self.rounds()
            .all(|t| !self.is_set(t + 1) && !self.is_set(t + 2))
    }
}

fn detect_events(walk: &WalkSequence, suppress: bool, cond: impl Fn(usize) -> bool) -> EventSequence {
    let horizon = walk.horizon();
    let mut flags = vec![false; horizon + 1];
    for t in 2..=horizon.saturating_sub(2) {
        if !cond(t) {
            continue;
        }
        if suppress && (flags[t - 1] || flags[t - 2]) {
            continue;
        }
        flags[t] = true;
    }
    EventSequence { flags }
}

/// `E_t = |W_{t-1} - W_t| <= tau and W_{t+1} < W_t - tau and W_{t+2} < W_{t+1} - tau`
/// for `2 <= t <= T - 2`.
pub fn detect_min_events(walk: &WalkSequence, tau: f64) -> EventSequence {
    let w = &walk.values;
    detect_events(walk, false, |t| {
        (w[t - 1] - w[t]).abs() <= tau && w[t + 1] < w[t] - tau && w[t + 2] < w[t + 1] - tau
    })
}

/// `E_t = |W_{t-1} - W_t| <= tau and W_{t+1} > W_t + eta` for `2 <= t <= T - 2`.
///
/// Unlike the min condition this one does not rule out `E_t` together with
/// `E_{t+2}`; events are accepted left to right and a candidate within two
/// rounds of an accepted event is dropped.
pub fn detect_max_events(walk: &WalkSequence, tau: f64, eta: f64) -> EventSequence {
    let w = &walk.values;
    detect_events(walk, true, |t| {
        (w[t - 1] - w[t]).abs() <= tau && w[t + 1] > w[t] + eta
    })
}

/// Spike values `S_t(x)` for a two-armed game and the orientations that placed them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSequence {
    magnitude: f64,
    /// round-major `T x 2`
    values: Vec<f64>,
    /// `orientations[t - 2] = Lambda_t` for `t in 2..=T-1`
    orientations: Vec<Action>,
}

impl SpikeSequence {
    pub fn zeros(horizon: usize, magnitude: f64) -> Self {
        Self {
            magnitude,
            values: vec![0.0; 2 * horizon],
            orientations: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.values.len() / 2
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// `S_t(x)`; zero outside `1..=T`.
    pub fn value(&self, t: usize, x: Action) -> f64 {
        if t == 0 || t > self.horizon() {
            return 0.0;
        }
        self.values[(t - 1) * 2 + x.0]
    }

    pub fn is_spiked(&self, t: usize, x: Action) -> bool {
        self.value(t, x) != 0.0
    }

    /// Places a spike of the sequence's magnitude on `(t, x)`.
    pub fn set(&mut self, t: usize, x: Action) {
        self.values[(t - 1) * 2 + x.0] = self.magnitude;
    }

    /// `Lambda_t` for `t in 2..=T-1`.
    pub fn lambda(&self, t: usize) -> Option<Action> {
        if t < 2 {
            return None;
        }
        self.orientations.get(t - 2).copied()
    }

    pub fn orientations(&self) -> &[Action] {
        &self.orientations
    }
}

fn draw_orientations<R: Rng + ?Sized>(horizon: usize, rng: &mut R) -> Vec<Action> {
    (2..horizon).map(|_| Action(rng.random::<bool>() as usize)).collect()
}

/// `S_t(x) = eta` iff `(E_t and x = Lambda_t) or (E_{t+1} and x != Lambda_{t+1})`.
///
/// `Lambda_2..Lambda_{T-1}` are all drawn up front, whether or not an event uses them.
pub fn assign_spikes_min<R: Rng + ?Sized>(events: &EventSequence, eta: f64, rng: &mut R) -> SpikeSequence {
    let orientations = draw_orientations(events.horizon(), rng);
    spikes_min_from(events, eta, orientations)
}

/// Deterministic min-spike placement from given orientations.
pub fn spikes_min_from(events: &EventSequence, eta: f64, orientations: Vec<Action>) -> SpikeSequence {
    let horizon = events.horizon();
    let mut s = SpikeSequence {
        magnitude: eta,
        values: vec![0.0; 2 * horizon],
        orientations,
    };
    for t in 1..=horizon {
        for x in [Action(0), Action(1)] {
            let now = events.is_set(t) && s.lambda(t) == Some(x);
            let next = events.is_set(t + 1) && s.lambda(t + 1).is_some_and(|l| l != x);
            if now || next {
                s.set(t, x);
            }
        }
    }
    s
}

/// `S_{t-1}(Lambda_t) = S_t(Lambda_t) = 1` for every event `t`.
pub fn assign_spikes_max<R: Rng + ?Sized>(events: &EventSequence, rng: &mut R) -> SpikeSequence {
    let orientations = draw_orientations(events.horizon(), rng);
    spikes_max_from(events, orientations)
}

pub fn spikes_max_from(events: &EventSequence, orientations: Vec<Action>) -> SpikeSequence {
    let horizon = events.horizon();
    let mut s = SpikeSequence {
        magnitude: 1.0,
        values: vec![0.0; 2 * horizon],
        orientations,
    };
    let rounds: Vec<usize> = events.rounds().collect();
    for t in rounds {
        let lam = s.lambda(t).expect("events only occur where Lambda_t is drawn");
        s.set(t - 1, lam);
        s.set(t, lam);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Min,
    Max,
}

fn build_adversary<R: Rng + ?Sized>(
    side: Side,
    horizon: usize,
    params: HardnessParams,
    rng: &mut R,
) -> Result<RealizedEnvironment> {
    params.validate()?;
    if horizon < 4 {
        return Err(Error::InvalidParameter(format!(
            "hard instances need T >= 4, got {horizon}"
        )));
    }
    let parent = build_random_parent(horizon, rng).parent;
    let noise = sample_noise(horizon, params.sigma, rng)?;
    let walk = build_walk(&parent, &noise)?;
    let chi = Action(rng.random::<bool>() as usize);
    let gap = build_gap_process(walk, chi, params.epsilon)?;
    let (events, spikes, combiner, label) = match side {
        Side::Min => {
            let events = detect_min_events(&gap.walk, params.tau);
            let spikes = assign_spikes_min(&events, params.eta, rng);
            (events, spikes, CombiningFunction::min(), "min_adversary")
        }
        Side::Max => {
            let events = detect_max_events(&gap.walk, params.tau, params.eta);
            let spikes = assign_spikes_max(&events, rng);
            (events, spikes, CombiningFunction::max(), "max_adversary")
        }
    };
    let tables = clip_to_table(&gap, Some(&spikes))?;
    let metadata = EnvMetadata {
        label: label.into(),
        seed: None,
        sigma: Some(params.sigma),
        epsilon: Some(params.epsilon),
        tau: Some(params.tau),
        eta: Some(params.eta),
        chi: Some(chi),
    };
    Ok(RealizedEnvironment::composite(tables.clipped, combiner)
        .with_metadata(metadata)
        .with_hard_instance(HardInstance {
            params,
            parent,
            gap,
            events,
            spikes,
            unclipped: tables.unclipped,
        }))
}

/// Min adversary: `F_t = min(L_{t-1}(x_{t-1}), L_t(x_t))` over spiked, clipped gap losses.
pub fn build_min_adversary<R: Rng + ?Sized>(
    horizon: usize,
    params: HardnessParams,
    rng: &mut R,
) -> Result<RealizedEnvironment> {
    build_adversary(Side::Min, horizon, params, rng)
}

/// Max adversary: unit spikes on `Lambda_t` at rounds `t - 1` and `t`, max combining.
pub fn build_max_adversary<R: Rng + ?Sized>(
    horizon: usize,
    params: HardnessParams,
    rng: &mut R,
) -> Result<RealizedEnvironment> {
    build_adversary(Side::Max, horizon, params, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parent::ParentFunction;
    use crate::process::{build_walk, NoiseSequence};
    use crate::types::LossSource;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn walk(values: &[f64]) -> WalkSequence {
        WalkSequence {
            values: values.to_vec(),
        }
    }

    #[test]
    fn schedule_plug_in() {
        let horizon = 10f64.exp().round() as usize; // 22026
        let p = default_schedule(horizon).unwrap();
        let l = (horizon as f64).ln();
        assert!((l - 10.0).abs() < 1e-4);
        assert!((p.sigma - 0.1).abs() < 1e-5);
        assert!((p.eta - 0.01).abs() < 1e-6);
        assert!((p.tau - 1e-5).abs() < 1e-9);
        assert!((p.epsilon - (horizon as f64).powf(-1.0 / 3.0) / l).abs() < 1e-15);
    }

    #[test]
    fn schedule_rejects_small_horizon() {
        assert!(matches!(default_schedule(2), Err(Error::Schedule { .. })));
        assert!(default_schedule(15).is_err());
        assert!(default_schedule(16).is_ok());
    }

    #[test]
    fn schedule_ordering_across_grid() {
        for e in 8..=24 {
            let horizon = 1usize << e;
            let p = default_schedule(horizon).unwrap();
            let l = (horizon as f64).ln();
            assert!(p.eta > p.tau);
            // eta / tau = ln^3 T
            assert!((p.eta / p.tau / l.powi(3) - 1.0).abs() < 1e-12);
            // separation ratio is T^{1/3} / ln^5 T
            let expected = (horizon as f64).powf(1.0 / 3.0) / l.powi(5);
            assert!((p.separation_ratio() / expected - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn separation_ratio_eventually_grows() {
        // ratio(L) = e^{L/3} / L^5 is minimized at L = 15
        let ratio = |l: f64| (l / 3.0).exp() / l.powi(5);
        let grid = [16.0, 20.0, 40.0, 80.0, 160.0];
        for w in grid.windows(2) {
            assert!(ratio(w[1]) > ratio(w[0]));
        }
        assert!(ratio(10.0) > ratio(15.0));
        assert!(ratio(80.0) > 1.0);
        assert!(ratio(16.6) < 1.0); // T = 2^24
    }

    #[test]
    fn min_event_examples() {
        let tau = 1e-3;
        let e = detect_min_events(&walk(&[0.0, 0.0, 0.0, -2.0 * tau, -4.0 * tau]), tau);
        assert!(e.is_set(2));
        assert_eq!(e.count(), 1);

        let e = detect_min_events(&walk(&[0.0, 0.1, 0.2, 0.2, 0.3, 0.5, 0.5]), tau);
        assert_eq!(e.count(), 0);

        // drops that are not strict by more than tau
        let e = detect_min_events(&walk(&[0.0, 0.0, 0.0, -tau, -2.0 * tau]), tau);
        assert_eq!(e.count(), 0);
    }

    #[test]
    fn max_event_examples() {
        let eta = 0.1;
        let e = detect_max_events(&walk(&[0.0, 0.0, 0.0, 2.0 * eta, 2.0 * eta]), 1e-3, eta);
        assert!(e.is_set(2));
        let e = detect_max_events(&walk(&[0.0, 0.0, -0.1, -0.2, -0.4, -0.4]), 1e-3, eta);
        assert_eq!(e.count(), 0);
    }

    #[test]
    fn max_events_are_spaced() {
        // raw condition fires at t = 2 and t = 4
        let w = walk(&[0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
        let e = detect_max_events(&w, 1e-3, 0.5);
        assert!(e.is_set(2));
        assert!(!e.is_set(4));
        assert!(e.is_well_spaced());
    }

    #[test]
    fn min_spike_orientation() {
        // E_3 with Lambda_3 = 1: S_2(0) = eta, S_3(1) = eta
        let mut events = EventSequence::none(6);
        events.flags[3] = true;
        let orient = vec![Action(0), Action(1), Action(0), Action(1)]; // Lambda_2..Lambda_5
        let s = spikes_min_from(&events, 0.25, orient);
        assert_eq!(s.lambda(3), Some(Action(1)));
        assert_eq!(s.value(2, Action(0)), 0.25);
        assert_eq!(s.value(3, Action(1)), 0.25);
        assert_eq!(s.value(2, Action(1)), 0.0);
        assert_eq!(s.value(3, Action(0)), 0.0);
        let total: f64 = (1..=6)
            .flat_map(|t| [s.value(t, Action(0)), s.value(t, Action(1))])
            .sum();
        assert_eq!(total, 0.5);
    }

    #[test]
    fn no_events_no_spikes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = assign_spikes_min(&EventSequence::none(10), 0.3, &mut rng);
        assert!((1..=10).all(|t| !s.is_spiked(t, Action(0)) && !s.is_spiked(t, Action(1))));
        assert_eq!(s.orientations().len(), 8);
    }

    #[test]
    fn max_spikes_saturate() {
        let mut events = EventSequence::none(6);
        events.flags[3] = true;
        let orient = vec![Action(1), Action(0), Action(1), Action(1)];
        let s = spikes_max_from(&events, orient);
        let noise = NoiseSequence {
            values: vec![0.0; 6],
            sigma: 1.0,
        };
        let w = build_walk(&ParentFunction::chain(6), &noise).unwrap();
        let gap = build_gap_process(w, Action(1), 0.05).unwrap();
        let tabs = clip_to_table(&gap, Some(&s)).unwrap();
        assert_eq!(tabs.clipped.loss(2, Action(0)), 1.0);
        assert_eq!(tabs.clipped.loss(3, Action(0)), 1.0);
        assert_eq!(tabs.clipped.loss(2, Action(1)), 0.45);
    }

    #[test]
    fn sampled_min_spikes_never_overlap() {
        // loose tau/sigma so that events are frequent
        let params = HardnessParams {
            epsilon: 0.01,
            sigma: 0.1,
            tau: 0.05,
            eta: 0.2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut seen = 0;
        for _ in 0..50 {
            let env = build_min_adversary(512, params, &mut rng).unwrap();
            let hard = env.hard_instance().unwrap();
            assert!(hard.events.is_well_spaced());
            seen += hard.events.count();
            for t in 1..=512 {
                for x in [Action(0), Action(1)] {
                    let now = hard.events.is_set(t) && hard.spikes.lambda(t) == Some(x);
                    let next = hard.events.is_set(t + 1) && hard.spikes.lambda(t + 1).is_some_and(|l| l != x);
                    assert!(!(now && next));
                    assert_eq!(hard.spikes.is_spiked(t, x), now || next);
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn min_adversary_replays() {
        let p = default_schedule(1024).unwrap();
        let a = build_min_adversary(1024, p, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = build_min_adversary(1024, p, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a.table(), b.table());
        assert_eq!(a.metadata().chi, b.metadata().chi);
        let c = build_max_adversary(1024, p, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let d = build_max_adversary(1024, p, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(c.table(), d.table());
    }

    #[test]
    fn max_adversary_without_events_is_plain_max() {
        // tau tiny and eta huge: no events
        let params = HardnessParams {
            epsilon: 0.01,
            sigma: 0.05,
            tau: 1e-12,
            eta: 10.0,
        };
        let env = build_max_adversary(256, params, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let hard = env.hard_instance().unwrap();
        assert_eq!(hard.events.count(), 0);
        for t in 1..=256 {
            for x in [Action(0), Action(1)] {
                assert_eq!(env.table().loss(t as i64, x), crate::types::clip(hard.gap.z(t, x)));
            }
        }
    }

    #[test]
    fn sampled_max_events_are_spaced_and_occur() {
        let params = HardnessParams {
            epsilon: 0.01,
            sigma: 0.1,
            tau: 0.05,
            eta: 0.08,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut seen = 0;
        for _ in 0..20 {
            let env = build_max_adversary(1024, params, &mut rng).unwrap();
            let hard = env.hard_instance().unwrap();
            assert!(hard.events.is_well_spaced());
            seen += hard.events.count();
        }
        assert!(seen > 0);
    }

    #[test]
    fn min_event_frequency_at_schedule() {
        let horizon = 4096;
        let p = default_schedule(horizon).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let reps = 200;
        let mut events = 0usize;
        for _ in 0..reps {
            let env = build_min_adversary(horizon, p, &mut rng).unwrap();
            events += env.hard_instance().unwrap().events.count();
        }
        let freq = events as f64 / (reps * (horizon - 3)) as f64;
        let scale = p.tau / p.sigma;
        eprintln!("min event frequency {freq:.3e}, tau/sigma {scale:.3e}, ratio {:.3}", freq / scale);
        assert!(freq > 0.0 && freq < 1.0);
    }
}
