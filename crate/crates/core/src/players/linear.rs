//! Round-robin pool of Exp3 instances for linear composite losses.
//!
//! With `d` the first nonzero coefficient index, the observed loss
//! `f_t = sum_i a_i l_{t-i}(x_{t-i})` determines
//! `z_t = (f_t - sum_{i>d} a_i z_{t-i+d}) / a_d`, which equals
//! `l_{t-d}(x_{t-d})` once earlier `z` are exact. Instance `A_j` plays the
//! rounds `t = j mod (d+1)` and is credited with `z_{s+d}` for its own round
//! `s`, before its next turn at `s + d + 1`.
//!
//! The recursion amplifies rounding error by the largest root of
//! `a_d x^{m-d} + a_{d+1} x^{m-d-1} + ... + a_m`; when that root lies outside
//! the unit disk (e.g. coefficients `(0.2, 0.8)`) the recovered values drift
//! and the run aborts with a recovery violation.

use std::collections::VecDeque;

use crate::engine::{Feedback, FeedbackModel};
use crate::error::{Error, Result};
use crate::players::{Exp3, Player};
use crate::types::{Action, CombinerKind, CombiningFunction};
use crate::SimRng;

/// Recovered values outside `[-TOL, 1 + TOL]` abort the run.
pub const RECOVERY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LinearCompositePlayer {
    coeffs: Vec<f64>,
    delay: usize,
    pool: Vec<Exp3>,
    /// last `m` recovered values, most recent first
    z_recent: VecDeque<f64>,
    /// last `d + 1` actions, most recent at the back
    recent_actions: VecDeque<Action>,
    z_trace: Vec<f64>,
    /// `(instance, credited round)` in the order credits were given
    credit_log: Vec<(usize, usize)>,
}

impl LinearCompositePlayer {
    pub fn new(g: &CombiningFunction, k: usize, horizon: usize) -> Result<Self> {
        if g.kind() != CombinerKind::Linear {
            return Err(Error::InvalidCombiner(format!(
                "linear composite player needs a linear combiner, got {}",
                g.label()
            )));
        }
        let coeffs = g.coeffs().expect("linear").to_vec();
        let delay = coeffs
            .iter()
            .position(|a| *a != 0.0)
            .expect("linear combiner has a nonzero coefficient");
        let pool = (0..=delay)
            .map(|j| Exp3::new(k, rounds_in_class(horizon, delay + 1, j)))
            .collect();
        let m = coeffs.len() - 1;
        Ok(Self {
            coeffs,
            delay,
            pool,
            z_recent: VecDeque::from(vec![0.0; m]),
            recent_actions: VecDeque::with_capacity(delay + 1),
            z_trace: Vec::with_capacity(horizon),
            credit_log: Vec::new(),
        })
    }

    /// `d = min { i : a_i != 0 }`.
    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn pool(&self) -> &[Exp3] {
        &self.pool
    }

    /// `z_1, z_2, ...` as recovered so far.
    pub fn z_trace(&self) -> &[f64] {
        &self.z_trace
    }

    pub fn credit_log(&self) -> &[(usize, usize)] {
        &self.credit_log
    }

    fn instance_for(&self, t: usize) -> usize {
        t % (self.delay + 1)
    }

    fn recover(&self, f: f64) -> f64 {
        let m = self.coeffs.len() - 1;
        let mut acc = f;
        for i in self.delay + 1..=m {
            // a_i weights l_{t-i} = z_{t-i+d}; z_recent[0] is z_{t-1}
            acc -= self.coeffs[i] * self.z_recent[i - self.delay - 1];
        }
        acc / self.coeffs[self.delay]
    }
}

/// `|{ t in 1..=T : t mod period = class }|`.
fn rounds_in_class(horizon: usize, period: usize, class: usize) -> usize {
    (1..=horizon).filter(|t| t % period == class).count()
}

impl Player for LinearCompositePlayer {
    fn label(&self) -> String {
        "linear".into()
    }

    fn num_actions(&self) -> usize {
        self.pool[0].num_arms()
    }

    fn accepts(&self, model: FeedbackModel) -> bool {
        model == FeedbackModel::CompositeBandit
    }

    fn act(&mut self, t: usize, rng: &mut SimRng) -> Action {
        let x = self.pool[self.instance_for(t)].sample(rng);
        if self.recent_actions.len() == self.delay + 1 {
            self.recent_actions.pop_front();
        }
        self.recent_actions.push_back(x);
        x
    }

    fn observe(&mut self, t: usize, _action: Action, feedback: &Feedback) -> Result<()> {
        let f = match feedback {
            Feedback::Scalar(v) => *v,
            Feedback::Full(_) => {
                return Err(Error::IncompatibleFeedback {
                    model: FeedbackModel::FullOblivious.name().into(),
                    player: self.label(),
                })
            }
        };
        let z = self.recover(f);
        if !(-RECOVERY_TOL..=1.0 + RECOVERY_TOL).contains(&z) {
            return Err(Error::RecoveryViolation { round: t, value: z });
        }
        self.z_trace.push(z);
        if !self.z_recent.is_empty() {
            self.z_recent.pop_back();
            self.z_recent.push_front(z);
        }
        if t > self.delay {
            let round = t - self.delay;
            let played = self.recent_actions[self.recent_actions.len() - 1 - self.delay];
            let j = self.instance_for(round);
            self.pool[j].update(played, z.clamp(0.0, 1.0))?;
            self.credit_log.push((j, round));
        }
        Ok(())
    }
}
