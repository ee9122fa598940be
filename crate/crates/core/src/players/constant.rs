use rand::Rng;

use crate::engine::{Feedback, FeedbackModel};
use crate::error::Result;
use crate::players::Player;
use crate::types::Action;
use crate::SimRng;

/// Plays the same action every round.
#[derive(Debug, Clone)]
pub struct ConstantPlayer {
    action: Action,
    k: usize,
}

impl ConstantPlayer {
    pub fn new(action: Action, k: usize) -> Self {
        Self { action, k }
    }
}

impl Player for ConstantPlayer {
    fn label(&self) -> String {
        format!("constant:{}", self.action)
    }

    fn num_actions(&self) -> usize {
        self.k
    }

    fn accepts(&self, _model: FeedbackModel) -> bool {
        true
    }

    fn act(&mut self, _t: usize, _rng: &mut SimRng) -> Action {
        self.action
    }

    fn observe(&mut self, _t: usize, _action: Action, _feedback: &Feedback) -> Result<()> {
        Ok(())
    }
}

/// Feedback-blind player that switches to a uniformly chosen other action
/// with a fixed probability each round. Used to probe switch costs.
#[derive(Debug, Clone)]
pub struct ProbePlayer {
    switch_prob: f64,
    k: usize,
    current: Option<Action>,
}

impl ProbePlayer {
    pub fn new(switch_prob: f64, k: usize) -> Self {
        assert!((0.0..=1.0).contains(&switch_prob));
        Self {
            switch_prob,
            k,
            current: None,
        }
    }
}

impl Player for ProbePlayer {
    fn label(&self) -> String {
        format!("probe:{}", self.switch_prob)
    }

    fn num_actions(&self) -> usize {
        self.k
    }

    fn accepts(&self, _model: FeedbackModel) -> bool {
        true
    }

    fn act(&mut self, _t: usize, rng: &mut SimRng) -> Action {
        let next = match self.current {
            None => Action(rng.random_range(0..self.k)),
            Some(cur) if rng.random::<f64>() < self.switch_prob => {
                let other = rng.random_range(0..self.k - 1);
                Action(if other >= cur.0 { other + 1 } else { other })
            }
            Some(cur) => cur,
        };
        self.current = Some(next);
        next
    }

    fn observe(&mut self, _t: usize, _action: Action, _feedback: &Feedback) -> Result<()> {
        Ok(())
    }
}
