use crate::engine::{Feedback, FeedbackModel};
use crate::error::{Error, Result};
use crate::players::Player;
use crate::types::Action;
use crate::SimRng;
use rand::Rng;

/// Losses may overshoot `[0, 1]` by this much from rounding in linear combiners.
const LOSS_SLACK: f64 = 1e-9;

/// Exponential weights over `k` arms with importance-weighted loss
/// estimates and no explicit exploration mixing.
///
/// Weights are kept in log space: `log_weights[x] = -lr * (estimated cumulative loss of x)`.
#[derive(Debug, Clone)]
pub struct Exp3 {
    learning_rate: f64,
    budget: usize,
    log_weights: Vec<f64>,
}

impl Exp3 {
    /// Rate `sqrt(2 ln k / (n k))` for a budget of `n` rounds.
    pub fn new(k: usize, budget: usize) -> Self {
        assert!(k >= 2, "Exp3 needs at least two arms");
        let n = budget.max(1) as f64;
        let kf = k as f64;
        let lr = (2.0 * kf.ln() / (n * kf)).sqrt();
        Self::with_learning_rate(k, budget, lr)
    }

    pub fn with_learning_rate(k: usize, budget: usize, learning_rate: f64) -> Self {
        assert!(learning_rate > 0.0);
        Self {
            learning_rate,
            budget,
            log_weights: vec![0.0; k],
        }
    }

    pub fn num_arms(&self) -> usize {
        self.log_weights.len()
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Weights scaled so the largest is 1; all strictly positive.
    pub fn weights(&self) -> Vec<f64> {
        let top = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_weights
            .iter()
            .map(|lw| (lw - top).exp().max(f64::MIN_POSITIVE))
            .collect()
    }

    /// `p_x = w_x / sum w`.
    pub fn probabilities(&self) -> Vec<f64> {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    pub fn sample(&self, rng: &mut SimRng) -> Action {
        let probs = self.probabilities();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (x, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Action(x);
            }
        }
        // u landed in the rounding gap above the last partial sum
        Action(probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1))
    }

    /// `lhat = loss / p_action` on the played arm; `w_action *= exp(-lr * lhat)`.
    pub fn update(&mut self, action: Action, loss: f64) -> Result<()> {
        if !(-LOSS_SLACK..=1.0 + LOSS_SLACK).contains(&loss) {
            return Err(Error::LossOutOfRange(loss));
        }
        if action.0 >= self.num_arms() {
            return Err(Error::ActionOutOfRange {
                action: action.0,
                k: self.num_arms(),
            });
        }
        let loss = loss.clamp(0.0, 1.0);
        if loss == 0.0 {
            return Ok(());
        }
        let p = self.probabilities()[action.0];
        self.log_weights[action.0] -= self.learning_rate * loss / p;
        Ok(())
    }
}

impl Player for Exp3 {
    fn label(&self) -> String {
        "exp3".into()
    }

    fn num_actions(&self) -> usize {
        self.num_arms()
    }

    fn accepts(&self, model: FeedbackModel) -> bool {
        matches!(model, FeedbackModel::CompositeBandit | FeedbackModel::ObliviousValue)
    }

    fn act(&mut self, _t: usize, rng: &mut SimRng) -> Action {
        self.sample(rng)
    }

    fn observe(&mut self, _t: usize, action: Action, feedback: &Feedback) -> Result<()> {
        match feedback {
            Feedback::Scalar(v) => self.update(action, *v),
            Feedback::Full(_) => Err(Error::IncompatibleFeedback {
                model: FeedbackModel::FullOblivious.name().into(),
                player: self.label(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn fresh_state_is_uniform() {
        let e = Exp3::new(4, 100);
        for p in e.probabilities() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let mut rng = SimRng::seed_from_u64(0);
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[e.sample(&mut rng).0] += 1;
        }
        for c in counts {
            assert!((c as f64 / 40_000.0 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn learning_rate_formula() {
        let e = Exp3::new(2, 1000);
        assert!((e.learning_rate() - (2.0 * 2f64.ln() / 2000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_loss_leaves_state() {
        let mut e = Exp3::new(3, 10);
        let before = e.probabilities();
        e.update(Action(1), 0.0).unwrap();
        e.update(Action(2), 0.0).unwrap();
        assert_eq!(e.probabilities(), before);
    }

    #[test]
    fn unit_loss_update() {
        let r = 0.3;
        let mut e = Exp3::with_learning_rate(2, 10, r);
        e.update(Action(0), 1.0).unwrap();
        // p = 1/2, so w_0 = exp(-2r), w_1 = 1
        let w = e.weights();
        assert!((w[0] - (-2.0 * r).exp()).abs() < 1e-15);
        assert_eq!(w[1], 1.0);
        let p = e.probabilities();
        let expected = (-2.0 * r).exp() / (1.0 + (-2.0 * r).exp());
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn dominant_weight_is_chosen() {
        let mut e = Exp3::with_learning_rate(3, 10, 50.0);
        for _ in 0..5 {
            e.update(Action(1), 1.0).unwrap();
            e.update(Action(2), 1.0).unwrap();
        }
        let mut rng = SimRng::seed_from_u64(1);
        assert!((0..1000).all(|_| e.sample(&mut rng) == Action(0)));
        assert!(e.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn rejects_out_of_range_loss() {
        let mut e = Exp3::new(2, 10);
        assert!(e.update(Action(0), 1.5).is_err());
        assert!(e.update(Action(0), -0.1).is_err());
        assert!(e.update(Action(2), 0.5).is_err());
    }

    #[test]
    fn seeded_draws_repeat() {
        let e = Exp3::new(5, 10);
        let a: Vec<_> = {
            let mut r = SimRng::seed_from_u64(42);
            (0..20).map(|_| e.sample(&mut r)).collect()
        };
        let b: Vec<_> = {
            let mut r = SimRng::seed_from_u64(42);
            (0..20).map(|_| e.sample(&mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn probabilities_normalized_after_updates() {
        let mut e = Exp3::new(4, 50);
        let mut rng = SimRng::seed_from_u64(3);
        for _ in 0..500 {
            let x = e.sample(&mut rng);
            let loss: f64 = rng.random();
            e.update(x, loss).unwrap();
            let s: f64 = e.probabilities().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
