use crate::engine::{Feedback, FeedbackModel};
use crate::error::Result;
use crate::players::Player;
use crate::types::Action;
use crate::SimRng;

/// Repeats the inner player's choice for `batch` consecutive rounds and
/// feeds it the batch-average feedback. The inner player sees
/// `ceil(T / batch)` meta-rounds; switches can only happen at batch boundaries.
pub struct BatchedPlayer {
    inner: Box<dyn Player>,
    batch: usize,
    horizon: usize,
    current: Action,
    meta_round: usize,
    acc: Option<Feedback>,
    count: usize,
}

impl BatchedPlayer {
    /// `inner` should be tuned for `meta_rounds(horizon, batch)` rounds.
    pub fn new(inner: Box<dyn Player>, batch: usize, horizon: usize) -> Self {
        assert!(batch >= 1, "batch size must be positive");
        Self {
            inner,
            batch,
            horizon,
            current: Action(0),
            meta_round: 0,
            acc: None,
            count: 0,
        }
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }
}

/// `ceil(T / B)`.
pub fn meta_rounds(horizon: usize, batch: usize) -> usize {
    horizon.div_ceil(batch)
}

fn accumulate(acc: Option<Feedback>, fb: &Feedback) -> Feedback {
    match (acc, fb) {
        (None, fb) => fb.clone(),
        (Some(Feedback::Scalar(a)), Feedback::Scalar(b)) => Feedback::Scalar(a + b),
        (Some(Feedback::Full(mut a)), Feedback::Full(b)) => {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            Feedback::Full(a)
        }
        (Some(_), fb) => fb.clone(),
    }
}

impl Player for BatchedPlayer {
    fn label(&self) -> String {
        format!("batched:{}:B={}", self.inner.label(), self.batch)
    }

    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    fn accepts(&self, model: FeedbackModel) -> bool {
        self.inner.accepts(model)
    }

    fn act(&mut self, t: usize, rng: &mut SimRng) -> Action {
        if (t - 1).is_multiple_of(self.batch) {
            self.meta_round = (t - 1) / self.batch + 1;
            self.current = self.inner.act(self.meta_round, rng);
        }
        self.current
    }

    fn observe(&mut self, t: usize, _action: Action, feedback: &Feedback) -> Result<()> {
        self.acc = Some(accumulate(self.acc.take(), feedback));
        self.count += 1;
        if t.is_multiple_of(self.batch) || t == self.horizon {
            let n = self.count as f64;
            let avg = match self.acc.take().expect("accumulated above") {
                Feedback::Scalar(v) => Feedback::Scalar(v / n),
                Feedback::Full(v) => Feedback::Full(v.into_iter().map(|x| x / n).collect()),
            };
            self.count = 0;
            self.inner.observe(self.meta_round, self.current, &avg)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{count_switches, run_game, RealizedEnvironment};
    use crate::players::Exp3;
    use crate::types::{CombiningFunction, ObliviousLossTable};
    use rand::{Rng, SeedableRng};

    fn env(horizon: usize, seed: u64) -> RealizedEnvironment {
        let mut rng = SimRng::seed_from_u64(seed);
        let values = (0..horizon * 2).map(|_| rng.random::<f64>()).collect();
        RealizedEnvironment::composite(
            ObliviousLossTable::new(horizon, 2, values).unwrap(),
            CombiningFunction::linear(&[1.0]).unwrap(),
        )
    }

    #[test]
    fn batch_of_one_matches_inner() {
        let e = env(300, 1);
        let mut plain = Exp3::new(2, 300);
        let a = run_game(&e, &mut plain, FeedbackModel::CompositeBandit, &mut SimRng::seed_from_u64(5)).unwrap();
        let mut batched = BatchedPlayer::new(Box::new(Exp3::new(2, 300)), 1, 300);
        let b = run_game(&e, &mut batched, FeedbackModel::CompositeBandit, &mut SimRng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn switches_only_at_boundaries() {
        let horizon = 1000;
        for batch in [3usize, 7, 10, 64] {
            let e = env(horizon, batch as u64);
            let inner = Exp3::new(2, meta_rounds(horizon, batch));
            let mut p = BatchedPlayer::new(Box::new(inner), batch, horizon);
            let tr = run_game(&e, &mut p, FeedbackModel::CompositeBandit, &mut SimRng::seed_from_u64(2)).unwrap();
            assert!(tr.num_switches < meta_rounds(horizon, batch));
            assert_eq!(tr.num_switches, count_switches(&tr.actions));
            for (i, s) in tr.switches.iter().enumerate() {
                if *s {
                    assert_eq!(i % batch, 0, "switch inside a batch at round {}", i + 1);
                }
            }
        }
    }

    #[test]
    fn meta_round_count() {
        assert_eq!(meta_rounds(10, 3), 4);
        assert_eq!(meta_rounds(9, 3), 3);
        assert_eq!(meta_rounds(1, 5), 1);
    }
}
