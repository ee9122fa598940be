//! Action-selection policies and their textual specs.
//!
//! Spec strings:
//!
//! | spec                  | player                                          |
//! |-----------------------|-------------------------------------------------|
//! | `exp3`                | [`Exp3`] tuned for the full horizon             |
//! | `linear`              | [`LinearCompositePlayer`] for the env's weights |
//! | `constant:<x>`        | [`ConstantPlayer`] on action `x`                |
//! | `probe:<p>`           | [`ProbePlayer`] switching with probability `p`  |
//! | `batched:<inner>:B=<n>` | [`BatchedPlayer`]; `B=auto` means `ceil(T^{1/3})` |

mod batched;
mod constant;
mod exp3;
mod linear;

use std::fmt;
use std::str::FromStr;

pub use batched::{meta_rounds, BatchedPlayer};
pub use constant::{ConstantPlayer, ProbePlayer};
pub use exp3::Exp3;
pub use linear::{LinearCompositePlayer, RECOVERY_TOL};

use crate::engine::{Feedback, FeedbackModel, RealizedEnvironment};
use crate::error::{Error, Result};
use crate::types::Action;
use crate::SimRng;

/// A stateful policy. One instance plays one game.
pub trait Player: Send {
    fn label(&self) -> String;
    fn num_actions(&self) -> usize;
    /// Whether the player can learn from this feedback model.
    fn accepts(&self, model: FeedbackModel) -> bool;
    fn act(&mut self, t: usize, rng: &mut SimRng) -> Action;
    /// Feedback for round `t`, already scaled into `[0, 1]`.
    fn observe(&mut self, t: usize, action: Action, feedback: &Feedback) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    Fixed(usize),
    /// `ceil(T^{1/3})`
    CubeRoot,
}

impl BatchSize {
    pub fn resolve(self, horizon: usize) -> usize {
        match self {
            BatchSize::Fixed(b) => b,
            BatchSize::CubeRoot => cube_root_batch(horizon),
        }
    }
}

/// Smallest `b` with `b^3 >= T`.
pub fn cube_root_batch(horizon: usize) -> usize {
    let mut b = (horizon as f64).cbrt().round() as usize;
    while b.pow(3) < horizon {
        b += 1;
    }
    while b > 1 && (b - 1).pow(3) >= horizon {
        b -= 1;
    }
    b.max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlayerSpec {
    Exp3,
    Linear,
    Constant(usize),
    Probe(f64),
    Batched { inner: Box<PlayerSpec>, batch: BatchSize },
}

impl PlayerSpec {
    /// Builds a fresh player for `env`.
    pub fn build(&self, env: &RealizedEnvironment) -> Result<Box<dyn Player>> {
        self.build_for(env, env.horizon())
    }

    fn build_for(&self, env: &RealizedEnvironment, horizon: usize) -> Result<Box<dyn Player>> {
        let k = env.num_actions();
        Ok(match self {
            PlayerSpec::Exp3 => Box::new(Exp3::new(k, horizon)),
            PlayerSpec::Linear => {
                let g = env.combiner().ok_or_else(|| Error::PlayerSpec {
                    spec: self.to_string(),
                    reason: "environment has no combining function".into(),
                })?;
                Box::new(LinearCompositePlayer::new(g, k, horizon)?)
            }
            PlayerSpec::Constant(x) => {
                if *x >= k {
                    return Err(Error::ActionOutOfRange { action: *x, k });
                }
                Box::new(ConstantPlayer::new(Action(*x), k))
            }
            PlayerSpec::Probe(p) => Box::new(ProbePlayer::new(*p, k)),
            PlayerSpec::Batched { inner, batch } => {
                if matches!(**inner, PlayerSpec::Linear | PlayerSpec::Batched { .. }) {
                    return Err(Error::PlayerSpec {
                        spec: self.to_string(),
                        reason: "inner player must be exp3, constant or probe".into(),
                    });
                }
                let b = batch.resolve(horizon);
                let inner = inner.build_for(env, meta_rounds(horizon, b))?;
                Box::new(BatchedPlayer::new(inner, b, horizon))
            }
        })
    }
}

impl fmt::Display for PlayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerSpec::Exp3 => write!(f, "exp3"),
            PlayerSpec::Linear => write!(f, "linear"),
            PlayerSpec::Constant(x) => write!(f, "constant:{x}"),
            PlayerSpec::Probe(p) => write!(f, "probe:{p}"),
            PlayerSpec::Batched { inner, batch } => match batch {
                BatchSize::Fixed(b) => write!(f, "batched:{inner}:B={b}"),
                BatchSize::CubeRoot => write!(f, "batched:{inner}:B=auto"),
            },
        }
    }
}

impl FromStr for PlayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::PlayerSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        if let Some(rest) = s.strip_prefix("batched:") {
            let (inner, batch) = rest.rsplit_once(':').ok_or_else(|| bad("expected batched:<inner>:B=<n>"))?;
            let batch = batch.strip_prefix("B=").ok_or_else(|| bad("batch size must be written B=<n>"))?;
            let batch = match batch {
                "auto" => BatchSize::CubeRoot,
                n => {
                    let b: usize = n.parse().map_err(|_| bad("batch size is not an integer"))?;
                    if b == 0 {
                        return Err(bad("batch size must be at least 1"));
                    }
                    BatchSize::Fixed(b)
                }
            };
            return Ok(PlayerSpec::Batched {
                inner: Box::new(inner.parse()?),
                batch,
            });
        }
        match s.split_once(':') {
            None if s == "exp3" => Ok(PlayerSpec::Exp3),
            None if s == "linear" => Ok(PlayerSpec::Linear),
            Some(("constant", x)) => x
                .parse()
                .map(PlayerSpec::Constant)
                .map_err(|_| bad("action is not an integer")),
            Some(("probe", p)) => {
                let p: f64 = p.parse().map_err(|_| bad("switch probability is not a number"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad("switch probability must lie in [0, 1]"));
                }
                Ok(PlayerSpec::Probe(p))
            }
            _ => Err(bad("unknown player")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{CombiningFunction, ObliviousLossTable};
    use proptest::prelude::*;

    fn env() -> RealizedEnvironment {
        RealizedEnvironment::composite(
            ObliviousLossTable::new(64, 2, vec![0.5; 128]).unwrap(),
            CombiningFunction::linear(&[0.0, 1.0]).unwrap(),
        )
    }

    #[test]
    fn parses_known_specs() {
        assert_eq!("exp3".parse::<PlayerSpec>().unwrap(), PlayerSpec::Exp3);
        assert_eq!("linear".parse::<PlayerSpec>().unwrap(), PlayerSpec::Linear);
        assert_eq!("constant:1".parse::<PlayerSpec>().unwrap(), PlayerSpec::Constant(1));
        assert_eq!(
            "batched:exp3:B=32".parse::<PlayerSpec>().unwrap(),
            PlayerSpec::Batched {
                inner: Box::new(PlayerSpec::Exp3),
                batch: BatchSize::Fixed(32)
            }
        );
        assert_eq!(
            "batched:exp3:B=auto".parse::<PlayerSpec>().unwrap().to_string(),
            "batched:exp3:B=auto"
        );
    }

    #[test]
    fn rejects_bad_specs() {
        for s in ["", "hedge", "constant:x", "batched:exp3", "batched:exp3:B=0", "batched:exp3:32", "probe:2", "exp3:1"] {
            assert!(s.parse::<PlayerSpec>().is_err(), "{s} should be rejected");
        }
    }

    #[test]
    fn builds_players() {
        let e = env();
        for s in ["exp3", "linear", "constant:0", "probe:0.5", "batched:exp3:B=4", "batched:exp3:B=auto"] {
            let p = s.parse::<PlayerSpec>().unwrap().build(&e).unwrap();
            assert_eq!(p.num_actions(), 2);
        }
        assert!("constant:2".parse::<PlayerSpec>().unwrap().build(&e).is_err());
        assert!("batched:linear:B=2".parse::<PlayerSpec>().unwrap().build(&e).is_err());
        let sw = RealizedEnvironment::switching(ObliviousLossTable::new(4, 2, vec![0.5; 8]).unwrap());
        assert!("linear".parse::<PlayerSpec>().unwrap().build(&sw).is_err());
    }

    #[test]
    fn cube_root_batches() {
        assert_eq!(cube_root_batch(1), 1);
        assert_eq!(cube_root_batch(8), 2);
        assert_eq!(cube_root_batch(9), 3);
        assert_eq!(cube_root_batch(4096), 16);
        assert_eq!(cube_root_batch(4097), 17);
        assert_eq!(cube_root_batch(1 << 17), 51);
    }

    proptest! {
        #[test]
        fn spec_strings_round_trip(b in 1usize..500, x in 0usize..5, p in 0.0f64..=1.0, pick in 0usize..5) {
            let spec = match pick {
                0 => PlayerSpec::Exp3,
                1 => PlayerSpec::Constant(x),
                2 => PlayerSpec::Probe(p),
                3 => PlayerSpec::Batched { inner: Box::new(PlayerSpec::Exp3), batch: BatchSize::Fixed(b) },
                _ => PlayerSpec::Batched { inner: Box::new(PlayerSpec::Constant(x)), batch: BatchSize::CubeRoot },
            };
            prop_assert_eq!(spec.to_string().parse::<PlayerSpec>().unwrap(), spec);
        }
    }
}
