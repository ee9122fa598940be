//! Realized environments, the game loop, and regret accounting.
//!
//! Every environment in this crate is an oblivious table fixed before the
//! game starts, so counterfactual losses of constant policies are computed
//! exactly from the table rather than by re-running the game.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adversary::{EventSequence, HardnessParams, SpikeSequence};
use crate::error::{Error, Result};
use crate::parent::ParentFunction;
use crate::players::Player;
use crate::process::GapProcess;
use crate::types::{eval_composite, Action, CombiningFunction, LossSource, ObliviousLossTable, RawLossTable};
use crate::SimRng;

/// How the round loss is formed from the oblivious table.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSemantics {
    /// `f_t = g(l_{t-m}(x_{t-m}), ..., l_t(x_t))`.
    Composite(CombiningFunction),
    /// `f_t = l_t(x_t) + 1{x_t != x_{t-1}}`, range `[0, 2]`.
    Switching,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvMetadata {
    pub label: String,
    pub seed: Option<u64>,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub chi: Option<Action>,
}

/// Everything sampled while building a min or max adversary.
#[derive(Debug, Clone)]
pub struct HardInstance {
    pub params: HardnessParams,
    pub parent: ParentFunction,
    pub gap: GapProcess,
    pub events: EventSequence,
    pub spikes: SpikeSequence,
    /// `Z_t(x) + S_t(x)` before clipping.
    pub unclipped: RawLossTable,
}

#[derive(Debug, Clone)]
pub struct RealizedEnvironment {
    table: ObliviousLossTable,
    semantics: LossSemantics,
    metadata: EnvMetadata,
    hard: Option<HardInstance>,
}

impl RealizedEnvironment {
    pub fn composite(table: ObliviousLossTable, g: CombiningFunction) -> Self {
        Self {
            table,
            semantics: LossSemantics::Composite(g),
            metadata: EnvMetadata::default(),
            hard: None,
        }
    }

    pub fn switching(table: ObliviousLossTable) -> Self {
        Self {
            table,
            semantics: LossSemantics::Switching,
            metadata: EnvMetadata {
                label: "switching_cost".into(),
                ..EnvMetadata::default()
            },
            hard: None,
        }
    }

    pub fn with_metadata(mut self, metadata: EnvMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.metadata.seed = Some(seed);
        self
    }

    pub fn with_hard_instance(mut self, hard: HardInstance) -> Self {
        self.hard = Some(hard);
        self
    }

    pub fn table(&self) -> &ObliviousLossTable {
        &self.table
    }

    pub fn semantics(&self) -> &LossSemantics {
        &self.semantics
    }

    pub fn combiner(&self) -> Option<&CombiningFunction> {
        match &self.semantics {
            LossSemantics::Composite(g) => Some(g),
            LossSemantics::Switching => None,
        }
    }

    pub fn metadata(&self) -> &EnvMetadata {
        &self.metadata
    }

    pub fn hard_instance(&self) -> Option<&HardInstance> {
        self.hard.as_ref()
    }

    pub fn horizon(&self) -> usize {
        self.table.horizon()
    }

    pub fn num_actions(&self) -> usize {
        self.table.num_actions()
    }

    /// Upper end of the round-loss range.
    pub fn loss_range(&self) -> f64 {
        match self.semantics {
            LossSemantics::Composite(_) => 1.0,
            LossSemantics::Switching => 2.0,
        }
    }

    fn loss_on<S: LossSource>(&self, source: &S, actions: &[Action], t: usize) -> Result<f64> {
        match &self.semantics {
            LossSemantics::Composite(g) => eval_composite(g, source, actions, t),
            LossSemantics::Switching => {
                if t == 0 || t > source.horizon() {
                    return Err(Error::RoundOutOfRange {
                        round: t,
                        horizon: source.horizon(),
                    });
                }
                let x = actions[t - 1];
                let switched = t >= 2 && actions[t - 2] != x;
                Ok(source.loss(t as i64, x) + if switched { 1.0 } else { 0.0 })
            }
        }
    }

    /// Round-`t` loss of the action sequence `actions[..t]`.
    pub fn loss(&self, actions: &[Action], t: usize) -> Result<f64> {
        self.loss_on(&self.table, actions, t)
    }

    /// Round-`t` loss evaluated on the unclipped values of a hard instance.
    pub fn unclipped_loss(&self, actions: &[Action], t: usize) -> Result<f64> {
        let hard = self.hard.as_ref().ok_or(Error::MissingMetadata("unclipped table"))?;
        self.loss_on(&hard.unclipped, actions, t)
    }

    /// `f_t(x, ..., x)` for every round.
    pub fn constant_losses(&self, x: Action) -> Vec<f64> {
        let actions = vec![x; self.horizon()];
        (1..=self.horizon())
            .map(|t| self.loss(&actions, t).expect("rounds within horizon"))
            .collect()
    }

    /// `sum_t f_t(x, ..., x)`.
    pub fn constant_total(&self, x: Action) -> f64 {
        self.constant_losses(x).iter().sum()
    }

    /// `min_x sum_t f_t(x, ..., x)` and the minimizing action (lowest index on ties).
    pub fn best_constant(&self) -> (Action, f64) {
        (0..self.num_actions())
            .map(|x| (Action(x), self.constant_total(Action(x))))
            .fold((Action(0), f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }
}

/// What the player sees after each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackModel {
    /// The incurred loss `f_t(X_{1:t})`.
    CompositeBandit,
    /// The oblivious value `l_t(X_t)` of the action just played.
    ObliviousValue,
    /// The whole oblivious vector `l_t(.)`.
    FullOblivious,
}

impl FeedbackModel {
    pub fn name(self) -> &'static str {
        match self {
            FeedbackModel::CompositeBandit => "composite_bandit",
            FeedbackModel::ObliviousValue => "oblivious_value",
            FeedbackModel::FullOblivious => "full_oblivious",
        }
    }
}

impl std::str::FromStr for FeedbackModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "composite_bandit" => Ok(FeedbackModel::CompositeBandit),
            "oblivious_value" => Ok(FeedbackModel::ObliviousValue),
            "full_oblivious" => Ok(FeedbackModel::FullOblivious),
            other => Err(Error::InvalidParameter(format!("unknown feedback model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    Scalar(f64),
    Full(Vec<f64>),
}

impl Feedback {
    fn scaled(&self, factor: f64) -> Feedback {
        match self {
            Feedback::Scalar(v) => Feedback::Scalar(v / factor),
            Feedback::Full(v) => Feedback::Full(v.iter().map(|x| x / factor).collect()),
        }
    }
}

impl std::fmt::Display for Feedback {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Feedback::Scalar(v) => write!(f, "{v}"),
            Feedback::Full(vs) => {
                let parts: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "{}", parts.join(";"))
            }
        }
    }
}

/// Per-round record of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    /// `actions[t - 1] = X_t`
    pub actions: Vec<Action>,
    /// incurred `f_t(X_{1:t})`
    pub losses: Vec<f64>,
    /// what was observed, before any range normalization
    pub feedback: Vec<Feedback>,
    /// `switches[t - 1] = 1{t >= 2 and X_t != X_{t-1}}`
    pub switches: Vec<bool>,
    /// `M`
    pub num_switches: usize,
}

impl Transcript {
    pub fn total_loss(&self) -> f64 {
        self.losses.iter().sum()
    }

    /// One row per round: `t,action,loss,feedback,switch`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "action", "loss", "feedback", "switch"])?;
        for i in 0..self.actions.len() {
            w.write_record([
                (i + 1).to_string(),
                self.actions[i].to_string(),
                self.losses[i].to_string(),
                self.feedback[i].to_string(),
                (self.switches[i] as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Switch count `|{t >= 2 : X_t != X_{t-1}}|`.
pub fn count_switches(actions: &[Action]) -> usize {
    actions.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Plays `T` rounds between `player` and `env`.
///
/// Scalar feedback is divided by the environment's loss range before it
/// reaches the player (a no-op except for switching-cost losses under
/// composite feedback); the transcript records the raw value.
pub fn run_game(
    env: &RealizedEnvironment,
    player: &mut dyn Player,
    model: FeedbackModel,
    rng: &mut SimRng,
) -> Result<Transcript> {
    if player.num_actions() != env.num_actions() {
        return Err(Error::InvalidParameter(format!(
            "player has {} actions, environment has {}",
            player.num_actions(),
            env.num_actions()
        )));
    }
    if !player.accepts(model) {
        return Err(Error::IncompatibleFeedback {
            model: model.name().into(),
            player: player.label(),
        });
    }
    let horizon = env.horizon();
    let k = env.num_actions();
    let scale = match model {
        FeedbackModel::CompositeBandit => env.loss_range(),
        _ => 1.0,
    };
    let mut actions = Vec::with_capacity(horizon);
    let mut losses = Vec::with_capacity(horizon);
    let mut feedback = Vec::with_capacity(horizon);
    let mut switches = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let x = player.act(t, rng);
        if x.0 >= k {
            return Err(Error::ActionOutOfRange { action: x.0, k });
        }
        switches.push(actions.last().is_some_and(|&prev| prev != x));
        actions.push(x);
        let f = env.loss(&actions, t)?;
        losses.push(f);
        let observed = match model {
            FeedbackModel::CompositeBandit => Feedback::Scalar(f),
            FeedbackModel::ObliviousValue => Feedback::Scalar(env.table().loss(t as i64, x)),
            FeedbackModel::FullOblivious => Feedback::Full(env.table().round(t).to_vec()),
        };
        if scale == 1.0 {
            player.observe(t, x, &observed)?;
        } else {
            player.observe(t, x, &observed.scaled(scale))?;
        }
        feedback.push(observed);
    }
    let num_switches = switches.iter().filter(|s| **s).count();
    Ok(Transcript {
        actions,
        losses,
        feedback,
        switches,
        num_switches,
    })
}

/// `sum_t f_t(X_{1:t}) - min_x sum_t f_t(x, ..., x)`.
pub fn policy_regret(env: &RealizedEnvironment, transcript: &Transcript) -> f64 {
    transcript.total_loss() - env.best_constant().1
}

/// `R_t = f_t(X_{1:t}) - f_t(chi, ..., chi)` for an environment with a recorded better action.
pub fn per_round_regret(env: &RealizedEnvironment, transcript: &Transcript) -> Result<Vec<f64>> {
    let chi = env.metadata().chi.ok_or(Error::MissingMetadata("chi"))?;
    let comparator = env.constant_losses(chi);
    Ok(transcript
        .losses
        .iter()
        .zip(&comparator)
        .map(|(f, c)| f - c)
        .collect())
}
