use thiserror::Error;

/// Errors produced while building environments, players, or running games.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid combining function: {0}")]
    InvalidCombiner(String),

    #[error("round {round} out of range 1..={horizon}")]
    RoundOutOfRange { round: usize, horizon: usize },

    #[error("action {action} out of range for k = {k}")]
    ActionOutOfRange { action: usize, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("schedule unsatisfiable at T = {horizon}: {reason}")]
    Schedule { horizon: usize, reason: String },

    #[error("feedback model {model} is not accepted by player {player}")]
    IncompatibleFeedback { model: String, player: String },

    #[error("loss {0} outside [0, 1]")]
    LossOutOfRange(f64),

    #[error("recovered delayed loss z_{round} = {value} outside [0, 1]")]
    RecoveryViolation { round: usize, value: f64 },

    #[error("environment has no {0} metadata")]
    MissingMetadata(&'static str),

    #[error("invalid player spec {spec:?}: {reason}")]
    PlayerSpec { spec: String, reason: String },

    #[error("not enough points for a fit: {usable} usable, need at least 3")]
    InsufficientPoints { usable: usize },

    #[error("malformed environment dump at line {line}: {reason}")]
    Dump { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
