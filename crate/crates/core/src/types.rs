//! Shared vocabulary: actions, oblivious loss tables, combining functions
//! and composite-loss evaluation.
//!
//! Rounds are 1-based throughout. A loss table answers queries for any
//! signed round; rounds `t <= 0` read as exactly zero, so windows that reach
//! before the start of the game need no special handling by callers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(a_i) == 1` for linear combiners.
pub const COEFF_SUM_TOL: f64 = 1e-12;

/// One of the `k` actions, `0 <= index < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action(pub usize);

impl Action {
    pub fn index(self) -> usize {
        self.0
    }

    /// The other action in a two-action game.
    pub fn flip(self) -> Action {
        debug_assert!(self.0 < 2);
        Action(1 - self.0)
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `min(max(alpha, 0), 1)`.
pub fn clip(alpha: f64) -> f64 {
    alpha.clamp(0.0, 1.0)
}

/// Read access to a round-major `T x k` table of oblivious values.
pub trait LossSource {
    fn horizon(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// Value of `action` at `round`; zero for `round <= 0`.
    fn loss(&self, round: i64, action: Action) -> f64;
}

fn table_index(horizon: usize, k: usize, round: i64, action: Action) -> Option<usize> {
    if round <= 0 {
        return None;
    }
    let t = round as usize;
    assert!(t <= horizon, "round {t} beyond horizon {horizon}");
    assert!(action.0 < k, "action {} out of range for k = {k}", action.0);
    Some((t - 1) * k + action.0)
}

/// Oblivious losses `l_t(x)` in `[0, 1]` for `t in 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliviousLossTable {
    horizon: usize,
    k: usize,
    values: Vec<f64>,
}

impl ObliviousLossTable {
    /// `values` is round-major: entry `(t - 1) * k + x` holds `l_t(x)`.
    pub fn new(horizon: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need k >= 2, got {k}")));
        }
        if values.len() != horizon * k {
            return Err(Error::LengthMismatch {
                expected: horizon * k,
                got: values.len(),
            });
        }
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::LossOutOfRange(v));
        }
        Ok(Self { horizon, k, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All `k` values of round `t` (1-based).
    pub fn round(&self, t: usize) -> &[f64] {
        &self.values[(t - 1) * self.k..t * self.k]
    }
}

impl LossSource for ObliviousLossTable {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn num_actions(&self) -> usize {
        self.k
    }

    fn loss(&self, round: i64, action: Action) -> f64 {
        table_index(self.horizon, self.k, round, action).map_or(0.0, |i| self.values[i])
    }
}

/// Same layout as [`ObliviousLossTable`] without the range restriction.
/// Holds the unclipped `Z_t(x) + S_t(x)` values used for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLossTable {
    horizon: usize,
    k: usize,
    values: Vec<f64>,
}

impl RawLossTable {
    pub fn new(horizon: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != horizon * k {
            return Err(Error::LengthMismatch {
                expected: horizon * k,
                got: values.len(),
            });
        }
        Ok(Self { horizon, k, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl LossSource for RawLossTable {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn num_actions(&self) -> usize {
        self.k
    }

    fn loss(&self, round: i64, action: Action) -> f64 {
        table_index(self.horizon, self.k, round, action).map_or(0.0, |i| self.values[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinerKind {
    Min,
    Max,
    Linear,
}

/// The rule `g` mapping the window `(l_{t-m}(x_{t-m}), ..., l_t(x_t))` to
/// the round-`t` loss.
#[derive(Debug, Clone, PartialEq)]
pub struct CombiningFunction {
    kind: CombinerKind,
    /// `a_0..a_m`; `a_i` weights `l_{t-i}`. Empty for min/max.
    coeffs: Vec<f64>,
}

impl CombiningFunction {
    /// `min(l_{t-1}(x_{t-1}), l_t(x_t))`.
    pub fn min() -> Self {
        Self {
            kind: CombinerKind::Min,
            coeffs: Vec::new(),
        }
    }

    /// `max(l_{t-1}(x_{t-1}), l_t(x_t))`.
    pub fn max() -> Self {
        Self {
            kind: CombinerKind::Max,
            coeffs: Vec::new(),
        }
    }

    /// Linear combiner from nonnegative weights `a_0..a_m`, normalized to sum 1.
    pub fn linear(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidCombiner("empty coefficient sequence".into()));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidCombiner(format!(
                "coefficient {c} is negative or not finite"
            )));
        }
        let sum: f64 = coeffs.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidCombiner("all coefficients are zero".into()));
        }
        let coeffs: Vec<f64> = coeffs.iter().map(|c| c / sum).collect();
        let total: f64 = coeffs.iter().sum();
        debug_assert!((total - 1.0).abs() <= COEFF_SUM_TOL);
        Ok(Self {
            kind: CombinerKind::Linear,
            coeffs,
        })
    }

    pub fn kind(&self) -> CombinerKind {
        self.kind
    }

    /// Memory `m`: the window spans rounds `t - m..=t`.
    pub fn memory(&self) -> usize {
        match self.kind {
            CombinerKind::Min | CombinerKind::Max => 1,
            CombinerKind::Linear => self.coeffs.len() - 1,
        }
    }

    /// `a_0..a_m` for linear combiners, `None` otherwise.
    pub fn coeffs(&self) -> Option<&[f64]> {
        match self.kind {
            CombinerKind::Linear => Some(&self.coeffs),
            _ => None,
        }
    }

    /// Applies `g` to a window given oldest first: `window[j] = l_{t-m+j}`.
    pub fn apply(&self, window: &[f64]) -> f64 {
        debug_assert_eq!(window.len(), self.memory() + 1);
        match self.kind {
            CombinerKind::Min => window.iter().copied().fold(f64::INFINITY, f64::min),
            CombinerKind::Max => window.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            CombinerKind::Linear => {
                let m = self.memory();
                // a_i multiplies the entry i rounds back, i.e. window[m - i].
                (0..=m).map(|i| self.coeffs[i] * window[m - i]).sum()
            }
        }
    }

    /// Short label such as `min`, `max` or `linear(0.5/0.5)`.
    pub fn label(&self) -> String {
        match self.kind {
            CombinerKind::Min => "min".into(),
            CombinerKind::Max => "max".into(),
            CombinerKind::Linear => {
                let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
                format!("linear({})", parts.join("/"))
            }
        }
    }
}

/// Composite loss `f_t(x_{1:t}) = g(l_{t-m}(x_{t-m}), ..., l_t(x_t))`.
///
/// `actions[i]` is the action of round `i + 1`; it must cover at least
/// rounds `1..=t`. Rounds before 1 contribute zero.
pub fn eval_composite<S: LossSource + ?Sized>(
    g: &CombiningFunction,
    table: &S,
    actions: &[Action],
    t: usize,
) -> Result<f64> {
    if t == 0 || t > table.horizon() {
        return Err(Error::RoundOutOfRange {
            round: t,
            horizon: table.horizon(),
        });
    }
    if actions.len() < t {
        return Err(Error::LengthMismatch {
            expected: t,
            got: actions.len(),
        });
    }
    let m = g.memory();
    let mut window = [0.0f64; 8];
    let mut heap;
    let window: &mut [f64] = if m < window.len() {
        &mut window[..=m]
    } else {
        heap = vec![0.0; m + 1];
        &mut heap
    };
    for (j, slot) in window.iter_mut().enumerate() {
        let round = t as i64 - m as i64 + j as i64;
        *slot = if round >= 1 {
            table.loss(round, actions[round as usize - 1])
        } else {
            0.0
        };
    }
    Ok(g.apply(window))
}
