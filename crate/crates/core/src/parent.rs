//! Parent functions: the dependence skeleton of the multi-scale walk.
//!
//! A parent function assigns every round `t in 1..=T` an earlier round
//! `rho(t) < t`, so iterating it always ends at 0. Depth (largest ancestor
//! set) bounds how far the walk wanders; width (largest cut) bounds how much
//! a single switch can reveal.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentFunction {
    /// `parents[t - 1] = rho(t)`.
    parents: Vec<usize>,
}

impl ParentFunction {
    /// Validates `rho(t) < t` for every round. `parents[t - 1] = rho(t)`.
    pub fn from_parents(parents: Vec<usize>) -> Result<Self> {
        for (i, &p) in parents.iter().enumerate() {
            if p > i {
                return Err(Error::InvalidParameter(format!(
                    "rho({}) = {p} is not an earlier round",
                    i + 1
                )));
            }
        }
        Ok(Self { parents })
    }

    /// `rho(t) = t - 1`: a plain Gaussian random walk.
    pub fn chain(horizon: usize) -> Self {
        Self {
            parents: (0..horizon).collect(),
        }
    }

    /// `rho(t) = 0`: i.i.d. values.
    pub fn star(horizon: usize) -> Self {
        Self {
            parents: vec![0; horizon],
        }
    }

    /// `rho(t) = t - gcd(t, 2^T)`.
    pub fn gcd(horizon: usize) -> Self {
        Self {
            parents: (1..=horizon).map(clear_lowest_bit).collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.parents.len()
    }

    /// `rho(t)` for `t in 1..=T`.
    pub fn parent(&self, t: usize) -> usize {
        self.parents[t - 1]
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }
}

fn clear_lowest_bit(t: usize) -> usize {
    t & (t - 1)
}

/// `t - gcd(t, 2^T)`: `t` with its least significant set bit cleared.
pub fn gcd_parent(t: usize, horizon: usize) -> Result<usize> {
    if t == 0 || t > horizon {
        return Err(Error::RoundOutOfRange { round: t, horizon });
    }
    Ok(clear_lowest_bit(t))
}

/// A random parent function together with the draws that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomParentTrace {
    pub parent: ParentFunction,
    /// `bits[t - 1] = B_t`.
    pub bits: Vec<bool>,
    /// `U_0 = 0, U_1, U_2, ...`: the rounds with `B_t = 1`, in order.
    pub renamed: Vec<usize>,
}

/// Random parent with `Pr(rho(t) = t - 1 | past) >= 1/2` and width at most
/// `log2 T + 1`: draws `T` unbiased bits in round order, then
/// [`random_parent_from_bits`].
pub fn build_random_parent<R: Rng + ?Sized>(horizon: usize, rng: &mut R) -> RandomParentTrace {
    let bits: Vec<bool> = (0..horizon).map(|_| rng.random::<bool>()).collect();
    random_parent_from_bits(bits)
}

/// Deterministic part of the random parent construction.
///
/// `B_t = 0` gives `rho(t) = t - 1`. The rounds with `B_t = 1` are renamed
/// `U_1, U_2, ...` (with `U_0 = 0`), and `rho(U_k) = U_{gcd_parent(k)}`.
pub fn random_parent_from_bits(bits: Vec<bool>) -> RandomParentTrace {
    let mut renamed = vec![0usize];
    let mut parents = Vec::with_capacity(bits.len());
    for (i, &b) in bits.iter().enumerate() {
        let t = i + 1;
        if b {
            let k = renamed.len();
            parents.push(renamed[clear_lowest_bit(k)]);
            renamed.push(t);
        } else {
            parents.push(t - 1);
        }
    }
    RandomParentTrace {
        parent: ParentFunction { parents },
        bits,
        renamed,
    }
}

/// `rho*(t)`, listed from `rho(t)` down to 0. Empty for `t = 0`.
pub fn ancestors(rho: &ParentFunction, t: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = t;
    while cur > 0 {
        cur = rho.parent(cur);
        out.push(cur);
    }
    out
}

/// `|rho*(t)|` for `t in 0..=T` in one forward pass.
pub fn ancestor_counts(rho: &ParentFunction) -> Vec<usize> {
    let mut counts = vec![0usize; rho.horizon() + 1];
    for t in 1..=rho.horizon() {
        counts[t] = counts[rho.parent(t)] + 1;
    }
    counts
}

/// `max_t |rho*(t)|`.
pub fn depth(rho: &ParentFunction) -> usize {
    ancestor_counts(rho).into_iter().max().unwrap_or(0)
}

/// `cut(t) = { s : rho(s) < t <= s }`, ascending.
pub fn cut(rho: &ParentFunction, t: usize) -> Result<Vec<usize>> {
    if t == 0 || t > rho.horizon() {
        return Err(Error::RoundOutOfRange {
            round: t,
            horizon: rho.horizon(),
        });
    }
    Ok((t..=rho.horizon()).filter(|&s| rho.parent(s) < t).collect())
}

/// `|cut(t)|` for every `t in 1..=T` (index 0 unused).
pub fn cut_sizes(rho: &ParentFunction) -> Vec<usize> {
    let n = rho.horizon();
    // s contributes to cut(t) for t in rho(s)+1..=s
    let mut diff = vec![0i64; n + 2];
    for s in 1..=n {
        diff[rho.parent(s) + 1] += 1;
        diff[s + 1] -= 1;
    }
    let mut sizes = vec![0usize; n + 1];
    let mut acc = 0i64;
    for t in 1..=n {
        acc += diff[t];
        sizes[t] = acc as usize;
    }
    sizes
}

/// `max_t |cut(t)|`.
pub fn width(rho: &ParentFunction) -> usize {
    cut_sizes(rho).into_iter().max().unwrap_or(0)
}
