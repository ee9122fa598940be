//! Slow, literal reference implementations used to cross-check the fast paths.

use std::collections::BTreeSet;

use crate::engine::{LossSemantics, RealizedEnvironment};
use crate::parent::ParentFunction;
use crate::types::{Action, CombinerKind, CombiningFunction, LossSource};

/// Ancestor sets by recursion, depth as the largest set, width by scanning
/// every `(t, s)` pair.
pub fn brute_ancestors_depth_width(rho: &ParentFunction) -> (Vec<BTreeSet<usize>>, usize, usize) {
    fn collect(rho: &ParentFunction, t: usize, into: &mut BTreeSet<usize>) {
        if t == 0 {
            return;
        }
        let p = rho.parent(t);
        into.insert(p);
        collect(rho, p, into);
    }
    let n = rho.horizon();
    let sets: Vec<BTreeSet<usize>> = (0..=n)
        .map(|t| {
            let mut s = BTreeSet::new();
            collect(rho, t, &mut s);
            s
        })
        .collect();
    let depth = sets.iter().map(BTreeSet::len).max().unwrap_or(0);
    let mut width = 0;
    for t in 1..=n {
        let mut size = 0;
        for s in 1..=n {
            if rho.parent(s) < t && t <= s {
                size += 1;
            }
        }
        if size > width {
            width = size;
        }
    }
    (sets, depth, width)
}

/// `g` evaluated straight from its definition, one term per lag.
pub fn brute_composite_eval<S: LossSource + ?Sized>(
    g: &CombiningFunction,
    table: &S,
    actions: &[Action],
    t: usize,
) -> f64 {
    let m = g.memory();
    let lagged = |i: usize| -> f64 {
        if i >= t {
            0.0
        } else {
            table.loss((t - i) as i64, actions[t - i - 1])
        }
    };
    match g.kind() {
        CombinerKind::Min => {
            let mut best = lagged(0);
            for i in 1..=m {
                let v = lagged(i);
                if v < best {
                    best = v;
                }
            }
            best
        }
        CombinerKind::Max => {
            let mut best = lagged(0);
            for i in 1..=m {
                let v = lagged(i);
                if v > best {
                    best = v;
                }
            }
            best
        }
        CombinerKind::Linear => {
            let a = g.coeffs().expect("linear combiner has coefficients");
            let mut total = 0.0;
            for (i, ai) in a.iter().enumerate() {
                total += ai * lagged(i);
            }
            total
        }
    }
}

fn brute_round_loss(env: &RealizedEnvironment, actions: &[Action], t: usize) -> f64 {
    match env.semantics() {
        LossSemantics::Composite(g) => brute_composite_eval(g, env.table(), actions, t),
        LossSemantics::Switching => {
            let x = actions[t - 1];
            let mut loss = env.table().loss(t as i64, x);
            if t > 1 && actions[t - 2] != x {
                loss += 1.0;
            }
            loss
        }
    }
}

/// Policy regret by replaying the sequence and every constant sequence.
pub fn brute_policy_regret(env: &RealizedEnvironment, actions: &[Action]) -> f64 {
    let horizon = env.horizon();
    let mut played = 0.0;
    for t in 1..=horizon {
        played += brute_round_loss(env, actions, t);
    }
    let mut best = f64::INFINITY;
    for x in 0..env.num_actions() {
        let constant = vec![Action(x); horizon];
        let mut total = 0.0;
        for t in 1..=horizon {
            total += brute_round_loss(env, &constant, t);
        }
        if total < best {
            best = total;
        }
    }
    played - best
}
