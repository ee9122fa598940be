//! Plain-text snapshot of a realized environment.
//!
//! Layout: a magic line, `key=value` metadata lines, a `---` separator, a
//! CSV column header, then one row per round:
//!
//! ```text
//! # composite-bandits env v1
//! label=min_adversary
//! T=4
//! k=2
//! combiner=min
//! sigma=0.1
//! ---
//! t,loss_0,loss_1,raw_0,raw_1,event,lambda
//! 1,0.5,0.49,0.5,0.49,0,-
//! ```
//!
//! The `raw_*`, `event` and `lambda` columns appear only for hard instances.
//! Floats are written in shortest round-trip form.

use std::io::{BufRead, Write};

use crate::engine::{EnvMetadata, LossSemantics, RealizedEnvironment};
use crate::error::{Error, Result};
use crate::types::{Action, CombinerKind, CombiningFunction, ObliviousLossTable, RawLossTable};

const MAGIC: &str = "# composite-bandits env v1";

/// An environment read back from a dump, with the hard-instance columns if present.
#[derive(Debug, Clone)]
pub struct EnvDump {
    pub env: RealizedEnvironment,
    pub unclipped: Option<RawLossTable>,
    pub events: Option<Vec<bool>>,
    /// `lambda[t - 1]` for round `t`
    pub lambda: Option<Vec<Option<Action>>>,
}

fn combiner_text(semantics: &LossSemantics) -> String {
    match semantics {
        LossSemantics::Switching => "switching".into(),
        LossSemantics::Composite(g) => match g.kind() {
            CombinerKind::Min => "min".into(),
            CombinerKind::Max => "max".into(),
            CombinerKind::Linear => {
                let parts: Vec<String> = g.coeffs().unwrap_or(&[]).iter().map(|c| c.to_string()).collect();
                format!("linear:{}", parts.join(";"))
            }
        },
    }
}

pub fn write_env<W: Write>(env: &RealizedEnvironment, mut out: W) -> Result<()> {
    let meta = env.metadata();
    let (horizon, k) = (env.horizon(), env.num_actions());
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "label={}", meta.label)?;
    writeln!(out, "T={horizon}")?;
    writeln!(out, "k={k}")?;
    writeln!(out, "combiner={}", combiner_text(env.semantics()))?;
    if let Some(s) = meta.seed {
        writeln!(out, "seed={s}")?;
    }
    for (key, v) in [
        ("sigma", meta.sigma),
        ("epsilon", meta.epsilon),
        ("tau", meta.tau),
        ("eta", meta.eta),
    ] {
        if let Some(v) = v {
            writeln!(out, "{key}={v}")?;
        }
    }
    if let Some(chi) = meta.chi {
        writeln!(out, "chi={}", chi.0)?;
    }
    let hard = env.hard_instance();
    if let Some(h) = hard {
        writeln!(out, "events={}", h.events.count())?;
    }
    writeln!(out, "---")?;

    let mut header = vec!["t".to_string()];
    header.extend((0..k).map(|x| format!("loss_{x}")));
    if hard.is_some() {
        header.extend((0..k).map(|x| format!("raw_{x}")));
        header.push("event".into());
        header.push("lambda".into());
    }
    writeln!(out, "{}", header.join(","))?;

    for t in 1..=horizon {
        let mut row = vec![t.to_string()];
        row.extend(env.table().round(t).iter().map(|v| v.to_string()));
        if let Some(h) = hard {
            row.extend(h.unclipped.values()[(t - 1) * k..t * k].iter().map(|v| v.to_string()));
            row.push(if h.events.is_set(t) { "1" } else { "0" }.into());
            row.push(h.spikes.lambda(t).map_or("-".into(), |a| a.0.to_string()));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn env_to_string(env: &RealizedEnvironment) -> Result<String> {
    let mut buf = Vec::new();
    write_env(env, &mut buf)?;
    Ok(String::from_utf8(buf).expect("dump output is ASCII"))
}

fn dump_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Dump {
        line,
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| dump_err(line, format!("bad value for {key}: {v:?}")))
}

fn parse_semantics(line: usize, v: &str) -> Result<LossSemantics> {
    Ok(match v {
        "switching" => LossSemantics::Switching,
        "min" => LossSemantics::Composite(CombiningFunction::min()),
        "max" => LossSemantics::Composite(CombiningFunction::max()),
        _ => {
            let list = v
                .strip_prefix("linear:")
                .ok_or_else(|| dump_err(line, format!("unknown combiner {v:?}")))?;
            let coeffs = list
                .split(';')
                .map(|c| parse_num::<f64>(line, "combiner", c))
                .collect::<Result<Vec<_>>>()?;
            LossSemantics::Composite(CombiningFunction::linear(&coeffs)?)
        }
    })
}

pub fn read_env<R: BufRead>(input: R) -> Result<EnvDump> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or_else(|| dump_err(1, "empty input"))?;
    if first? != MAGIC {
        return Err(dump_err(1, "missing header line"));
    }

    let mut meta = EnvMetadata::default();
    let mut horizon = None;
    let mut k = None;
    let mut semantics = None;
    let mut last = 1;
    for (no, line) in lines.by_ref() {
        let line = line?;
        last = no;
        if line == "---" {
            break;
        }
        let (key, v) = line
            .split_once('=')
            .ok_or_else(|| dump_err(no, "expected key=value"))?;
        match key {
            "label" => meta.label = v.to_string(),
            "T" => horizon = Some(parse_num::<usize>(no, key, v)?),
            "k" => k = Some(parse_num::<usize>(no, key, v)?),
            "combiner" => semantics = Some(parse_semantics(no, v)?),
            "seed" => meta.seed = Some(parse_num(no, key, v)?),
            "sigma" => meta.sigma = Some(parse_num(no, key, v)?),
            "epsilon" => meta.epsilon = Some(parse_num(no, key, v)?),
            "tau" => meta.tau = Some(parse_num(no, key, v)?),
            "eta" => meta.eta = Some(parse_num(no, key, v)?),
            "chi" => meta.chi = Some(Action(parse_num(no, key, v)?)),
            "events" => {
                parse_num::<usize>(no, key, v)?;
            }
            _ => return Err(dump_err(no, format!("unknown key {key:?}"))),
        }
    }
    let horizon = horizon.ok_or(Error::MissingMetadata("T"))?;
    let k = k.ok_or(Error::MissingMetadata("k"))?;
    let semantics = semantics.ok_or(Error::MissingMetadata("combiner"))?;

    let (no, header) = lines.next().ok_or_else(|| dump_err(last + 1, "missing column header"))?;
    let header = header?;
    let cols: Vec<&str> = header.split(',').collect();
    let hard = match cols.len() {
        n if n == 1 + k => false,
        n if n == 3 + 2 * k => true,
        _ => return Err(dump_err(no, "column count does not match k")),
    };

    let mut values = Vec::with_capacity(horizon * k);
    let mut raw = Vec::new();
    let mut events = Vec::new();
    let mut lambda = Vec::new();
    let mut rows = 0;
    for (no, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(dump_err(no, "wrong number of fields"));
        }
        rows += 1;
        if parse_num::<usize>(no, "t", fields[0])? != rows {
            return Err(dump_err(no, "rounds out of order"));
        }
        for f in &fields[1..=k] {
            values.push(parse_num::<f64>(no, "loss", f)?);
        }
        if hard {
            for f in &fields[1 + k..1 + 2 * k] {
                raw.push(parse_num::<f64>(no, "raw", f)?);
            }
            events.push(match fields[1 + 2 * k] {
                "0" => false,
                "1" => true,
                other => return Err(dump_err(no, format!("bad event flag {other:?}"))),
            });
            lambda.push(match fields[2 + 2 * k] {
                "-" => None,
                x => Some(Action(parse_num(no, "lambda", x)?)),
            });
        }
    }
    if rows != horizon {
        return Err(Error::LengthMismatch {
            expected: horizon,
            got: rows,
        });
    }

    let table = ObliviousLossTable::new(horizon, k, values)?;
    let env = match semantics {
        LossSemantics::Composite(g) => RealizedEnvironment::composite(table, g),
        LossSemantics::Switching => RealizedEnvironment::switching(table),
    }
    .with_metadata(meta);
    Ok(EnvDump {
        env,
        unclipped: if hard { Some(RawLossTable::new(horizon, k, raw)?) } else { None },
        events: hard.then_some(events),
        lambda: hard.then_some(lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{build_max_adversary, build_min_adversary, HardnessParams};
    use crate::experiment::build_linear_env;
    use crate::SimRng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn params() -> HardnessParams {
        HardnessParams {
            epsilon: 0.02,
            sigma: 0.1,
            tau: 0.02,
            eta: 0.1,
        }
    }

    fn assert_same(a: &RealizedEnvironment, b: &RealizedEnvironment) {
        assert_eq!(a.table(), b.table());
        assert_eq!(a.metadata(), b.metadata());
        match (a.combiner(), b.combiner()) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                assert_eq!(x.kind(), y.kind());
                if let (Some(p), Some(q)) = (x.coeffs(), y.coeffs()) {
                    assert_eq!(p.len(), q.len());
                    for (u, v) in p.iter().zip(q) {
                        assert!((u - v).abs() < 1e-15);
                    }
                }
            }
            _ => panic!("semantics differ"),
        }
    }

    #[test]
    fn hard_instance_round_trip() {
        for max in [false, true] {
            let mut rng = SimRng::seed_from_u64(9);
            let env = if max {
                build_max_adversary(300, params(), &mut rng)
            } else {
                build_min_adversary(300, params(), &mut rng)
            }
            .unwrap()
            .with_seed(44);
            let text = env_to_string(&env).unwrap();
            let back = read_env(text.as_bytes()).unwrap();
            assert_same(&env, &back.env);
            let hard = env.hard_instance().unwrap();
            assert_eq!(back.unclipped.as_ref(), Some(&hard.unclipped));
            let events = back.events.unwrap();
            let lambda = back.lambda.unwrap();
            for t in 1..=300 {
                assert_eq!(events[t - 1], hard.events.is_set(t));
                assert_eq!(lambda[t - 1], hard.spikes.lambda(t));
            }
        }
    }

    #[test]
    fn rejects_malformed_dumps() {
        let env = build_linear_env(3, 2, &[0.5, 0.5], 0.1, &mut SimRng::seed_from_u64(0)).unwrap();
        let text = env_to_string(&env).unwrap();
        assert!(read_env("".as_bytes()).is_err());
        assert!(read_env(text.replacen("T=3", "T=4", 1).as_bytes()).is_err());
        assert!(read_env(text.replacen("k=2", "k=3", 1).as_bytes()).is_err());
        assert!(read_env(text.replacen("combiner=", "combiner=median", 1).as_bytes()).is_err());
        assert!(read_env(text.replacen("label=", "colour=", 1).as_bytes()).is_err());
        let truncated: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(read_env(truncated.as_bytes()).is_err());
    }

    #[test]
    fn switching_round_trip() {
        let table = ObliviousLossTable::new(3, 2, vec![0.0, 1.0, 0.25, 0.5, 1.0, 0.125]).unwrap();
        let env = RealizedEnvironment::switching(table);
        let back = read_env(env_to_string(&env).unwrap().as_bytes()).unwrap();
        assert_same(&env, &back.env);
        assert_eq!(back.env.loss_range(), 2.0);
        assert!(back.unclipped.is_none());
    }

    proptest! {
        #[test]
        fn linear_round_trip(
            seed in any::<u64>(),
            horizon in 1usize..60,
            k in 2usize..5,
            coeffs in prop::collection::vec(0.01f64..1.0, 1..5),
            eps in 0.0f64..0.5,
        ) {
            let env = build_linear_env(horizon, k, &coeffs, eps, &mut SimRng::seed_from_u64(seed))
                .unwrap()
                .with_seed(seed);
            let text = env_to_string(&env).unwrap();
            let back = read_env(text.as_bytes()).unwrap();
            assert_same(&env, &back.env);
            prop_assert_eq!(env_to_string(&back.env).unwrap().lines().count(), text.lines().count());
        }
    }
}
