//! Config-driven horizon sweeps, CSV output and log-log exponent fits.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{build_max_adversary, build_min_adversary, default_schedule, HardnessParams};
use crate::engine::{EnvMetadata, FeedbackModel, RealizedEnvironment};
use crate::error::{Error, Result};
use crate::montecarlo::{derive_seed, monte_carlo, RegretStats};
use crate::parent::{build_random_parent, depth, ParentFunction};
use crate::players::PlayerSpec;
use crate::process::{build_gap_process, build_walk, clip_to_table, sample_noise, switching_cost_env, tuned_sigma};
use crate::types::{Action, CombiningFunction, ObliviousLossTable};
use crate::SimRng;

/// Bit-exact CSV header of sweep results.
pub const CSV_HEADER: &str = "env,player,T,n_reps,mean_regret,std_regret,mean_switches,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// `"auto"` (the horizon-dependent default schedule) or explicit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Auto(AutoKeyword),
    Explicit(HardnessParams),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Auto(AutoKeyword::Auto)
    }
}

impl Schedule {
    pub fn resolve(&self, horizon: usize) -> Result<HardnessParams> {
        match self {
            Schedule::Auto(_) => default_schedule(horizon),
            Schedule::Explicit(p) => {
                p.validate()?;
                Ok(*p)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParentKind {
    #[default]
    Gcd,
    Random,
    Chain,
}

fn two() -> usize {
    2
}

fn default_gap() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    /// `l_t(x) = (1 - eps) U_t(x) + eps 1{x != best}` with `U` i.i.d. uniform,
    /// combined linearly with `coeffs`.
    Linear {
        coeffs: Vec<f64>,
        #[serde(default = "two")]
        k: usize,
        #[serde(default = "default_gap")]
        epsilon: f64,
    },
    MinAdversary {
        #[serde(default)]
        schedule: Schedule,
    },
    MaxAdversary {
        #[serde(default)]
        schedule: Schedule,
    },
    /// Clipped gap process plus a unit switching cost.
    /// Defaults: `eps = T^{-1/3} / ln T`, `delta = 1/T`, `sigma` tuned to depth and `delta`.
    SwitchingCost {
        #[serde(default)]
        parent: ParentKind,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        delta: Option<f64>,
    },
}

impl EnvSpec {
    /// Short name used in the CSV `env` column.
    pub fn label(&self) -> String {
        match self {
            EnvSpec::Linear { coeffs, .. } => format!("linear_m{}", coeffs.len().saturating_sub(1)),
            EnvSpec::MinAdversary { .. } => "min_adversary".into(),
            EnvSpec::MaxAdversary { .. } => "max_adversary".into(),
            EnvSpec::SwitchingCost { .. } => "switching_cost".into(),
        }
    }

    /// Checks everything that can fail before sampling.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        match self {
            EnvSpec::Linear { coeffs, k, epsilon } => {
                CombiningFunction::linear(coeffs)?;
                if *k < 2 {
                    return Err(Error::InvalidParameter(format!("need k >= 2, got {k}")));
                }
                if !(0.0..=1.0).contains(epsilon) {
                    return Err(Error::InvalidParameter(format!("gap must lie in [0, 1], got {epsilon}")));
                }
                Ok(())
            }
            EnvSpec::MinAdversary { schedule } | EnvSpec::MaxAdversary { schedule } => {
                schedule.resolve(horizon).map(|_| ())
            }
            EnvSpec::SwitchingCost { epsilon, sigma, delta, .. } => {
                for (name, v) in [("epsilon", epsilon), ("sigma", sigma)] {
                    if let Some(v) = v {
                        if v.is_nan() || *v <= 0.0 {
                            return Err(Error::InvalidParameter(format!("{name} must be positive")));
                        }
                    }
                }
                if let Some(d) = delta {
                    if !(*d > 0.0 && *d < 1.0) {
                        return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
                    }
                }
                if horizon < 2 {
                    return Err(Error::InvalidParameter("switching-cost horizon must be at least 2".into()));
                }
                Ok(())
            }
        }
    }

    /// Samples one environment of horizon `T` from `rng`.
    pub fn build(&self, horizon: usize, rng: &mut SimRng) -> Result<RealizedEnvironment> {
        match self {
            EnvSpec::Linear { coeffs, k, epsilon } => build_linear_env(horizon, *k, coeffs, *epsilon, rng),
            EnvSpec::MinAdversary { schedule } => build_min_adversary(horizon, schedule.resolve(horizon)?, rng),
            EnvSpec::MaxAdversary { schedule } => build_max_adversary(horizon, schedule.resolve(horizon)?, rng),
            EnvSpec::SwitchingCost {
                parent,
                epsilon,
                sigma,
                delta,
            } => {
                self.validate(horizon)?;
                let rho = match parent {
                    ParentKind::Gcd => ParentFunction::gcd(horizon),
                    ParentKind::Chain => ParentFunction::chain(horizon),
                    ParentKind::Random => build_random_parent(horizon, rng).parent,
                };
                let t = horizon as f64;
                let delta = delta.unwrap_or(1.0 / t);
                let sigma = match sigma {
                    Some(s) => *s,
                    None => tuned_sigma(depth(&rho), horizon, delta)?,
                };
                let epsilon = epsilon.unwrap_or(t.powf(-1.0 / 3.0) / t.ln());
                let noise = sample_noise(horizon, sigma, rng)?;
                let walk = build_walk(&rho, &noise)?;
                let chi = Action(rng.random::<bool>() as usize);
                let gap = build_gap_process(walk, chi, epsilon)?;
                let tables = clip_to_table(&gap, None)?;
                Ok(switching_cost_env(tables.clipped).with_metadata(EnvMetadata {
                    label: "switching_cost".into(),
                    seed: None,
                    sigma: Some(sigma),
                    epsilon: Some(epsilon),
                    tau: None,
                    eta: None,
                    chi: Some(chi),
                }))
            }
        }
    }
}

/// I.i.d. uniform losses shrunk by `1 - eps`, plus `eps` on every arm but a random best one.
pub fn build_linear_env(
    horizon: usize,
    k: usize,
    coeffs: &[f64],
    epsilon: f64,
    rng: &mut SimRng,
) -> Result<RealizedEnvironment> {
    let g = CombiningFunction::linear(coeffs)?;
    let best = rng.random_range(0..k);
    let mut values = Vec::with_capacity(horizon * k);
    for _ in 0..horizon {
        for x in 0..k {
            let u: f64 = rng.random();
            let penalty = if x == best { 0.0 } else { epsilon };
            values.push((1.0 - epsilon) * u + penalty);
        }
    }
    let table = ObliviousLossTable::new(horizon, k, values)?;
    Ok(RealizedEnvironment::composite(table, g).with_metadata(EnvMetadata {
        label: format!("linear_m{}", coeffs.len() - 1),
        epsilon: Some(epsilon),
        chi: Some(Action(best)),
        ..EnvMetadata::default()
    }))
}

fn default_horizons() -> Vec<usize> {
    (10..=16).map(|e| 1usize << e).collect()
}

fn default_reps() -> usize {
    100
}

fn default_feedback() -> FeedbackModel {
    FeedbackModel::CompositeBandit
}

fn default_output() -> String {
    "out/experiment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvSpec,
    pub player: String,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_feedback")]
    pub feedback: FeedbackModel,
    #[serde(default = "default_output")]
    pub output: String,
    /// Worker threads for replications; 0 means all cores.
    #[serde(default)]
    pub parallelism: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn player_spec(&self) -> Result<PlayerSpec> {
        self.player.parse()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::InvalidParameter("horizons must not be empty".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("horizons must be strictly increasing".into()));
        }
        if self.horizons[0] == 0 {
            return Err(Error::InvalidParameter("horizons must be positive".into()));
        }
        if self.n_reps == 0 {
            return Err(Error::InvalidParameter("n_reps must be at least 1".into()));
        }
        self.player_spec()?;
        for &t in &self.horizons {
            self.environment.validate(t)?;
        }
        Ok(())
    }
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub env: String,
    pub player: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub n_reps: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub mean_switches: f64,
    pub seed: u64,
}

/// Least-squares fit of `ln R = slope * ln T + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// residual sum of squares in log space
    pub residual: f64,
    /// `(ln T, ln R)` pairs used
    pub points: Vec<(f64, f64)>,
    /// horizons dropped for nonpositive mean regret
    pub dropped: Vec<f64>,
}

/// Ordinary least squares on `(ln T, ln regret)`; nonpositive regrets are dropped.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let mut dropped = Vec::new();
    let mut logs = Vec::new();
    for &(t, r) in points {
        if r > 0.0 && t > 0.0 {
            logs.push((t.ln(), r.ln()));
        } else {
            dropped.push(t);
        }
    }
    if logs.len() < 3 {
        return Err(Error::InsufficientPoints { usable: logs.len() });
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all horizons are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(ScalingFit {
        slope,
        intercept,
        residual,
        points: logs,
        dropped,
    })
}

#[derive(Debug, Clone)]
pub struct HorizonResult {
    pub horizon: usize,
    pub stats: RegretStats,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub env: String,
    pub player: String,
    pub master_seed: u64,
    pub results: Vec<HorizonResult>,
}

impl ExperimentReport {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.results
            .iter()
            .map(|r| SweepRow {
                env: self.env.clone(),
                player: self.player.clone(),
                horizon: r.horizon,
                n_reps: r.stats.n_reps,
                mean_regret: r.stats.mean_regret,
                std_regret: r.stats.std_regret,
                mean_switches: r.stats.mean_switches,
                seed: self.master_seed,
            })
            .collect()
    }

    /// `None` with fewer than three usable horizons.
    pub fn fit(&self) -> Result<ScalingFit> {
        let pts: Vec<(f64, f64)> = self
            .results
            .iter()
            .map(|r| (r.horizon as f64, r.stats.mean_regret))
            .collect();
        fit_exponent(&pts)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        write_rows(&self.rows())
    }

    /// Per-replication data for plotting: `T,rep,regret,switches`.
    pub fn to_curve_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["T", "rep", "regret", "switches"])?;
        for r in &self.results {
            for (i, o) in r.stats.outcomes.iter().enumerate() {
                w.write_record([
                    r.horizon.to_string(),
                    i.to_string(),
                    o.regret.to_string(),
                    o.switches.to_string(),
                ])?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct HorizonSummary<'a> {
            #[serde(rename = "T")]
            horizon: usize,
            n_reps: usize,
            mean_regret: f64,
            std_regret: f64,
            stderr_regret: f64,
            q05_regret: f64,
            median_regret: f64,
            q95_regret: f64,
            mean_switches: f64,
            std_switches: f64,
            #[serde(skip)]
            _p: std::marker::PhantomData<&'a ()>,
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            env: &'a str,
            player: &'a str,
            master_seed: u64,
            horizons: Vec<HorizonSummary<'a>>,
            fit: Option<ScalingFit>,
            fit_error: Option<String>,
        }
        let (fit, fit_error) = match self.fit() {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let summary = Summary {
            env: &self.env,
            player: &self.player,
            master_seed: self.master_seed,
            horizons: self
                .results
                .iter()
                .map(|r| HorizonSummary {
                    horizon: r.horizon,
                    n_reps: r.stats.n_reps,
                    mean_regret: r.stats.mean_regret,
                    std_regret: r.stats.std_regret,
                    stderr_regret: r.stats.stderr_regret(),
                    q05_regret: r.stats.q05_regret,
                    median_regret: r.stats.median_regret,
                    q95_regret: r.stats.q95_regret,
                    mean_switches: r.stats.mean_switches,
                    std_switches: r.stats.std_switches,
                    _p: std::marker::PhantomData,
                })
                .collect(),
            fit,
            fit_error,
        };
        Ok(serde_json::to_string_pretty(&summary)?)
    }
}

pub fn write_rows(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        let mut out = CSV_HEADER.as_bytes().to_vec();
        out.push(b'\n');
        return Ok(out);
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if headers != CSV_HEADER {
        return Err(Error::InvalidParameter(format!("unexpected CSV header {headers:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Fits each `(env, player)` group of a sweep CSV, in first-appearance order.
pub fn fit_rows(rows: &[SweepRow]) -> Vec<((String, String), Result<ScalingFit>)> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows {
        let key = (row.env.clone(), row.player.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups
            .entry(key)
            .or_default()
            .push((row.horizon as f64, row.mean_regret));
    }
    order
        .into_iter()
        .map(|key| {
            let fit = fit_exponent(&groups[&key]);
            (key, fit)
        })
        .collect()
}

/// Master seed for the sweep point at horizon `T`.
pub fn horizon_seed(master_seed: u64, horizon: usize) -> u64 {
    derive_seed(master_seed, horizon as u64)
}

/// Runs the sweep in memory.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let spec = config.player_spec()?;
    let mut results = Vec::with_capacity(config.horizons.len());
    for &horizon in &config.horizons {
        let env_spec = &config.environment;
        let stats = monte_carlo(
            |rng: &mut SimRng| env_spec.build(horizon, rng),
            |env: &RealizedEnvironment| spec.build(env),
            config.feedback,
            config.n_reps,
            horizon_seed(config.master_seed, horizon),
            config.parallelism,
        )?;
        results.push(HorizonResult { horizon, stats });
    }
    Ok(ExperimentReport {
        env: config.environment.label(),
        player: spec.to_string(),
        master_seed: config.master_seed,
        results,
    })
}

/// Output file paths for a prefix: sweep CSV, per-replication CSV, summary.
pub fn output_paths(prefix: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        PathBuf::from(format!("{prefix}.csv")),
        PathBuf::from(format!("{prefix}.reps.csv")),
        PathBuf::from(format!("{prefix}.summary.json")),
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Runs the sweep and writes `<output>.csv`, `<output>.reps.csv` and `<output>.summary.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = execute(config)?;
    let (csv_path, reps_path, summary_path) = output_paths(&config.output);
    write_file(&csv_path, &report.to_csv()?)?;
    write_file(&reps_path, &report.to_curve_csv()?)?;
    write_file(&summary_path, report.summary_json()?.as_bytes())?;
    Ok(report)
}
