//! `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ontolab_core::engine::UpdateRule;
use ontolab_core::model::{parse_real, ModelSpec, SamplerKind, Variant, INV_SQRT_3};

use crate::CliError;

pub const SEED_ENV: &str = "ONTOLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    BornSweep,
    DeltaOpt,
    Contextuality,
    Repeatability,
    Sequential,
    MarbleCheck,
}

const MODEL_KEYS: &[&str] = &["variant", "d", "D", "delta", "sampler"];
const RUN_KEYS: &[&str] = &["experiment", "n_samples", "seed", "workers", "output"];
const GRID_KEYS: &[&str] = &["theta_start", "theta_stop", "theta_count"];

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::BornSweep,
        Experiment::DeltaOpt,
        Experiment::Contextuality,
        Experiment::Repeatability,
        Experiment::Sequential,
        Experiment::MarbleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::BornSweep => "born-sweep",
            Experiment::DeltaOpt => "delta-opt",
            Experiment::Contextuality => "contextuality",
            Experiment::Repeatability => "repeatability",
            Experiment::Sequential => "sequential",
            Experiment::MarbleCheck => "marble-check",
        }
    }

    /// Keys accepted by this experiment, besides the run keys.
    fn own_keys(self) -> Vec<&'static str> {
        let extra: &[&str] = match self {
            Experiment::BornSweep => &[],
            Experiment::DeltaOpt => &["delta_grid"],
            Experiment::Contextuality => &["law", "n_contexts"],
            Experiment::Repeatability => &["update"],
            Experiment::Sequential => &["theta", "chain", "chain_angle", "update"],
            Experiment::MarbleCheck => &["alphas"],
        };
        let mut keys = Vec::new();
        if self != Experiment::MarbleCheck {
            keys.extend_from_slice(MODEL_KEYS);
        }
        if matches!(self, Experiment::BornSweep | Experiment::DeltaOpt | Experiment::Repeatability) {
            keys.extend_from_slice(GRID_KEYS);
        }
        keys.extend_from_slice(extra);
        keys
    }

    fn accepts(self, key: &str) -> bool {
        RUN_KEYS.contains(&key) || self.own_keys().contains(&key)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or(())
    }
}

/// Evenly spaced grid including both endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl ThetaGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 }).collect()
    }
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self { start: 0.0, stop: FRAC_PI_2, count: 19 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    Haar,
    State,
}

/// A measurement in a chain: `A` is the computational context, `B` the
/// computational context rotated by `chain_angle` in the `|0⟩,|1⟩` plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainStep {
    A,
    B,
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    pub sampler: SamplerKind,
    pub n_samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub output: PathBuf,
    pub theta_grid: ThetaGrid,
    pub delta_grid: Vec<f64>,
    pub law: Law,
    pub n_contexts: usize,
    pub update: UpdateRule,
    pub theta: f64,
    pub chain: Vec<ChainStep>,
    pub chain_angle: f64,
    pub alphas: Vec<f64>,
}

/// Parses config text into `(key, value)` entries. Later duplicates are
/// rejected.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::config("line", format!("line {} is not `key = value`", lineno + 1)));
        };
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::config(&key, "given more than once"));
        }
    }
    Ok(map)
}

fn default_delta_grid(variant: Variant) -> Vec<f64> {
    match variant {
        Variant::LinearTrace => vec![0.4, 0.5, INV_SQRT_3, 0.6, 2.0 / 3.0],
        _ => vec![0.3, 0.4, 0.5, 0.6, 0.7],
    }
}

fn real(entries: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, CliError> {
    entries
        .get(key)
        .map(|v| parse_real(v).filter(|x| x.is_finite()).ok_or_else(|| CliError::bad_value(key, v)))
        .transpose()
}

fn integer<T: FromStr>(entries: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    entries.get(key).map(|v| v.parse::<T>().map_err(|_| CliError::bad_value(key, v))).transpose()
}

fn real_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    let xs = v
        .split(',')
        .map(|s| parse_real(s).filter(|x| x.is_finite()).ok_or_else(|| CliError::bad_value(key, v)))
        .collect::<Result<Vec<_>, _>>()?;
    if xs.is_empty() {
        return Err(CliError::config(key, "empty list"));
    }
    Ok(xs)
}

impl ExperimentConfig {
    /// Resolves a run from config-file entries, command-line overrides
    /// (which win) and the `ONTOLAB_SEED` value as last seed source.
    pub fn resolve(
        experiment: Experiment,
        file: BTreeMap<String, String>,
        overrides: &[(&str, String)],
        env_seed: Option<&str>,
    ) -> Result<Self, CliError> {
        let mut entries = file;
        for (k, v) in overrides {
            entries.insert((*k).to_string(), v.clone());
        }
        for key in entries.keys() {
            if !experiment.accepts(key) {
                return Err(CliError::config(key, format!("not a {experiment} setting")));
            }
        }
        if let Some(e) = entries.get("experiment") {
            if e != experiment.name() {
                return Err(CliError::config("experiment", format!("config is for `{e}`, not `{experiment}`")));
            }
        }

        let model = if experiment == Experiment::MarbleCheck {
            ModelSpec::marble_world()
        } else {
            let mut pairs: Vec<(&str, &str)> = vec![("variant", "ks-qubit")];
            for k in ["variant", "d", "D", "delta"] {
                if let Some(v) = entries.get(k) {
                    pairs.push((k, v));
                }
            }
            // a later `variant` pair overrides the default one
            ModelSpec::from_pairs(pairs).map_err(|e| match e.key() {
                Some(k) => CliError::config(k, e.to_string()),
                None => CliError::config("delta", e.to_string()),
            })?
        };
        let sampler = match entries.get("sampler") {
            Some(v) => v.parse().map_err(|_| CliError::bad_value("sampler", v))?,
            None => SamplerKind::default(),
        };

        let n_samples: u64 =
            integer(&entries, "n_samples")?.ok_or_else(|| CliError::config("n_samples", "missing required key"))?;
        if n_samples == 0 {
            return Err(CliError::config("n_samples", "must be at least 1"));
        }
        let seed = match integer::<u64>(&entries, "seed")? {
            Some(s) => s,
            None => match env_seed {
                Some(v) => v.trim().parse().map_err(|_| CliError::bad_value(SEED_ENV, v))?,
                None => 0,
            },
        };
        let workers = match integer::<usize>(&entries, "workers")? {
            Some(0) => return Err(CliError::config("workers", "must be at least 1")),
            Some(w) => w,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let output =
            entries.get("output").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(format!("{experiment}.csv")));

        let defaults = ThetaGrid::default();
        let theta_grid = ThetaGrid {
            start: real(&entries, "theta_start")?.unwrap_or(defaults.start),
            stop: real(&entries, "theta_stop")?.unwrap_or(defaults.stop),
            count: integer(&entries, "theta_count")?.unwrap_or(defaults.count),
        };
        if theta_grid.count == 0 {
            return Err(CliError::config("theta_count", "must be at least 1"));
        }

        let delta_grid = match entries.get("delta_grid") {
            Some(v) => real_list("delta_grid", v)?,
            None => default_delta_grid(model.variant()),
        };
        if experiment == Experiment::DeltaOpt {
            for &d in &delta_grid {
                model.with_delta(d).map_err(|e| CliError::config("delta_grid", e.to_string()))?;
            }
        }

        let law = match entries.get("law").map(String::as_str) {
            None | Some("haar") => Law::Haar,
            Some("state") => Law::State,
            Some(v) => return Err(CliError::bad_value("law", v)),
        };
        let n_contexts = integer(&entries, "n_contexts")?.unwrap_or(1000);
        if n_contexts == 0 {
            return Err(CliError::config("n_contexts", "must be at least 1"));
        }
        let update = match entries.get("update") {
            Some(v) => v.parse().map_err(|_| CliError::bad_value("update", v))?,
            None => UpdateRule::default(),
        };
        let theta = real(&entries, "theta")?.unwrap_or(PI / 6.0);
        let chain = match entries.get("chain") {
            Some(v) => v
                .split(',')
                .map(|s| match s.trim() {
                    "A" => Ok(ChainStep::A),
                    "B" => Ok(ChainStep::B),
                    _ => Err(CliError::bad_value("chain", v)),
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![ChainStep::A, ChainStep::B, ChainStep::A],
        };
        if chain.len() > 8 {
            return Err(CliError::config("chain", "at most 8 measurements"));
        }
        let chain_angle = real(&entries, "chain_angle")?.unwrap_or(PI / 8.0);
        let alphas = match entries.get("alphas") {
            Some(v) => real_list("alphas", v)?,
            None => vec![0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0],
        };

        Ok(Self {
            experiment,
            model,
            sampler,
            n_samples,
            seed,
            workers,
            output,
            theta_grid,
            delta_grid,
            law,
            n_contexts,
            update,
            theta,
            chain,
            chain_angle,
            alphas,
        })
    }

    /// Resolved settings as config lines; feeding them back through
    /// [`parse_config`] reproduces the run.
    pub fn to_entries(&self) -> Vec<(&'static str, String)> {
        let list = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut out = vec![("experiment", self.experiment.name().to_string())];
        let e = self.experiment;
        if e != Experiment::MarbleCheck {
            out.push(("variant", self.model.variant().name().to_string()));
            out.push(("d", self.model.system_dim().to_string()));
            out.push(("D", self.model.ontic_dim().to_string()));
            out.push(("delta", format!("{:?}", self.model.delta())));
            out.push(("sampler", self.sampler.name().to_string()));
        }
        out.push(("n_samples", self.n_samples.to_string()));
        out.push(("seed", self.seed.to_string()));
        out.push(("workers", self.workers.to_string()));
        out.push(("output", self.output.display().to_string()));
        if e.own_keys().contains(&"theta_start") {
            out.push(("theta_start", format!("{:?}", self.theta_grid.start)));
            out.push(("theta_stop", format!("{:?}", self.theta_grid.stop)));
            out.push(("theta_count", self.theta_grid.count.to_string()));
        }
        match e {
            Experiment::BornSweep => {}
            Experiment::DeltaOpt => out.push(("delta_grid", list(&self.delta_grid))),
            Experiment::Contextuality => {
                out.push(("law", if self.law == Law::Haar { "haar" } else { "state" }.to_string()));
                out.push(("n_contexts", self.n_contexts.to_string()));
            }
            Experiment::Repeatability => out.push(("update", self.update.name().to_string())),
            Experiment::Sequential => {
                out.push(("theta", format!("{:?}", self.theta)));
                let chain: Vec<&str> = self.chain.iter().map(|s| if *s == ChainStep::A { "A" } else { "B" }).collect();
                out.push(("chain", chain.join(",")));
                out.push(("chain_angle", format!("{:?}", self.chain_angle)));
                out.push(("update", self.update.name().to_string()));
            }
            Experiment::MarbleCheck => out.push(("alphas", list(&self.alphas))),
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(e: Experiment, text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::resolve(e, parse_config(text)?, &[], None)
    }

    #[test]
    fn comments_and_blank_lines() {
        let m = parse_config("# header\n\nn_samples = 10 # trailing\nvariant=ks-qubit\n").unwrap();
        assert_eq!(m["n_samples"], "10");
        assert_eq!(m["variant"], "ks-qubit");
        assert!(parse_config("n_samples 10").is_err());
        assert_eq!(parse_config("seed = 1\nseed = 2").unwrap_err().key(), Some("seed"));
    }

    #[test]
    fn defaults_for_born_sweep() {
        let c = resolve(Experiment::BornSweep, "n_samples = 100").unwrap();
        assert_eq!(c.model, ModelSpec::ks_qubit());
        assert_eq!(c.seed, 0);
        assert_eq!(c.theta_grid.points().len(), 19);
        assert_eq!(c.theta_grid.points()[18], FRAC_PI_2);
        assert_eq!(c.output, PathBuf::from("born-sweep.csv"));
    }

    #[test]
    fn errors_name_the_key() {
        let key = |e: Experiment, t: &str| resolve(e, t).unwrap_err().key().map(str::to_string);
        assert_eq!(key(Experiment::BornSweep, "seed = 3").as_deref(), Some("n_samples"));
        assert_eq!(key(Experiment::BornSweep, "n_samples = 5\ncolour = red").as_deref(), Some("colour"));
        assert_eq!(key(Experiment::BornSweep, "n_samples = 5\nlaw = haar").as_deref(), Some("law"));
        assert_eq!(key(Experiment::BornSweep, "n_samples = x").as_deref(), Some("n_samples"));
        assert_eq!(key(Experiment::BornSweep, "n_samples = 5\nvariant = spin").as_deref(), Some("variant"));
        assert_eq!(key(Experiment::MarbleCheck, "n_samples = 5\ndelta = 0.5").as_deref(), Some("delta"));
        assert_eq!(key(Experiment::DeltaOpt, "n_samples = 5\ndelta_grid = 0.3,1.5").as_deref(), Some("delta_grid"));
        assert_eq!(key(Experiment::Sequential, "n_samples = 5\nchain = A,C").as_deref(), Some("chain"));
        assert_eq!(key(Experiment::BornSweep, "n_samples = 5\nexperiment = sequential").as_deref(), Some("experiment"));
    }

    #[test]
    fn seed_precedence() {
        let file = parse_config("n_samples = 5\nseed = 7").unwrap();
        let flag = [("seed", "9".to_string())];
        let c = ExperimentConfig::resolve(Experiment::BornSweep, file.clone(), &flag, Some("11")).unwrap();
        assert_eq!(c.seed, 9);
        let c = ExperimentConfig::resolve(Experiment::BornSweep, file, &[], Some("11")).unwrap();
        assert_eq!(c.seed, 7);
        let bare = parse_config("n_samples = 5").unwrap();
        let c = ExperimentConfig::resolve(Experiment::BornSweep, bare.clone(), &[], Some("11")).unwrap();
        assert_eq!(c.seed, 11);
        let err = ExperimentConfig::resolve(Experiment::BornSweep, bare, &[], Some("x")).unwrap_err();
        assert_eq!(err.key(), Some(SEED_ENV));
    }

    #[test]
    fn model_keys_and_pi_values() {
        let c = resolve(
            Experiment::BornSweep,
            "n_samples = 5\nvariant = linear-trace\nd = 3\ndelta = 1/sqrt(3)\ntheta_stop = pi/4",
        )
        .unwrap();
        assert_eq!(c.model, ModelSpec::linear_trace(3, INV_SQRT_3).unwrap());
        assert_eq!(c.theta_grid.stop, PI / 4.0);
        let c = resolve(Experiment::BornSweep, "n_samples = 5\nvariant = uniform-embedded").unwrap();
        assert_eq!(c.model.ontic_dim(), c.model.system_dim() + 1);
    }

    #[test]
    fn entries_round_trip() {
        for e in Experiment::ALL {
            let c = resolve(e, "n_samples = 42\nseed = 5\nworkers = 2").unwrap();
            let text: String = c.to_entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            assert_eq!(resolve(e, &text).unwrap(), c, "{e}");
        }
    }
}
