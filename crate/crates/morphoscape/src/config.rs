//! Run configuration: scale defaults, a JSON file of overrides, then flags.
//!
//! The JSON file may set any subset of [`RunConfig`]'s fields; it is merged
//! key by key onto the defaults of the selected scale, so
//! `{"train": {"budget": 500}}` changes one value and keeps the rest.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use morphoscape_core::coopt::{CooptConfig, Mode};
use morphoscape_core::landscape::GridSpec;
use morphoscape_core::{default_environments, EnvironmentSet, Method, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

/// Resolution preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 5 design bins, 41 weight bins, 2e4 steps.
    Desk,
    /// 9 design bins, 121 weight bins, 1e5 steps.
    Paper,
}

impl Scale {
    #[allow(missing_docs)]
    pub fn parse(s: &str) -> Option<Scale> {
        match s {
            "desk" => Some(Scale::Desk),
            "paper" => Some(Scale::Paper),
            _ => None,
        }
    }
}

#[allow(missing_docs)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub design_bins: usize,
    pub weight_bins: usize,
}

#[allow(missing_docs)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub dt: f64,
    pub max_steps: usize,
    pub light_radius: f64,
    pub distance_floor: f64,
    /// Heading of every start pose, in radians.
    pub initial_heading: f64,
}

/// How `train` picks designs from the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Sample {
    /// Equal-size random draws from each `m_l` quartile.
    Stratified {
        #[allow(missing_docs)]
        per_quartile: usize,
    },
    /// Every swept design.
    All,
}

#[allow(missing_docs)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub budget: usize,
    pub sample: Sample,
    pub seeds: Vec<u64>,
    pub methods: Vec<String>,
}

#[allow(missing_docs)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CooptSettings {
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub population: usize,
    pub epsilon: f64,
    pub stagnation: usize,
    pub batch: usize,
    /// Evaluations per point of the DTW curve.
    pub dtw_bin_width: usize,
    /// Score free-design candidates by sensor DTW.
    pub record_dtw: bool,
}

/// Fully resolved configuration; a copy is written beside every output.
#[allow(missing_docs)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scale: Scale,
    pub study_seed: u64,
    /// Worker threads; 0 uses every available core. Never affects outputs.
    pub workers: usize,
    pub out: PathBuf,
    pub grid: GridSettings,
    pub sim: SimSettings,
    pub train: TrainSettings,
    pub coopt: CooptSettings,
}

impl RunConfig {
    /// Defaults for a scale.
    pub fn defaults(scale: Scale) -> Self {
        let (grid, sim, train_budget) = match scale {
            Scale::Desk => (GridSpec::desk(), SimConfig::desk(), 2000),
            Scale::Paper => (GridSpec::paper(), SimConfig::paper(), 10_000),
        };
        RunConfig {
            scale,
            study_seed: 20_210_601,
            workers: 0,
            out: PathBuf::from("out"),
            grid: GridSettings {
                design_bins: grid.design_bins,
                weight_bins: grid.weight_bins,
            },
            sim: SimSettings {
                dt: sim.dt,
                max_steps: sim.max_steps,
                light_radius: sim.light_radius,
                distance_floor: sim.distance_floor,
                initial_heading: 0.0,
            },
            train: TrainSettings {
                budget: train_budget,
                sample: match scale {
                    Scale::Desk => Sample::Stratified { per_quartile: 25 },
                    Scale::Paper => Sample::All,
                },
                seeds: (0..5).collect(),
                methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            },
            coopt: CooptSettings {
                budget: 3000,
                seeds: (0..30).collect(),
                population: 36,
                epsilon: 0.05,
                stagnation: 200,
                batch: 8,
                dtw_bin_width: 100,
                record_dtw: true,
            },
        }
    }

    /// Defaults of `scale` (or the file's `scale`, or desk) overlaid with
    /// the JSON text.
    pub fn from_json(text: &str, scale: Option<Scale>) -> Result<Self> {
        let overrides: Value =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("invalid JSON: {e}")))?;
        let Value::Object(map) = &overrides else {
            return Err(PipelineError::Config("top level must be an object".into()));
        };
        let file_scale = match map.get("scale") {
            None => None,
            Some(Value::String(s)) => Some(
                Scale::parse(s).ok_or_else(|| PipelineError::Config(format!("unknown scale `{s}`")))?,
            ),
            Some(_) => return Err(PipelineError::Config("`scale` must be a string".into())),
        };
        let scale = scale.or(file_scale).unwrap_or(Scale::Desk);
        let mut merged = serde_json::to_value(RunConfig::defaults(scale)).expect("defaults serialize");
        merge(&mut merged, overrides);
        merged["scale"] = serde_json::to_value(scale).expect("scale serializes");
        let cfg: RunConfig =
            serde_json::from_value(merged).map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Read and resolve a config file.
    pub fn load(path: &Path, scale: Option<Scale>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, scale)
    }

    /// Check every constraint the pipeline relies on.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.grid_spec()
            .validate()
            .or_else(|e| bad(format!("grid: {e}")))?;
        self.sim_config()
            .validate()
            .or_else(|e| bad(format!("sim: {e}")))?;
        if self.train.budget == 0 {
            return bad("train.budget must be positive".into());
        }
        if self.train.seeds.is_empty() {
            return bad("train.seeds must not be empty".into());
        }
        unique(&self.train.seeds, "train.seeds")?;
        unique(&self.coopt.seeds, "coopt.seeds")?;
        if !self.sim.initial_heading.is_finite() {
            return bad("sim.initial_heading must be finite".into());
        }
        self.methods()?;
        let mut seen = HashSet::new();
        for m in &self.train.methods {
            if !seen.insert(m) {
                return bad(format!("train.methods lists `{m}` twice"));
            }
        }
        if let Sample::Stratified { per_quartile: 0 } = self.train.sample {
            return bad("train.sample.per_quartile must be positive".into());
        }
        if self.coopt.seeds.is_empty() {
            return bad("coopt.seeds must not be empty".into());
        }
        if self.coopt.dtw_bin_width == 0 {
            return bad("coopt.dtw_bin_width must be positive".into());
        }
        for mode in Mode::ALL {
            self.coopt_config(mode)
                .validate()
                .or_else(|e| bad(format!("coopt: {e}")))?;
        }
        Ok(())
    }

    #[allow(missing_docs)]
    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            design_bins: self.grid.design_bins,
            weight_bins: self.grid.weight_bins,
            ..GridSpec::desk()
        }
    }

    #[allow(missing_docs)]
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            max_steps: self.sim.max_steps,
            light_radius: self.sim.light_radius,
            distance_floor: self.sim.distance_floor,
            ..SimConfig::desk()
        }
    }

    /// The four diagonal start poses, all at the configured heading.
    pub fn environments(&self) -> EnvironmentSet {
        let mut envs = default_environments();
        for p in &mut envs.start_poses {
            p.alpha = self.sim.initial_heading;
        }
        envs
    }

    /// Parsed training methods in configured order.
    pub fn methods(&self) -> Result<Vec<Method>> {
        self.train
            .methods
            .iter()
            .map(|m| m.parse::<Method>().map_err(|e| PipelineError::Config(e.to_string())))
            .collect()
    }

    #[allow(missing_docs)]
    pub fn coopt_config(&self, mode: Mode) -> CooptConfig {
        let c = &self.coopt;
        CooptConfig {
            population: c.population,
            epsilon: c.epsilon,
            stagnation: c.stagnation,
            batch: c.batch,
            sim: self.sim_config(),
            record_dtw: c.record_dtw && mode == Mode::FreeDesign,
            ..CooptConfig::new(mode, c.budget)
        }
    }

    /// SHA-256 over the settings that determine sweep output.
    pub fn sweep_fingerprint(&self) -> [u8; 32] {
        let relevant = serde_json::json!({
            "format": 1,
            "grid": self.grid,
            "sim": self.sim,
        });
        Sha256::digest(relevant.to_string().as_bytes()).into()
    }

    /// Worker count with 0 resolved to the available parallelism.
    pub fn effective_workers(&self) -> usize {
        match self.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        }
    }

    /// Write the resolved config as `config.resolved.json` in `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
        let path = dir.join("config.resolved.json");
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(PipelineError::io(path))
    }
}

fn unique(seeds: &[u64], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    match seeds.iter().find(|s| !seen.insert(**s)) {
        Some(s) => Err(PipelineError::Config(format!("{what} repeats seed {s}"))),
        None => Ok(()),
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    // Variant-shaped values replace wholesale so a new
                    // variant does not inherit keys of the default one.
                    Some(slot) if k != "sample" => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_desk_defaults() {
        let cfg = RunConfig::from_json("{}", None).unwrap();
        assert_eq!(cfg, RunConfig::defaults(Scale::Desk));
        cfg.validate().unwrap();
        assert_eq!(cfg.grid_spec().design_count(), 625);
    }

    #[test]
    fn flag_scale_beats_file_scale() {
        let cfg = RunConfig::from_json(r#"{"scale": "desk"}"#, Some(Scale::Paper)).unwrap();
        assert_eq!(cfg.scale, Scale::Paper);
        assert_eq!(cfg.grid.design_bins, 9);
        assert_eq!(cfg.sim.max_steps, 100_000);
        assert_eq!(cfg.train.budget, 10_000);
    }

    #[test]
    fn partial_overrides_merge() {
        let cfg = RunConfig::from_json(
            r#"{"train": {"budget": 50, "sample": "all"}, "grid": {"design_bins": 3}}"#,
            None,
        )
        .unwrap();
        assert_eq!(cfg.train.budget, 50);
        assert_eq!(cfg.train.sample, Sample::All);
        assert_eq!(cfg.train.seeds.len(), 5);
        assert_eq!(cfg.grid.design_bins, 3);
        assert_eq!(cfg.grid.weight_bins, 41);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::from_json(r#"{"gird": {}}"#, None), Err(PipelineError::Config(_))));
        assert!(matches!(RunConfig::from_json("[1]", None), Err(PipelineError::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"scale": "huge"}"#, None), Err(PipelineError::Config(_))));
        let cfg = RunConfig::from_json(r#"{"train": {"seeds": [1, 2, 1]}}"#, None).unwrap();
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        let cfg = RunConfig::from_json(r#"{"train": {"methods": ["cmaes"]}}"#, None).unwrap();
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        let cfg = RunConfig::from_json(r#"{"coopt": {"budget": 10}}"#, None).unwrap();
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn fingerprint_ignores_workers_and_budgets() {
        let a = RunConfig::defaults(Scale::Desk);
        let mut b = a.clone();
        b.workers = 7;
        b.train.budget = 1;
        assert_eq!(a.sweep_fingerprint(), b.sweep_fingerprint());
        b.sim.max_steps += 1;
        assert_ne!(a.sweep_fingerprint(), b.sweep_fingerprint());
    }

    #[test]
    fn heading_applies_to_every_start_pose() {
        let a = RunConfig::defaults(Scale::Desk);
        assert_eq!(a.environments(), default_environments());
        let b = RunConfig::from_json(r#"{"sim": {"initial_heading": 0.5}}"#, None).unwrap();
        assert!(b.environments().start_poses.iter().all(|p| p.alpha == 0.5));
        assert_ne!(a.sweep_fingerprint(), b.sweep_fingerprint());
        let c = RunConfig::from_json(r#"{"sim": {"initial_heading": 1e999}}"#, None);
        assert!(c.is_err() || c.unwrap().validate().is_err());
    }

    #[test]
    fn dtw_only_recorded_for_free_design() {
        let cfg = RunConfig::defaults(Scale::Desk);
        assert!(cfg.coopt_config(Mode::FreeDesign).record_dtw);
        assert!(!cfg.coopt_config(Mode::FixedBaseline).record_dtw);
    }
}
