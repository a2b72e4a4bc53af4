//! Project configuration (TOML). Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rulescene_core::compiler::CompileOptions;
use rulescene_core::eval::EvalConfig;
use rulescene_core::llm::RemoteConfig;
use rulescene_core::mcq::{GenerationConfig, QUALITY_THRESHOLD};
use rulescene_core::rule_crafter::{MAX_COMBO_SIZE, MIN_COMBO_SIZE};
use rulescene_core::{Jurisdiction, Variant};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub jurisdiction: Jurisdiction,
    pub rules: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_sizes")]
    pub combo_sizes: Vec<usize>,
    /// Map files replacing the bundled map of the same name.
    #[serde(default)]
    pub maps: Vec<PathBuf>,
    /// Directory of scene documents (`*.yaml`).
    #[serde(default)]
    pub scenes: Option<PathBuf>,
    /// Scene stem -> rule ids, checked by align before compiling.
    #[serde(default)]
    pub scene_rules: Option<PathBuf>,
    #[serde(default)]
    pub rulebooks: Vec<PathBuf>,
    #[serde(default)]
    pub frames_dir: Option<PathBuf>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub concurrency: Option<usize>,
    #[serde(default)]
    pub compile: CompileSection,
    #[serde(default)]
    pub eval: EvalSection,
    pub endpoints: Endpoints,
}

fn default_sizes() -> Vec<usize> {
    vec![2, 3]
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub generation: u64,
    pub split: u64,
    pub compile: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub quality: f64,
    pub resample_rounds: u32,
    pub generation_attempts: u32,
    pub transport_attempts: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { quality: QUALITY_THRESHOLD, resample_rounds: 50, generation_attempts: 3, transport_attempts: 3 }
    }
}

/// Geometry knobs; seed and resample rounds come from `seeds` / `thresholds`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompileSection {
    pub dt: f64,
    pub horizon: f64,
    pub front_gap: f64,
    pub lateral_gap: f64,
    pub jitter: f64,
    pub clearance: f64,
    pub shoulder: f64,
    pub lane_change_length: f64,
}

impl Default for CompileSection {
    fn default() -> Self {
        let d = CompileOptions::default();
        CompileSection {
            dt: d.dt,
            horizon: d.horizon,
            front_gap: d.front_gap,
            lateral_gap: d.lateral_gap,
            jitter: d.jitter,
            clearance: d.clearance,
            shoulder: d.shoulder,
            lane_change_length: d.lane_change_length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    /// The held-out split.
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub variant: Variant,
    pub cot: bool,
    pub rag: bool,
    pub repeats: u32,
    pub subset: Subset,
    /// Question file; defaults to the generated one in `output_dir`.
    pub questions: Option<PathBuf>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { variant: Variant::Text, cot: false, rag: false, repeats: 3, subset: Subset::Test, questions: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoints {
    /// Coexistence oracle; the offline tag oracle when absent.
    #[serde(default)]
    pub coexistence: Option<EndpointConfig>,
    pub generator: EndpointConfig,
    pub judges: Vec<EndpointConfig>,
    pub scorers: Vec<EndpointConfig>,
    /// Model under evaluation.
    pub model: EndpointConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EndpointConfig {
    /// Deterministic offline stand-in for the role it is configured in.
    Stub {
        /// Judges only: reject when hash % modulus == 0 (0 approves all).
        #[serde(default)]
        reject_modulus: u64,
    },
    /// Evaluation only: answers with the gold option.
    AnswerKey,
    /// Evaluation only: always gives the same answer.
    Constant { answer: String },
    Replay {
        path: PathBuf,
        #[serde(default)]
        images: bool,
    },
    Remote(RemoteConfig),
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ProjectConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.rules);
        fix(&mut self.output_dir);
        self.maps.iter_mut().for_each(fix);
        self.rulebooks.iter_mut().for_each(fix);
        for p in [&mut self.scenes, &mut self.scene_rules, &mut self.frames_dir, &mut self.eval.questions].into_iter().flatten() {
            fix(p);
        }
        let endpoints = &mut self.endpoints;
        let all = endpoints
            .coexistence
            .iter_mut()
            .chain([&mut endpoints.generator, &mut endpoints.model])
            .chain(endpoints.judges.iter_mut())
            .chain(endpoints.scorers.iter_mut());
        for e in all {
            if let EndpointConfig::Replay { path, .. } = e {
                fix(path);
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let mut paths: Vec<&Path> = vec![&self.rules];
        paths.extend(self.maps.iter().map(PathBuf::as_path));
        paths.extend(self.rulebooks.iter().map(PathBuf::as_path));
        paths.extend([&self.scenes, &self.scene_rules, &self.frames_dir, &self.eval.questions].into_iter().flatten().map(PathBuf::as_path));
        for p in paths {
            ensure!(p.exists(), "referenced path does not exist: {}", p.display());
        }
        ensure!(!self.combo_sizes.is_empty(), "combo_sizes is empty");
        for &k in &self.combo_sizes {
            ensure!(
                (MIN_COMBO_SIZE..=MAX_COMBO_SIZE).contains(&k),
                "combo size {k} outside {MIN_COMBO_SIZE}..={MAX_COMBO_SIZE}"
            );
        }
        let t = &self.thresholds;
        ensure!((0.0..=1.0).contains(&t.quality), "thresholds.quality must lie in [0, 1]");
        ensure!((1..=1000).contains(&t.resample_rounds), "thresholds.resample_rounds must lie in 1..=1000");
        ensure!((1..=10).contains(&t.generation_attempts), "thresholds.generation_attempts must lie in 1..=10");
        ensure!((1..=10).contains(&t.transport_attempts), "thresholds.transport_attempts must lie in 1..=10");
        ensure!((1..=3).contains(&self.eval.repeats), "eval.repeats must lie in 1..=3");
        ensure!(self.concurrency != Some(0), "concurrency must be positive");
        let c = &self.compile;
        for (name, v) in [("dt", c.dt), ("horizon", c.horizon), ("front_gap", c.front_gap), ("lateral_gap", c.lateral_gap)] {
            ensure!(v.is_finite() && v > 0.0, "compile.{name} must be positive");
        }
        ensure!(c.dt <= c.horizon, "compile.dt exceeds compile.horizon");
        let e = &self.endpoints;
        if e.judges.len() != 3 || e.scorers.len() != 3 {
            bail!("exactly three judges and three scorers are required");
        }
        for (role, cfg) in [("generator", &e.generator)].into_iter().chain(e.judges.iter().map(|j| ("judge", j))).chain(e.scorers.iter().map(|s| ("scorer", s))) {
            if matches!(cfg, EndpointConfig::AnswerKey | EndpointConfig::Constant { .. }) {
                bail!("{role}: answer_key and constant endpoints are for evaluation only");
            }
        }
        if let Some(c) = &e.coexistence {
            ensure!(
                !matches!(c, EndpointConfig::Stub { .. } | EndpointConfig::AnswerKey | EndpointConfig::Constant { .. }),
                "coexistence: use a replay or remote endpoint, or omit it for the tag oracle"
            );
        }
        Ok(())
    }

    pub fn concurrency(&self) -> usize {
        self.concurrency.unwrap_or(4)
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            attempts: self.thresholds.generation_attempts,
            transport_attempts: self.thresholds.transport_attempts,
            seed: self.seeds.generation,
            concurrency: self.concurrency(),
            quality_threshold: self.thresholds.quality,
        }
    }

    pub fn compile_options(&self) -> CompileOptions {
        let c = &self.compile;
        CompileOptions {
            dt: c.dt,
            horizon: c.horizon,
            seed: self.seeds.compile,
            front_gap: c.front_gap,
            lateral_gap: c.lateral_gap,
            max_rounds: self.thresholds.resample_rounds,
            jitter: c.jitter,
            clearance: c.clearance,
            shoulder: c.shoulder,
            lane_change_length: c.lane_change_length,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            repeats: self.eval.repeats,
            concurrency: self.concurrency(),
            transport_attempts: self.thresholds.transport_attempts,
        }
    }

    pub fn hierarchy_path(&self) -> PathBuf {
        self.output_dir.join("hierarchy.json")
    }

    pub fn questions_path(&self) -> PathBuf {
        self.eval.questions.clone().unwrap_or_else(|| self.output_dir.join("questions.jsonl"))
    }
}
