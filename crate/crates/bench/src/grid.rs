//! Full-factorial ablation grids and their execution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};

use mechsynth_agent::backend::{
    derive_seed, AgentBackend, BackendError, GenerationParams, HttpChatBackend, HttpConfig, ScriptedBackend,
    ScriptedResponse,
};
use mechsynth_agent::orchestrator::{run_task, LoopConfig, RunRecord};
use mechsynth_agent::{MemoryRepo, OracleBackend};
use mechsynth_core::curves::{generate_dataset, CurveFamily, DatasetConfig, TaskInstance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{aggregate, labels, ConditionKey, ConditionStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    /// Closed-form designer that reads the target equation from the prompt.
    Oracle {
        #[serde(default = "default_angle_step")]
        angle_step: f64,
        #[serde(default)]
        jitter: f64,
    },
    /// Always answers with the same text.
    Prose { text: String },
    /// Plays back a JSONL transcript; `cycle` restarts it when exhausted.
    Scripted {
        transcript: PathBuf,
        #[serde(default)]
        cycle: bool,
    },
    /// Chat-completion endpoint, with at most `max_in_flight` concurrent calls.
    Http {
        #[serde(default)]
        http: HttpConfig,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

fn default_angle_step() -> f64 {
    0.05
}

fn default_in_flight() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: BackendKind,
}

impl BackendSpec {
    pub fn oracle(name: &str, jitter: f64) -> Self {
        Self { name: name.into(), kind: BackendKind::Oracle { angle_step: default_angle_step(), jitter } }
    }

    pub fn prose(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: BackendKind::Prose { text: "A four-bar linkage with a long coupler should work well here.".into() },
        }
    }
}

/// Names usable without a config file.
pub fn builtin_backends() -> Vec<BackendSpec> {
    vec![BackendSpec::oracle("oracle", 0.0), BackendSpec::oracle("oracle-jitter", 0.2), BackendSpec::prose("prose")]
}

#[derive(Debug, Error)]
pub enum AblationError {
    #[error("config: {0}")]
    Config(String),
    #[error("backend {name}: {source}")]
    Backend { name: String, source: BackendError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl AblationError {
    pub fn is_config(&self) -> bool {
        matches!(self, AblationError::Config(_) | AblationError::Backend { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationGrid {
    pub backends: Vec<BackendSpec>,
    pub shapes: Vec<CurveFamily>,
    pub num_examples_levels: Vec<usize>,
    pub mem_levels: Vec<usize>,
    pub feedback_levels: Vec<bool>,
    pub sfb_levels: Vec<bool>,
    pub instances_per_shape: usize,
    pub n_points: usize,
    pub seed: u64,
    /// Everything else about the loop; the four ablated fields are overwritten per condition.
    #[serde(rename = "loop")]
    pub loop_config: LoopConfig,
}

impl Default for AblationGrid {
    fn default() -> Self {
        Self {
            backends: vec![BackendSpec::oracle("oracle", 0.2)],
            shapes: CurveFamily::ALL.to_vec(),
            num_examples_levels: vec![2, 3],
            mem_levels: vec![0, 2],
            feedback_levels: vec![false, true],
            sfb_levels: vec![false, true],
            instances_per_shape: 5,
            n_points: 4,
            seed: 0,
            loop_config: LoopConfig::default(),
        }
    }
}

impl AblationGrid {
    pub fn from_toml(text: &str) -> Result<Self, AblationError> {
        toml::from_str(text).map_err(|e| AblationError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AblationError> {
        let text = std::fs::read_to_string(path).map_err(|source| AblationError::Io { path: path.into(), source })?;
        Self::from_toml(&text).map_err(|e| AblationError::Config(format!("{}: {e}", path.display())))
    }

    pub fn dataset_config(&self) -> DatasetConfig {
        DatasetConfig {
            families: self.shapes.clone(),
            instances_per_family: self.instances_per_shape,
            n_points: self.n_points,
            ..DatasetConfig::default()
        }
    }

    pub fn dataset(&self) -> Vec<TaskInstance<f64>> {
        generate_dataset(self.seed, &self.dataset_config())
    }

    /// Every combination of levels, backend-major.
    pub fn conditions(&self) -> Vec<ConditionKey> {
        let mut out = Vec::new();
        for b in &self.backends {
            for &shape in &self.shapes {
                for &num_examples in &self.num_examples_levels {
                    for &feedback in &self.feedback_levels {
                        for &sfb in &self.sfb_levels {
                            for &mem in &self.mem_levels {
                                out.push(ConditionKey { model: b.name.clone(), shape, num_examples, feedback, sfb, mem });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn loop_config_for(&self, key: &ConditionKey) -> LoopConfig {
        LoopConfig {
            num_examples: key.num_examples,
            mem_k: key.mem,
            feedback_enabled: key.feedback,
            sfb_enabled: key.sfb,
            ..self.loop_config.clone()
        }
    }

    pub fn validate(&self) -> Result<(), AblationError> {
        let cfg = |m: String| Err(AblationError::Config(m));
        if self.backends.is_empty() {
            return cfg("no backends".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for b in &self.backends {
            if !names.insert(&b.name) {
                return cfg(format!("duplicate backend name {:?}", b.name));
            }
        }
        for (what, empty) in [
            ("shapes", self.shapes.is_empty()),
            ("num_examples_levels", self.num_examples_levels.is_empty()),
            ("mem_levels", self.mem_levels.is_empty()),
            ("feedback_levels", self.feedback_levels.is_empty()),
            ("sfb_levels", self.sfb_levels.is_empty()),
        ] {
            if empty {
                return cfg(format!("{what} is empty"));
            }
        }
        if self.instances_per_shape == 0 {
            return cfg("instances_per_shape must be at least 1".into());
        }
        for key in self.conditions() {
            self.loop_config_for(&key).validate().map_err(|e| AblationError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Caps concurrent calls into a shared backend.
struct Throttled {
    inner: HttpChatBackend,
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl AgentBackend for Throttled {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, BackendError> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        drop(active);
        let out = self.inner.generate(prompt, params);
        *self.active.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.freed.notify_one();
        out
    }
}

/// Builds a fresh backend per run for stateful kinds and shares stateless ones.
pub struct BackendFactory {
    spec: BackendSpec,
    transcript: Option<Vec<ScriptedResponse>>,
    shared: Option<Arc<dyn AgentBackend>>,
}

impl BackendFactory {
    pub fn new(spec: &BackendSpec) -> Result<Self, AblationError> {
        let err = |source| AblationError::Backend { name: spec.name.clone(), source };
        let mut f = Self { spec: spec.clone(), transcript: None, shared: None };
        match &spec.kind {
            BackendKind::Scripted { transcript, .. } => {
                let text = std::fs::read_to_string(transcript)
                    .map_err(|source| AblationError::Io { path: transcript.clone(), source })?;
                let parsed = ScriptedBackend::from_jsonl(&spec.name, &text).map_err(err)?;
                f.transcript = Some(parsed.responses().to_vec());
            }
            BackendKind::Http { http, max_in_flight } => {
                let inner = HttpChatBackend::new(&spec.name, http.clone()).map_err(err)?;
                let limit = (*max_in_flight).max(1);
                f.shared = Some(Arc::new(Throttled { inner, limit, active: Mutex::new(0), freed: Condvar::new() }));
            }
            BackendKind::Oracle { angle_step, jitter } => {
                if !(angle_step.is_finite() && *angle_step != 0.0 && jitter.is_finite() && *jitter >= 0.0) {
                    return Err(AblationError::Config(format!("backend {}: bad oracle parameters", spec.name)));
                }
            }
            BackendKind::Prose { .. } => {}
        }
        Ok(f)
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn make(&self) -> Arc<dyn AgentBackend> {
        if let Some(shared) = &self.shared {
            return shared.clone();
        }
        let name = self.spec.name.clone();
        match &self.spec.kind {
            BackendKind::Oracle { angle_step, jitter } => Arc::new(OracleBackend::new(name, *angle_step, *jitter)),
            BackendKind::Prose { text } => {
                Arc::new(ScriptedBackend::new(name, vec![ScriptedResponse::new(text.clone())]).cycling())
            }
            BackendKind::Scripted { cycle, .. } => {
                let b = ScriptedBackend::new(name, self.transcript.clone().unwrap_or_default());
                Arc::new(if *cycle { b.cycling() } else { b })
            }
            BackendKind::Http { .. } => unreachable!("http backends are shared"),
        }
    }
}

/// Runs one task under one condition with a fresh memory repository.
pub fn run_condition(
    grid: &AblationGrid,
    key: &ConditionKey,
    task: &TaskInstance<f64>,
    backend: &dyn AgentBackend,
    run_seed: u64,
) -> RunRecord {
    let mut cfg = grid.loop_config_for(key);
    cfg.designer.seed = cfg.designer.seed.or(Some(run_seed));
    cfg.critic.seed = cfg.critic.seed.or(derive_seed(Some(run_seed), 1));
    let mut record = run_task(task, &cfg, backend, &MemoryRepo::new()).expect("condition validated up front");
    record.summary.labels = key.to_labels();
    record.summary.labels.insert(labels::INSTANCE.into(), task.id.clone());
    record
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationOutput {
    /// Condition-major, then dataset order.
    pub records: Vec<RunRecord>,
    pub stats: Vec<ConditionStats>,
}

/// One run per (condition, instance of the condition's shape) on a pool of `jobs` threads.
pub fn run_ablation(grid: &AblationGrid, dataset: &[TaskInstance<f64>], jobs: usize) -> Result<AblationOutput, AblationError> {
    grid.validate()?;
    let factories: BTreeMap<String, BackendFactory> =
        grid.backends.iter().map(|b| Ok((b.name.clone(), BackendFactory::new(b)?))).collect::<Result<_, AblationError>>()?;
    let mut work = Vec::new();
    for key in grid.conditions() {
        for task in dataset.iter().filter(|t| t.curve.family() == key.shape) {
            work.push((key.clone(), task));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| AblationError::Config(format!("thread pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| {
        work.par_iter()
            .enumerate()
            .map(|(i, (key, task))| {
                let backend = factories[&key.model].make();
                let seed = derive_seed(Some(grid.seed), i as u64).expect("seeded");
                run_condition(grid, key, task, backend.as_ref(), seed)
            })
            .collect()
    });
    let stats = aggregate(&records).map_err(|e| AblationError::Config(e.to_string()))?;
    Ok(AblationOutput { records, stats })
}

/// File stem for a condition's run file.
pub fn condition_file_stem(key: &ConditionKey) -> String {
    let model: String =
        key.model.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!(
        "{model}__{}__ex{}_mem{}_fdbk{}_sfb{}",
        key.shape.name(),
        key.num_examples,
        key.mem,
        u8::from(key.feedback),
        u8::from(key.sfb)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_toml() {
        let g = AblationGrid::from_toml(
            r#"
            seed = 3
            shapes = ["circle", "line"]
            instances_per_shape = 2
            [loop]
            max_iterations = 4
            [[backends]]
            name = "o"
            kind = "oracle"
            jitter = 0.1
            [[backends]]
            name = "p"
            kind = "prose"
            text = "no code"
            [[backends]]
            name = "h"
            kind = "http"
            max_in_flight = 2
            [backends.http]
            endpoint = "http://localhost:1/v1/chat/completions"
            model = "x"
            "#,
        )
        .unwrap();
        assert_eq!(g.backends.len(), 3);
        assert_eq!(g.backends[0].kind, BackendKind::Oracle { angle_step: 0.05, jitter: 0.1 });
        assert!(matches!(&g.backends[2].kind, BackendKind::Http { http, max_in_flight: 2 } if http.model == "x"));
        assert_eq!(g.loop_config.max_iterations, 4);
        assert_eq!(g.loop_config.epsilon, 0.05);
        assert_eq!(g.conditions().len(), 3 * 2 * 16);
        assert!(g.validate().is_ok());
        assert!(AblationGrid::from_toml("bogus = 1").is_err());
        assert!(AblationGrid::from_toml("shapes = [\"hexagon\"]").is_err());
    }

    #[test]
    fn off_grid_levels_are_rejected() {
        let g = AblationGrid { mem_levels: vec![1], ..Default::default() };
        assert!(g.validate().unwrap_err().is_config());
    }
}
