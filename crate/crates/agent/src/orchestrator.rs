//! The design, simulate, critique and revise loop.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use mechsynth_core::curves::{reference_path, SamplingConfig, TaskInstance};
use mechsynth_core::dsl::format_canonical;
use mechsynth_core::geometry::{chamfer_distance, icp_align, IcpOptions, Trajectory};
use mechsynth_core::linkage::{simulate, JointKind, MechanismSpec, SimResult, StepFailure};
use mechsynth_core::surrogate::{expr_to_text, fit_surrogate, SurrogateConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{derive_seed, generate_candidates, AgentBackend, GeneratedCandidate, GenerationParams};
use crate::memory::{render_memory_block, MemoryEntry, MemoryRepo};
use crate::prompts::{
    builtin_examples, compose_critic_prompt, compose_designer_prompt, compose_revision_prompt, format_points,
    PromptContext, API_DOC,
};

/// What generated traces are scored against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoringReference {
    /// A dense ordered outline of the analytic target curve.
    Curve { samples: usize },
    /// Only the task's sampled target points.
    TargetPoints,
}

impl Default for ScoringReference {
    fn default() -> Self {
        ScoringReference::Curve { samples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Candidates per iteration (b).
    pub batch_size: usize,
    /// Iteration budget (R_max).
    pub max_iterations: usize,
    /// Chamfer threshold for early termination.
    pub epsilon: f64,
    pub num_examples: usize,
    /// Memory entries retrieved into prompts; 0 disables retrieval.
    pub mem_k: usize,
    pub feedback_enabled: bool,
    /// Show surrogate equation and score lines.
    pub sfb_enabled: bool,
    pub sim_steps: Option<usize>,
    pub reference: ScoringReference,
    pub designer: GenerationParams,
    pub critic: GenerationParams,
    pub retries: usize,
    pub surrogate: SurrogateConfig<f64>,
    pub icp: IcpOptions<f64>,
    /// Accept `num_examples` and `mem_k` outside the ablation levels.
    pub allow_off_grid: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            batch_size: 3,
            max_iterations: 20,
            epsilon: 0.05,
            num_examples: 2,
            mem_k: 2,
            feedback_enabled: true,
            sfb_enabled: true,
            sim_steps: None,
            reference: ScoringReference::default(),
            designer: GenerationParams::default(),
            critic: GenerationParams::default(),
            retries: 2,
            surrogate: SurrogateConfig::default(),
            icp: IcpOptions::default(),
            allow_off_grid: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid loop configuration: {0}")]
pub struct ConfigError(pub String);

impl LoopConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError(m.to_string()));
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1");
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return fail("epsilon must be finite and non-negative");
        }
        if !self.allow_off_grid {
            if !matches!(self.num_examples, 2 | 3) {
                return fail("num_examples must be 2 or 3 (set allow_off_grid to override)");
            }
            if !matches!(self.mem_k, 0 | 2) {
                return fail("mem_k must be 0 or 2 (set allow_off_grid to override)");
            }
        }
        if self.num_examples > builtin_examples(usize::MAX).len() {
            return fail("not enough built-in examples");
        }
        if let ScoringReference::Curve { samples } = self.reference {
            if samples < 3 {
                return fail("reference curve needs at least 3 samples");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub success: bool,
    pub steps: usize,
    pub trace_len: usize,
    pub failure: Option<StepFailure>,
}

impl SimOutcome {
    fn of(r: &SimResult<f64>) -> Self {
        Self { success: r.success, steps: r.steps, trace_len: r.trajectory.len(), failure: r.failure.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub raw_text: Option<String>,
    /// Canonical text when the reply parsed.
    pub mechanism_text: Option<String>,
    pub error: Option<String>,
    pub sim: Option<SimOutcome>,
    /// ICP-aligned Chamfer distance to the target.
    pub chamfer: Option<f64>,
    pub surrogate: Option<String>,
    pub complexity: Option<usize>,
    pub stored: bool,
}

impl CandidateRecord {
    /// Parsed and simulated without error.
    pub fn is_valid(&self) -> bool {
        self.chamfer.is_some()
    }

    /// Text for the `{simulator_output}` slot.
    pub fn simulator_output(&self) -> String {
        match (&self.sim, &self.error) {
            (Some(s), _) if s.success => {
                format!("Simulation succeeded: {} steps solved, target joint trace has {} points.", s.steps, s.trace_len)
            }
            (Some(s), _) => match &s.failure {
                Some(f) => format!("Simulation failed: {f}. {} of {} steps solved before the failure.", f.step, s.steps),
                None => "Simulation failed.".into(),
            },
            (None, Some(e)) => format!("The mechanism could not be executed:\n{e}"),
            (None, None) => "No mechanism was produced.".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevisionVerdict {
    Accept,
    Flag,
}

/// A revision is accepted when it is no worse on both complexity and
/// distance, or strictly better on distance.
pub fn revision_efficiency_check(
    prev: (&MechanismSpec<f64>, f64),
    revised: (&MechanismSpec<f64>, f64),
) -> RevisionVerdict {
    let (c0, d0) = (prev.0.complexity(), prev.1);
    let (c1, d1) = (revised.0.complexity(), revised.1);
    if d1 < d0 || (c1 <= c0 && d1 <= d0) {
        RevisionVerdict::Accept
    } else {
        RevisionVerdict::Flag
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub designer_prompt: String,
    pub candidates: Vec<CandidateRecord>,
    pub critic_prompt: Option<String>,
    pub critique: Option<String>,
    pub revision_prompt: Option<String>,
    pub revision: Option<CandidateRecord>,
    pub revision_verdict: Option<RevisionVerdict>,
    pub best_chamfer: Option<f64>,
    /// Set when no backend call of the iteration succeeded.
    pub failed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestDesign {
    pub mechanism_text: String,
    pub chamfer: f64,
    pub iteration: usize,
    pub surrogate: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Epsilon,
    RMax,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub candidates_generated: usize,
    pub candidates_valid: usize,
}

impl Totals {
    /// Share of generated candidates that parsed and simulated.
    pub fn semantic_success(&self) -> f64 {
        if self.candidates_generated == 0 {
            0.0
        } else {
            self.candidates_valid as f64 / self.candidates_generated as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub task_id: String,
    /// Free-form labels such as the backend and condition levels.
    pub labels: BTreeMap<String, String>,
    pub best: Option<BestDesign>,
    pub first_valid_chamfer: Option<f64>,
    pub totals: Totals,
    pub terminated_by: Termination,
    pub iterations_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub summary: RunSummary,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Iteration(Box<IterationRecord>),
    Summary(RunSummary),
}

impl RunRecord {
    /// One line per iteration followed by a summary line.
    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for it in &self.iterations {
            serde_json::to_writer(&mut w, &Line::Iteration(Box::new(it.clone())))?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut w, &Line::Summary(self.summary.clone()))?;
        w.write_all(b"\n")
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads every record in a JSONL stream (each ends at its summary line).
    pub fn read_jsonl(r: impl BufRead) -> io::Result<Vec<RunRecord>> {
        let mut out = Vec::new();
        let mut pending = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
            match parsed {
                Line::Iteration(it) => pending.push(*it),
                Line::Summary(summary) => out.push(RunRecord { summary, iterations: std::mem::take(&mut pending) }),
            }
        }
        if !pending.is_empty() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "iteration lines without a summary line"));
        }
        Ok(out)
    }

    pub fn best_chamfer(&self) -> Option<f64> {
        self.summary.best.as_ref().map(|b| b.chamfer)
    }
}

/// Reference trajectory for scoring `task` under `reference`.
pub fn scoring_reference(task: &TaskInstance<f64>, reference: ScoringReference) -> Trajectory<f64> {
    match reference {
        ScoringReference::Curve { samples } => reference_path(&task.curve, samples, &SamplingConfig::default()),
        ScoringReference::TargetPoints => task.target_points.clone(),
    }
}

/// ICP-aligned Chamfer distance from `trace` to `reference`. Traces too
/// degenerate to align are scored as they are.
pub fn aligned_chamfer(trace: &Trajectory<f64>, reference: &Trajectory<f64>, icp: &IcpOptions<f64>) -> f64 {
    match icp_align(trace, reference, icp) {
        Ok(r) => r.chamfer,
        Err(_) => chamfer_distance(trace, reference),
    }
}

/// Drive-angle spacing of samples: the slowest crank's step.
fn drive_step(spec: &MechanismSpec<f64>) -> Option<f64> {
    spec.joints
        .iter()
        .filter_map(|j| match j.kind {
            JointKind::Crank { angle_step, .. } => Some(angle_step.abs()),
            _ => None,
        })
        .min_by(f64::total_cmp)
}

struct Scorer<'a> {
    task: &'a TaskInstance<f64>,
    cfg: &'a LoopConfig,
    reference: Trajectory<f64>,
    memory: &'a MemoryRepo,
}

impl Scorer<'_> {
    fn score_spec(&self, spec: &MechanismSpec<f64>) -> (SimResult<f64>, Option<f64>) {
        let sim = simulate(spec, self.cfg.sim_steps).expect("parsed specs are valid");
        let chamfer = sim.target_trajectory().filter(|_| sim.success).map(|t| aligned_chamfer(&t, &self.reference, &self.cfg.icp));
        (sim, chamfer)
    }

    /// Simulates, scores, fits the surrogate and stores a generated candidate.
    fn evaluate(&self, cand: GeneratedCandidate, iteration: usize) -> (CandidateRecord, Option<MechanismSpec<f64>>) {
        let mut rec = CandidateRecord {
            raw_text: cand.raw_text,
            mechanism_text: None,
            error: cand.error,
            sim: None,
            chamfer: None,
            surrogate: None,
            complexity: None,
            stored: false,
        };
        let Some(spec) = cand.spec else { return (rec, None) };
        rec.mechanism_text = Some(format_canonical(&spec));
        rec.complexity = Some(spec.complexity());
        let (sim, chamfer) = self.score_spec(&spec);
        rec.sim = Some(SimOutcome::of(&sim));
        rec.chamfer = chamfer;
        if let (Some(chamfer), Some(trace)) = (chamfer, sim.target_trajectory()) {
            if self.cfg.sfb_enabled {
                let sc = SurrogateConfig { t_step: drive_step(&spec), ..self.cfg.surrogate };
                rec.surrogate = fit_surrogate(&trace, &sc).ok().map(|s| expr_to_text(&s));
            }
            let entry = MemoryEntry::new(rec.mechanism_text.clone().unwrap_or_default(), chamfer, &self.task.id, iteration)
                .with_surrogate(rec.surrogate.clone());
            rec.stored = self.memory.store(entry, &sim).is_stored();
        }
        (rec, Some(spec))
    }

    /// Top entries for this task; other tasks' designs are re-scored against this target.
    fn memory_block(&self) -> Option<String> {
        if self.cfg.mem_k == 0 {
            return None;
        }
        let top = self.memory.retrieve_topk_by(self.cfg.mem_k, |e| {
            if e.task_id == self.task.id {
                return Some(e.chamfer);
            }
            let spec = mechsynth_core::dsl::parse::<f64>(&e.mechanism_text).ok()?;
            self.score_spec(&spec).1
        });
        render_memory_block(&top)
    }
}

fn fmt_score(c: f64) -> String {
    format!("{c:.6}")
}

/// Runs one task to termination.
pub fn run_task(
    task: &TaskInstance<f64>,
    cfg: &LoopConfig,
    backend: &dyn AgentBackend,
    memory: &MemoryRepo,
) -> Result<RunRecord, ConfigError> {
    cfg.validate()?;
    let scorer = Scorer { task, cfg, reference: scoring_reference(task, cfg.reference), memory };
    let base_ctx = PromptContext {
        api_doc: API_DOC.trim_end().to_string(),
        examples: builtin_examples(cfg.num_examples),
        description: task.curve.describe(),
        points: format_points(task.target_points.points()),
        target_equation: task.equation_text.clone(),
        ..PromptContext::default()
    };

    let mut best: Option<BestDesign> = None;
    let mut first_valid: Option<f64> = None;
    let mut totals = Totals::default();
    let mut iterations = Vec::new();
    let mut terminated_by = Termination::RMax;

    let mut consider = |rec: &CandidateRecord, iteration: usize, best: &mut Option<BestDesign>, totals: &mut Totals| {
        totals.candidates_generated += 1;
        if let Some(c) = rec.chamfer {
            totals.candidates_valid += 1;
            first_valid.get_or_insert(c);
            if best.as_ref().is_none_or(|b| c < b.chamfer) {
                *best = Some(BestDesign {
                    mechanism_text: rec.mechanism_text.clone().unwrap_or_default(),
                    chamfer: c,
                    iteration,
                    surrogate: rec.surrogate.clone(),
                });
            }
        }
    };
    let converged = |best: &Option<BestDesign>| best.as_ref().is_some_and(|b| b.chamfer <= cfg.epsilon);

    for iteration in 1..=cfg.max_iterations {
        let memory_block = scorer.memory_block();
        let (surrogate_line, score_line) = match (&best, cfg.sfb_enabled) {
            (Some(b), true) => (b.surrogate.clone(), Some(fmt_score(b.chamfer))),
            _ => (None, None),
        };
        let ctx = PromptContext { memory_block: memory_block.clone(), surrogate_line, score_line, ..base_ctx.clone() };
        let designer_prompt = compose_designer_prompt(&ctx).map_err(|e| ConfigError(e.to_string()))?;

        let params = GenerationParams { seed: derive_seed(cfg.designer.seed, iteration as u64 * 1000), ..cfg.designer };
        let generated = generate_candidates(backend, &designer_prompt, cfg.batch_size, &params, cfg.retries);
        let all_failed = generated.iter().all(|c| c.raw_text.is_none());
        let failed = all_failed.then(|| generated.iter().filter_map(|c| c.error.clone()).next().unwrap_or_default());

        let mut candidates = Vec::new();
        let mut specs = Vec::new();
        for cand in generated {
            let (rec, spec) = scorer.evaluate(cand, iteration);
            consider(&rec, iteration, &mut best, &mut totals);
            candidates.push(rec);
            specs.push(spec);
        }

        let mut record = IterationRecord {
            iteration,
            designer_prompt,
            candidates,
            critic_prompt: None,
            critique: None,
            revision_prompt: None,
            revision: None,
            revision_verdict: None,
            best_chamfer: None,
            failed,
        };

        if !converged(&best) && cfg.feedback_enabled && record.failed.is_none() {
            feedback_round(&scorer, backend, &base_ctx, memory_block, &mut record, &specs, &mut |rec, it| {
                consider(rec, it, &mut best, &mut totals)
            });
        }

        record.best_chamfer = best.as_ref().map(|b| b.chamfer);
        iterations.push(record);
        if converged(&best) {
            terminated_by = Termination::Epsilon;
            break;
        }
    }

    Ok(RunRecord {
        summary: RunSummary {
            task_id: task.id.clone(),
            labels: BTreeMap::new(),
            best,
            first_valid_chamfer: first_valid,
            totals,
            terminated_by,
            iterations_run: iterations.len(),
        },
        iterations,
    })
}

/// Critique of the iteration's best candidate, then one revision.
fn feedback_round(
    scorer: &Scorer<'_>,
    backend: &dyn AgentBackend,
    base_ctx: &PromptContext,
    memory_block: Option<String>,
    record: &mut IterationRecord,
    specs: &[Option<MechanismSpec<f64>>],
    consider: &mut dyn FnMut(&CandidateRecord, usize),
) {
    let cfg = scorer.cfg;
    // Best valid candidate, else the first one that produced any text.
    let reviewed = record
        .candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_valid())
        .min_by(|a, b| a.1.chamfer.unwrap().total_cmp(&b.1.chamfer.unwrap()))
        .or_else(|| record.candidates.iter().enumerate().find(|(_, c)| c.raw_text.is_some()))
        .map(|(i, _)| i);
    let Some(idx) = reviewed else { return };
    let cand = record.candidates[idx].clone();

    let (surrogate_line, score_line) = if cfg.sfb_enabled {
        (cand.surrogate.clone(), cand.chamfer.map(fmt_score))
    } else {
        (None, None)
    };
    let ctx = PromptContext {
        memory_block,
        surrogate_line,
        score_line,
        designer_response: cand.raw_text.clone(),
        simulator_output: Some(cand.simulator_output()),
        ..base_ctx.clone()
    };
    let Ok(critic_prompt) = compose_critic_prompt(&ctx) else { return };
    let params = GenerationParams { seed: derive_seed(cfg.critic.seed, record.iteration as u64 * 1000 + 500), ..cfg.critic };
    let critique = crate::backend::generate_with_retries(backend, &critic_prompt, &params, cfg.retries);
    record.critic_prompt = Some(critic_prompt);
    let critique = match critique {
        Ok(c) => c,
        Err(e) => {
            record.critique = None;
            record.failed = Some(format!("critic: {e}"));
            return;
        }
    };
    record.critique = Some(critique.clone());

    let ctx = PromptContext { critique_response: Some(critique), ..ctx };
    let Ok(revision_prompt) = compose_revision_prompt(&ctx) else { return };
    let params = GenerationParams { seed: derive_seed(cfg.designer.seed, record.iteration as u64 * 1000 + 999), ..cfg.designer };
    let revised = generate_candidates(backend, &revision_prompt, 1, &params, cfg.retries).remove(0);
    record.revision_prompt = Some(revision_prompt);
    let (rec, spec) = scorer.evaluate(revised, record.iteration);
    consider(&rec, record.iteration);
    if let (Some(prev), Some(d0), Some(new), Some(d1)) = (&specs[idx], cand.chamfer, &spec, rec.chamfer) {
        record.revision_verdict = Some(revision_efficiency_check((prev, d0), (new, d1)));
    }
    record.revision = Some(rec);
}
