//! Per-condition metrics over completed run records.

use std::collections::BTreeMap;
use std::fmt;

use mechsynth_agent::RunRecord;
use mechsynth_core::curves::CurveFamily;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::pct_improvement;

/// Label keys stamped on every run record by the ablation runner.
pub mod labels {
    pub const MODEL: &str = "model";
    pub const SHAPE: &str = "shape";
    pub const NUM_EXAMPLES: &str = "num_examples";
    pub const FEEDBACK: &str = "feedback";
    pub const SFB: &str = "sfb";
    pub const MEM: &str = "mem";
    pub const INSTANCE: &str = "instance";
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConditionKey {
    pub model: String,
    pub shape: CurveFamily,
    pub num_examples: usize,
    pub feedback: bool,
    pub sfb: bool,
    pub mem: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("run record for task {task} has no {label:?} label")]
    Missing { task: String, label: &'static str },
    #[error("run record for task {task} has a bad {label:?} label: {value:?}")]
    Bad { task: String, label: &'static str, value: String },
}

impl ConditionKey {
    pub fn to_labels(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            (labels::MODEL.to_string(), self.model.clone()),
            (labels::SHAPE.to_string(), self.shape.name().to_string()),
            (labels::NUM_EXAMPLES.to_string(), self.num_examples.to_string()),
            (labels::FEEDBACK.to_string(), self.feedback.to_string()),
            (labels::SFB.to_string(), self.sfb.to_string()),
            (labels::MEM.to_string(), self.mem.to_string()),
        ])
    }

    pub fn from_record(record: &RunRecord) -> Result<Self, KeyError> {
        let task = &record.summary.task_id;
        let get = |label: &'static str| {
            record.summary.labels.get(label).ok_or_else(|| KeyError::Missing { task: task.clone(), label })
        };
        fn parse<T: std::str::FromStr>(task: &str, label: &'static str, v: &str) -> Result<T, KeyError> {
            v.parse().map_err(|_| KeyError::Bad { task: task.to_string(), label, value: v.to_string() })
        }
        Ok(Self {
            model: get(labels::MODEL)?.clone(),
            shape: parse(task, labels::SHAPE, get(labels::SHAPE)?)?,
            num_examples: parse(task, labels::NUM_EXAMPLES, get(labels::NUM_EXAMPLES)?)?,
            feedback: parse(task, labels::FEEDBACK, get(labels::FEEDBACK)?)?,
            sfb: parse(task, labels::SFB, get(labels::SFB)?)?,
            mem: parse(task, labels::MEM, get(labels::MEM)?)?,
        })
    }
}

/// Mean and standard error (sample standard deviation over √n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanSe {
    /// `None` for an empty sample; a single value has zero standard error.
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Some(Self { mean, stderr: 0.0 });
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Some(Self { mean, stderr: (var / n as f64).sqrt() })
    }
}

impl fmt::Display for MeanSe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.p$} ± {:.p$}", self.mean, self.stderr),
            None => write!(f, "{} ± {}", self.mean, self.stderr),
        }
    }
}

/// How many runs contributed to each cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub runs: usize,
    /// Runs with at least one valid candidate (best, Fcham, Fstep, % Imp.).
    pub with_valid: usize,
    pub candidates_generated: usize,
    pub candidates_valid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    pub key: ConditionKey,
    pub best_chamfer: Option<MeanSe>,
    /// Chamfer of the first valid candidate of each run.
    pub first_chamfer: Option<MeanSe>,
    /// Iterations executed.
    pub steps: Option<MeanSe>,
    /// Iteration at which the best design was found.
    pub final_step: Option<MeanSe>,
    pub pct_improvement: Option<f64>,
    /// Valid over generated candidates, in percent.
    pub semantic_pct: f64,
    pub counts: CellCounts,
}

impl ConditionStats {
    /// Metrics for one condition; `records` must all share `key`.
    pub fn from_records(key: ConditionKey, records: &[&RunRecord]) -> Self {
        let mut best = Vec::new();
        let mut first = Vec::new();
        let mut final_step = Vec::new();
        let mut pct = Vec::new();
        let mut counts = CellCounts { runs: records.len(), ..CellCounts::default() };
        let steps: Vec<f64> = records.iter().map(|r| r.summary.iterations_run as f64).collect();
        for r in records {
            let s = &r.summary;
            counts.candidates_generated += s.totals.candidates_generated;
            counts.candidates_valid += s.totals.candidates_valid;
            if let Some(b) = &s.best {
                counts.with_valid += 1;
                best.push(b.chamfer);
                final_step.push(b.iteration as f64);
            }
            if let Some(f) = s.first_valid_chamfer {
                first.push(f);
            }
            if let Some(p) = pct_improvement(r) {
                pct.push(p);
            }
        }
        let semantic_pct = if counts.candidates_generated == 0 {
            0.0
        } else {
            100.0 * counts.candidates_valid as f64 / counts.candidates_generated as f64
        };
        Self {
            key,
            best_chamfer: MeanSe::of(&best),
            first_chamfer: MeanSe::of(&first),
            steps: MeanSe::of(&steps),
            final_step: MeanSe::of(&final_step),
            pct_improvement: MeanSe::of(&pct).map(|m| m.mean),
            semantic_pct,
            counts,
        }
    }
}

/// Groups records by their condition labels, in key order.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<ConditionStats>, KeyError> {
    let mut groups: BTreeMap<ConditionKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(ConditionKey::from_record(r)?).or_default().push(r);
    }
    Ok(groups.into_iter().map(|(k, rs)| ConditionStats::from_records(k, &rs)).collect())
}
