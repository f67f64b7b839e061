//! Ablation runner, metric aggregation, significance testing and reports.

pub mod aggregate;
pub mod grid;
pub mod output;
pub mod report;
pub mod stats;

pub use aggregate::{aggregate, ConditionKey, ConditionStats, MeanSe};
pub use grid::{run_ablation, AblationGrid, AblationOutput, BackendSpec};
pub use report::{emit_report, ReportFormat};
pub use stats::{pct_improvement, wilcoxon_signed_rank, WilcoxonResult};
