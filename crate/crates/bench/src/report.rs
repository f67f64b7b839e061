//! Results tables in CSV and markdown.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::aggregate::{CellCounts, ConditionKey, ConditionStats, MeanSe};

pub const COLUMNS: [&str; 12] =
    ["Model", "Shape", "#Ex", "Fdbk", "SFB", "Mem", "Best chamf.", "Fcham", "Steps", "Fstep", "% Imp.", "% Semantic"];

/// Marker for a cell with no data.
pub const ABSENT: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    Empty,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad results table: {0}")]
    Parse(String),
}

fn flag(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Cells of one row. `precision` of `None` keeps full round-trip precision.
pub fn row_cells(s: &ConditionStats, precision: Option<usize>) -> Vec<String> {
    let mse = |m: &Option<MeanSe>| match (m, precision) {
        (None, _) => ABSENT.to_string(),
        (Some(m), Some(p)) => format!("{m:.p$}"),
        (Some(m), None) => m.to_string(),
    };
    let num = |v: Option<f64>| match (v, precision) {
        (None, _) => ABSENT.to_string(),
        (Some(v), Some(p)) => format!("{v:.p$}"),
        (Some(v), None) => v.to_string(),
    };
    vec![
        s.key.model.clone(),
        s.key.shape.label().to_string(),
        s.key.num_examples.to_string(),
        flag(s.key.feedback).to_string(),
        flag(s.key.sfb).to_string(),
        s.key.mem.to_string(),
        mse(&s.best_chamfer),
        mse(&s.first_chamfer),
        mse(&s.steps),
        mse(&s.final_step),
        num(s.pct_improvement),
        num(Some(s.semantic_pct)),
    ]
}

/// CSV with full-precision cells, so every value can be read back exactly.
pub fn to_csv(stats: &[ConditionStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for s in stats {
        w.write_record(row_cells(s, None)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Pipe table with three decimals.
pub fn to_markdown(stats: &[ConditionStats]) -> String {
    let mut out = format!("| {} |\n", COLUMNS.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(COLUMNS.len())));
    for s in stats {
        out.push_str(&format!("| {} |\n", row_cells(s, Some(3)).join(" | ")));
    }
    out
}

pub fn render(stats: &[ConditionStats], format: ReportFormat) -> Result<String, ReportError> {
    if stats.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(match format {
        ReportFormat::Csv => to_csv(stats),
        ReportFormat::Markdown => to_markdown(stats),
    })
}

pub fn emit_report(stats: &[ConditionStats], format: ReportFormat, path: &Path) -> Result<(), ReportError> {
    let text = render(stats, format)?;
    std::fs::write(path, text).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn parse_mse(cell: &str) -> Result<Option<MeanSe>, ReportError> {
    if cell == ABSENT {
        return Ok(None);
    }
    let (m, s) = cell.split_once(" ± ").ok_or_else(|| ReportError::Parse(format!("expected \"m ± s\", got {cell:?}")))?;
    let p = |v: &str| v.parse::<f64>().map_err(|e| ReportError::Parse(format!("{v:?}: {e}")));
    Ok(Some(MeanSe { mean: p(m)?, stderr: p(s)? }))
}

fn parse_num(cell: &str) -> Result<Option<f64>, ReportError> {
    if cell == ABSENT {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|e| ReportError::Parse(format!("{cell:?}: {e}")))
}

/// Reads a CSV written by [`to_csv`]. Counts are not part of the table and come back zeroed.
pub fn from_csv(text: &str) -> Result<Vec<ConditionStats>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| ReportError::Parse(e.to_string()))?;
    if header.iter().ne(COLUMNS) {
        return Err(ReportError::Parse(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| ReportError::Parse(e.to_string()))?;
        let c: Vec<&str> = rec.iter().collect();
        let bad = |what: &str, v: &str| ReportError::Parse(format!("bad {what} {v:?}"));
        let yes = |v: &str| match v {
            "yes" => Ok(true),
            "no" => Ok(false),
            _ => Err(bad("flag", v)),
        };
        out.push(ConditionStats {
            key: ConditionKey {
                model: c[0].to_string(),
                shape: c[1].parse().map_err(|_| bad("shape", c[1]))?,
                num_examples: c[2].parse().map_err(|_| bad("#Ex", c[2]))?,
                feedback: yes(c[3])?,
                sfb: yes(c[4])?,
                mem: c[5].parse().map_err(|_| bad("Mem", c[5]))?,
            },
            best_chamfer: parse_mse(c[6])?,
            first_chamfer: parse_mse(c[7])?,
            steps: parse_mse(c[8])?,
            final_step: parse_mse(c[9])?,
            pct_improvement: parse_num(c[10])?,
            semantic_pct: parse_num(c[11])?.ok_or_else(|| bad("% Semantic", c[11]))?,
            counts: CellCounts::default(),
        });
    }
    Ok(out)
}
