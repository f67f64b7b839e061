//! Reading and writing datasets, run records and result tables on disk.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mechsynth_agent::RunRecord;
use mechsynth_core::curves::TaskInstance;

use crate::aggregate::{ConditionKey, ConditionStats};
use crate::grid::condition_file_stem;
use crate::report::{emit_report, ReportError, ReportFormat};

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct OutputError {
    pub path: PathBuf,
    pub message: String,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> OutputError + '_ {
    move |e| OutputError { path: path.to_path_buf(), message: e.to_string() }
}

pub fn write_dataset(path: &Path, tasks: &[TaskInstance<f64>]) -> Result<(), OutputError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for t in tasks {
        let line = serde_json::to_string(t).expect("tasks serialize");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a JSONL dataset, or a single JSON task.
pub fn read_dataset(path: &Path) -> Result<Vec<TaskInstance<f64>>, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    if let Ok(task) = serde_json::from_str::<TaskInstance<f64>>(&text) {
        return Ok(vec![task]);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| OutputError { path: path.to_path_buf(), message: format!("line {}: {e}", i + 1) })
        })
        .collect()
}

/// Writes one `runs/<condition>.jsonl` per condition, falling back to the
/// task id for records without condition labels. Returns the files written.
pub fn write_runs(dir: &Path, records: &[RunRecord]) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut groups: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let stem = match ConditionKey::from_record(r) {
            Ok(key) => condition_file_stem(&key),
            Err(_) => r.summary.task_id.clone(),
        };
        groups.entry(stem).or_default().push(r);
    }
    let mut written = Vec::new();
    for (stem, rs) in groups {
        let path = dir.join(format!("{stem}.jsonl"));
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        for r in rs {
            r.write_jsonl(&mut w).map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads run records from JSONL files and directories of them (sorted by name).
pub fn read_runs(paths: &[PathBuf]) -> Result<Vec<RunRecord>, OutputError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(io_err(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    let mut out = Vec::new();
    for f in files {
        let reader = BufReader::new(File::open(&f).map_err(io_err(&f))?);
        out.extend(RunRecord::read_jsonl(reader).map_err(io_err(&f))?);
    }
    Ok(out)
}

/// `results.csv`, `results.md` and `results.json` (the latter keeps per-cell counts).
pub fn write_results(dir: &Path, stats: &[ConditionStats]) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    let csv = dir.join("results.csv");
    let md = dir.join("results.md");
    let json = dir.join("results.json");
    emit_report(stats, ReportFormat::Csv, &csv)?;
    emit_report(stats, ReportFormat::Markdown, &md)?;
    let text = serde_json::to_string_pretty(stats).expect("stats serialize");
    fs::write(&json, text).map_err(|source| ReportError::Io { path: json.clone(), source })?;
    Ok(vec![csv, md, json])
}
