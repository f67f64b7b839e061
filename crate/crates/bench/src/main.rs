use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mechsynth_agent::orchestrator::{aligned_chamfer, run_task, scoring_reference, ScoringReference};
use mechsynth_agent::MemoryRepo;
use mechsynth_bench::aggregate::{aggregate, labels, ConditionKey};
use mechsynth_bench::grid::{builtin_backends, run_ablation, AblationGrid, BackendFactory, BackendSpec};
use mechsynth_bench::output::{read_dataset, read_runs, write_dataset, write_results, write_runs};
use mechsynth_bench::report::to_markdown;
use mechsynth_core::curves::{CurveFamily, TaskInstance};
use mechsynth_core::dsl::{parse, render_errors};
use mechsynth_core::geometry::{chamfer_distance, Point2, Trajectory};
use mechsynth_core::linkage::simulate;

#[derive(Parser)]
#[command(name = "mechsynth", version, about = "Planar mechanism synthesis benchmark")]
struct Cli {
    /// Master seed (dataset generation and run seeds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ablation runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// TOML config: backends, loop settings and dataset levels.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Backend name, from the config or one of the built-ins (oracle, oracle-jitter, prose).
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Candidates per iteration.
    #[arg(long = "b", global = true)]
    batch: Option<usize>,
    /// Iteration budget.
    #[arg(long = "r-max", global = true)]
    r_max: Option<usize>,
    /// Chamfer threshold for early termination.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Examples per prompt.
    #[arg(long = "num-examples", global = true)]
    num_examples: Option<usize>,
    /// Memory entries retrieved into prompts.
    #[arg(long, global = true)]
    mem: Option<usize>,
    /// Critic feedback on or off.
    #[arg(long, global = true)]
    fdbk: Option<bool>,
    /// Surrogate equation and score feedback on or off.
    #[arg(long, global = true)]
    sfb: Option<bool>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the benchmark dataset as dataset.jsonl.
    GenDataset {
        /// Restrict to these families.
        #[arg(long, value_delimiter = ',')]
        shapes: Option<Vec<CurveFamily>>,
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Simulate a mechanism file and write the target trace.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Score a trace against a task.
    Eval {
        trace: PathBuf,
        task: PathBuf,
        /// Task id when the task file holds several.
        #[arg(long)]
        id: Option<String>,
        /// Score against the task's points instead of the dense curve outline.
        #[arg(long)]
        target_points: bool,
    },
    /// Run the design loop on one task.
    Run {
        task: PathBuf,
        #[arg(long)]
        id: Option<String>,
    },
    /// Run a full-factorial ablation grid.
    Ablate { grid: PathBuf },
    /// Aggregate run records into results tables.
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
    },
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn config<E: ToString>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime<E: ToString>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

impl Cli {
    fn grid(&self, path: Option<&Path>) -> Result<AblationGrid, CliError> {
        let mut grid = match path.or(self.config.as_deref()) {
            Some(p) => AblationGrid::load(p).map_err(config)?,
            None => AblationGrid { backends: builtin_backends(), ..AblationGrid::default() },
        };
        if let Some(seed) = self.seed {
            grid.seed = seed;
        }
        let lc = &mut grid.loop_config;
        if let Some(b) = self.batch {
            lc.batch_size = b;
        }
        if let Some(r) = self.r_max {
            lc.max_iterations = r;
        }
        if let Some(e) = self.epsilon {
            lc.epsilon = e;
        }
        if let Some(n) = self.num_examples {
            grid.num_examples_levels = vec![n];
            grid.loop_config.num_examples = n;
        }
        if let Some(m) = self.mem {
            grid.mem_levels = vec![m];
            grid.loop_config.mem_k = m;
        }
        if let Some(f) = self.fdbk {
            grid.feedback_levels = vec![f];
            grid.loop_config.feedback_enabled = f;
        }
        if let Some(s) = self.sfb {
            grid.sfb_levels = vec![s];
            grid.loop_config.sfb_enabled = s;
        }
        Ok(grid)
    }

    fn backend_spec(&self, grid: &AblationGrid) -> Result<BackendSpec, CliError> {
        let name = self.backend.as_deref().unwrap_or("oracle");
        grid.backends
            .iter()
            .chain(builtin_backends().iter())
            .find(|b| b.name == name)
            .cloned()
            .ok_or_else(|| CliError::Config(format!("unknown backend {name:?}")))
    }
}

fn select_task(path: &Path, id: Option<&str>) -> Result<TaskInstance<f64>, CliError> {
    let tasks = read_dataset(path).map_err(config)?;
    match id {
        Some(id) => tasks.into_iter().find(|t| t.id == id).ok_or_else(|| CliError::Config(format!("no task {id:?} in {}", path.display()))),
        None => tasks.into_iter().next().ok_or_else(|| CliError::Config(format!("{} holds no tasks", path.display()))),
    }
}

/// A trace as a trajectory object, a JSON array of `[x, y]`, or `x,y` lines.
fn read_trace(path: &Path) -> Result<Trajectory<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    if let Ok(t) = serde_json::from_str::<Trajectory<f64>>(&text) {
        return Ok(t);
    }
    if let Ok(points) = serde_json::from_str::<Vec<Point2<f64>>>(&text) {
        return Trajectory::open(points).map_err(|e| config(format!("{}: {e}", path.display())));
    }
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let mut it = line.split([',', ' ', '\t']).filter(|s| !s.is_empty()).map(str::parse::<f64>);
        match (it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y))) => points.push(Point2::new(x, y)),
            _ => return Err(config(format!("{}:{}: expected \"x,y\"", path.display(), i + 1))),
        }
    }
    Trajectory::open(points).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::GenDataset { shapes, instances } => {
            let mut grid = cli.grid(None)?;
            if let Some(s) = shapes {
                grid.shapes = s.clone();
            }
            if let Some(n) = instances {
                grid.instances_per_shape = *n;
            }
            let tasks = grid.dataset();
            ensure_dir(&cli.out)?;
            let path = cli.out.join("dataset.jsonl");
            write_dataset(&path, &tasks).map_err(runtime)?;
            println!("wrote {} tasks to {}", tasks.len(), path.display());
        }
        Command::Simulate { file, steps } => {
            let text = std::fs::read_to_string(file).map_err(|e| config(format!("{}: {e}", file.display())))?;
            let spec = parse::<f64>(&text).map_err(|errs| config(render_errors(&errs)))?;
            let sim = simulate(&spec, *steps)
                .map_err(|errs| config(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")))?;
            println!("{}", sim.summary());
            if let Some(trace) = sim.target_trajectory() {
                ensure_dir(&cli.out)?;
                let path = cli.out.join("trace.json");
                std::fs::write(&path, serde_json::to_string(&trace).expect("trace serializes"))
                    .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            }
            if !sim.success {
                return Err(CliError::Runtime("simulation did not complete".into()));
            }
        }
        Command::Eval { trace, task, id, target_points } => {
            let trace = read_trace(trace)?;
            let task = select_task(task, id.as_deref())?;
            let grid = cli.grid(None)?;
            let reference = if *target_points { ScoringReference::TargetPoints } else { grid.loop_config.reference };
            let reference = scoring_reference(&task, reference);
            let out = serde_json::json!({
                "task_id": task.id,
                "chamfer": chamfer_distance(&trace, &reference),
                "chamfer_icp": aligned_chamfer(&trace, &reference, &grid.loop_config.icp),
            });
            println!("{out}");
        }
        Command::Run { task, id } => {
            let task = select_task(task, id.as_deref())?;
            let grid = cli.grid(None)?;
            let spec = cli.backend_spec(&grid)?;
            let factory = BackendFactory::new(&spec).map_err(config)?;
            let mut cfg = grid.loop_config.clone();
            if cfg.designer.seed.is_none() {
                cfg.designer.seed = cli.seed;
            }
            cfg.validate().map_err(config)?;
            let backend = factory.make();
            let mut record = run_task(&task, &cfg, backend.as_ref(), &MemoryRepo::new()).map_err(config)?;
            let key = ConditionKey {
                model: spec.name.clone(),
                shape: task.curve.family(),
                num_examples: cfg.num_examples,
                feedback: cfg.feedback_enabled,
                sfb: cfg.sfb_enabled,
                mem: cfg.mem_k,
            };
            record.summary.labels = key.to_labels();
            record.summary.labels.insert(labels::INSTANCE.into(), task.id.clone());
            let dir = cli.out.join("runs");
            let files = write_runs(&dir, std::slice::from_ref(&record)).map_err(runtime)?;
            let s = &record.summary;
            match &s.best {
                Some(b) => println!(
                    "task {}: best chamfer {} at iteration {} after {} iterations ({:?})\n{}",
                    s.task_id, b.chamfer, b.iteration, s.iterations_run, s.terminated_by, b.mechanism_text.trim_end()
                ),
                None => println!("task {}: no valid mechanism in {} iterations", s.task_id, s.iterations_run),
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Ablate { grid } => {
            let grid = cli.grid(Some(grid))?;
            grid.validate().map_err(config)?;
            ensure_dir(&cli.out)?;
            let dataset = grid.dataset();
            write_dataset(&cli.out.join("dataset.jsonl"), &dataset).map_err(runtime)?;
            let out = run_ablation(&grid, &dataset, cli.jobs).map_err(|e| if e.is_config() { config(e) } else { runtime(e) })?;
            write_runs(&cli.out.join("runs"), &out.records).map_err(runtime)?;
            let files = write_results(&cli.out, &out.stats).map_err(runtime)?;
            print!("{}", to_markdown(&out.stats));
            eprintln!("{} runs, {} conditions", out.records.len(), out.stats.len());
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Report { records } => {
            let records = read_runs(records).map_err(config)?;
            let stats = aggregate(&records).map_err(config)?;
            let files = write_results(&cli.out, &stats).map_err(runtime)?;
            print!("{}", to_markdown(&stats));
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Config(m) | CliError::Runtime(m)) = &e;
            eprintln!("error: {m}");
            ExitCode::from(e.code())
        }
    }
}
