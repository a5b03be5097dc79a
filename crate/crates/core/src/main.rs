use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use uldp::error::Error;
use uldp::harness::{
    audit_extreme, fit_records, read_records, run_sweep, summarize, summary_csv, write_outputs,
    AuditConfig, AuditMechanism, ExperimentSpec, FitField, Task, RECORDS_FILE,
};

#[derive(Parser)]
#[command(
    name = "uldp",
    version,
    about = "User-level LDP estimators and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-stage scalar mean estimation.
    Mean1d(Overrides),
    /// Multi-dimensional mean estimation.
    Mean(Overrides),
    /// Heavy-tailed mean estimation.
    Heavy(Overrides),
    /// Private stochastic optimization.
    Optimize(Overrides),
    /// Histogram classification.
    Classify(Overrides),
    /// Histogram regression.
    Regress(Overrides),
    /// Item-level baselines.
    Baseline(Overrides),
    /// Empirical privacy audit of the scalar mechanism.
    Audit(AuditArgs),
    /// Runs the sweep described by a config file.
    Sweep(Overrides),
    /// Fits a log-log rate to a records file.
    Fit(FitArgs),
}

#[derive(Args)]
struct Overrides {
    /// JSON experiment spec.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for records, summary and metadata.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// JSON audit config; without one both stages are audited.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Geometry `n`.
    #[arg(long)]
    n: Option<usize>,
    /// Geometry `m`.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Accepted for symmetry with the other subcommands; unused.
    #[arg(long)]
    d: Option<usize>,
    /// Mechanism runs per dataset.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_multiplier: Option<f64>,
    /// File receiving the JSON reports.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Spec whose output directory holds the records.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Records file or directory containing records.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Regressor: n, m, nm, epsilon or d.
    #[arg(long, default_value = "nm")]
    x: String,
}

enum Failure {
    Spec(String),
    Audit,
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Spec(_)
            | Error::Parameter { .. }
            | Error::Dimension { .. }
            | Error::InsufficientUsers { .. } => Failure::Spec(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn default_spec(task: Task) -> ExperimentSpec {
    let (dist, grid, options) = match task {
        Task::Mean1d | Task::Baseline => (
            json!({"name": "uniform"}),
            json!({"n": [10000], "m": [100], "epsilon": [1.0]}),
            json!({}),
        ),
        Task::Mean => (
            json!({"name": "sphere"}),
            json!({"n": [10000], "m": [100], "epsilon": [1.0], "d": [8]}),
            json!({}),
        ),
        Task::Heavy => (
            json!({"name": "student_t", "nu": 3.0, "shift": 1.0}),
            json!({"n": [10000], "m": [100], "epsilon": [1.0]}),
            json!({"p": 2.5}),
        ),
        Task::Optimize => (
            json!({"name": "ball", "center": [0.3, -0.2]}),
            json!({"n": [10000], "m": [50], "epsilon": [1.0], "d": [2]}),
            json!({}),
        ),
        Task::Classify => (
            json!({"name": "classify_step"}),
            json!({"n": [10000], "m": [100], "epsilon": [1.0]}),
            json!({}),
        ),
        Task::Regress => (
            json!({"name": "regress_sine"}),
            json!({"n": [20000], "m": [100], "epsilon": [1.0]}),
            json!({}),
        ),
    };
    serde_json::from_value(json!({
        "schema_version": 1, "task": task, "distribution": dist, "grid": grid,
        "trials": 10, "seed": 0, "options": options
    }))
    .expect("built-in specs are valid")
}

fn load_spec(task: Option<Task>, o: &Overrides) -> Result<ExperimentSpec, Failure> {
    let mut spec = match (&o.config, task) {
        (Some(path), _) => ExperimentSpec::load(path)?,
        (None, Some(t)) => default_spec(t),
        (None, None) => return Err(Failure::Spec("sweep needs --config".into())),
    };
    if let Some(t) = task {
        if spec.task != t {
            return Err(Failure::Spec(format!(
                "config describes task {}, not {t}",
                spec.task
            )));
        }
    }
    if let Some(v) = &o.n {
        spec.grid.n = v.clone();
    }
    if let Some(v) = &o.m {
        spec.grid.m = v.clone();
    }
    if let Some(v) = &o.eps {
        spec.grid.epsilon = v.clone();
    }
    if let Some(v) = &o.d {
        spec.grid.d = v.clone();
    }
    if let Some(v) = o.trials {
        spec.trials = v;
    }
    if let Some(v) = o.seed {
        spec.seed = v;
    }
    if let Some(v) = &o.out {
        spec.output = Some(v.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn sweep(task: Option<Task>, o: &Overrides) -> Result<(), Failure> {
    let spec = load_spec(task, o)?;
    let records = run_sweep(&spec)?;
    let summary = summarize(&records);
    print!("{}", summary_csv(&summary)?);
    for r in records.iter().filter(|r| !r.ok()) {
        eprintln!(
            "grid point {} trial {} failed: {}",
            r.grid_index,
            r.trial,
            r.error.as_deref().unwrap_or("")
        );
    }
    match &spec.output {
        Some(dir) => {
            let meta = write_outputs(&spec, &records, dir)?;
            eprintln!(
                "wrote {} records to {} (hash {})",
                meta.records,
                dir.display(),
                meta.determinism_hash
            );
        }
        None => eprintln!(
            "determinism hash {}",
            uldp::harness::determinism_hash(&records)?
        ),
    }
    Ok(())
}

fn audit(a: &AuditArgs) -> Result<(), Failure> {
    let mut configs: Vec<AuditConfig> = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
            vec![serde_json::from_str(&text).map_err(|e| Failure::Spec(e.to_string()))?]
        }
        None => vec![
            AuditConfig::new(AuditMechanism::Stage1, 1.0),
            AuditConfig::new(AuditMechanism::Stage2, 1.0),
        ],
    };
    if let Some(eps) = &a.eps {
        configs = configs
            .iter()
            .flat_map(|c| {
                eps.iter().map(move |&e| AuditConfig {
                    epsilon: e,
                    ..c.clone()
                })
            })
            .collect();
    }
    for c in &mut configs {
        if let Some(v) = a.n {
            c.n = v;
        }
        if let Some(v) = a.m {
            c.m = v;
        }
        if let Some(v) = a.trials {
            c.samples = v;
        }
        if let Some(v) = a.seed {
            c.seed = v;
        }
        if let Some(v) = a.noise_multiplier {
            c.noise_multiplier = v;
        }
    }
    let mut reports = Vec::new();
    let mut all_passed = true;
    for c in &configs {
        let r = audit_extreme(c)?;
        println!(
            "{:?} eps={} multiplier={}: max log-ratio {:.4}, conservative {:.4}, fixed slack {:.4}, smoothed cells {} -> {}",
            r.mechanism,
            r.epsilon,
            r.noise_multiplier,
            r.max_log_ratio,
            r.max_conservative,
            r.fixed_slack,
            r.smoothed_cells,
            if r.passed { "pass" } else { "FAIL" }
        );
        all_passed &= r.passed;
        reports.push(r);
    }
    if let Some(path) = &a.out {
        let text =
            serde_json::to_string_pretty(&reports).map_err(|e| Failure::Other(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Audit)
    }
}

fn fit(a: &FitArgs) -> Result<(), Failure> {
    let field: FitField = a.x.parse()?;
    let location = match (&a.out, &a.config) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => ExperimentSpec::load(c)?
            .output
            .ok_or_else(|| Failure::Spec("config has no output directory".into()))?,
        (None, None) => return Err(Failure::Spec("fit needs --out or --config".into())),
    };
    let file = if Path::new(&location).is_dir() {
        location.join(RECORDS_FILE)
    } else {
        location
    };
    let records = read_records(&file)?;
    let f = fit_records(&records, field)?;
    println!(
        "{}",
        serde_json::to_string(&f).map_err(|e| Failure::Other(e.to_string()))?
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mean1d(o) => sweep(Some(Task::Mean1d), o),
        Command::Mean(o) => sweep(Some(Task::Mean), o),
        Command::Heavy(o) => sweep(Some(Task::Heavy), o),
        Command::Optimize(o) => sweep(Some(Task::Optimize), o),
        Command::Classify(o) => sweep(Some(Task::Classify), o),
        Command::Regress(o) => sweep(Some(Task::Regress), o),
        Command::Baseline(o) => sweep(Some(Task::Baseline), o),
        Command::Sweep(o) => sweep(None, o),
        Command::Audit(a) => audit(a),
        Command::Fit(a) => fit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Spec(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Audit) => {
            eprintln!("audit failed");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
