//! The `polyreach` command line: `verify` runs a config end to end and
//! writes `results.json`, `steps.csv` and `plot.csv` into the output directory.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{load_system_config, BenchmarkConfig, ConfigError};
use crate::reach::{
    box_volume, check_reach_avoid, compute_trajectory, ReachError, ReachTrajectory, Schedule,
    Verdict, VerdictStatus,
};

#[derive(Debug, Parser)]
#[command(
    name = "polyreach",
    version,
    about = "Reachability for neural feedback systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute reachable boxes for a benchmark config and check its properties.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    Builtin,
    External,
}

#[derive(Debug, Clone, clap::Args)]
pub struct VerifyArgs {
    pub config: PathBuf,
    /// Steps per symbolic window (1 = concrete).
    #[arg(long)]
    pub symbolic_window: Option<usize>,
    /// Grid divisions per univariate bound.
    #[arg(long)]
    pub divisions: Option<usize>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverChoice>,
    /// Per-solve time limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// State dimensions (1-based) for plot.csv.
    #[arg(long, num_args = 2, value_names = ["I", "J"], default_values_t = [1, 2])]
    pub plot_dims: Vec<usize>,
}

impl VerifyArgs {
    pub fn new(config: impl Into<PathBuf>, out: impl Into<PathBuf>) -> VerifyArgs {
        VerifyArgs {
            config: config.into(),
            symbolic_window: None,
            divisions: None,
            solver: None,
            time_limit: None,
            out: out.into(),
            plot_dims: vec![1, 2],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error("plot dims ({0}, {1}) out of range for a {2}-dimensional system")]
    PlotDims(usize, usize, usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct StepResult {
    pub t: usize,
    #[serde(rename = "box")]
    pub bx: Vec<[f64; 2]>,
    pub volume: f64,
    pub ms: f64,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResults {
    pub benchmark: String,
    pub mode: String,
    pub steps: Vec<StepResult>,
    pub verdicts: Vec<Verdict>,
    pub final_volume: f64,
    pub wall_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: String,
    pub results: RunResults,
    pub trajectory: ReachTrajectory,
}

/// 1 if any property is falsified, 2 if any is unknown, 0 otherwise.
pub fn exit_code(verdicts: &[Verdict]) -> i32 {
    if verdicts
        .iter()
        .any(|v| v.status == VerdictStatus::FalsifiedCandidate)
    {
        1
    } else if verdicts.iter().any(|v| v.status == VerdictStatus::Unknown) {
        2
    } else {
        0
    }
}

/// One CSV row per step: `t` then the four corners of the box projected
/// on dimensions `dims` (1-based), counter-clockwise from the lower left.
pub fn emit_plot_data(traj: &ReachTrajectory, dims: (usize, usize)) -> Result<String, CliError> {
    let n = traj.steps.first().map_or(0, |s| s.bx.len());
    let (i, j) = dims;
    if i == 0 || j == 0 || i > n || j > n {
        return Err(CliError::PlotDims(i, j, n));
    }
    let mut out = String::from("# t,x1,y1,x2,y2,x3,y3,x4,y4\n");
    for s in &traj.steps {
        let (a, b) = (s.bx[i - 1], s.bx[j - 1]);
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            s.t, a.lo, b.lo, a.hi, b.lo, a.hi, b.hi, a.lo, b.hi
        ));
    }
    Ok(out)
}

fn steps_csv(traj: &ReachTrajectory) -> String {
    let n = traj.steps.first().map_or(0, |s| s.bx.len());
    let mut out = String::from("t,volume,ms,pivots,nodes,limited");
    for d in 1..=n {
        out.push_str(&format!(",lo{d},hi{d}"));
    }
    out.push('\n');
    for s in &traj.steps {
        out.push_str(&format!(
            "{},{:?},{:.3},{},{},{}",
            s.t,
            box_volume(&s.bx),
            s.stats.elapsed.as_secs_f64() * 1e3,
            s.stats.pivots,
            s.stats.nodes,
            s.stats.limited
        ));
        for iv in &s.bx {
            out.push_str(&format!(",{:?},{:?}", iv.lo, iv.hi));
        }
        out.push('\n');
    }
    out
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: dir.join(name).display().to_string(),
        source: e,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

fn apply_flags(config: &mut BenchmarkConfig, args: &VerifyArgs) {
    if let Some(w) = args.symbolic_window {
        config.schedule.symbolic_window = w;
    }
    if let Some(k) = args.divisions {
        config.enclosure.divisions = k;
    }
    if let Some(s) = args.solver {
        config.solver.backend = match s {
            SolverChoice::Builtin => "builtin".into(),
            SolverChoice::External => "external".into(),
        };
    }
    if let Some(t) = args.time_limit {
        config.solver.time_limit_s = t;
    }
}

/// Runs a config end to end and writes the artifacts.
pub fn run_verification(args: &VerifyArgs) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let loaded = load_system_config(&args.config)?;
    let mut config = loaded.config;
    apply_flags(&mut config, args);
    let spec = &loaded.spec;
    let opts = config.reach_options()?;
    let schedule: Schedule = config.schedule();
    let dims = match args.plot_dims[..] {
        [i, j] => (i, j),
        _ => (1, 2),
    };
    // a scalar system plots its only dimension against itself
    let dims = if spec.n == 1 && dims == (1, 2) {
        (1, 1)
    } else {
        dims
    };
    if dims.0 == 0 || dims.1 == 0 || dims.0 > spec.n || dims.1 > spec.n {
        return Err(CliError::PlotDims(dims.0, dims.1, spec.n));
    }

    let traj = compute_trajectory(spec, &schedule, &opts)?;
    let verdicts = check_reach_avoid(&traj, spec);
    let wall_s = started.elapsed().as_secs_f64();
    let mode = if config.schedule.symbolic_window > 1 {
        format!("symbolic(window={})", config.schedule.symbolic_window)
    } else {
        "concrete".to_string()
    };
    let steps: Vec<StepResult> = traj
        .steps
        .iter()
        .map(|s| StepResult {
            t: s.t,
            bx: s.bx.iter().map(|iv| [iv.lo, iv.hi]).collect(),
            volume: box_volume(&s.bx),
            ms: s.stats.elapsed.as_secs_f64() * 1e3,
            gaps: s.stats.gaps.clone(),
        })
        .collect();
    let final_volume = box_volume(traj.last());
    let results = RunResults {
        benchmark: spec.name.clone(),
        mode,
        steps,
        verdicts,
        final_volume,
        wall_s,
    };

    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Io {
        path: args.out.display().to_string(),
        source: e,
    })?;
    let json = serde_json::to_string_pretty(&results).expect("results serialize");
    write_atomic(&args.out, "results.json", &json)?;
    write_atomic(&args.out, "steps.csv", &steps_csv(&traj))?;
    write_atomic(&args.out, "plot.csv", &emit_plot_data(&traj, dims)?)?;

    let verdict_text: Vec<String> = results
        .verdicts
        .iter()
        .map(|v| format!("{}={}", tag(&v.property), tag(&v.status)))
        .collect();
    let summary = format!(
        "{}: {} final_volume={:.6e} wall={:.2}s",
        results.benchmark,
        verdict_text.join(" "),
        final_volume,
        wall_s
    );
    Ok(RunOutcome {
        exit_code: exit_code(&results.verdicts),
        summary,
        results,
        trajectory: traj,
    })
}

fn tag<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match cli.command {
        Command::Verify(args) => match run_verification(&args) {
            Ok(outcome) => {
                println!("{}", outcome.summary);
                outcome.exit_code
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
    }
}
