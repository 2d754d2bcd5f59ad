//! The `nsd-lab` command line.
//!
//! ```text
//! nsd-lab --preset fig3-d500 --out results/ --plot --log-y
//! nsd-lab --config experiment.json --reps 10 --seed 3
//! ```
//!
//! Writes `results.csv`, `run-header.txt` and, on request, `plot.svg`,
//! `replications.csv` and `trajectories/*.csv` into the output directory.

pub mod config;
pub mod presets;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::environment::write_trajectory_csv;
use crate::error::{NsdError, Result};
use crate::instance::{DelayModel, NsdInstance};
use crate::runner::{
    run_experiment_with, write_replications_csv, write_results_csv, AggregateResult,
    ExperimentConfig, InstanceSource, RunOptions, RunRecord, CI_Z,
};

pub use config::{load_experiment, parse_experiment};
pub use presets::{preset, Preset, PRESET_NAMES};

#[derive(Debug, Parser)]
#[command(
    name = "nsd-lab",
    about = "Monte-Carlo regret experiments for non-stationary delayed bandits with intermediate signals"
)]
pub struct Args {
    /// Named experiment (see --list-presets).
    #[arg(long, value_name = "NAME", conflicts_with = "config")]
    pub preset: Option<String>,

    /// JSON experiment or bare instance file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long, value_name = "DIR", default_value = "results")]
    pub out: PathBuf,

    #[arg(long, value_name = "U64", default_value_t = 0)]
    pub seed: u64,

    /// Override the replication count.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: Option<u64>,

    /// Override the confidence parameter of every policy.
    #[arg(long, value_name = "DELTA")]
    pub delta: Option<f64>,

    #[arg(long, value_name = "N", env = "NSD_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// Also write plot.svg.
    #[arg(long)]
    pub plot: bool,

    /// Logarithmic regret axis (implied by some presets).
    #[arg(long)]
    pub log_y: bool,

    /// Write one trajectory CSV per policy and replication.
    #[arg(long)]
    pub dump_trajectories: bool,

    /// Also write per-replication final regrets.
    #[arg(long)]
    pub dump_replications: bool,

    /// Print the preset names and exit.
    #[arg(long)]
    pub list_presets: bool,

    /// Suppress the header and summary on stdout.
    #[arg(long, short)]
    pub quiet: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<NsdError> for Failure {
    fn from(e: NsdError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&args) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run with --help for usage");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn resolve(args: &Args) -> std::result::Result<(ExperimentConfig, bool), Failure> {
    let (mut cfg, preset_log_y) = match (&args.preset, &args.config) {
        (Some(name), None) => {
            let p = preset(name).map_err(|e| Failure::Usage(e.to_string()))?;
            (p.config, p.log_y)
        }
        (None, Some(path)) => (
            load_experiment(path).map_err(|e| Failure::Usage(e.to_string()))?,
            false,
        ),
        _ => {
            return Err(Failure::Usage(
                "exactly one of --preset or --config is required".into(),
            ))
        }
    };
    cfg.master_seed = args.seed;
    if let Some(r) = args.reps {
        cfg.replications = r as usize;
    }
    if let Some(d) = args.delta {
        for spec in &mut cfg.policies {
            spec.delta = d;
        }
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok((cfg, preset_log_y || args.log_y))
}

fn run(args: &Args) -> std::result::Result<(), Failure> {
    if args.list_presets {
        for name in PRESET_NAMES {
            let p = preset(name)?;
            say(format_args!("{name:<16} {}\n", p.description));
        }
        return Ok(());
    }
    let (cfg, log_y) = resolve(args)?;

    let out = &args.out;
    fs::create_dir_all(out).map_err(|e| NsdError::io(out, e))?;
    let traj_dir = out.join("trajectories");
    if args.dump_trajectories {
        fs::create_dir_all(&traj_dir).map_err(|e| NsdError::io(&traj_dir, e))?;
    }
    let header = run_header(&cfg);
    write_file(&out.join("run-header.txt"), header.as_bytes())?;
    if !args.quiet {
        say(format_args!("{header}"));
    }

    let labels: Vec<String> = cfg.policies.iter().map(|p| p.label()).collect();
    let sink = |rep: usize, idx: usize, record: &RunRecord| -> Result<()> {
        let Some(rows) = &record.trajectory else {
            return Ok(());
        };
        let path = traj_dir.join(format!("{}_rep{rep}.csv", sanitize(&labels[idx])));
        let file = File::create(&path).map_err(|e| NsdError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        write_trajectory_csv(rows, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| NsdError::io(&path, e))
    };
    let opts = RunOptions {
        threads: args.threads.map(|n| n as usize),
        keep_trajectories: args.dump_trajectories,
    };
    let result = run_experiment_with(&cfg, opts, args.dump_trajectories.then_some(&sink as _))?;

    write_csv(&out.join("results.csv"), |w| write_results_csv(&result, w))?;
    if args.dump_replications {
        write_csv(&out.join("replications.csv"), |w| write_replications_csv(&result, w))?;
    }
    if args.plot {
        let svg = svg::render(&result, &cfg.name, log_y);
        write_file(&out.join("plot.svg"), svg.as_bytes())?;
    }
    if !args.quiet {
        say(format_args!("{}", summary_table(&result)));
        say(format_args!("wrote {}\n", out.join("results.csv").display()));
    }
    Ok(())
}

/// Stdout that tolerates a closed pipe (`nsd-lab ... | head`).
fn say(args: std::fmt::Arguments<'_>) {
    let _ = std::io::stdout().lock().write_fmt(args);
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| NsdError::io(path, e))
}

fn write_csv(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| NsdError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| NsdError::io(path, e))
}

/// File-name-safe version of a policy label.
pub fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

/// Every constant that determines the run, one `key: value` per line.
pub fn run_header(cfg: &ExperimentConfig) -> String {
    let inst: &NsdInstance = cfg.source.base();
    let mut h = String::new();
    let _ = writeln!(h, "experiment: {}", cfg.name);
    let _ = writeln!(h, "horizon T: {}", inst.horizon());
    let _ = writeln!(h, "actions K: {}", inst.num_actions());
    let _ = writeln!(h, "signals S: {}", inst.num_signals());
    let _ = writeln!(h, "theta: {}", fmt_vec(inst.theta()));
    for seg in inst.segments() {
        for (a, row) in seg.transitions.iter().enumerate() {
            let _ = writeln!(h, "P[segment from {}][action {a}]: {}", seg.start, fmt_vec(row));
        }
    }
    match &cfg.source {
        InstanceSource::Fixed(_) => {
            let _ = writeln!(h, "change rounds: {:?}", inst.change_rounds());
        }
        InstanceSource::Shifted {
            change_rounds,
            pinned_shifts,
            ..
        } => {
            let _ = writeln!(h, "change rounds: {change_rounds:?}");
            match pinned_shifts {
                Some(s) => {
                    let _ = writeln!(h, "cyclic shifts: {s:?}");
                }
                None => {
                    let _ = writeln!(h, "cyclic shifts: uniform on 1..K-1, drawn per replication");
                }
            }
        }
    }
    let delay = match inst.delay() {
        DelayModel::Constant(d) => format!("constant {d}"),
        DelayModel::Geometric(p) => format!("geometric p = {p} (mean {})", (1.0 - p) / p),
    };
    let _ = writeln!(h, "delay: {delay}");
    let _ = writeln!(h, "reward model: {:?}", inst.reward_model());
    match inst.mixture() {
        Some(m) => {
            let _ = writeln!(h, "mixture alpha: {}", m.alpha);
            for (i, row) in m.mu.iter().enumerate() {
                let _ = writeln!(h, "mixture mu[{i}]: {}", fmt_vec(row));
            }
        }
        None => {
            let _ = writeln!(h, "mixture: none");
        }
    }
    for spec in &cfg.policies {
        let window = spec
            .window
            .map_or_else(|| "T".to_string(), |w| w.to_string());
        let _ = write!(h, "policy {}: delta = {}, W = {window}", spec.label(), spec.delta);
        if let Some(c) = spec.exploration {
            let _ = write!(h, ", exploration = {c}");
        }
        h.push('\n');
    }
    let _ = writeln!(h, "replications R: {}", cfg.replications);
    let _ = writeln!(h, "master seed: {}", cfg.master_seed);
    let _ = writeln!(
        h,
        "band: mean +/- {CI_Z} * sd / sqrt(R), sample sd (zero when R = 1)"
    );
    h
}

/// Final mean regret and 95% half-width per policy.
pub fn summary_table(result: &AggregateResult) -> String {
    let width = result
        .policies
        .iter()
        .map(|p| p.label.len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  {:>12}  {:>10}", "policy", "final regret", "+/- 95%");
    for p in &result.policies {
        let _ = writeln!(
            s,
            "{:<width$}  {:>12.1}  {:>10.1}",
            p.label,
            p.final_mean(),
            p.final_ci()
        );
    }
    s
}
