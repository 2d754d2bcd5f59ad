//! Monte-Carlo experiment engine.
//!
//! Each replication realizes one instance (drawing its change-point shifts)
//! and one environment stream, and replays both for every policy so policy
//! comparisons share their randomness. Replications run in parallel and are
//! reduced in replication order, so results only depend on the master seed.

use std::io::Write;

use rayon::prelude::*;

use crate::environment::{generate_shifted_instance, Environment, SwitchSchedule, TrajectoryRow};
use crate::error::{NsdError, Result};
use crate::feedback::RegretTrace;
use crate::instance::NsdInstance;
use crate::policies::{Policy, PolicySpec, ProblemDims, RewardTiming};
use crate::rng::{stream, SimRng, StreamPurpose};

/// Normal quantile for two-sided 95% bands.
pub const CI_Z: f64 = 1.96;

/// Where each replication's instance comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    /// The same instance every replication.
    Fixed(NsdInstance),
    /// A single-segment base whose action rows are cyclically shifted at each
    /// change round. Shifts are drawn per replication unless pinned.
    Shifted {
        base: NsdInstance,
        change_rounds: Vec<usize>,
        pinned_shifts: Option<Vec<usize>>,
    },
}

impl InstanceSource {
    pub fn base(&self) -> &NsdInstance {
        match self {
            InstanceSource::Fixed(inst) => inst,
            InstanceSource::Shifted { base, .. } => base,
        }
    }

    pub fn horizon(&self) -> usize {
        self.base().horizon()
    }

    pub fn dims(&self) -> ProblemDims {
        self.base().into()
    }

    pub fn change_rounds(&self) -> Vec<usize> {
        match self {
            InstanceSource::Fixed(inst) => inst.change_rounds(),
            InstanceSource::Shifted { change_rounds, .. } => change_rounds.clone(),
        }
    }

    /// The instance used by replication `rep`.
    pub fn realize(&self, master_seed: u64, rep: usize) -> Result<NsdInstance> {
        match self {
            InstanceSource::Fixed(inst) => Ok(inst.clone()),
            InstanceSource::Shifted {
                base,
                change_rounds,
                pinned_shifts,
            } => {
                let k = base.num_actions();
                let schedule = match pinned_shifts {
                    Some(shifts) => SwitchSchedule::pinned(change_rounds.clone(), shifts.clone(), k)?,
                    None => {
                        let mut rng = stream(master_seed, rep as u64, StreamPurpose::Schedule);
                        SwitchSchedule::draw(change_rounds.clone(), k, &mut rng)?
                    }
                };
                generate_shifted_instance(base, &schedule)
            }
        }
    }
}

/// A full experiment: instance source, policies and replication count.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: InstanceSource,
    pub policies: Vec<PolicySpec>,
    pub replications: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(NsdError::Config("at least one replication is required".into()));
        }
        if self.policies.is_empty() {
            return Err(NsdError::Config("no policies configured".into()));
        }
        for spec in &self.policies {
            spec.validate()?;
        }
        let mut labels: Vec<String> = self.policies.iter().map(PolicySpec::label).collect();
        labels.sort();
        if let Some(dup) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(NsdError::Config(format!(
                "policy label '{}' is used twice; set distinct labels",
                dup[0]
            )));
        }
        if let InstanceSource::Shifted { base, .. } = &self.source {
            if base.segments().len() != 1 {
                return Err(NsdError::Config(
                    "a shifted instance source needs a single-segment base".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One simulated trajectory of one policy.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub trace: RegretTrace,
    pub actions: Vec<usize>,
    pub trajectory: Option<Vec<TrajectoryRow>>,
}

/// Drive `policy` through every round of `instance`.
///
/// Each round: restart hook at change rounds (if the policy knows them),
/// select, step the environment, observe.
pub fn simulate(
    instance: &NsdInstance,
    policy: &mut dyn Policy,
    env_rng: SimRng,
    keep_trajectory: bool,
) -> Result<RunRecord> {
    let mut env = Environment::new(instance, env_rng);
    if keep_trajectory {
        env = env.with_trajectory_log();
    }
    let horizon = instance.horizon();
    let mut actions = Vec::with_capacity(horizon);
    let restarts = policy.knows_changes();
    let immediate = policy.reward_timing() == RewardTiming::Immediate;
    for round in 1..=horizon {
        if restarts && instance.is_change_round(round) {
            policy.reset_segment(round);
        }
        let action = policy.select_action(round)?;
        let mut feedback = env.step(action)?;
        if immediate {
            feedback.due_rewards = env.last_emitted().into_iter().collect();
        }
        policy.observe(&feedback)?;
        actions.push(action);
    }
    let (trace, trajectory) = env.into_parts();
    Ok(RunRecord {
        trace,
        actions,
        trajectory,
    })
}

/// Run one policy for replication `rep` of `master_seed`; the environment
/// and the policy draw from disjoint streams.
pub fn run_one_record(
    instance: &NsdInstance,
    spec: &PolicySpec,
    master_seed: u64,
    rep: usize,
    keep_trajectory: bool,
) -> Result<RunRecord> {
    let rep = rep as u64;
    let mut policy = spec.build(instance.into(), stream(master_seed, rep, StreamPurpose::Policy))?;
    simulate(
        instance,
        policy.as_mut(),
        stream(master_seed, rep, StreamPurpose::Environment),
        keep_trajectory,
    )
}

/// Regret trace of one policy on one instance for a seed.
pub fn run_one(instance: &NsdInstance, spec: &PolicySpec, seed: u64) -> Result<RegretTrace> {
    Ok(run_one_record(instance, spec, seed, 0, false)?.trace)
}

/// Mean curve and confidence band of one policy across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyAggregate {
    pub label: String,
    /// `R x T` cumulative regret, one row per replication.
    pub cumulative: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// `1.96 * sd / sqrt(R)` per round; zero when `R = 1`.
    pub ci_half_width: Vec<f64>,
}

impl PolicyAggregate {
    fn from_rows(label: String, cumulative: Vec<Vec<f64>>) -> Self {
        let reps = cumulative.len();
        let horizon = cumulative.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; horizon];
        let mut half = vec![0.0; horizon];
        for t in 0..horizon {
            let m = cumulative.iter().map(|row| row[t]).sum::<f64>() / reps as f64;
            mean[t] = m;
            if reps > 1 {
                let var = cumulative.iter().map(|row| (row[t] - m).powi(2)).sum::<f64>()
                    / (reps - 1) as f64;
                half[t] = CI_Z * var.sqrt() / (reps as f64).sqrt();
            }
        }
        PolicyAggregate {
            label,
            cumulative,
            mean,
            ci_half_width: half,
        }
    }

    /// Final cumulative regret of every replication.
    pub fn finals(&self) -> Vec<f64> {
        self.cumulative
            .iter()
            .map(|row| row.last().copied().unwrap_or(0.0))
            .collect()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_ci(&self) -> f64 {
        self.ci_half_width.last().copied().unwrap_or(0.0)
    }

    /// Mean cumulative regret after `round` (1-based).
    pub fn mean_at(&self, round: usize) -> f64 {
        self.mean[round - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub horizon: usize,
    pub replications: usize,
    pub policies: Vec<PolicyAggregate>,
}

impl AggregateResult {
    pub fn policy(&self, label: &str) -> Option<&PolicyAggregate> {
        self.policies.iter().find(|p| p.label == label)
    }
}

/// Execution knobs that do not affect results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub keep_trajectories: bool,
}

/// Receives every finished run as `(replication, policy index, record)`.
pub type RunSink<'a> = dyn Fn(usize, usize, &RunRecord) -> Result<()> + Sync + 'a;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    run_experiment_with(cfg, RunOptions::default(), None)
}

pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    opts: RunOptions,
    sink: Option<&RunSink<'_>>,
) -> Result<AggregateResult> {
    cfg.validate()?;
    let run_rep = |rep: usize| -> Result<Vec<Vec<f64>>> {
        let instance = cfg.source.realize(cfg.master_seed, rep)?;
        cfg.policies
            .iter()
            .enumerate()
            .map(|(idx, spec)| {
                let record =
                    run_one_record(&instance, spec, cfg.master_seed, rep, opts.keep_trajectories)?;
                if let Some(sink) = sink {
                    sink(rep, idx, &record)?;
                }
                Ok(record.trace.cumulative().to_vec())
            })
            .collect()
    };
    let per_rep: Vec<Vec<Vec<f64>>> = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| NsdError::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| (0..cfg.replications).into_par_iter().map(run_rep).collect::<Result<_>>())?,
        None => (0..cfg.replications)
            .into_par_iter()
            .map(run_rep)
            .collect::<Result<_>>()?,
    };

    let mut columns: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(cfg.replications); cfg.policies.len()];
    for rep in per_rep {
        for (idx, curve) in rep.into_iter().enumerate() {
            columns[idx].push(curve);
        }
    }
    let policies = cfg
        .policies
        .iter()
        .zip(columns)
        .map(|(spec, rows)| PolicyAggregate::from_rows(spec.label(), rows))
        .collect();
    Ok(AggregateResult {
        horizon: cfg.source.horizon(),
        replications: cfg.replications,
        policies,
    })
}

pub const RESULTS_HEADER: &str = "policy,round,mean_cum_regret,ci_low,ci_high";

/// `policy,round,mean_cum_regret,ci_low,ci_high`, `T` rows per policy.
pub fn write_results_csv<W: Write>(result: &AggregateResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for p in &result.policies {
        for (t, (m, h)) in p.mean.iter().zip(&p.ci_half_width).enumerate() {
            writeln!(out, "{},{},{},{},{}", p.label, t + 1, m, m - h, m + h)?;
        }
    }
    Ok(())
}

/// `policy,replication,final_regret`: one row per policy and replication.
pub fn write_replications_csv<W: Write>(result: &AggregateResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "policy,replication,final_regret")?;
    for p in &result.policies {
        for (rep, v) in p.finals().iter().enumerate() {
            writeln!(out, "{},{},{}", p.label, rep, v)?;
        }
    }
    Ok(())
}
