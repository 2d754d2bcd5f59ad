//! Named experiment setups.
//!
//! All presets share the benchmark instance, `T = 8000`, `R = 50`,
//! `delta = 0.05` and, when non-stationary, change points at rounds
//! 2000, 4000 and 6000 with random cyclic shifts of the action rows.

use crate::error::{NsdError, Result};
use crate::instance::{
    DelayModel, Mixture, NsdInstance, BENCHMARK_THETA, BENCHMARK_TRANSITIONS,
};
use crate::policies::{PolicyKind, PolicySpec};
use crate::runner::{ExperimentConfig, InstanceSource};

pub const HORIZON: usize = 8000;
pub const CHANGE_ROUNDS: [usize; 3] = [2000, 4000, 6000];
pub const REPLICATIONS: usize = 50;
pub const WINDOW: usize = 800;

/// A resolved preset plus plotting hints.
#[derive(Debug, Clone)]
pub struct Preset {
    pub config: ExperimentConfig,
    pub log_y: bool,
    pub description: &'static str,
}

pub const PRESET_NAMES: [&str; 17] = [
    "fig2",
    "fig3-d100",
    "fig3-d500",
    "fig3-d1000",
    "figA-d100",
    "figA-d500",
    "figA-d1000",
    "fig4-favorable",
    "fig4-bad",
    "fig5-favorable",
    "fig5-bad",
    "fig6-a0.1",
    "fig6-a0.3",
    "fig6-a0.5",
    "stationary-d0",
    "stationary-d100",
    "random-delay",
];

fn shifted(delay: DelayModel, mixture: Option<Mixture>) -> Result<InstanceSource> {
    let mut base = NsdInstance::benchmark(HORIZON, delay)?;
    if let Some(m) = mixture {
        base = base.with_mixture(m)?;
    }
    Ok(InstanceSource::Shifted {
        base,
        change_rounds: CHANGE_ROUNDS.to_vec(),
        pinned_shifts: None,
    })
}

/// The first two benchmark actions only, stationary, no delay, with a
/// mixture of weight `alpha` and action means `mu`.
fn two_action_mixture(alpha: f64, mu: [f64; 2]) -> Result<InstanceSource> {
    let inst = NsdInstance::stationary(
        BENCHMARK_TRANSITIONS[..2].iter().map(|r| r.to_vec()).collect(),
        BENCHMARK_THETA.to_vec(),
        HORIZON,
        DelayModel::Constant(0),
    )?
    .with_mixture(Mixture {
        alpha,
        mu: vec![mu.to_vec()],
    })?;
    Ok(InstanceSource::Fixed(inst))
}

/// Every policy of the full comparison, windowed policies at `W = 800`.
pub fn all_policies() -> Vec<PolicySpec> {
    PolicyKind::ALL
        .into_iter()
        .map(|k| {
            let spec = PolicySpec::new(k);
            if k.uses_window() {
                spec.with_window(WINDOW)
            } else {
                spec
            }
        })
        .collect()
}

fn config(name: &str, source: InstanceSource, policies: Vec<PolicySpec>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        source,
        policies,
        replications: REPLICATIONS,
        master_seed: 0,
    }
}

/// Resolve a preset by name.
///
/// `fig2` compares window sizes against the change-aware, undelayed NSD
/// oracle (`oracle-nsd-nd`), which is how the window-sweep baseline ("knows
/// the change points, no delays") maps onto the registry.
pub fn preset(name: &str) -> Result<Preset> {
    let nsd = |w: usize| PolicySpec::new(PolicyKind::NsdUcrl2).with_window(w);
    let (config, log_y, description) = match name {
        "fig2" => (
            config(
                name,
                shifted(DelayModel::Constant(0), None)?,
                vec![
                    nsd(400),
                    nsd(800),
                    nsd(2000),
                    PolicySpec::new(PolicyKind::OracleNsdNd),
                ],
            ),
            false,
            "window sweep W in {400, 800, 2000}, D = 0, three change points",
        ),
        "fig3-d100" | "fig3-d500" | "fig3-d1000" | "figA-d100" | "figA-d500" | "figA-d1000" => {
            let delay: usize = name[name.find("-d").unwrap_or(0) + 2..]
                .parse()
                .map_err(|_| NsdError::Config(format!("bad delay in preset '{name}'")))?;
            (
                config(name, shifted(DelayModel::Constant(delay), None)?, all_policies()),
                name.starts_with("fig3"),
                "all policies, W = 800, three change points, constant delay",
            )
        }
        "fig4-favorable" | "fig4-bad" | "fig5-favorable" | "fig5-bad" => {
            let alpha = if name.starts_with("fig4") { 0.1 } else { 0.3 };
            let mu = if name.ends_with("favorable") {
                [0.9, 0.1]
            } else {
                [0.1, 0.9]
            };
            (
                config(
                    name,
                    two_action_mixture(alpha, mu)?,
                    vec![PolicySpec::new(PolicyKind::NsdUcrl2), PolicySpec::new(PolicyKind::Ucb)],
                ),
                false,
                "stationary misspecified model on actions 1-2, D = 0",
            )
        }
        "fig6-a0.1" | "fig6-a0.3" | "fig6-a0.5" => {
            let alpha: f64 = name["fig6-a".len()..]
                .parse()
                .map_err(|_| NsdError::Config(format!("bad alpha in preset '{name}'")))?;
            let mixture = Mixture {
                alpha,
                mu: vec![vec![0.1, 0.1, 0.1, 0.9]],
            };
            (
                config(
                    name,
                    shifted(DelayModel::Constant(500), Some(mixture))?,
                    vec![
                        nsd(WINDOW),
                        PolicySpec::new(PolicyKind::Ucb),
                        PolicySpec::new(PolicyKind::SwUcb).with_window(WINDOW),
                    ],
                ),
                false,
                "non-stationary misspecified model, D = 500, mu = (0.1, 0.1, 0.1, 0.9)",
            )
        }
        "stationary-d0" | "stationary-d100" => {
            let delay = if name.ends_with("d0") { 0 } else { 100 };
            (
                config(
                    name,
                    InstanceSource::Fixed(NsdInstance::benchmark(HORIZON, DelayModel::Constant(delay))?),
                    vec![
                        PolicySpec::new(PolicyKind::NsdUcrl2),
                        PolicySpec::new(PolicyKind::NsdPsrl),
                        PolicySpec::new(PolicyKind::Ucb),
                    ],
                ),
                false,
                "stationary benchmark instance, unwindowed policies",
            )
        }
        "random-delay" => (
            config(
                name,
                shifted(DelayModel::Geometric(0.01), None)?,
                vec![
                    nsd(WINDOW),
                    PolicySpec::new(PolicyKind::NsdPsrl).with_window(WINDOW),
                    PolicySpec::new(PolicyKind::Ucb),
                    PolicySpec::new(PolicyKind::SwUcb).with_window(WINDOW),
                ],
            ),
            true,
            "three change points, i.i.d. geometric delays with mean 99",
        ),
        other => {
            return Err(NsdError::Config(format!(
                "unknown preset '{other}'; available presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        config,
        log_y,
        description,
    })
}
