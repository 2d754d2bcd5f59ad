//! JSON experiment configs.
//!
//! Either a full experiment:
//!
//! ```json
//! {
//!   "name": "custom",
//!   "instance": { "K": 2, "S": 3, "T": 4000, "theta": [...], "segments": [...],
//!                 "delay": {"constant": 0}, "mixture": null },
//!   "changes": { "rounds": [1000, 2000], "shifts": [1, 1] },
//!   "policies": [ {"name": "nsd-ucrl2", "window": 800}, {"name": "ucb"} ],
//!   "replications": 20
//! }
//! ```
//!
//! or a bare instance, which runs `nsd-ucrl2`, `nsd-psrl` and `ucb` over
//! the whole horizon. With `changes`, the instance must have one segment and
//! its action rows are shifted at each listed round (randomly per
//! replication unless `shifts` is given).

use std::path::Path;

use serde::Deserialize;

use crate::error::{NsdError, Result};
use crate::instance::{InstanceFile, NsdInstance};
use crate::policies::{PolicyKind, PolicySpec};
use crate::runner::{ExperimentConfig, InstanceSource};

use super::presets::REPLICATIONS;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChangesFile {
    rounds: Vec<usize>,
    #[serde(default)]
    shifts: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    #[serde(default)]
    name: Option<String>,
    instance: InstanceFile,
    #[serde(default)]
    changes: Option<ChangesFile>,
    #[serde(default)]
    policies: Option<Vec<PolicySpec>>,
    #[serde(default)]
    replications: Option<usize>,
}

fn default_policies() -> Vec<PolicySpec> {
    vec![
        PolicySpec::new(PolicyKind::NsdUcrl2),
        PolicySpec::new(PolicyKind::NsdPsrl),
        PolicySpec::new(PolicyKind::Ucb),
    ]
}

/// Parse an experiment (or bare instance) from JSON text.
pub fn parse_experiment(text: &str, fallback_name: &str) -> Result<ExperimentConfig> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| NsdError::Config(format!("malformed JSON: {e}")))?;
    let file: ExperimentFile = if value.get("instance").is_some() {
        serde_json::from_value(value).map_err(|e| NsdError::Config(format!("bad experiment config: {e}")))?
    } else {
        let instance: InstanceFile = serde_json::from_value(value)
            .map_err(|e| NsdError::Config(format!("bad instance config: {e}")))?;
        ExperimentFile {
            name: None,
            instance,
            changes: None,
            policies: None,
            replications: None,
        }
    };

    let instance = NsdInstance::from_file(file.instance)?;
    let source = match file.changes {
        None => InstanceSource::Fixed(instance),
        Some(ChangesFile { rounds, shifts }) => InstanceSource::Shifted {
            base: instance,
            change_rounds: rounds,
            pinned_shifts: shifts,
        },
    };
    let cfg = ExperimentConfig {
        name: file.name.unwrap_or_else(|| fallback_name.to_string()),
        source,
        policies: file.policies.unwrap_or_else(default_policies),
        replications: file.replications.unwrap_or(REPLICATIONS),
        master_seed: 0,
    };
    // Surface bad shift schedules before any simulation starts.
    cfg.source.realize(0, 0)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| NsdError::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    parse_experiment(&text, &stem)
}
