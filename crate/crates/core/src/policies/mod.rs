//! Decision rules and the name-keyed policy registry.
//!
//! | name            | rule                                                      |
//! |-----------------|-----------------------------------------------------------|
//! | `nsd-ucrl2`     | optimistic index over windowed transitions + reward UCBs |
//! | `nsd-psrl`      | posterior sampling on the same statistics                |
//! | `ucb`           | signal-agnostic UCB on delivered rewards                 |
//! | `sw-ucb`        | UCB restricted to rewards from the last `W` rounds       |
//! | `oracle-ucb`    | UCB restarted at every change point                      |
//! | `oracle-nsd`    | unwindowed NSD-UCRL2 whose transitions restart at changes |
//! | `oracle-*-nd`   | the oracles above, fed every reward without delay        |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NsdError, Result};
use crate::feedback::RoundFeedback;
use crate::instance::NsdInstance;
use crate::rng::SimRng;

mod psrl;
mod ucb;
mod ucrl2;

pub use psrl::NsdPsrl;
pub use ucb::Ucb;
pub use ucrl2::NsdUcrl2;

/// Default confidence level for every bound.
pub const DEFAULT_DELTA: f64 = 0.05;

/// When a policy receives rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardTiming {
    /// Through the environment's delay queue.
    Delayed,
    /// Immediately after acting (oracle information).
    Immediate,
}

/// A sequential decision rule.
///
/// The runner alternates `select_action` and `observe` once per round, and
/// calls `reset_segment` at the start of every change round when
/// `knows_changes` is true.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn select_action(&mut self, round: usize) -> Result<usize>;

    fn observe(&mut self, feedback: &RoundFeedback) -> Result<()>;

    fn reset_segment(&mut self, _round: usize) {}

    fn knows_changes(&self) -> bool {
        false
    }

    fn reward_timing(&self) -> RewardTiming {
        RewardTiming::Delayed
    }
}

/// Enforces the select/observe alternation.
#[derive(Debug, Clone, Default)]
pub(crate) struct Turn {
    pending: Option<(usize, usize)>,
}

impl Turn {
    pub(crate) fn begin(&mut self, round: usize, action: usize) -> Result<usize> {
        if let Some((r, _)) = self.pending {
            return Err(NsdError::Internal(format!(
                "round {round} selected before round {r} was observed"
            )));
        }
        self.pending = Some((round, action));
        Ok(action)
    }

    /// The action played in the round `feedback` answers.
    pub(crate) fn finish(&mut self, feedback: &RoundFeedback) -> Result<usize> {
        match self.pending.take() {
            Some((round, action)) if round == feedback.round => Ok(action),
            Some((round, _)) => Err(NsdError::Internal(format!(
                "feedback for round {} arrived while round {round} was pending",
                feedback.round
            ))),
            None => Err(NsdError::Internal(format!(
                "feedback for round {} arrived without a selected action",
                feedback.round
            ))),
        }
    }
}

/// Lowest index among the maximal entries.
pub(crate) fn argmax(values: &[f64]) -> usize {
    crate::instance::argmax_lowest(values).1
}

/// Shape of the problem a policy is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemDims {
    pub num_actions: usize,
    pub num_signals: usize,
    pub horizon: usize,
}

impl From<&NsdInstance> for ProblemDims {
    fn from(inst: &NsdInstance) -> Self {
        ProblemDims {
            num_actions: inst.num_actions(),
            num_signals: inst.num_signals(),
            horizon: inst.horizon(),
        }
    }
}

/// Every registered policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    NsdUcrl2,
    NsdPsrl,
    Ucb,
    SwUcb,
    OracleUcb,
    OracleNsd,
    OracleUcbNd,
    OracleNsdNd,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::NsdUcrl2,
        PolicyKind::NsdPsrl,
        PolicyKind::Ucb,
        PolicyKind::SwUcb,
        PolicyKind::OracleUcb,
        PolicyKind::OracleNsd,
        PolicyKind::OracleUcbNd,
        PolicyKind::OracleNsdNd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::NsdUcrl2 => "nsd-ucrl2",
            PolicyKind::NsdPsrl => "nsd-psrl",
            PolicyKind::Ucb => "ucb",
            PolicyKind::SwUcb => "sw-ucb",
            PolicyKind::OracleUcb => "oracle-ucb",
            PolicyKind::OracleNsd => "oracle-nsd",
            PolicyKind::OracleUcbNd => "oracle-ucb-nd",
            PolicyKind::OracleNsdNd => "oracle-nsd-nd",
        }
    }

    /// Whether the window parameter changes this policy's behaviour.
    pub fn uses_window(self) -> bool {
        matches!(
            self,
            PolicyKind::NsdUcrl2 | PolicyKind::NsdPsrl | PolicyKind::SwUcb
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = NsdError;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PolicyKind::ALL.iter().map(|k| k.name()).collect();
                NsdError::Config(format!(
                    "unknown policy '{s}'; known policies: {}",
                    names.join(", ")
                ))
            })
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = NsdError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(k: PolicyKind) -> String {
        k.name().to_string()
    }
}

/// A registry entry plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    #[serde(rename = "name")]
    pub kind: PolicyKind,
    /// Window size `W`; `None` means the whole horizon.
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Replaces the UCB exploration constant `2 log(2 T K / delta)`.
    #[serde(default)]
    pub exploration: Option<f64>,
    /// Display name; derived from the kind and window when absent.
    #[serde(default)]
    pub label: Option<String>,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            window: None,
            delta: DEFAULT_DELTA,
            exploration: None,
            label: None,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = Some(window);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        match (&self.label, self.window) {
            (Some(l), _) => l.clone(),
            (None, Some(w)) if self.kind.uses_window() => format!("{}@W={w}", self.kind),
            (None, _) => self.kind.name().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(NsdError::Config(format!(
                "{}: delta must lie in (0, 1), got {}",
                self.label(),
                self.delta
            )));
        }
        if self.window == Some(0) {
            return Err(NsdError::Config(format!("{}: window must be positive", self.label())));
        }
        if self.kind == PolicyKind::SwUcb && self.window.is_none() {
            return Err(NsdError::Config("sw-ucb requires a window".into()));
        }
        if let Some(c) = self.exploration {
            if !(c.is_finite() && c >= 0.0) {
                return Err(NsdError::Config(format!(
                    "{}: exploration constant must be finite and non-negative",
                    self.label()
                )));
            }
        }
        Ok(())
    }

    /// Instantiate the policy. `rng` is only consumed by randomized rules.
    pub fn build(&self, dims: ProblemDims, rng: SimRng) -> Result<Box<dyn Policy>> {
        self.validate()?;
        let label = self.label();
        let policy: Box<dyn Policy> = match self.kind {
            PolicyKind::NsdUcrl2 => Box::new(
                NsdUcrl2::new(dims, self.window, self.delta)?.with_name(label),
            ),
            PolicyKind::NsdPsrl => Box::new(NsdPsrl::new(dims, self.window, rng)?.with_name(label)),
            PolicyKind::Ucb => Box::new(self.tune(Ucb::new(dims, None, self.delta)?).with_name(label)),
            PolicyKind::SwUcb => {
                Box::new(self.tune(Ucb::new(dims, self.window, self.delta)?).with_name(label))
            }
            PolicyKind::OracleUcb => self.oracle(OracleBase::Ucb, false, dims, label)?,
            PolicyKind::OracleNsd => self.oracle(OracleBase::Nsd, false, dims, label)?,
            PolicyKind::OracleUcbNd => self.oracle(OracleBase::Ucb, true, dims, label)?,
            PolicyKind::OracleNsdNd => self.oracle(OracleBase::Nsd, true, dims, label)?,
        };
        Ok(policy)
    }

    fn tune(&self, ucb: Ucb) -> Ucb {
        match self.exploration {
            Some(c) => ucb.with_exploration_constant(c),
            None => ucb,
        }
    }

    fn oracle(
        &self,
        base: OracleBase,
        no_delay: bool,
        dims: ProblemDims,
        label: String,
    ) -> Result<Box<dyn Policy>> {
        Ok(match base {
            OracleBase::Ucb => {
                let mut p = self.tune(Ucb::new(dims, None, self.delta)?).with_name(label);
                p = p.with_restarts(true);
                if no_delay {
                    p = p.with_timing(RewardTiming::Immediate);
                }
                Box::new(p)
            }
            OracleBase::Nsd => {
                let mut p = NsdUcrl2::new(dims, None, self.delta)?
                    .with_name(label)
                    .with_restarts(true);
                if no_delay {
                    p = p.with_timing(RewardTiming::Immediate);
                }
                Box::new(p)
            }
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum OracleBase {
    Ucb,
    Nsd,
}

/// Build an oracle variant of `inner` (`"ucb"` or `"nsd"`).
///
/// With `knows_changes`, the policy restarts at every change round (UCB
/// fully, NSD-UCRL2 only its transition statistics since reward means are
/// stationary). The NSD variant never windows. `no_delay` feeds it every
/// reward in the round it was generated.
pub fn make_oracle(
    inner: &str,
    knows_changes: bool,
    no_delay: bool,
    dims: ProblemDims,
    delta: f64,
) -> Result<Box<dyn Policy>> {
    let timing = if no_delay {
        RewardTiming::Immediate
    } else {
        RewardTiming::Delayed
    };
    let name = format!(
        "oracle-{inner}{}{}",
        if knows_changes { "" } else { "-norestart" },
        if no_delay { "-nd" } else { "" }
    );
    match inner {
        "ucb" => Ok(Box::new(
            Ucb::new(dims, None, delta)?
                .with_name(name)
                .with_restarts(knows_changes)
                .with_timing(timing),
        )),
        "nsd" | "nsd-ucrl2" => Ok(Box::new(
            NsdUcrl2::new(dims, None, delta)?
                .with_name(name)
                .with_restarts(knows_changes)
                .with_timing(timing),
        )),
        other => Err(NsdError::Config(format!(
            "unknown oracle base '{other}'; expected 'ucb' or 'nsd'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> ProblemDims {
        ProblemDims {
            num_actions: 4,
            num_signals: 3,
            horizon: 100,
        }
    }

    #[test]
    fn registry_names_round_trip() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        let err = "epsilon-greedy".parse::<PolicyKind>().unwrap_err();
        assert!(err.to_string().contains("nsd-ucrl2"));
    }

    #[test]
    fn every_registered_policy_builds() {
        use rand::SeedableRng;
        for kind in PolicyKind::ALL {
            let spec = PolicySpec::new(kind).with_window(50);
            let p = spec.build(dims(), SimRng::seed_from_u64(0)).unwrap();
            assert_eq!(p.name(), spec.label());
            let oracle = kind.name().starts_with("oracle");
            assert_eq!(p.knows_changes(), oracle, "{kind}");
            let nd = kind.name().ends_with("-nd");
            assert_eq!(p.reward_timing() == RewardTiming::Immediate, nd, "{kind}");
        }
    }

    #[test]
    fn labels() {
        assert_eq!(PolicySpec::new(PolicyKind::NsdUcrl2).with_window(800).label(), "nsd-ucrl2@W=800");
        assert_eq!(PolicySpec::new(PolicyKind::OracleNsd).with_window(800).label(), "oracle-nsd");
        assert_eq!(PolicySpec::new(PolicyKind::Ucb).with_label("x").label(), "x");
    }

    #[test]
    fn spec_validation() {
        use rand::SeedableRng;
        let rng = || SimRng::seed_from_u64(0);
        assert!(PolicySpec::new(PolicyKind::SwUcb).build(dims(), rng()).is_err());
        assert!(PolicySpec::new(PolicyKind::Ucb).with_delta(1.5).build(dims(), rng()).is_err());
        assert!(PolicySpec::new(PolicyKind::NsdUcrl2).with_window(0).build(dims(), rng()).is_err());
    }

    #[test]
    fn spec_json() {
        let spec: PolicySpec = serde_json::from_str(r#"{"name": "sw-ucb", "window": 800}"#).unwrap();
        assert_eq!(spec.kind, PolicyKind::SwUcb);
        assert_eq!(spec.delta, DEFAULT_DELTA);
        assert!(serde_json::from_str::<PolicySpec>(r#"{"name": "greedy"}"#).is_err());
    }

    #[test]
    fn make_oracle_kinds() {
        let p = make_oracle("nsd", true, true, dims(), 0.05).unwrap();
        assert!(p.knows_changes());
        assert_eq!(p.reward_timing(), RewardTiming::Immediate);
        let q = make_oracle("ucb", false, false, dims(), 0.05).unwrap();
        assert!(!q.knows_changes());
        assert!(matches!(
            make_oracle("exp3", true, false, dims(), 0.05),
            Err(NsdError::Config(_))
        ));
    }

    #[test]
    fn turn_detects_desync() {
        let mut turn = Turn::default();
        let fb = |round| RoundFeedback {
            round,
            signal: 0,
            due_rewards: vec![],
        };
        assert!(turn.finish(&fb(1)).is_err());
        turn.begin(1, 2).unwrap();
        assert!(turn.begin(2, 0).is_err());
        assert!(turn.finish(&fb(2)).is_err());
        turn.begin(3, 1).unwrap();
        assert_eq!(turn.finish(&fb(3)).unwrap(), 1);
    }
}
