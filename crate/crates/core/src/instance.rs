//! Problem definition for a non-stationary delayed bandit with intermediate
//! observations.
//!
//! Pulling action `a` at round `t` reveals a categorical signal drawn from the
//! transition row `p_t(·|a)`; the reward, a Bernoulli draw with mean
//! `theta[signal]`, arrives only after a delay. Transition rows switch
//! abruptly at segment boundaries while `theta` stays fixed. An optional
//! mixture replaces the factored model with probability `alpha` by a uniform
//! signal and an action-dependent reward mean `mu[a]`.
//!
//! Rounds are 1-based; action and signal indices are 0-based.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NsdError, Result};

/// Row-sum tolerance for transition rows.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Reward means of the 4-action / 3-signal benchmark instance.
pub const BENCHMARK_THETA: [f64; 3] = [0.8, 0.4, 0.2];

/// Transition rows of the benchmark instance; expected rewards are
/// `0.70, 0.42, 0.28, 0.34`.
///
/// Row 2 is `(0.1, 0.1, 0.8)`. The commonly printed `(0.8, 0.1, 0.8)` sums to
/// 1.7; the corrected row follows the pattern of rows 0 and 1 and matches the
/// printed expected reward `0.28`.
pub const BENCHMARK_TRANSITIONS: [[f64; 3]; 4] = [
    [0.8, 0.1, 0.1],
    [0.1, 0.8, 0.1],
    [0.1, 0.1, 0.8],
    [0.1, 0.4, 0.5],
];

/// How many rounds pass between an action and the arrival of its reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayModel {
    /// Every reward arrives exactly `D` rounds later.
    Constant(usize),
    /// I.i.d. geometric delays (number of failures before the first success)
    /// with the given success probability.
    Geometric(f64),
}

impl DelayModel {
    pub fn constant(&self) -> Option<usize> {
        match *self {
            DelayModel::Constant(d) => Some(d),
            DelayModel::Geometric(_) => None,
        }
    }
}

/// Distribution of the delayed rewards given the signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardModel {
    #[default]
    Bernoulli,
    /// Rewards equal their mean; useful for debugging.
    Deterministic,
}

/// Misspecification mixture: with probability `alpha` the signal is uniform
/// and the reward has mean `mu[segment][action]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub alpha: f64,
    /// One row of `K` action means per segment.
    pub mu: Vec<Vec<f64>>,
}

/// A stationary stretch of rounds starting at `start` (1-based, inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    /// `K` rows, each a probability vector over the `S` signals.
    #[serde(rename = "P")]
    pub transitions: Vec<Vec<f64>>,
}

/// Full, validated problem definition. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NsdInstance {
    num_actions: usize,
    num_signals: usize,
    horizon: usize,
    theta: Vec<f64>,
    segments: Vec<Segment>,
    delay: DelayModel,
    mixture: Option<Mixture>,
    rewards: RewardModel,
    // Per segment: expected reward of each action, and (best value, best action).
    values: Vec<Vec<f64>>,
    best: Vec<(f64, usize)>,
}

/// On-disk JSON form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "K")]
    pub num_actions: usize,
    #[serde(rename = "S")]
    pub num_signals: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub theta: Vec<f64>,
    pub segments: Vec<Segment>,
    pub delay: DelayModel,
    #[serde(default)]
    pub mixture: Option<Mixture>,
    #[serde(default)]
    pub rewards: RewardModel,
}

impl NsdInstance {
    /// Build and validate a factored instance without mixture.
    pub fn new(
        num_actions: usize,
        num_signals: usize,
        horizon: usize,
        theta: Vec<f64>,
        segments: Vec<Segment>,
        delay: DelayModel,
    ) -> Result<Self> {
        Self::from_file(InstanceFile {
            num_actions,
            num_signals,
            horizon,
            theta,
            segments,
            delay,
            mixture: None,
            rewards: RewardModel::Bernoulli,
        })
    }

    /// Single-segment instance from explicit transition rows.
    pub fn stationary(
        transitions: Vec<Vec<f64>>,
        theta: Vec<f64>,
        horizon: usize,
        delay: DelayModel,
    ) -> Result<Self> {
        let num_actions = transitions.len();
        let num_signals = theta.len();
        Self::new(
            num_actions,
            num_signals,
            horizon,
            theta,
            vec![Segment {
                start: 1,
                transitions,
            }],
            delay,
        )
    }

    /// The stationary 4-action / 3-signal benchmark instance.
    pub fn benchmark(horizon: usize, delay: DelayModel) -> Result<Self> {
        Self::stationary(
            BENCHMARK_TRANSITIONS.iter().map(|r| r.to_vec()).collect(),
            BENCHMARK_THETA.to_vec(),
            horizon,
            delay,
        )
    }

    /// Validate an instance read from its JSON form.
    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let InstanceFile {
            num_actions: k,
            num_signals: s,
            horizon,
            theta,
            segments,
            delay,
            mixture,
            rewards,
        } = file;

        let invalid = |msg: String| Err(NsdError::InvalidInstance(msg));
        if k < 2 {
            return invalid(format!("need at least 2 actions, got {k}"));
        }
        if s < 2 {
            return invalid(format!("need at least 2 signals, got {s}"));
        }
        if horizon == 0 {
            return invalid("horizon must be positive".into());
        }
        if theta.len() != s {
            return invalid(format!("theta has {} entries, expected {s}", theta.len()));
        }
        check_unit_interval("theta", &theta)?;
        if segments.is_empty() {
            return invalid("at least one segment is required".into());
        }
        if segments[0].start != 1 {
            return invalid(format!(
                "first segment must start at round 1, got {}",
                segments[0].start
            ));
        }
        for pair in segments.windows(2) {
            if pair[1].start <= pair[0].start {
                return invalid(format!(
                    "segment starts must be strictly increasing ({} then {})",
                    pair[0].start, pair[1].start
                ));
            }
        }
        if let Some(last) = segments.last() {
            if last.start > horizon {
                return invalid(format!(
                    "segment start {} is beyond the horizon {horizon}",
                    last.start
                ));
            }
        }
        for (idx, seg) in segments.iter().enumerate() {
            if seg.transitions.len() != k {
                return invalid(format!(
                    "segment {idx} has {} transition rows, expected {k}",
                    seg.transitions.len()
                ));
            }
            for (a, row) in seg.transitions.iter().enumerate() {
                check_probability_row(row, s)
                    .map_err(|m| NsdError::InvalidInstance(format!("segment {idx}, action {a}: {m}")))?;
            }
        }
        match delay {
            DelayModel::Geometric(p) if !(p > 0.0 && p <= 1.0) => {
                return invalid(format!("geometric delay parameter must lie in (0, 1], got {p}"));
            }
            _ => {}
        }

        let mixture = match mixture {
            None => None,
            Some(Mixture { alpha, mut mu }) => {
                if !(0.0..=1.0).contains(&alpha) {
                    return invalid(format!("mixture alpha must lie in [0, 1], got {alpha}"));
                }
                if mu.len() == 1 && segments.len() > 1 {
                    mu = vec![mu[0].clone(); segments.len()];
                }
                if mu.len() != segments.len() {
                    return invalid(format!(
                        "mixture has {} mu rows, expected 1 or one per segment ({})",
                        mu.len(),
                        segments.len()
                    ));
                }
                for row in &mu {
                    if row.len() != k {
                        return invalid(format!("mu row has {} entries, expected {k}", row.len()));
                    }
                    check_unit_interval("mu", row)?;
                }
                Some(Mixture { alpha, mu })
            }
        };

        let values: Vec<Vec<f64>> = segments
            .iter()
            .enumerate()
            .map(|(idx, seg)| {
                seg.transitions
                    .iter()
                    .enumerate()
                    .map(|(a, row)| {
                        let factored: f64 = row.iter().zip(&theta).map(|(p, t)| p * t).sum();
                        match &mixture {
                            Some(m) => m.alpha * m.mu[idx][a] + (1.0 - m.alpha) * factored,
                            None => factored,
                        }
                    })
                    .collect()
            })
            .collect();
        let best = values.iter().map(|v| argmax_lowest(v)).collect();

        Ok(NsdInstance {
            num_actions: k,
            num_signals: s,
            horizon,
            theta,
            segments,
            delay,
            mixture,
            rewards,
            values,
            best,
        })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            num_actions: self.num_actions,
            num_signals: self.num_signals,
            horizon: self.horizon,
            theta: self.theta.clone(),
            segments: self.segments.clone(),
            delay: self.delay,
            mixture: self.mixture.clone(),
            rewards: self.rewards,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| NsdError::InvalidInstance(format!("malformed instance JSON: {e}")))?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| NsdError::io(path, e))?;
        let file: InstanceFile = serde_json::from_str(&text).map_err(|source| NsdError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_file(file)
    }

    pub fn with_mixture(self, mixture: Mixture) -> Result<Self> {
        let mut file = self.to_file();
        file.mixture = Some(mixture);
        Self::from_file(file)
    }

    pub fn with_delay(self, delay: DelayModel) -> Result<Self> {
        let mut file = self.to_file();
        file.delay = delay;
        Self::from_file(file)
    }

    pub fn with_reward_model(mut self, rewards: RewardModel) -> Self {
        self.rewards = rewards;
        self
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_signals(&self) -> usize {
        self.num_signals
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn delay(&self) -> DelayModel {
        self.delay
    }

    pub fn mixture(&self) -> Option<&Mixture> {
        self.mixture.as_ref()
    }

    /// Mixing weight; zero when no mixture is configured.
    pub fn alpha(&self) -> f64 {
        self.mixture.as_ref().map_or(0.0, |m| m.alpha)
    }

    pub fn reward_model(&self) -> RewardModel {
        self.rewards
    }

    /// Rounds at which a new segment begins (every start except the first).
    pub fn change_rounds(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    pub fn is_change_round(&self, round: usize) -> bool {
        self.segments.iter().skip(1).any(|s| s.start == round)
    }

    /// Index of the segment active at `round`. Rounds past the horizon map to
    /// the last segment.
    pub fn segment_index(&self, round: usize) -> usize {
        self.segments.partition_point(|s| s.start <= round).saturating_sub(1)
    }

    /// First round of the segment active at `round`.
    pub fn segment_start(&self, round: usize) -> usize {
        self.segments[self.segment_index(round)].start
    }

    /// `p_t(·|action)`, without range checks beyond slice indexing.
    pub fn transition_row(&self, round: usize, action: usize) -> &[f64] {
        &self.segments[self.segment_index(round)].transitions[action]
    }

    /// Reward mean of `action` on the mixture branch at `round`.
    pub fn mixture_mean(&self, round: usize, action: usize) -> Option<f64> {
        self.mixture
            .as_ref()
            .map(|m| m.mu[self.segment_index(round)][action])
    }

    fn check_round(&self, round: usize) -> Result<()> {
        if round == 0 || round > self.horizon {
            return Err(NsdError::Argument(format!(
                "round {round} outside 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.num_actions {
            return Err(NsdError::Argument(format!(
                "action {action} outside 0..{}",
                self.num_actions
            )));
        }
        Ok(())
    }

    /// `rho_t(a) = alpha * mu_a + (1 - alpha) * p_t(a)^T theta`.
    pub fn expected_reward(&self, round: usize, action: usize) -> Result<f64> {
        self.check_round(round)?;
        self.check_action(action)?;
        Ok(self.values[self.segment_index(round)][action])
    }

    /// Best expected reward at `round` and the lowest-index action achieving it.
    pub fn optimal_value(&self, round: usize) -> Result<(f64, usize)> {
        self.check_round(round)?;
        Ok(self.best[self.segment_index(round)])
    }

    /// Expected rewards of all actions in the segment active at `round`.
    pub fn action_values(&self, round: usize) -> &[f64] {
        &self.values[self.segment_index(round)]
    }

    /// Instantaneous regret `rho*_t - rho_t(action)`.
    pub fn gap(&self, round: usize, action: usize) -> Result<f64> {
        let (best, _) = self.optimal_value(round)?;
        Ok(best - self.expected_reward(round, action)?)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

fn check_unit_interval(name: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(NsdError::InvalidInstance(format!(
            "{name} entries must lie in [0, 1], found {v}"
        )));
    }
    Ok(())
}

fn check_probability_row(row: &[f64], num_signals: usize) -> std::result::Result<(), String> {
    if row.len() != num_signals {
        return Err(format!("row has {} entries, expected {num_signals}", row.len()));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(format!("row {row:?} has negative or non-finite entries"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(format!("row {row:?} sums to {sum}, not 1"));
    }
    Ok(())
}
