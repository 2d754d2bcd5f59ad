use std::collections::BTreeMap;

use crate::error::{NsdError, Result};
use crate::feedback::RoundFeedback;

use super::{argmax, Policy, ProblemDims, RewardTiming, Turn};

/// Signal-agnostic UCB on delivered rewards.
///
/// A reward is credited to the action played in its origin round. With a
/// window `W`, only rewards whose origin lies in `(t - W, t]` count at round
/// `t` (SW-UCB). The index is `min(1, mean + sqrt(C / max(1, n)))` with
/// `C = 2 log(2 T K / delta)` unless overridden.
#[derive(Debug, Clone)]
pub struct Ucb {
    name: String,
    num_actions: usize,
    window: Option<usize>,
    exploration: f64,
    counts: Vec<usize>,
    sums: Vec<f64>,
    // origin round -> (action, reward), only kept when windowed
    recent: BTreeMap<usize, (usize, f64)>,
    played: Vec<usize>,
    segment_start: usize,
    restarts: bool,
    timing: RewardTiming,
    turn: Turn,
}

impl Ucb {
    pub fn new(dims: ProblemDims, window: Option<usize>, delta: f64) -> Result<Self> {
        if window == Some(0) {
            return Err(NsdError::Argument("window size must be at least 1".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(NsdError::Argument(format!("delta must lie in (0, 1), got {delta}")));
        }
        let k = dims.num_actions;
        Ok(Ucb {
            name: if window.is_some() { "sw-ucb" } else { "ucb" }.into(),
            num_actions: k,
            window,
            exploration: 2.0 * (2.0 * dims.horizon as f64 * k as f64 / delta).ln(),
            counts: vec![0; k],
            sums: vec![0.0; k],
            recent: BTreeMap::new(),
            played: Vec::with_capacity(dims.horizon),
            segment_start: 1,
            restarts: false,
            timing: RewardTiming::Delayed,
            turn: Turn::default(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_exploration_constant(mut self, c: f64) -> Self {
        self.exploration = c;
        self
    }

    /// Forget everything at every change round.
    pub fn with_restarts(mut self, restarts: bool) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_timing(mut self, timing: RewardTiming) -> Self {
        self.timing = timing;
        self
    }

    pub fn exploration_constant(&self) -> f64 {
        self.exploration
    }

    /// Delivered-reward count of each action (within the window, if any).
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn indices(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.sums)
            .map(|(&n, &sum)| {
                let n = n.max(1) as f64;
                (sum / n + (self.exploration / n).sqrt()).min(1.0)
            })
            .collect()
    }

    fn evict_before(&mut self, round: usize) {
        let Some(w) = self.window else { return };
        // Keep origins u with round - w < u.
        while let Some((&origin, &(action, reward))) = self.recent.first_key_value() {
            if origin + w > round {
                break;
            }
            self.recent.pop_first();
            self.counts[action] -= 1;
            self.sums[action] -= reward;
        }
    }

    #[cfg(test)]
    pub(crate) fn set_statistics(&mut self, counts: Vec<usize>, sums: Vec<f64>) {
        self.counts = counts;
        self.sums = sums;
    }
}

impl Policy for Ucb {
    fn name(&self) -> &str {
        &self.name
    }

    fn select_action(&mut self, round: usize) -> Result<usize> {
        self.evict_before(round);
        let offset = round.saturating_sub(self.segment_start);
        let action = if round >= self.segment_start && offset < self.num_actions {
            offset
        } else {
            argmax(&self.indices())
        };
        self.turn.begin(round, action)
    }

    fn observe(&mut self, feedback: &RoundFeedback) -> Result<()> {
        let action = self.turn.finish(feedback)?;
        if self.played.len() + 1 != feedback.round {
            return Err(NsdError::Internal(format!(
                "{}: expected feedback for round {}, got {}",
                self.name,
                self.played.len() + 1,
                feedback.round
            )));
        }
        self.played.push(action);
        for event in &feedback.due_rewards {
            if event.origin_round < self.segment_start {
                continue;
            }
            let credited = *self.played.get(event.origin_round - 1).ok_or_else(|| {
                NsdError::Internal(format!(
                    "reward from round {} arrived before it was played",
                    event.origin_round
                ))
            })?;
            if self.window.is_some() {
                self.recent.insert(event.origin_round, (credited, event.reward));
            }
            self.counts[credited] += 1;
            self.sums[credited] += event.reward;
        }
        Ok(())
    }

    fn reset_segment(&mut self, round: usize) {
        if self.restarts {
            self.counts.iter_mut().for_each(|c| *c = 0);
            self.sums.iter_mut().for_each(|s| *s = 0.0);
            self.recent.clear();
            self.segment_start = round;
        }
    }

    fn knows_changes(&self) -> bool {
        self.restarts
    }

    fn reward_timing(&self) -> RewardTiming {
        self.timing
    }
}
