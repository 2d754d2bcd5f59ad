use crate::error::Result;
use crate::estimators::{
    reward_ucbs, transition_radius, ConfidenceConfig, DelayedRewardStats, WindowStats,
};
use crate::feedback::RoundFeedback;
use crate::optimism::optimistic_value;

use super::{argmax, Policy, ProblemDims, RewardTiming, Turn};

/// Optimistic policy for non-stationary delayed bandits with intermediate
/// signals.
///
/// After pulling every action once, it plays the action with the largest
/// optimistic value: the best `q^T U` over transition vectors within an L1
/// ball of the windowed estimate, where `U` holds per-signal reward UCBs
/// built from every delivered reward.
#[derive(Debug, Clone)]
pub struct NsdUcrl2 {
    name: String,
    num_actions: usize,
    transitions: WindowStats,
    rewards: DelayedRewardStats,
    confidence: ConfidenceConfig,
    segment_start: usize,
    restarts: bool,
    timing: RewardTiming,
    turn: Turn,
}

impl NsdUcrl2 {
    /// `window = None` keeps all observations; the confidence radius then
    /// uses `W = T`.
    pub fn new(dims: ProblemDims, window: Option<usize>, delta: f64) -> Result<Self> {
        let effective = window.unwrap_or(dims.horizon).max(1);
        Ok(NsdUcrl2 {
            name: "nsd-ucrl2".into(),
            num_actions: dims.num_actions,
            transitions: WindowStats::new(window, dims.num_actions, dims.num_signals)?,
            rewards: DelayedRewardStats::new(dims.num_signals),
            confidence: ConfidenceConfig::new(
                delta,
                dims.horizon,
                effective,
                dims.num_actions,
                dims.num_signals,
            )?,
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

    /// Restart transition statistics (and the pull-each-once phase) at every
    /// change round. Reward statistics are kept.
    pub fn with_restarts(mut self, restarts: bool) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_timing(mut self, timing: RewardTiming) -> Self {
        self.timing = timing;
        self
    }

    pub fn confidence(&self) -> &ConfidenceConfig {
        &self.confidence
    }

    pub fn transition_stats(&self) -> &WindowStats {
        &self.transitions
    }

    pub fn reward_stats(&self) -> &DelayedRewardStats {
        &self.rewards
    }

    /// Current reward upper bounds `U(s)`.
    pub fn reward_upper_bounds(&self) -> Vec<f64> {
        reward_ucbs(&self.rewards, &self.confidence)
    }

    /// Optimistic value of every action under the current statistics.
    pub fn optimistic_indices(&self) -> Vec<f64> {
        let upper = self.reward_upper_bounds();
        (0..self.num_actions)
            .map(|a| {
                let p_hat = self.transitions.transition_estimate(a);
                let radius = transition_radius(&self.confidence, self.transitions.count(a));
                optimistic_value(&p_hat, radius, &upper)
                    .expect("windowed estimates are sub-stochastic and bounds are finite")
                    .value
            })
            .collect()
    }

    fn in_initial_sweep(&self, round: usize) -> Option<usize> {
        let offset = round.checked_sub(self.segment_start)?;
        (offset < self.num_actions).then_some(offset)
    }
}

impl Policy for NsdUcrl2 {
    fn name(&self) -> &str {
        &self.name
    }

    fn select_action(&mut self, round: usize) -> Result<usize> {
        let action = match self.in_initial_sweep(round) {
            Some(a) => a,
            None => argmax(&self.optimistic_indices()),
        };
        self.turn.begin(round, action)
    }

    fn observe(&mut self, feedback: &RoundFeedback) -> Result<()> {
        let action = self.turn.finish(feedback)?;
        self.transitions.push(action, feedback.signal);
        self.rewards.note_emitted(feedback.signal);
        for event in &feedback.due_rewards {
            self.rewards.ingest(event);
        }
        Ok(())
    }

    fn reset_segment(&mut self, round: usize) {
        if self.restarts {
            self.transitions.reset();
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::RewardEvent;
    use crate::instance::{NsdInstance, DelayModel, BENCHMARK_THETA, BENCHMARK_TRANSITIONS};
    use crate::optimism::optimistic_value;

    fn dims() -> ProblemDims {
        ProblemDims {
            num_actions: 4,
            num_signals: 3,
            horizon: 8000,
        }
    }

    fn feed(p: &mut NsdUcrl2, round: usize, signal: usize, due: Vec<RewardEvent>) -> usize {
        let a = p.select_action(round).unwrap();
        p.observe(&RoundFeedback {
            round,
            signal,
            due_rewards: due,
        })
        .unwrap();
        a
    }

    #[test]
    fn initial_sweep_pulls_each_action_once() {
        let mut p = NsdUcrl2::new(dims(), Some(800), 0.05).unwrap();
        for t in 1..=4 {
            assert_eq!(feed(&mut p, t, 0, vec![]), t - 1);
        }
    }

    #[test]
    fn symmetric_statistics_tie_to_first_action() {
        let mut p = NsdUcrl2::new(dims(), Some(800), 0.05).unwrap();
        // Every action saw the same signal once; no rewards yet.
        for t in 1..=4 {
            feed(&mut p, t, 2, vec![]);
        }
        let idx = p.optimistic_indices();
        assert!(idx.windows(2).all(|w| w[0] == w[1]), "{idx:?}");
        assert_eq!(p.select_action(5).unwrap(), 0);
    }

    #[test]
    fn perfect_statistics_pick_the_best_action() {
        // With exact transitions, exact rewards and zero radii the index of
        // each action is its expected reward.
        let inst = NsdInstance::benchmark(10, DelayModel::Constant(0)).unwrap();
        let values: Vec<f64> = BENCHMARK_TRANSITIONS
            .iter()
            .map(|row| optimistic_value(row, 0.0, &BENCHMARK_THETA).unwrap().value)
            .collect();
        assert_eq!(argmax(&values), inst.optimal_value(1).unwrap().1);
        assert_eq!(argmax(&values), 0);
    }

    #[test]
    fn oracle_restart_keeps_rewards_and_clears_transitions() {
        let mut p = NsdUcrl2::new(dims(), None, 0.05).unwrap().with_restarts(true);
        for t in 1..=10 {
            feed(
                &mut p,
                t,
                t % 3,
                vec![RewardEvent {
                    origin_round: t,
                    signal: t % 3,
                    reward: 1.0,
                }],
            );
        }
        assert_eq!(p.transition_stats().len(), 10);
        let before: Vec<usize> = (0..3).map(|s| p.reward_stats().count(s)).collect();
        p.reset_segment(11);
        assert!(p.transition_stats().is_empty());
        for a in 0..4 {
            assert_eq!(p.transition_stats().count(a), 0);
        }
        let after: Vec<usize> = (0..3).map(|s| p.reward_stats().count(s)).collect();
        assert_eq!(before, after);
        // The sweep restarts from the reset round.
        assert_eq!(feed(&mut p, 11, 0, vec![]), 0);
        assert_eq!(feed(&mut p, 12, 0, vec![]), 1);
    }

    #[test]
    fn reset_is_ignored_without_restarts() {
        let mut p = NsdUcrl2::new(dims(), Some(50), 0.05).unwrap();
        for t in 1..=6 {
            feed(&mut p, t, 0, vec![]);
        }
        p.reset_segment(7);
        assert_eq!(p.transition_stats().len(), 6);
    }
}
