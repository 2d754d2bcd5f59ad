use rand_distr::{Distribution, Gamma};

use crate::error::Result;
use crate::estimators::{DelayedRewardStats, WindowStats};
use crate::feedback::RoundFeedback;
use crate::rng::SimRng;

use super::{argmax, Policy, ProblemDims, Turn};

/// Posterior-sampling heuristic on the same statistics as NSD-UCRL2.
///
/// Transition rows are drawn from `Dirichlet(1 + N^W(a, .))` and signal
/// reward means from `Beta(1 + successes, 1 + failures)` over delivered
/// rewards; the action that is best in the sampled model is played. There is
/// no forced initial sweep since the flat priors already explore.
#[derive(Debug, Clone)]
pub struct NsdPsrl {
    name: String,
    num_actions: usize,
    num_signals: usize,
    transitions: WindowStats,
    rewards: DelayedRewardStats,
    rng: SimRng,
    turn: Turn,
}

impl NsdPsrl {
    pub fn new(dims: ProblemDims, window: Option<usize>, rng: SimRng) -> Result<Self> {
        Ok(NsdPsrl {
            name: "nsd-psrl".into(),
            num_actions: dims.num_actions,
            num_signals: dims.num_signals,
            transitions: WindowStats::new(window, dims.num_actions, dims.num_signals)?,
            rewards: DelayedRewardStats::new(dims.num_signals),
            rng,
            turn: Turn::default(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn transition_stats(&self) -> &WindowStats {
        &self.transitions
    }

    pub fn reward_stats(&self) -> &DelayedRewardStats {
        &self.rewards
    }

    /// Beta posterior parameters `(1 + successes, 1 + failures)` of a signal.
    pub fn beta_parameters(&self, signal: usize) -> (f64, f64) {
        let successes = self.rewards.sum(signal);
        let failures = self.rewards.count(signal) as f64 - successes;
        (1.0 + successes, 1.0 + failures.max(0.0))
    }

    /// Dirichlet pseudo-counts `1 + N^W(a, s)` of an action.
    pub fn dirichlet_parameters(&self, action: usize) -> Vec<f64> {
        self.transitions
            .pair_counts(action)
            .iter()
            .map(|&c| 1.0 + c as f64)
            .collect()
    }

    /// Expected reward of every action in one posterior sample.
    pub fn sample_values(&mut self) -> Vec<f64> {
        let theta: Vec<f64> = (0..self.num_signals)
            .map(|s| {
                let (a, b) = self.beta_parameters(s);
                let x = gamma(a, &mut self.rng);
                let y = gamma(b, &mut self.rng);
                x / (x + y)
            })
            .collect();
        (0..self.num_actions)
            .map(|action| {
                let draws: Vec<f64> = self
                    .dirichlet_parameters(action)
                    .into_iter()
                    .map(|alpha| gamma(alpha, &mut self.rng))
                    .collect();
                let total: f64 = draws.iter().sum();
                draws.iter().zip(&theta).map(|(g, t)| g / total * t).sum()
            })
            .collect()
    }

    #[cfg(test)]
    fn seed_counts(&mut self, action: usize, signal: usize, n: usize, successes: usize) {
        use crate::feedback::RewardEvent;
        for i in 0..n {
            self.transitions.push(action, signal);
            self.rewards.ingest(&RewardEvent {
                origin_round: i + 1,
                signal,
                reward: if i < successes { 1.0 } else { 0.0 },
            });
        }
    }
}

fn gamma(shape: f64, rng: &mut SimRng) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("posterior shapes are at least 1")
        .sample(rng)
}

impl Policy for NsdPsrl {
    fn name(&self) -> &str {
        &self.name
    }

    fn select_action(&mut self, round: usize) -> Result<usize> {
        let values = self.sample_values();
        self.turn.begin(round, argmax(&values))
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
}
