//! Sufficient statistics and confidence radii.
//!
//! Transitions are non-stationary and estimated over a sliding window of the
//! most recent `(action, signal)` pairs. Signal reward means are stationary
//! and estimated from every delivered reward.

use std::collections::VecDeque;

use crate::error::{NsdError, Result};
use crate::feedback::RewardEvent;

/// Sliding-window transition counts `N^W(a)` and `N^W(a, s)`.
///
/// The raw pairs are kept in a ring buffer so evictions are exact.
#[derive(Debug, Clone)]
pub struct WindowStats {
    window: Option<usize>,
    num_actions: usize,
    num_signals: usize,
    buffer: VecDeque<(usize, usize)>,
    action_counts: Vec<usize>,
    pair_counts: Vec<usize>,
    pulled: Vec<bool>,
}

impl WindowStats {
    /// `window = None` keeps every observation since the last reset.
    pub fn new(window: Option<usize>, num_actions: usize, num_signals: usize) -> Result<Self> {
        if window == Some(0) {
            return Err(NsdError::Argument("window size must be at least 1".into()));
        }
        Ok(WindowStats {
            window,
            num_actions,
            num_signals,
            buffer: VecDeque::with_capacity(window.unwrap_or(0).min(1 << 16)),
            action_counts: vec![0; num_actions],
            pair_counts: vec![0; num_actions * num_signals],
            pulled: vec![false; num_actions],
        })
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_signals(&self) -> usize {
        self.num_signals
    }

    /// Record the signal observed after pulling `action`, evicting the
    /// oldest pair once the window is full.
    pub fn push(&mut self, action: usize, signal: usize) {
        if let Some(w) = self.window {
            if self.buffer.len() == w {
                if let Some((a, s)) = self.buffer.pop_front() {
                    self.action_counts[a] -= 1;
                    self.pair_counts[a * self.num_signals + s] -= 1;
                }
            }
        }
        self.buffer.push_back((action, signal));
        self.action_counts[action] += 1;
        self.pair_counts[action * self.num_signals + signal] += 1;
        self.pulled[action] = true;
    }

    /// Forget everything, including which actions were ever pulled.
    pub fn reset(&mut self) {
        self.buffer.clear();
        self.action_counts.iter_mut().for_each(|c| *c = 0);
        self.pair_counts.iter_mut().for_each(|c| *c = 0);
        self.pulled.iter_mut().for_each(|p| *p = false);
    }

    /// Number of pairs currently inside the window.
    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.buffer.iter()
    }

    pub fn count(&self, action: usize) -> usize {
        self.action_counts[action]
    }

    pub fn pair_count(&self, action: usize, signal: usize) -> usize {
        self.pair_counts[action * self.num_signals + signal]
    }

    pub fn pair_counts(&self, action: usize) -> &[usize] {
        let s = self.num_signals;
        &self.pair_counts[action * s..(action + 1) * s]
    }

    /// `p_hat(.|a) = N^W(a, .) / max(1, N^W(a))`.
    ///
    /// Before the first pull of `action` the estimate is uniform; once the
    /// action has been pulled, an empty window yields the zero vector.
    pub fn transition_estimate(&self, action: usize) -> Vec<f64> {
        if !self.pulled[action] {
            return vec![1.0 / self.num_signals as f64; self.num_signals];
        }
        let denom = self.action_counts[action].max(1) as f64;
        self.pair_counts(action)
            .iter()
            .map(|&c| c as f64 / denom)
            .collect()
    }
}

/// Per-signal delivered reward counts and sums, keyed on delivered events
/// so out-of-order arrival is harmless.
#[derive(Debug, Clone)]
pub struct DelayedRewardStats {
    counts: Vec<usize>,
    sums: Vec<f64>,
    emitted: Vec<usize>,
}

impl DelayedRewardStats {
    pub fn new(num_signals: usize) -> Self {
        DelayedRewardStats {
            counts: vec![0; num_signals],
            sums: vec![0.0; num_signals],
            emitted: vec![0; num_signals],
        }
    }

    pub fn num_signals(&self) -> usize {
        self.counts.len()
    }

    pub fn ingest(&mut self, event: &RewardEvent) {
        self.counts[event.signal] += 1;
        self.sums[event.signal] += event.reward;
    }

    /// Note that a signal was observed whose reward is still in flight.
    pub fn note_emitted(&mut self, signal: usize) {
        self.emitted[signal] += 1;
    }

    pub fn count(&self, signal: usize) -> usize {
        self.counts[signal]
    }

    pub fn sum(&self, signal: usize) -> f64 {
        self.sums[signal]
    }

    /// Observed signals whose reward has not arrived yet. Diagnostic only;
    /// meaningful when `note_emitted` is called for every observed signal.
    pub fn missing(&self, signal: usize) -> usize {
        self.emitted[signal].saturating_sub(self.counts[signal])
    }

    /// Empirical mean; zero before any delivery.
    pub fn mean(&self, signal: usize) -> f64 {
        self.sums[signal] / self.counts[signal].max(1) as f64
    }

    pub fn reset(&mut self) {
        *self = DelayedRewardStats::new(self.counts.len());
    }
}

/// Confidence constants shared by the reward and transition bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceConfig {
    pub delta: f64,
    pub horizon: usize,
    pub window: usize,
    pub num_actions: usize,
    pub num_signals: usize,
}

impl ConfidenceConfig {
    pub fn new(
        delta: f64,
        horizon: usize,
        window: usize,
        num_actions: usize,
        num_signals: usize,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(NsdError::Argument(format!("delta must lie in (0, 1), got {delta}")));
        }
        if horizon == 0 || window == 0 || num_actions == 0 || num_signals == 0 {
            return Err(NsdError::Argument(
                "horizon, window, action and signal counts must be positive".into(),
            ));
        }
        Ok(ConfidenceConfig {
            delta,
            horizon,
            window,
            num_actions,
            num_signals,
        })
    }

    /// `C_{T,delta} = 2 log(2 T S / delta)`.
    pub fn reward_constant(&self) -> f64 {
        2.0 * (2.0 * self.horizon as f64 * self.num_signals as f64 / self.delta).ln()
    }

    /// `C_{W,T,delta} = 2 S log(K W T / delta)`.
    pub fn transition_constant(&self) -> f64 {
        let kwt = self.num_actions as f64 * self.window as f64 * self.horizon as f64;
        2.0 * self.num_signals as f64 * (kwt / self.delta).ln()
    }
}

/// `U(s) = min(1, theta_hat(s) + sqrt(C_{T,delta} / max(1, N^D(s))))`.
pub fn reward_ucb(stats: &DelayedRewardStats, cfg: &ConfidenceConfig, signal: usize) -> f64 {
    let n = stats.count(signal).max(1) as f64;
    (stats.mean(signal) + (cfg.reward_constant() / n).sqrt()).min(1.0)
}

/// Upper bounds for every signal.
pub fn reward_ucbs(stats: &DelayedRewardStats, cfg: &ConfidenceConfig) -> Vec<f64> {
    (0..stats.num_signals())
        .map(|s| reward_ucb(stats, cfg, s))
        .collect()
}

/// L1 radius `sqrt(C_{W,T,delta} / max(1, count))` of the transition ball.
pub fn transition_radius(cfg: &ConfidenceConfig, count: usize) -> f64 {
    (cfg.transition_constant() / count.max(1) as f64).sqrt()
}

/// Deviation bound for an empirical distribution over `num_categories`
/// outcomes from `n` samples: `||Q_hat - Q||_1 >= sqrt(2 S log(2/delta) / n)`
/// has probability at most `delta`.
pub fn weissman_radius(num_categories: usize, n: usize, delta: f64) -> f64 {
    (2.0 * num_categories as f64 * (2.0 / delta).ln() / n.max(1) as f64).sqrt()
}
