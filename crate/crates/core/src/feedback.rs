use serde::{Deserialize, Serialize};

/// A reward leaving the delay queue: which round produced it, the signal
/// observed in that round, and the realized reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardEvent {
    pub origin_round: usize,
    pub signal: usize,
    pub reward: f64,
}

/// Everything a policy learns at the end of round `round`: the immediate
/// signal and every delayed reward whose delay expired this round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundFeedback {
    pub round: usize,
    pub signal: usize,
    pub due_rewards: Vec<RewardEvent>,
}

/// Per-round dynamic regret `rho*_t - rho_t(A_t)` and its running sum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretTrace {
    per_round: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn with_capacity(horizon: usize) -> Self {
        RegretTrace {
            per_round: Vec::with_capacity(horizon),
            cumulative: Vec::with_capacity(horizon),
        }
    }

    /// Append one round. Negative values from float round-off are clamped to 0.
    pub fn push(&mut self, regret: f64) {
        let regret = regret.max(0.0);
        let total = self.total() + regret;
        self.per_round.push(regret);
        self.cumulative.push(total);
    }

    pub fn per_round(&self) -> &[f64] {
        &self.per_round
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.per_round.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_round.is_empty()
    }

    /// Cumulative regret after the last recorded round.
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}
