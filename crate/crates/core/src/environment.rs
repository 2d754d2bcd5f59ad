//! Trajectory simulation: signal draws, delayed reward delivery and the
//! shift-permutation change mechanism.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;

use crate::error::{NsdError, Result};
use crate::feedback::{RegretTrace, RewardEvent, RoundFeedback};
use crate::instance::{DelayModel, Mixture, NsdInstance, RewardModel, Segment};
use crate::rng::SimRng;

/// Change rounds plus the cyclic shift applied to the action rows at each.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SwitchSchedule {
    change_rounds: Vec<usize>,
    shifts: Vec<usize>,
}

impl SwitchSchedule {
    /// Schedule with explicit shifts, each in `1..=K-1`.
    pub fn pinned(change_rounds: Vec<usize>, shifts: Vec<usize>, num_actions: usize) -> Result<Self> {
        if num_actions < 2 {
            return Err(NsdError::Argument(format!(
                "shift schedules need at least 2 actions, got {num_actions}"
            )));
        }
        if change_rounds.len() != shifts.len() {
            return Err(NsdError::Argument(format!(
                "{} change rounds but {} shifts",
                change_rounds.len(),
                shifts.len()
            )));
        }
        if change_rounds.windows(2).any(|w| w[0] >= w[1]) || change_rounds.first() == Some(&1) {
            return Err(NsdError::Argument(format!(
                "change rounds must be strictly increasing and after round 1: {change_rounds:?}"
            )));
        }
        if let Some(r) = shifts.iter().find(|&&r| r == 0 || r >= num_actions) {
            return Err(NsdError::Argument(format!(
                "shift {r} outside 1..={}",
                num_actions - 1
            )));
        }
        Ok(SwitchSchedule {
            change_rounds,
            shifts,
        })
    }

    /// Draw one uniform shift in `1..=K-1` per change round.
    pub fn draw(change_rounds: Vec<usize>, num_actions: usize, rng: &mut SimRng) -> Result<Self> {
        if num_actions < 2 {
            return Err(NsdError::Argument(format!(
                "shift schedules need at least 2 actions, got {num_actions}"
            )));
        }
        let shifts = change_rounds
            .iter()
            .map(|_| rng.random_range(1..num_actions))
            .collect();
        Self::pinned(change_rounds, shifts, num_actions)
    }

    pub fn change_rounds(&self) -> &[usize] {
        &self.change_rounds
    }

    pub fn shifts(&self) -> &[usize] {
        &self.shifts
    }
}

/// Where the row of action `action` ends up after shifting by `shift`.
pub fn shifted_index(action: usize, shift: usize, num_actions: usize) -> usize {
    (action + shift) % num_actions
}

fn shift_rows<T: Clone>(rows: &[T], offset: usize) -> Vec<T> {
    let k = rows.len();
    let mut out = rows.to_vec();
    for (i, row) in rows.iter().enumerate() {
        out[shifted_index(i, offset, k)] = row.clone();
    }
    out
}

/// Expand a single-segment instance into one segment per change, where
/// segment `k` carries the base rows shifted by the sum of the first `k`
/// draws. Mixture means move with their actions; `theta` never changes.
pub fn generate_shifted_instance(base: &NsdInstance, schedule: &SwitchSchedule) -> Result<NsdInstance> {
    let k = base.num_actions();
    if k < 2 {
        return Err(NsdError::Argument("need at least 2 actions to shift".into()));
    }
    if base.segments().len() != 1 {
        return Err(NsdError::Argument(format!(
            "base instance must have exactly one segment, got {}",
            base.segments().len()
        )));
    }
    if let Some(r) = schedule.shifts().iter().find(|&&r| r == 0 || r >= k) {
        return Err(NsdError::Argument(format!("shift {r} outside 1..={}", k - 1)));
    }

    let base_rows = &base.segments()[0].transitions;
    let base_mu = base.mixture().map(|m| m.mu[0].clone());
    let mut segments = vec![Segment {
        start: 1,
        transitions: base_rows.clone(),
    }];
    let mut mu_rows = base_mu.iter().cloned().collect::<Vec<_>>();
    let mut offset = 0;
    for (&start, &r) in schedule.change_rounds().iter().zip(schedule.shifts()) {
        offset = (offset + r) % k;
        segments.push(Segment {
            start,
            transitions: shift_rows(base_rows, offset),
        });
        if let Some(mu) = &base_mu {
            mu_rows.push(shift_rows(mu, offset));
        }
    }

    let mut file = base.to_file();
    file.segments = segments;
    file.mixture = base.mixture().map(|m| Mixture {
        alpha: m.alpha,
        mu: mu_rows,
    });
    NsdInstance::from_file(file)
}

/// One line of the optional per-round trajectory dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub round: usize,
    pub action: usize,
    pub signal: usize,
    pub reward: Option<RewardEvent>,
    pub regret: f64,
}

pub const TRAJECTORY_HEADER: &str = "round,action,signal,reward_origin,reward_value,regret";

/// Write rows as CSV. A round with several delivered rewards spans several
/// rows; a round with none has empty reward columns.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for row in rows {
        match row.reward {
            Some(ev) => writeln!(
                out,
                "{},{},{},{},{},{}",
                row.round, row.action, row.signal, ev.origin_round, ev.reward, row.regret
            )?,
            None => writeln!(out, "{},{},{},,,{}", row.round, row.action, row.signal, row.regret)?,
        }
    }
    Ok(())
}

/// Live state of one simulated trajectory.
///
/// Each step consumes a fixed number of draws from the stream regardless of
/// the action taken, so two policies run on the same seed see coupled
/// outcomes (common random numbers).
#[derive(Debug)]
pub struct Environment<'a> {
    instance: &'a NsdInstance,
    round: usize,
    pending: BTreeMap<usize, Vec<RewardEvent>>,
    rng: SimRng,
    trace: RegretTrace,
    log: Option<Vec<TrajectoryRow>>,
    last_emitted: Option<RewardEvent>,
    delivered: usize,
    drained: bool,
}

impl<'a> Environment<'a> {
    pub fn new(instance: &'a NsdInstance, rng: SimRng) -> Self {
        Environment {
            instance,
            round: 1,
            pending: BTreeMap::new(),
            rng,
            trace: RegretTrace::with_capacity(instance.horizon()),
            log: None,
            last_emitted: None,
            delivered: 0,
            drained: false,
        }
    }

    /// Keep per-round trajectory rows for dumping.
    pub fn with_trajectory_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn instance(&self) -> &NsdInstance {
        self.instance
    }

    /// The round the next `step` call will play.
    pub fn current_round(&self) -> usize {
        self.round
    }

    pub fn is_finished(&self) -> bool {
        self.round > self.instance.horizon()
    }

    pub fn trace(&self) -> &RegretTrace {
        &self.trace
    }

    pub fn into_parts(self) -> (RegretTrace, Option<Vec<TrajectoryRow>>) {
        (self.trace, self.log)
    }

    /// The reward generated by the most recent step, before any delay.
    pub fn last_emitted(&self) -> Option<RewardEvent> {
        self.last_emitted
    }

    /// Rewards handed out so far, by `step` or `drain_remaining`.
    pub fn delivered_count(&self) -> usize {
        self.delivered
    }

    pub fn pending_count(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }

    /// Swap the random stream from the next step on. Used to check that
    /// policies never look at future randomness.
    pub fn replace_rng(&mut self, rng: SimRng) {
        self.rng = rng;
    }

    /// Play `action` at the current round.
    pub fn step(&mut self, action: usize) -> Result<RoundFeedback> {
        let inst = self.instance;
        let t = self.round;
        if t > inst.horizon() {
            return Err(NsdError::State(format!(
                "cannot step past the horizon {}",
                inst.horizon()
            )));
        }
        if action >= inst.num_actions() {
            return Err(NsdError::Argument(format!(
                "action {action} outside 0..{}",
                inst.num_actions()
            )));
        }

        let mix_u: f64 = self.rng.random();
        let signal_u: f64 = self.rng.random();
        let reward_u: f64 = self.rng.random();
        let delay = match inst.delay() {
            DelayModel::Constant(d) => d,
            DelayModel::Geometric(p) => {
                // Inverse CDF of the number of failures before a success.
                let u = 1.0 - self.rng.random::<f64>();
                if p >= 1.0 {
                    0
                } else {
                    (u.ln() / (1.0 - p).ln()).floor() as usize
                }
            }
        };

        let s = inst.num_signals();
        let (signal, mean) = match inst.mixture_mean(t, action) {
            Some(mu) if mix_u < inst.alpha() => {
                let signal = ((signal_u * s as f64) as usize).min(s - 1);
                (signal, mu)
            }
            _ => {
                let signal = sample_categorical(inst.transition_row(t, action), signal_u);
                (signal, inst.theta()[signal])
            }
        };
        let reward = match inst.reward_model() {
            RewardModel::Bernoulli => {
                if reward_u < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::Deterministic => mean,
        };

        let event = RewardEvent {
            origin_round: t,
            signal,
            reward,
        };
        self.last_emitted = Some(event);
        self.pending.entry(t + delay).or_default().push(event);
        let due_rewards = self.pending.remove(&t).unwrap_or_default();
        self.delivered += due_rewards.len();

        let (best, _) = inst.optimal_value(t)?;
        let regret = best - inst.action_values(t)[action];
        self.trace.push(regret);

        if let Some(log) = self.log.as_mut() {
            if due_rewards.is_empty() {
                log.push(TrajectoryRow {
                    round: t,
                    action,
                    signal,
                    reward: None,
                    regret,
                });
            }
            for ev in &due_rewards {
                log.push(TrajectoryRow {
                    round: t,
                    action,
                    signal,
                    reward: Some(*ev),
                    regret,
                });
            }
        }

        self.round += 1;
        Ok(RoundFeedback {
            round: t,
            signal,
            due_rewards,
        })
    }

    /// Flush rewards still in flight after the horizon, in due order.
    /// A second call returns nothing.
    pub fn drain_remaining(&mut self) -> Result<Vec<RewardEvent>> {
        if !self.is_finished() {
            return Err(NsdError::State(format!(
                "drain requested at round {} before the horizon {}",
                self.round,
                self.instance.horizon()
            )));
        }
        if self.drained {
            return Ok(Vec::new());
        }
        self.drained = true;
        let out: Vec<RewardEvent> = std::mem::take(&mut self.pending)
            .into_values()
            .flatten()
            .collect();
        self.delivered += out.len();
        Ok(out)
    }
}

/// Inverse-CDF draw from a probability row given a uniform in `[0, 1)`.
fn sample_categorical(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Round-off left `u` above the accumulated mass: take the last
    // signal with positive probability.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}
