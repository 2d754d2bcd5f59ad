//! Optimistic transition vector: maximize `q^T u` over the probability
//! simplex intersected with an L1 ball around an estimate.

use crate::error::{NsdError, Result};

/// Maximizer `q` and its value `q^T u`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimisticSolution {
    pub value: f64,
    pub q: Vec<f64>,
}

/// Solve `max { q^T u : q in simplex, ||p_hat - q||_1 <= radius }`.
///
/// Signals are ranked by decreasing `u` (ties to the lower index). The best
/// signal receives up to `radius / 2` extra mass, then mass is removed from
/// the worst signals upward until `q` sums to one. `p_hat` may be
/// sub-normalized (an action with no windowed observations); any mass still
/// missing after the walk goes to the best signal so `q` is always a
/// distribution.
pub fn optimistic_value(p_hat: &[f64], radius: f64, u: &[f64]) -> Result<OptimisticSolution> {
    let s = p_hat.len();
    if s == 0 || u.len() != s {
        return Err(NsdError::Argument(format!(
            "p_hat has {s} entries but u has {}",
            u.len()
        )));
    }
    if !radius.is_finite() || radius < 0.0 {
        return Err(NsdError::Argument(format!(
            "radius must be finite and non-negative, got {radius}"
        )));
    }
    if p_hat.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(NsdError::Argument(format!(
            "p_hat entries must be finite and non-negative: {p_hat:?}"
        )));
    }
    if p_hat.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(NsdError::Argument(format!("p_hat sums above 1: {p_hat:?}")));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(NsdError::Argument(format!("u has non-finite entries: {u:?}")));
    }

    let mut order: Vec<usize> = (0..s).collect();
    // Stable sort keeps lower indices first among equal values.
    order.sort_by(|&a, &b| u[b].total_cmp(&u[a]));

    let best = order[0];
    let mut q = p_hat.to_vec();
    q[best] = (p_hat[best] + radius / 2.0).min(1.0);

    let mut j = s - 1;
    while j > 0 && q.iter().sum::<f64>() > 1.0 {
        let sj = order[j];
        let others: f64 = q
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != sj)
            .map(|(_, x)| x)
            .sum();
        q[sj] = (1.0 - others).max(0.0);
        j -= 1;
    }

    let total: f64 = q.iter().sum();
    if total < 1.0 {
        q[best] += 1.0 - total;
    }

    let value = q.iter().zip(u).map(|(a, b)| a * b).sum();
    Ok(OptimisticSolution { value, q })
}
