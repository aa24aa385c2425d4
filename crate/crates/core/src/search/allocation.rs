//! Integer budget allocation proportional to a tempered softmax.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub counts: Vec<usize>,
}

impl AllocationResult {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Softmax of `values / temperature` with max subtraction.
pub fn softmax_weights(values: &[f64], temperature: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Splits `budget` units across candidates in proportion to
/// `softmax(values / temperature)`.
///
/// Fractional shares are apportioned by largest remainder: every candidate gets
/// the floor of its share and the leftover units go to the largest fractional
/// parts, ties broken by higher value and then lower index. The counts always
/// sum to `budget`.
pub fn allocate_proportional(values: &[f64], budget: usize, temperature: f64) -> Result<AllocationResult> {
    if values.is_empty() {
        return Err(argument("allocate_proportional requires at least one candidate"));
    }
    if !(temperature > 0.0) {
        return Err(argument(format!("temperature must be > 0, got {temperature}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(argument("allocate_proportional requires finite values"));
    }

    let raw: Vec<f64> = softmax_weights(values, temperature)
        .into_iter()
        .map(|w| w * budget as f64)
        .collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa)
            .then(values[b].total_cmp(&values[a]))
            .then(a.cmp(&b))
    });

    // Rounding in the weights can leave the floors one unit over budget.
    while assigned > budget {
        let i = *order.iter().rev().find(|&&i| counts[i] > 0).expect("positive count");
        counts[i] -= 1;
        assigned -= 1;
    }
    for &i in order.iter().cycle().take(budget - assigned) {
        counts[i] += 1;
    }
    Ok(AllocationResult { counts })
}
