//! Search-state features and the bounded action space of the controller.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::scorer::ScoreStats;
use crate::search::{BudgetLedger, SearchParams};

pub const FEATURE_DIM: usize = 7;
pub const ACTION_DIM: usize = 6;

/// Box constraints `(lo, hi)` in action order beta, gamma, tau, delta, nu1, nu2.
pub const ACTION_BOUNDS: [(f64, f64); ACTION_DIM] = [
    (0.25, 2.0),
    (0.25, 2.0),
    (1e-4, 0.02),
    (0.0, 0.2),
    (0.05, 2.0),
    (0.05, 2.0),
];

/// Summary of the scored beam the controller conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFeatures {
    pub mean_of_means: f64,
    pub max_of_means: f64,
    pub var_of_means: f64,
    pub mean_of_vars: f64,
    pub max_of_vars: f64,
    pub depth_frac: f64,
    pub budget_frac: f64,
}

impl StateFeatures {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.mean_of_means,
            self.max_of_means,
            self.var_of_means,
            self.mean_of_vars,
            self.max_of_vars,
            self.depth_frac,
            self.budget_frac,
        ]
    }
}

/// Aggregates the beam statistics at step `t` of `horizon`.
pub fn featurize(stats: &[ScoreStats], t: usize, horizon: usize, ledger: &BudgetLedger) -> Result<StateFeatures> {
    if stats.is_empty() {
        return Err(argument("featurize requires a non-empty beam"));
    }
    let n = stats.len() as f64;
    let mean_of_means = stats.iter().map(|s| s.mean).sum::<f64>() / n;
    let max_of_means = stats.iter().map(|s| s.mean).fold(f64::NEG_INFINITY, f64::max);
    let var_of_means = stats.iter().map(|s| (s.mean - mean_of_means).powi(2)).sum::<f64>() / n;
    let mean_of_vars = stats.iter().map(|s| s.variance).sum::<f64>() / n;
    let max_of_vars = stats.iter().map(|s| s.variance).fold(f64::NEG_INFINITY, f64::max);
    let depth_frac = if horizon == 0 { 1.0 } else { (t as f64 / horizon as f64).clamp(0.0, 1.0) };
    let budget_frac = if ledger.total_units == 0 {
        0.0
    } else {
        ledger.remaining() as f64 / ledger.total_units as f64
    };
    Ok(StateFeatures {
        mean_of_means,
        max_of_means: max_of_means.max(mean_of_means),
        var_of_means,
        mean_of_vars,
        max_of_vars: max_of_vars.max(mean_of_vars),
        depth_frac,
        budget_frac,
    })
}

/// Per-step adjustment of the search knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionVector {
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub delta: f64,
    pub nu1: f64,
    pub nu2: f64,
}

impl ActionVector {
    /// The action that leaves `base` unchanged.
    pub fn identity(base: &SearchParams) -> Self {
        Self {
            beta: 1.0,
            gamma: 1.0,
            tau: base.tau,
            delta: base.delta,
            nu1: base.nu1,
            nu2: base.nu2,
        }
    }

    pub fn from_array(a: [f64; ACTION_DIM]) -> Self {
        Self {
            beta: a[0],
            gamma: a[1],
            tau: a[2],
            delta: a[3],
            nu1: a[4],
            nu2: a[5],
        }
    }

    pub fn to_array(&self) -> [f64; ACTION_DIM] {
        [self.beta, self.gamma, self.tau, self.delta, self.nu1, self.nu2]
    }

    pub fn within_bounds(&self) -> bool {
        self.to_array()
            .iter()
            .zip(ACTION_BOUNDS)
            .all(|(&x, (lo, hi))| (lo..=hi).contains(&x))
    }
}

/// Scales the per-step budgets and replaces the thresholds and temperatures.
pub fn apply_action(a: &ActionVector, base: &SearchParams) -> SearchParams {
    SearchParams {
        b_budget: (a.beta * base.b_budget as f64).round_ties_even() as usize,
        c_budget: (a.gamma * base.c_budget as f64).round_ties_even() as usize,
        tau: a.tau,
        delta: a.delta,
        nu1: a.nu1,
        nu2: a.nu2,
        ..base.clone()
    }
}

/// `1(correct) - lambda * used / total`.
pub fn episode_reward(correct: bool, used: usize, total: usize, lambda: f64) -> Result<f64> {
    if total == 0 {
        return Err(argument("episode_reward requires total > 0"));
    }
    if used > total {
        return Err(argument(format!("used {used} exceeds total {total}")));
    }
    Ok(f64::from(u8::from(correct)) - lambda * used as f64 / total as f64)
}
