use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Terminal aggregation over finished traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FinalRule {
    #[default]
    MaxMean,
    /// Needs answer-equivalence classes; falls back to `MaxMean` here.
    WeightedVote,
}

/// Static knobs of the heuristic search. Budgets are in verifier-pass units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    pub k0: usize,
    /// Variance threshold separating trusted from uncertain candidates.
    pub tau: f64,
    /// Retention margin for uncertain candidates.
    pub delta: f64,
    /// Re-evaluation temperature.
    pub nu1: f64,
    /// Expansion temperature.
    pub nu2: f64,
    /// Re-evaluation passes per step.
    pub b_budget: usize,
    /// Expansion slots per step.
    pub c_budget: usize,
    pub alpha: f64,
    pub beam_width: usize,
    /// Cost of generating one step, in verifier passes.
    pub gen_cost: usize,
    pub total_budget: usize,
    #[serde(default)]
    pub final_rule: FinalRule,
    /// When false the partition/re-evaluation phase is skipped entirely.
    #[serde(default = "default_true")]
    pub uncertainty: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            k0: 7,
            tau: 0.003,
            delta: 0.04,
            nu1: 0.5,
            nu2: 0.2,
            b_budget: 16,
            c_budget: 16,
            alpha: 0.3,
            beam_width: 16,
            gen_cost: 18,
            total_budget: 16 * 20 * 19,
            final_rule: FinalRule::MaxMean,
            uncertainty: true,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.k0 < 1 {
            return Err(config("k0 >= 1 violated"));
        }
        if !(self.nu1 > 0.0) || !(self.nu2 > 0.0) {
            return Err(config("nu1, nu2 > 0 violated"));
        }
        if self.gen_cost < 1 {
            return Err(config("gen_cost >= 1 violated"));
        }
        if self.beam_width < 1 {
            return Err(config("beam_width >= 1 violated"));
        }
        if self.tau.is_nan() || self.delta.is_nan() || !self.alpha.is_finite() {
            return Err(config("tau, delta and alpha must be numbers"));
        }
        Ok(())
    }

    /// Compute-matched budget for `n` candidate paths over `horizon` steps:
    /// every path step pays one generation and one verifier pass.
    pub fn matched_budget(n: usize, horizon: usize, gen_cost: usize) -> usize {
        n * horizon * (gen_cost + 1)
    }

    /// Per-step caps for `n` candidate paths: the per-step share of the
    /// matched budget is split into `reeval_share` re-evaluation passes and
    /// expansion slots that each pay one generation plus `k0` passes on the
    /// following step.
    pub fn compute_matched(&self, n: usize, horizon: usize, reeval_share: f64) -> SearchParams {
        let per_step = n * (self.gen_cost + 1);
        let b_budget = (reeval_share * per_step as f64).round() as usize;
        let c_budget = ((per_step - b_budget.min(per_step)) / (self.gen_cost + self.k0)).max(1);
        SearchParams {
            b_budget,
            c_budget,
            beam_width: c_budget,
            total_budget: Self::matched_budget(n, horizon, self.gen_cost),
            ..self.clone()
        }
    }

    /// Uncertainty-agnostic baseline settings for `n` candidate paths.
    pub fn baseline_matched(&self, n: usize, horizon: usize) -> SearchParams {
        SearchParams {
            k0: 1,
            b_budget: 0,
            c_budget: n,
            beam_width: n,
            total_budget: Self::matched_budget(n, horizon, self.gen_cost),
            ..self.clone()
        }
    }
}
