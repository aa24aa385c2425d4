//! Search procedures over the synthetic environment.

pub mod allocation;
pub mod baselines;
pub mod episode;
pub mod huats;
pub mod ledger;
pub mod params;
pub mod select;

pub use allocation::{allocate_proportional, softmax_weights, AllocationResult};
pub use baselines::{chain_budget, run_baseline, BaselineMethod};
pub use episode::{ChainStep, Episode, EpisodeReport, StepCharges, StepRecord};
pub use huats::{h_uats_step, run_h_uats, run_uats, terminal_select, ParamSchedule, StaticParams, StepOutcome};
pub use ledger::{BudgetExhausted, BudgetLedger, ChargeKind};
pub use params::{FinalRule, SearchParams};
pub use select::{
    best_mean, filter_ood_by_margin, finalize, partition_by_uncertainty, select_point_estimate, select_ucb,
};
