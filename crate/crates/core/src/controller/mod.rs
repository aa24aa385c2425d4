//! Learned per-step controller: maps beam statistics to budget scales,
//! thresholds and temperatures.

pub mod action;
pub mod policy;
pub mod train;

pub use action::{
    apply_action, episode_reward, featurize, ActionVector, StateFeatures, ACTION_BOUNDS, ACTION_DIM, FEATURE_DIM,
};
pub use policy::{
    advantages, behavioral_clone, clone_loss, clone_targets, log_prob, policy_gradient, reinforce_update, squash,
    squash_action, surrogate_objective, unsquash, PolicyHead, PolicyParams, SampledAction, Trajectory,
    TrajectoryStep, UpdateStats,
};
pub use train::{
    clone_dataset, question, run_a_uats, train, training_mixture, warm_start, write_round_log, ActionMode,
    ControllerSchedule, RoundLog, TrainConfig,
};
