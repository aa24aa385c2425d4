//! A-UATS rollouts and the REINFORCE training loop.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::error::{argument, Result};
use crate::rng::{derive_seed, streams, SplitMix64, StreamId};
use crate::scorer::{ScoreStats, Scorer};
use crate::search::{run_uats, BudgetLedger, EpisodeReport, ParamSchedule, SearchParams};

use super::action::{apply_action, episode_reward, featurize, ActionVector, StateFeatures};
use super::policy::{behavioral_clone, reinforce_update, PolicyParams, SampledAction, Trajectory, TrajectoryStep};

/// How often the controller draws a fresh action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionMode {
    #[default]
    PerStep,
    PerEpisode,
}

/// Drives the step pipeline with actions from a policy.
pub struct ControllerSchedule<'p> {
    policy: &'p PolicyParams,
    rng: SplitMix64,
    deterministic: bool,
    mode: ActionMode,
    held: Option<SampledAction>,
    pub steps: Vec<TrajectoryStep>,
}

impl<'p> ControllerSchedule<'p> {
    pub fn new(policy: &'p PolicyParams, rng: SplitMix64, deterministic: bool, mode: ActionMode) -> Self {
        Self {
            policy,
            rng,
            deterministic,
            mode,
            held: None,
            steps: Vec::new(),
        }
    }
}

impl ParamSchedule for ControllerSchedule<'_> {
    fn params(
        &mut self,
        base: &SearchParams,
        stats: &[ScoreStats],
        depth: usize,
        horizon: usize,
        ledger: &BudgetLedger,
    ) -> Result<SearchParams> {
        let features = featurize(stats, depth, horizon, ledger)?;
        let sampled = match (self.mode, self.held) {
            (ActionMode::PerEpisode, Some(held)) => held,
            _ => {
                let s = self.policy.sample_action(&features, &mut self.rng, self.deterministic);
                self.held = Some(s);
                self.steps.push(TrajectoryStep {
                    features,
                    pre_squash: s.pre_squash,
                    log_prob: s.log_prob,
                });
                s
            }
        };
        Ok(apply_action(&sampled.action, base))
    }
}

/// Records the beam features seen by the static heuristic.
struct RecordingSchedule {
    seen: Vec<StateFeatures>,
}

impl ParamSchedule for RecordingSchedule {
    fn params(
        &mut self,
        base: &SearchParams,
        stats: &[ScoreStats],
        depth: usize,
        horizon: usize,
        ledger: &BudgetLedger,
    ) -> Result<SearchParams> {
        self.seen.push(featurize(stats, depth, horizon, ledger)?);
        Ok(base.clone())
    }
}

/// One A-UATS episode. The controller draws from its own stream of
/// `controller_seed`, so episodes sharing `seed` face the same question.
pub fn run_a_uats(
    cfg: &EnvConfig,
    base: &SearchParams,
    scorer: &dyn Scorer,
    seed: u64,
    policy: &PolicyParams,
    controller_seed: u64,
    deterministic: bool,
    mode: ActionMode,
) -> Result<(EpisodeReport, Vec<TrajectoryStep>)> {
    let rng = StreamId::new(controller_seed, streams::CONTROLLER).rng();
    let mut schedule = ControllerSchedule::new(policy, rng, deterministic, mode);
    let report = run_uats(cfg, base, scorer, seed, &mut schedule)?;
    Ok((report, schedule.steps))
}

/// Settings of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub rounds: usize,
    pub batch: usize,
    pub lambda: f64,
    pub lr: f64,
    pub seed: u64,
    /// Distinct questions; round `r` revisits question `r % questions`.
    pub questions: usize,
    /// Candidate paths that set the compute-matched budget.
    pub n: usize,
    pub mode: ActionMode,
    pub clone_episodes: usize,
    pub clone_epochs: usize,
    pub clone_lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rounds: 500,
            batch: 10,
            lambda: 0.05,
            lr: 1e-4,
            seed: 0,
            questions: 50,
            n: 16,
            mode: ActionMode::PerStep,
            clone_episodes: 16,
            clone_epochs: 300,
            clone_lr: 0.02,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch < 2 {
            return Err(argument("batch >= 2 violated"));
        }
        if self.n < 1 {
            return Err(argument("n >= 1 violated"));
        }
        if self.questions < 1 {
            return Err(argument("questions >= 1 violated"));
        }
        if !self.lambda.is_finite() || !(self.lr >= 0.0) {
            return Err(argument("lambda must be finite and lr >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub mean_reward: f64,
    pub baseline: f64,
    pub grad_norm: f64,
}

/// Writes the per-round log as CSV.
pub fn write_round_log(log: &[RoundLog], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "round,mean_reward,baseline,grad_norm")?;
    for r in log {
        writeln!(out, "{},{:.9e},{:.9e},{:.9e}", r.round, r.mean_reward, r.baseline, r.grad_norm)?;
    }
    Ok(())
}

/// The environment variants the controller is trained across.
pub fn training_mixture() -> Vec<EnvConfig> {
    let base = EnvConfig::compare_default();
    [(0.1, 0.3, 0.9), (0.2, 0.3, 0.9), (0.3, 0.4, 0.85), (0.2, 0.2, 0.95)]
        .into_iter()
        .map(|(epsilon, sigma_ood, r0)| EnvConfig {
            epsilon,
            sigma_ood,
            r0,
            ..base.clone()
        })
        .collect()
}

/// Variant index and episode seed of question `q`.
pub fn question(mixture_len: usize, seed: u64, q: u64) -> (usize, u64) {
    let s = derive_seed(seed, q);
    ((s % mixture_len as u64) as usize, derive_seed(s, 0))
}

/// Beam states met by the static heuristic, each paired with the identity
/// action of `base`.
pub fn clone_dataset(
    mixture: &[EnvConfig],
    base: &SearchParams,
    scorer: &dyn Scorer,
    episodes: usize,
    seed: u64,
) -> Result<Vec<(StateFeatures, ActionVector)>> {
    let target = ActionVector::identity(base);
    let mut data = Vec::new();
    for e in 0..episodes as u64 {
        let (v, episode_seed) = question(mixture.len(), seed, e);
        let mut rec = RecordingSchedule { seen: Vec::new() };
        run_uats(&mixture[v], base, scorer, episode_seed, &mut rec)?;
        data.extend(rec.seen.into_iter().map(|f| (f, target)));
    }
    Ok(data)
}

/// Behavioral-cloning warm start towards the static heuristic.
pub fn warm_start(
    mixture: &[EnvConfig],
    base: &SearchParams,
    scorer: &dyn Scorer,
    cfg: &TrainConfig,
) -> Result<PolicyParams> {
    let init = PolicyParams::standard(derive_seed(cfg.seed, u64::MAX));
    let data = clone_dataset(mixture, base, scorer, cfg.clone_episodes, derive_seed(cfg.seed, u64::MAX - 1))?;
    let (params, _) = behavioral_clone(&init, &data, cfg.clone_epochs, cfg.clone_lr)?;
    Ok(params)
}

/// REINFORCE over `rounds` batches of `batch` rollouts on one question each.
pub fn train(
    policy: &PolicyParams,
    mixture: &[EnvConfig],
    base: &SearchParams,
    scorer: &dyn Scorer,
    cfg: &TrainConfig,
) -> Result<(PolicyParams, Vec<RoundLog>)> {
    cfg.validate()?;
    if mixture.is_empty() {
        return Err(argument("training needs at least one environment variant"));
    }
    policy.validate()?;
    let mut params = policy.clone();
    let mut log = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let q = (round % cfg.questions) as u64;
        let (v, episode_seed) = question(mixture.len(), cfg.seed, q);
        let env = &mixture[v];
        let batch: Vec<Trajectory> = (0..cfg.batch as u64)
            .into_par_iter()
            .map(|i| {
                let controller_seed = derive_seed(episode_seed, i + 1);
                let (report, steps) =
                    run_a_uats(env, base, scorer, episode_seed, &params, controller_seed, false, cfg.mode)?;
                let ledger = report.ledger;
                Ok(Trajectory {
                    steps,
                    reward: episode_reward(report.outcome.correct, ledger.used_units, ledger.total_units, cfg.lambda)?,
                    used_units: ledger.used_units,
                    total_units: ledger.total_units,
                })
            })
            .collect::<Result<_>>()?;
        let (next, stats) = reinforce_update(&params, &batch, cfg.lr)?;
        params = next;
        log.push(RoundLog {
            round,
            mean_reward: stats.baseline,
            baseline: stats.baseline,
            grad_norm: stats.grad_norm,
        });
    }
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::LocalScorer;

    fn small() -> SearchParams {
        SearchParams::default().compute_matched(4, 20, 0.1)
    }

    #[test]
    fn zero_rounds_leave_params_unchanged() {
        let p = PolicyParams::with_hidden(&[8], 1);
        let cfg = TrainConfig { rounds: 0, ..Default::default() };
        let (q, log) = train(&p, &training_mixture(), &small(), &LocalScorer::default(), &cfg).unwrap();
        assert_eq!(q, p);
        assert!(log.is_empty());
    }

    #[test]
    fn noiseless_env_rewards_one() {
        let env = EnvConfig {
            epsilon: 0.0,
            sigma_id: 0.0,
            sigma_ood: 0.1,
            r0: 1.0,
            ..EnvConfig::compare_default()
        };
        let p = PolicyParams::with_hidden(&[8], 1);
        let cfg = TrainConfig { rounds: 3, lambda: 0.0, ..Default::default() };
        let (_, log) = train(&p, &[env], &small(), &LocalScorer::default(), &cfg).unwrap();
        assert!(log.iter().all(|r| r.mean_reward == 1.0));
    }

    #[test]
    fn per_episode_mode_samples_once() {
        let p = PolicyParams::with_hidden(&[8], 1);
        let env = EnvConfig::compare_default();
        let (_, steps) =
            run_a_uats(&env, &small(), &LocalScorer::default(), 3, &p, 4, false, ActionMode::PerEpisode).unwrap();
        assert_eq!(steps.len(), 1);
        let (_, steps) =
            run_a_uats(&env, &small(), &LocalScorer::default(), 3, &p, 4, false, ActionMode::PerStep).unwrap();
        assert!(steps.len() > 1);
    }

    #[test]
    fn round_log_csv() {
        let mut out = Vec::new();
        let log = [RoundLog { round: 0, mean_reward: 0.5, baseline: 0.5, grad_norm: 0.0 }];
        write_round_log(&log, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "round,mean_reward,baseline,grad_norm\n0,5.000000000e-1,5.000000000e-1,0.000000000e0\n"
        );
    }
}
