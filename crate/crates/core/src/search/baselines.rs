//! Uncertainty-agnostic baselines and the two single-chain selection scenarios.

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, EpisodeOutcome, Node};
use crate::error::{config, Result};
use crate::rng::streams;
use crate::scorer::{ScoreStats, Scorer};

use super::episode::{ChainStep, Episode, EpisodeReport, StepRecord};
use super::huats::{expand_beam, StepOutcome};
use super::params::SearchParams;
use super::select::{finalize, select_point_estimate, select_ucb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMethod {
    /// `c_budget` independent chains, best final score wins.
    #[serde(rename = "best-of-n")]
    BestOfN,
    /// Width-`beam_width` beam, `c_budget` children per step.
    #[serde(rename = "beam-search")]
    BeamSearch,
    /// Softmax expansion over single-pass scores.
    #[serde(rename = "rebase")]
    Rebase,
    /// One chain, argmax of one noisy pass over `M` candidates per step.
    #[serde(rename = "greedy-chain")]
    GreedyChain,
    /// One chain, UCB selection with `k0 * t` passes per candidate at step `t`.
    #[serde(rename = "ucb-chain")]
    UcbChain,
    /// Correct when any of `c_budget` independent chains is correct.
    #[serde(rename = "oracle-pass@k")]
    OraclePassAtK,
}

pub fn run_baseline(
    method: BaselineMethod,
    cfg: &EnvConfig,
    params: &SearchParams,
    scorer: &dyn Scorer,
    seed: u64,
) -> Result<EpisodeReport> {
    params.validate()?;
    match method {
        BaselineMethod::Rebase => rebase(cfg, params, scorer, seed),
        BaselineMethod::BeamSearch => beam_search(cfg, params, scorer, seed),
        BaselineMethod::BestOfN => best_of_n(cfg, params, scorer, seed, false),
        BaselineMethod::OraclePassAtK => best_of_n(cfg, params, scorer, seed, true),
        BaselineMethod::GreedyChain => chain(cfg, params, scorer, seed, false),
        BaselineMethod::UcbChain => chain(cfg, params, scorer, seed, true),
    }
}

/// Budget that lets a single chain run to the horizon.
pub fn chain_budget(cfg: &EnvConfig, params: &SearchParams, ucb: bool) -> usize {
    (1..=cfg.t)
        .map(|t| cfg.m * (params.gen_cost + if ucb { params.k0 * t } else { 1 }))
        .sum()
}

fn require_chain_budget(cfg: &EnvConfig, params: &SearchParams, per_step: usize) -> Result<()> {
    if params.total_budget < per_step * cfg.t {
        return Err(config(format!(
            "total_budget {} cannot cover one {}-step chain",
            params.total_budget, cfg.t
        )));
    }
    Ok(())
}

fn single_pass_terminal(ep: &mut Episode<'_>, leaves: &[Node], params: &SearchParams) -> Result<Node> {
    let mut record = StepRecord {
        step: leaves[0].depth + 1,
        beam: leaves.iter().map(|n| n.id).collect(),
        ..StepRecord::default()
    };
    if ep.ledger.remaining() < leaves.len() {
        record.stopped = true;
        ep.trace.push(record);
        ep.early_stopped = true;
        return Ok(leaves[0]);
    }
    let stats = ep.score_all(leaves, 1, params.alpha)?;
    record.charges.scoring = leaves.len();
    record.means = stats.iter().map(|s| s.mean).collect();
    record.variances = stats.iter().map(|s| s.variance).collect();
    ep.trace.push(record);
    let pairs: Vec<(Node, ScoreStats)> = leaves.iter().copied().zip(stats).collect();
    Ok(leaves[finalize(&pairs, params.final_rule)?])
}

fn finish_stopped(mut ep: Episode<'_>, node: Node, gen_cost: usize) -> Result<EpisodeReport> {
    ep.early_stopped = true;
    let done = ep.complete_unverified(node, gen_cost)?;
    ep.finish(done)
}

fn rebase_step(ep: &mut Episode<'_>, beam: &[Node], params: &SearchParams) -> Result<StepOutcome> {
    let depth = beam[0].depth;
    let mut record = StepRecord {
        step: depth + 1,
        beam: beam.iter().map(|n| n.id).collect(),
        ..StepRecord::default()
    };
    if depth == 0 {
        let next = expand_beam(ep, beam, None, params, &mut record)?;
        ep.trace.push(record);
        return Ok(StepOutcome::Continue(next));
    }
    let reserve = ep.completion_cost(depth, params.gen_cost);
    if ep.ledger.remaining() < beam.len() + reserve {
        record.stopped = true;
        ep.trace.push(record);
        return Ok(StepOutcome::Stop(beam[0]));
    }
    let stats = ep.score_all(beam, 1, params.alpha)?;
    record.charges.scoring = beam.len();
    record.means = stats.iter().map(|s| s.mean).collect();
    record.variances = stats.iter().map(|s| s.variance).collect();
    let next = expand_beam(ep, beam, Some(&stats), params, &mut record)?;
    ep.trace.push(record);
    Ok(StepOutcome::Continue(next))
}

fn rebase(cfg: &EnvConfig, params: &SearchParams, scorer: &dyn Scorer, seed: u64) -> Result<EpisodeReport> {
    require_chain_budget(cfg, params, params.gen_cost)?;
    let (mut ep, root) = Episode::start(cfg, scorer, seed, params.total_budget)?;
    let mut beam = vec![root];
    while beam[0].depth < cfg.t {
        match rebase_step(&mut ep, &beam, params)? {
            StepOutcome::Continue(next) => beam = next,
            StepOutcome::Stop(node) => return finish_stopped(ep, node, params.gen_cost),
        }
    }
    let chosen = single_pass_terminal(&mut ep, &beam, params)?;
    ep.finish(chosen)
}

fn beam_search(cfg: &EnvConfig, params: &SearchParams, scorer: &dyn Scorer, seed: u64) -> Result<EpisodeReport> {
    require_chain_budget(cfg, params, params.gen_cost)?;
    let (mut ep, root) = Episode::start(cfg, scorer, seed, params.total_budget)?;
    let width = params.beam_width;
    let mut beam = vec![root];
    while beam[0].depth < cfg.t {
        let depth = beam[0].depth;
        let mut record = StepRecord {
            step: depth + 1,
            beam: beam.iter().map(|n| n.id).collect(),
            ..StepRecord::default()
        };
        let survivors: Vec<Node> = if depth == 0 {
            beam.clone()
        } else {
            let reserve = ep.completion_cost(depth, params.gen_cost);
            if ep.ledger.remaining() < beam.len() + reserve {
                record.stopped = true;
                ep.trace.push(record);
                return finish_stopped(ep, beam[0], params.gen_cost);
            }
            let stats = ep.score_all(&beam, 1, params.alpha)?;
            record.charges.scoring = beam.len();
            record.means = stats.iter().map(|s| s.mean).collect();
            let mut order: Vec<usize> = (0..beam.len()).collect();
            order.sort_by(|&a, &b| stats[b].mean.total_cmp(&stats[a].mean).then(a.cmp(&b)));
            order.truncate(width);
            order.into_iter().map(|i| beam[i]).collect()
        };

        let reserve = ep.completion_cost(depth + 1, params.gen_cost);
        let affordable = ep.ledger.remaining().saturating_sub(reserve) / params.gen_cost;
        let slots = params.c_budget.min(affordable).max(1);
        let per = slots / survivors.len();
        let extra = slots % survivors.len();
        let counts: Vec<usize> = (0..survivors.len()).map(|r| per + usize::from(r < extra)).collect();
        let mut next = Vec::new();
        for (node, &n) in survivors.iter().zip(&counts) {
            if n > 0 {
                next.extend(ep.expand(node, n, params.gen_cost)?);
            }
        }
        record.charges.generation = slots * params.gen_cost;
        record.expansion = counts;
        ep.trace.push(record);
        beam = next;
    }
    let chosen = single_pass_terminal(&mut ep, &beam, params)?;
    ep.finish(chosen)
}

fn best_of_n(cfg: &EnvConfig, params: &SearchParams, scorer: &dyn Scorer, seed: u64, oracle: bool) -> Result<EpisodeReport> {
    let per_step = params.gen_cost + 1;
    require_chain_budget(cfg, params, per_step)?;
    let (mut ep, root) = Episode::start(cfg, scorer, seed, params.total_budget)?;
    let mut finished: Vec<(Node, ScoreStats)> = Vec::new();
    for _ in 0..params.c_budget.max(1) {
        if !ep.ledger.can_afford(per_step * cfg.t) {
            break;
        }
        let mut node = root;
        let mut last = None;
        for _ in 0..cfg.t {
            node = ep.expand(&node, 1, params.gen_cost)?[0];
            last = Some(ep.score(&node, 1, params.alpha)?);
        }
        finished.push((node, last.expect("horizon >= 1")));
    }

    if oracle {
        let mut rng = ep.streams.reserved(streams::OUTCOME).rng();
        let mut correct = false;
        for (node, _) in &finished {
            correct |= rng.bernoulli(node.true_reward);
        }
        let best = finished
            .iter()
            .map(|(n, _)| *n)
            .max_by(|a, b| a.true_reward.total_cmp(&b.true_reward))
            .expect("at least one chain");
        return Ok(EpisodeReport {
            outcome: EpisodeOutcome {
                final_true_reward: best.true_reward,
                correct,
                mistakes: best.path_mistakes,
                selections: ep.env.lineage(&best),
            },
            final_node: best,
            ledger: ep.ledger,
            early_stopped: false,
            trace: ep.trace,
            chain: ep.chain,
        });
    }
    let chosen = finished[finalize(&finished, params.final_rule)?].0;
    ep.finish(chosen)
}

fn chain(cfg: &EnvConfig, params: &SearchParams, scorer: &dyn Scorer, seed: u64, ucb: bool) -> Result<EpisodeReport> {
    if params.total_budget < chain_budget(cfg, params, ucb) {
        return Err(config(format!(
            "total_budget {} below the chain cost {}",
            params.total_budget,
            chain_budget(cfg, params, ucb)
        )));
    }
    let (mut ep, root) = Episode::start(cfg, scorer, seed, params.total_budget)?;
    let mut node = root;
    for t in 1..=cfg.t {
        let kids = ep.expand(&node, cfg.m, params.gen_cost)?;
        let k = if ucb { params.k0 * t } else { 1 };
        let alpha = if ucb { params.alpha } else { 0.0 };
        let stats = ep.score_all(&kids, k, alpha)?;
        let pick = if ucb { select_ucb(&stats)? } else { select_point_estimate(&stats)? };
        let runner_up = kids
            .iter()
            .filter(|c| c.id != c.best_sibling)
            .map(|c| c.true_reward)
            .fold(f64::NEG_INFINITY, f64::max);
        ep.chain.push(ChainStep {
            step: t,
            had_ood: kids.iter().any(|c| c.is_ood),
            runner_up_gap: if runner_up.is_finite() { node.true_reward - runner_up } else { 0.0 },
            mistake: kids[pick].id != kids[pick].best_sibling,
        });
        node = kids[pick];
    }
    ep.finish(node)
}
