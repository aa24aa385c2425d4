//! Heuristic uncertainty-aware tree search.
//!
//! Each step scores the beam with `k0` passes, splits it by sample variance,
//! spends up to `b_budget` extra passes on uncertain candidates that are still
//! competitive with the best trusted one, and then hands out `c_budget`
//! expansion slots by a tempered softmax over posterior means.

use crate::env::{EnvConfig, Node};
use crate::error::{config, Result};
use crate::scorer::{ScoreStats, Scorer};

use super::allocation::allocate_proportional;
use super::episode::{Episode, EpisodeReport, StepRecord};
use super::ledger::BudgetLedger;
use super::params::SearchParams;
use super::select::{best_mean, filter_ood_by_margin, finalize, partition_by_uncertainty, select_point_estimate};

/// Supplies the parameters used for one step once the beam has been scored.
pub trait ParamSchedule {
    fn params(
        &mut self,
        base: &SearchParams,
        stats: &[ScoreStats],
        depth: usize,
        horizon: usize,
        ledger: &BudgetLedger,
    ) -> Result<SearchParams>;
}

/// The static heuristic: always the base parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaticParams;

impl ParamSchedule for StaticParams {
    fn params(&mut self, base: &SearchParams, _: &[ScoreStats], _: usize, _: usize, _: &BudgetLedger) -> Result<SearchParams> {
        Ok(base.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    /// Children forming the next beam.
    Continue(Vec<Node>),
    /// Budget ran out before the step could run; the trace to finish.
    Stop(Node),
}

/// Re-evaluation phase. Returns the updated statistics.
pub(crate) fn verify(
    ep: &mut Episode<'_>,
    beam: &[Node],
    mut stats: Vec<ScoreStats>,
    p: &SearchParams,
    reserve: usize,
    record: &mut StepRecord,
) -> Result<Vec<ScoreStats>> {
    record.means = stats.iter().map(|s| s.mean).collect();
    record.variances = stats.iter().map(|s| s.variance).collect();
    if !p.uncertainty {
        return Ok(stats);
    }
    let (id_set, ood_set) = partition_by_uncertainty(&stats, p.tau);
    let anchor = best_mean(&stats, &id_set);
    let retained = filter_ood_by_margin(&stats, &ood_set, anchor, p.delta);
    let budget = p.b_budget.min(ep.ledger.remaining().saturating_sub(reserve));
    if !retained.is_empty() && budget > 0 {
        let optimistic: Vec<f64> = retained.iter().map(|&i| stats[i].ucb).collect();
        let alloc = allocate_proportional(&optimistic, budget, p.nu1)?;
        for (&i, &extra) in retained.iter().zip(&alloc.counts) {
            if extra > 0 {
                stats[i] = ep.rescore(&beam[i], &stats[i], extra)?;
            }
        }
        record.reeval = alloc.counts;
        record.charges.reeval = budget;
    }
    record.id_set = id_set;
    record.ood_set = ood_set;
    record.retained = retained;
    Ok(stats)
}

/// Expansion phase. `stats` is `None` only for the unscored root.
pub(crate) fn expand_beam(
    ep: &mut Episode<'_>,
    beam: &[Node],
    stats: Option<&[ScoreStats]>,
    p: &SearchParams,
    record: &mut StepRecord,
) -> Result<Vec<Node>> {
    let depth = beam[0].depth;
    // Keep enough budget to finish one chain from the children's depth.
    let reserve = ep.completion_cost(depth + 1, p.gen_cost);
    let affordable = ep.ledger.remaining().saturating_sub(reserve) / p.gen_cost;
    let slots = p.c_budget.min(affordable);

    let means: Vec<f64> = match stats {
        Some(s) => s.iter().map(|s| s.mean).collect(),
        None => vec![0.0; beam.len()],
    };
    let mut counts = if slots == 0 {
        vec![0; beam.len()]
    } else {
        allocate_proportional(&means, slots, p.nu2)?.counts
    };
    if counts.iter().all(|&c| c == 0) {
        let top = match stats {
            Some(s) => select_point_estimate(s)?,
            None => 0,
        };
        counts[top] = 1;
    }

    let mut children: Vec<(f64, Node)> = Vec::new();
    for (i, &n) in counts.iter().enumerate() {
        if n > 0 {
            let kids = ep.expand(&beam[i], n, p.gen_cost)?;
            children.extend(kids.into_iter().map(|k| (means[i], k)));
        }
    }
    record.charges.generation = counts.iter().sum::<usize>() * p.gen_cost;
    record.expansion = counts;
    if children.len() > p.beam_width {
        children.sort_by(|a, b| b.0.total_cmp(&a.0));
        children.truncate(p.beam_width);
    }
    Ok(children.into_iter().map(|(_, n)| n).collect())
}

/// One search step over `beam` (all nodes at the same depth).
pub fn h_uats_step(
    ep: &mut Episode<'_>,
    beam: &[Node],
    base: &SearchParams,
    schedule: &mut dyn ParamSchedule,
) -> Result<StepOutcome> {
    let depth = beam[0].depth;
    let mut record = StepRecord {
        step: depth + 1,
        beam: beam.iter().map(|n| n.id).collect(),
        ..StepRecord::default()
    };

    if depth == 0 {
        let next = expand_beam(ep, beam, None, base, &mut record)?;
        ep.trace.push(record);
        return Ok(StepOutcome::Continue(next));
    }

    let reserve = ep.completion_cost(depth, base.gen_cost);
    let scoring = base.k0 * beam.len();
    if ep.ledger.remaining() < scoring + reserve {
        record.stopped = true;
        ep.trace.push(record);
        return Ok(StepOutcome::Stop(beam[0]));
    }
    let stats = ep.score_all(beam, base.k0, base.alpha)?;
    record.charges.scoring = scoring;

    let p = schedule.params(base, &stats, depth, ep.horizon(), &ep.ledger)?;
    let stats = verify(ep, beam, stats, &p, reserve, &mut record)?;
    let next = expand_beam(ep, beam, Some(&stats), &p, &mut record)?;
    ep.trace.push(record);
    Ok(StepOutcome::Continue(next))
}

/// Scores the finished leaves, re-evaluates as in a regular step, and picks the
/// answer trace.
pub fn terminal_select(
    ep: &mut Episode<'_>,
    leaves: &[Node],
    base: &SearchParams,
    schedule: &mut dyn ParamSchedule,
) -> Result<Node> {
    let depth = leaves[0].depth;
    let mut record = StepRecord {
        step: depth + 1,
        beam: leaves.iter().map(|n| n.id).collect(),
        ..StepRecord::default()
    };
    let scoring = base.k0 * leaves.len();
    if ep.ledger.remaining() < scoring {
        record.stopped = true;
        ep.trace.push(record);
        ep.early_stopped = true;
        return Ok(leaves[0]);
    }
    let stats = ep.score_all(leaves, base.k0, base.alpha)?;
    record.charges.scoring = scoring;
    let p = schedule.params(base, &stats, depth, ep.horizon(), &ep.ledger)?;
    let stats = verify(ep, leaves, stats, &p, 0, &mut record)?;
    ep.trace.push(record);
    let pairs: Vec<(Node, ScoreStats)> = leaves.iter().copied().zip(stats).collect();
    Ok(leaves[finalize(&pairs, base.final_rule)?])
}

/// Runs one full episode of the step pipeline under `schedule`.
pub fn run_uats(
    cfg: &EnvConfig,
    base: &SearchParams,
    scorer: &dyn Scorer,
    seed: u64,
    schedule: &mut dyn ParamSchedule,
) -> Result<EpisodeReport> {
    base.validate()?;
    if base.total_budget < base.gen_cost * cfg.t {
        return Err(config(format!(
            "total_budget {} cannot cover one {}-step chain at gen_cost {}",
            base.total_budget, cfg.t, base.gen_cost
        )));
    }
    let (mut ep, root) = Episode::start(cfg, scorer, seed, base.total_budget)?;
    let mut beam = vec![root];
    while beam[0].depth < cfg.t {
        match h_uats_step(&mut ep, &beam, base, schedule)? {
            StepOutcome::Continue(next) => beam = next,
            StepOutcome::Stop(node) => {
                ep.early_stopped = true;
                let done = ep.complete_unverified(node, base.gen_cost)?;
                return ep.finish(done);
            }
        }
    }
    let chosen = terminal_select(&mut ep, &beam, base, schedule)?;
    ep.finish(chosen)
}

/// [`run_uats`] with the static heuristic.
pub fn run_h_uats(cfg: &EnvConfig, params: &SearchParams, scorer: &dyn Scorer, seed: u64) -> Result<EpisodeReport> {
    run_uats(cfg, params, scorer, seed, &mut StaticParams)
}

