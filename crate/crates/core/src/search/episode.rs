//! Shared per-episode state: environment, scorer, stream allocation, budget
//! ledger and the optional step trace.

use serde::{Deserialize, Serialize};

use crate::env::{init_episode, EnvConfig, Environment, EpisodeOutcome, Node, NodeId};
use crate::error::{Error, Result};
use crate::rng::{streams, SplitMix64, StreamAllocator};
use crate::scorer::{merge_stats, score_node, ScoreStats, Scorer};

use super::ledger::{BudgetLedger, ChargeKind};

/// One line of the step trace (serialized as JSON lines).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub beam: Vec<NodeId>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub id_set: Vec<usize>,
    pub ood_set: Vec<usize>,
    pub retained: Vec<usize>,
    pub reeval: Vec<usize>,
    pub expansion: Vec<usize>,
    pub charges: StepCharges,
    pub stopped: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCharges {
    pub scoring: usize,
    pub reeval: usize,
    pub generation: usize,
}

/// Per-step record of a single-chain run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub step: usize,
    pub had_ood: bool,
    /// True-reward gap between the best candidate and the runner-up.
    pub runner_up_gap: f64,
    pub mistake: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub outcome: EpisodeOutcome,
    pub final_node: Node,
    pub ledger: BudgetLedger,
    pub early_stopped: bool,
    pub trace: Vec<StepRecord>,
    pub chain: Vec<ChainStep>,
}

pub struct Episode<'a> {
    pub env: Environment,
    pub scorer: &'a dyn Scorer,
    pub streams: StreamAllocator,
    pub ledger: BudgetLedger,
    pub trace: Vec<StepRecord>,
    pub chain: Vec<ChainStep>,
    pub early_stopped: bool,
    completion: SplitMix64,
}

fn overrun(units: usize, remaining: usize) -> Error {
    Error::Argument(format!("charge of {units} units exceeds remaining budget {remaining}"))
}

impl<'a> Episode<'a> {
    pub fn start(cfg: &EnvConfig, scorer: &'a dyn Scorer, seed: u64, total_budget: usize) -> Result<(Self, Node)> {
        let (env, root) = init_episode(cfg, seed)?;
        let streams = StreamAllocator::new(seed);
        let completion = streams.reserved(streams::COMPLETION).rng();
        Ok((
            Self {
                env,
                scorer,
                streams,
                ledger: BudgetLedger::new(total_budget),
                trace: Vec::new(),
                chain: Vec::new(),
                early_stopped: false,
                completion,
            },
            root,
        ))
    }

    pub fn horizon(&self) -> usize {
        self.env.horizon()
    }

    pub fn charge(&mut self, kind: ChargeKind, units: usize) -> Result<()> {
        self.ledger
            .charge(kind, units)
            .map_err(|e| overrun(e.requested, e.remaining))
    }

    /// Charges `k` passes, then draws and summarizes them.
    pub fn score(&mut self, node: &Node, k: usize, alpha: f64) -> Result<ScoreStats> {
        self.charge(ChargeKind::Scoring, k)?;
        let stream = self.streams.next_stream();
        score_node(self.scorer, node, k, stream, node.depth.max(1), alpha)
    }

    pub fn score_all(&mut self, nodes: &[Node], k: usize, alpha: f64) -> Result<Vec<ScoreStats>> {
        nodes.iter().map(|n| self.score(n, k, alpha)).collect()
    }

    /// Draws `extra` more passes and pools them into `stats`.
    pub fn rescore(&mut self, node: &Node, stats: &ScoreStats, extra: usize) -> Result<ScoreStats> {
        let more = self.score(node, extra, stats.alpha)?;
        merge_stats(stats, &more)
    }

    pub fn expand(&mut self, node: &Node, count: usize, gen_cost: usize) -> Result<Vec<Node>> {
        self.charge(ChargeKind::Generation, count * gen_cost)?;
        self.env.propose_children(node, count)
    }

    /// Units needed to finish one unverified chain from `depth` to the horizon.
    pub fn completion_cost(&self, depth: usize, gen_cost: usize) -> usize {
        gen_cost * (self.horizon() - depth)
    }

    /// Finishes the trace without verification: each remaining step generates
    /// one continuation, a uniformly random one of the `M` proposals.
    pub fn complete_unverified(&mut self, node: Node, gen_cost: usize) -> Result<Node> {
        let m = self.env.config().m;
        let mut cur = node;
        while cur.depth < self.horizon() {
            self.charge(ChargeKind::Generation, gen_cost)?;
            let kids = self.env.propose_children(&cur, m)?;
            cur = kids[self.completion.index(kids.len())];
        }
        Ok(cur)
    }

    pub fn finish(self, final_node: Node) -> Result<EpisodeReport> {
        let mut rng = self.streams.reserved(streams::OUTCOME).rng();
        let outcome = self.env.resolve_outcome(&final_node, &mut rng)?;
        debug_assert!(self.ledger.is_consistent());
        Ok(EpisodeReport {
            outcome,
            final_node,
            ledger: self.ledger,
            early_stopped: self.early_stopped,
            trace: self.trace,
            chain: self.chain,
        })
    }
}
