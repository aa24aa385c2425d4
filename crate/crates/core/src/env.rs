//! Synthetic reasoning environment.
//!
//! Each expansion proposes candidate continuations of a trace. Exactly one
//! candidate keeps the parent's true success probability; every other one loses
//! a gap drawn uniformly from `[delta_min, delta_max]`. With probability
//! `epsilon` per expansion the candidate set contains an out-of-distribution
//! trace whose verifier scores are much noisier (and optionally biased).

use serde::{Deserialize, Serialize};

use crate::error::{argument, config, Result};
use crate::rng::{streams, SplitMix64, StreamAllocator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OodMode {
    /// The strongest non-best candidate is the OOD one.
    RunnerUp,
    /// Every non-best candidate is OOD independently.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// Candidates per expansion step in chain scenarios.
    #[serde(rename = "M")]
    pub m: usize,
    /// Horizon in reasoning steps.
    #[serde(rename = "T")]
    pub t: usize,
    pub epsilon: f64,
    pub r0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub sigma_id: f64,
    pub sigma_ood: f64,
    pub bias_ood: f64,
    pub ood_mode: OodMode,
    pub clamp_scores: bool,
}

impl EnvConfig {
    /// Environment used by the degradation studies: noiseless in-distribution
    /// scoring, unit root reward.
    pub fn theory_default() -> Self {
        Self {
            m: 4,
            t: 20,
            epsilon: 0.2,
            r0: 1.0,
            delta_min: 0.02,
            delta_max: 0.10,
            sigma_id: 0.0,
            sigma_ood: 0.3,
            bias_ood: 0.0,
            ood_mode: OodMode::RunnerUp,
            clamp_scores: false,
        }
    }

    /// Environment used by matched-compute comparisons and ablations.
    pub fn compare_default() -> Self {
        Self {
            r0: 0.9,
            sigma_id: 0.01,
            ..Self::theory_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.m < 1 {
            return Err(config("M >= 1 violated"));
        }
        if self.t < 1 {
            return Err(config("T >= 1 violated"));
        }
        if !in_unit(self.epsilon) {
            return Err(config("0 <= epsilon <= 1 violated"));
        }
        if !in_unit(self.r0) {
            return Err(config("0 <= r0 <= 1 violated"));
        }
        if !(self.delta_min > 0.0) {
            return Err(config("0 < delta_min violated"));
        }
        if !(self.delta_min <= self.delta_max) {
            return Err(config("delta_min <= delta_max violated"));
        }
        if !(self.sigma_id >= 0.0) {
            return Err(config("0 <= sigma_id violated"));
        }
        if !(self.sigma_id < self.sigma_ood) {
            return Err(config("sigma_id < sigma_ood violated"));
        }
        if !self.bias_ood.is_finite() {
            return Err(config("bias_ood must be finite"));
        }
        Ok(())
    }

    /// Unbiased mode keeps verifier means equal to true rewards.
    pub fn is_unbiased(&self) -> bool {
        self.bias_ood == 0.0 && !self.clamp_scores
    }

    /// Per-child OOD probability in independent mode so that a set with
    /// `count - 1` non-best children contains at least one OOD child with
    /// probability `epsilon`.
    pub fn independent_ood_rate(&self, count: usize) -> f64 {
        if count < 2 {
            return 0.0;
        }
        1.0 - (1.0 - self.epsilon).powf(1.0 / (count - 1) as f64)
    }
}

pub type NodeId = u64;

/// A trace prefix. Everything except `id`, `parent` and `depth` is latent:
/// search code only observes it through the scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub true_reward: f64,
    pub is_ood: bool,
    pub score_mu: f64,
    pub score_sigma: f64,
    /// Id of the best child among this node's siblings (itself if best).
    pub best_sibling: NodeId,
    /// Non-best choices on the root-to-node path.
    pub path_mistakes: usize,
    /// Whether any gap on the root-to-node path was truncated at zero reward.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub step: usize,
    pub chosen: NodeId,
    pub best: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub final_true_reward: f64,
    pub correct: bool,
    pub mistakes: usize,
    pub selections: Vec<Selection>,
}

/// Node arena plus the environment's private random stream for one episode.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    rng: SplitMix64,
    nodes: Vec<Node>,
}

/// Starts an episode and returns the environment together with the root trace.
pub fn init_episode(cfg: &EnvConfig, seed: u64) -> Result<(Environment, Node)> {
    cfg.validate()?;
    let root = Node {
        id: 0,
        parent: None,
        depth: 0,
        true_reward: cfg.r0,
        is_ood: false,
        score_mu: cfg.r0,
        score_sigma: cfg.sigma_id,
        best_sibling: 0,
        path_mistakes: 0,
        clamped: false,
    };
    let env = Environment {
        cfg: cfg.clone(),
        rng: StreamAllocator::new(seed).reserved(streams::ENVIRONMENT).rng(),
        nodes: vec![root],
    };
    Ok((env, root))
}

impl Environment {
    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn horizon(&self) -> usize {
        self.cfg.t
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Proposes `count` children of `parent` in a random order.
    pub fn propose_children(&mut self, parent: &Node, count: usize) -> Result<Vec<Node>> {
        if count < 1 {
            return Err(argument("propose_children requires count >= 1"));
        }
        let cfg = &self.cfg;
        // Slot 0 is the best child before shuffling; the rest carry gaps.
        let mut rewards = Vec::with_capacity(count);
        let mut clamped = Vec::with_capacity(count);
        rewards.push(parent.true_reward);
        clamped.push(false);
        for _ in 1..count {
            let gap = self.rng.uniform_in(cfg.delta_min, cfg.delta_max);
            let r = parent.true_reward - gap;
            clamped.push(r < 0.0);
            rewards.push(r.clamp(0.0, 1.0));
        }

        let mut ood = vec![false; count];
        if count > 1 {
            match cfg.ood_mode {
                OodMode::RunnerUp => {
                    if self.rng.bernoulli(cfg.epsilon) {
                        let runner_up = (1..count)
                            .max_by(|&a, &b| rewards[a].total_cmp(&rewards[b]).then(b.cmp(&a)))
                            .expect("count > 1");
                        ood[runner_up] = true;
                    }
                }
                OodMode::Independent => {
                    let q = cfg.independent_ood_rate(count);
                    for flag in ood.iter_mut().skip(1) {
                        *flag = self.rng.bernoulli(q);
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..count).collect();
        self.rng.shuffle(&mut order);

        let first_id = self.nodes.len() as NodeId;
        let best_id = first_id + order.iter().position(|&slot| slot == 0).unwrap() as NodeId;
        let children: Vec<Node> = order
            .iter()
            .enumerate()
            .map(|(pos, &slot)| {
                let is_ood = ood[slot];
                let true_reward = rewards[slot];
                Node {
                    id: first_id + pos as NodeId,
                    parent: Some(parent.id),
                    depth: parent.depth + 1,
                    true_reward,
                    is_ood,
                    score_mu: if is_ood { true_reward + cfg.bias_ood } else { true_reward },
                    score_sigma: if is_ood { cfg.sigma_ood } else { cfg.sigma_id },
                    best_sibling: best_id,
                    path_mistakes: parent.path_mistakes + usize::from(slot != 0),
                    clamped: parent.clamped || clamped[slot],
                }
            })
            .collect();
        self.nodes.extend_from_slice(&children);
        Ok(children)
    }

    /// Root-to-node choices, one per depth.
    pub fn lineage(&self, node: &Node) -> Vec<Selection> {
        let mut out = Vec::with_capacity(node.depth);
        let mut cur = *node;
        while let Some(parent) = cur.parent {
            out.push(Selection {
                step: cur.depth,
                chosen: cur.id,
                best: cur.best_sibling,
            });
            cur = *self.node(parent);
        }
        out.reverse();
        out
    }

    /// Draws the final answer's correctness from the node's success probability.
    pub fn resolve_outcome(&self, final_node: &Node, rng: &mut SplitMix64) -> Result<EpisodeOutcome> {
        if final_node.depth != self.cfg.t {
            return Err(argument(format!(
                "resolve_outcome requires a depth-{} trace, got depth {}",
                self.cfg.t, final_node.depth
            )));
        }
        Ok(resolve_outcome(final_node, self.lineage(final_node), rng))
    }
}

/// Bernoulli resolution of a finished trace.
pub fn resolve_outcome(final_node: &Node, selections: Vec<Selection>, rng: &mut SplitMix64) -> EpisodeOutcome {
    EpisodeOutcome {
        final_true_reward: final_node.true_reward,
        correct: rng.bernoulli(final_node.true_reward),
        mistakes: final_node.path_mistakes,
        selections,
    }
}
