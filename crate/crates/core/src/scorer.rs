//! Stochastic verifier: repeated noisy scoring of a trace, the summary
//! statistics used for uncertainty-aware ranking, and an HTTP client for a
//! remote scoring service speaking the same stream contract.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::env::{Node, NodeId};
use crate::error::{argument, Error, Result};
use crate::rng::{StreamId, RNG_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSamples {
    pub node_id: NodeId,
    pub values: Vec<f64>,
}

/// Mean, sample variance, pass count, step and optimistic value of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub node_id: NodeId,
    pub mean: f64,
    /// Sample variance with a `K - 1` denominator; 0 when `count == 1`.
    pub variance: f64,
    pub count: usize,
    pub step: usize,
    pub ucb: f64,
    pub alpha: f64,
    /// Set when the variance is not estimable (a single pass).
    pub single_sample: bool,
}

/// `alpha * sqrt(2 ln(step) / count)`.
pub fn ucb_bonus(alpha: f64, step: usize, count: usize) -> f64 {
    alpha * (2.0 * (step as f64).ln() / count as f64).sqrt()
}

impl ScoreStats {
    fn from_moments(node_id: NodeId, mean: f64, m2: f64, count: usize, step: usize, alpha: f64) -> Self {
        let variance = if count > 1 { (m2 / (count - 1) as f64).max(0.0) } else { 0.0 };
        Self {
            node_id,
            mean,
            variance,
            count,
            step,
            ucb: mean + ucb_bonus(alpha, step, count),
            alpha,
            single_sample: count == 1,
        }
    }

    /// Re-stamps to a later step, recomputing the optimistic value.
    pub fn at_step(self, step: usize) -> Self {
        Self {
            step,
            ucb: self.mean + ucb_bonus(self.alpha, step, self.count),
            ..self
        }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self {
            alpha,
            ucb: self.mean + ucb_bonus(alpha, self.step, self.count),
            ..self
        }
    }
}

pub fn summarize(samples: &ScoreSamples, step: usize, alpha: f64) -> Result<ScoreStats> {
    let values = &samples.values;
    if values.is_empty() {
        return Err(argument("summarize requires at least one sample"));
    }
    if step < 1 {
        return Err(argument("summarize requires step >= 1"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    Ok(ScoreStats::from_moments(samples.node_id, mean, m2, values.len(), step, alpha))
}

/// Pools two summaries of the same node as if their samples were concatenated.
pub fn merge_stats(a: &ScoreStats, b: &ScoreStats) -> Result<ScoreStats> {
    if a.count == 0 || b.count == 0 {
        return Err(argument("merge_stats requires count >= 1 on both sides"));
    }
    if a.node_id != b.node_id {
        return Err(argument(format!(
            "merge_stats across nodes {} and {}",
            a.node_id, b.node_id
        )));
    }
    let (na, nb) = (a.count as f64, b.count as f64);
    let n = na + nb;
    let d = b.mean - a.mean;
    let mean = a.mean + d * nb / n;
    let m2a = a.variance * (na - 1.0);
    let m2b = b.variance * (nb - 1.0);
    let m2 = m2a + m2b + d * d * na * nb / n;
    Ok(ScoreStats::from_moments(
        a.node_id,
        mean,
        m2,
        a.count + b.count,
        a.step.max(b.step),
        a.alpha,
    ))
}

/// Source of noisy verifier scores.
pub trait Scorer: Send + Sync {
    fn draw(&self, node: &Node, k: usize, stream: StreamId) -> Result<ScoreSamples>;
}

/// In-process scorer following the seeded stream contract.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalScorer {
    pub clamp: bool,
}

/// `k` draws of `mu + sigma * z` from the given stream.
pub fn synthetic_scores(mu: f64, sigma: f64, k: usize, stream: StreamId, clamp: bool) -> Vec<f64> {
    let mut rng = stream.rng();
    (0..k)
        .map(|_| {
            let v = mu + sigma * rng.normal();
            if clamp {
                v.clamp(0.0, 1.0)
            } else {
                v
            }
        })
        .collect()
}

impl Scorer for LocalScorer {
    fn draw(&self, node: &Node, k: usize, stream: StreamId) -> Result<ScoreSamples> {
        if k < 1 {
            return Err(argument("draw_scores requires k >= 1"));
        }
        Ok(ScoreSamples {
            node_id: node.id,
            values: synthetic_scores(node.score_mu, node.score_sigma, k, stream, self.clamp),
        })
    }
}

/// Body of `POST /v1/score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub mu: f64,
    pub sigma: f64,
    pub k: usize,
    pub seed: u64,
    pub stream_id: u64,
    #[serde(default)]
    pub clamp: bool,
    /// Reserved for a verifier that scores real trace text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub samples: Vec<f64>,
    pub rng_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub rng_version: String,
}

/// Client for a remote scoring service.
#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: String,
    clamp: bool,
    max_attempts: u32,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(endpoint: impl Into<String>, clamp: bool) -> Self {
        Self::with_policy(endpoint, clamp, Duration::from_secs(5), 3)
    }

    pub fn with_policy(endpoint: impl Into<String>, clamp: bool, timeout: Duration, max_attempts: u32) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            clamp,
            max_attempts: max_attempts.max(1),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn call<T: serde::de::DeserializeOwned>(&self, build: impl Fn() -> Result<ureq::Response, ureq::Error>) -> Result<T> {
        let mut last = String::new();
        for attempt in 1..=self.max_attempts {
            match build() {
                Ok(resp) => {
                    return resp
                        .into_json::<T>()
                        .map_err(|e| Error::Protocol(format!("malformed response body: {e}")));
                }
                Err(ureq::Error::Status(code, resp)) => {
                    let body = resp.into_string().unwrap_or_default();
                    return Err(Error::Protocol(format!("server answered {code}: {body}")));
                }
                Err(ureq::Error::Transport(t)) => {
                    last = t.to_string();
                    if attempt < self.max_attempts {
                        std::thread::sleep(Duration::from_millis(20 * attempt as u64));
                    }
                }
            }
        }
        Err(Error::Transport {
            endpoint: self.endpoint.clone(),
            attempts: self.max_attempts,
            message: last,
        })
    }

    pub fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        let url = format!("{}/v1/score", self.endpoint);
        let body = serde_json::to_value(request)?;
        self.call(|| self.agent.post(&url).send_json(body.clone()))
    }

    pub fn health(&self) -> Result<HealthResponse> {
        let url = format!("{}/v1/health", self.endpoint);
        self.call(|| self.agent.get(&url).call())
    }
}

impl Scorer for RemoteScorer {
    fn draw(&self, node: &Node, k: usize, stream: StreamId) -> Result<ScoreSamples> {
        if k < 1 {
            return Err(argument("draw_scores requires k >= 1"));
        }
        let request = ScoreRequest {
            mu: node.score_mu,
            sigma: node.score_sigma,
            k,
            seed: stream.seed,
            stream_id: stream.id,
            clamp: self.clamp,
            payload: None,
        };
        let resp = self.score(&request)?;
        if resp.rng_version != RNG_VERSION {
            return Err(Error::Protocol(format!(
                "rng_version mismatch: server {}, client {}",
                resp.rng_version, RNG_VERSION
            )));
        }
        if resp.samples.len() != k {
            return Err(Error::Protocol(format!(
                "expected {k} samples, got {}",
                resp.samples.len()
            )));
        }
        Ok(ScoreSamples {
            node_id: node.id,
            values: resp.samples,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    LocalSynthetic,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScorerBackend {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub clamp_scores: bool,
}

impl ScorerBackend {
    pub fn local(clamp_scores: bool) -> Self {
        Self {
            kind: BackendKind::LocalSynthetic,
            endpoint: None,
            clamp_scores,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Scorer>> {
        match self.kind {
            BackendKind::LocalSynthetic => Ok(Box::new(LocalScorer { clamp: self.clamp_scores })),
            BackendKind::Remote => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Config("remote backend requires an endpoint".into()))?;
                Ok(Box::new(RemoteScorer::new(endpoint, self.clamp_scores)))
            }
        }
    }
}

/// Draws `k` scores for `node` and summarizes them at `step`.
pub fn score_node(
    scorer: &dyn Scorer,
    node: &Node,
    k: usize,
    stream: StreamId,
    step: usize,
    alpha: f64,
) -> Result<ScoreStats> {
    summarize(&scorer.draw(node, k, stream)?, step, alpha)
}
