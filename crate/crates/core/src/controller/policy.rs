//! Feed-forward Gaussian policy over the squashed action box, trained with
//! REINFORCE and warm-started by behavioral cloning.

use std::f64::consts::{LN_2, PI};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{argument, config, Result};
use crate::rng::SplitMix64;

use super::action::{ActionVector, StateFeatures, ACTION_BOUNDS, ACTION_DIM, FEATURE_DIM};

pub const CHECKPOINT_VERSION: &str = "uats-policy-v1";
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;
/// Initial log-std bias, so exploration starts at a standard deviation of about 0.37.
pub const INITIAL_LOG_STD: f64 = -1.0;
const SQUASH_LIMIT: f64 = 1.0 - 1e-6;

/// Fully connected layer with row-major `outputs x inputs` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// Network weights. Hidden layers use ReLU; the last layer emits six means
/// followed by six raw log-standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub layers: Vec<Dense>,
}

/// Per-dimension Gaussian over the pre-squash action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyHead {
    pub mean: [f64; ACTION_DIM],
    pub log_std: [f64; ACTION_DIM],
    /// Whether the raw log-std fell outside the clamp range.
    pub clamped: [bool; ACTION_DIM],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledAction {
    pub action: ActionVector,
    pub pre_squash: [f64; ACTION_DIM],
    pub log_prob: f64,
}

/// One controller decision inside an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub features: StateFeatures,
    pub pre_squash: [f64; ACTION_DIM],
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub reward: f64,
    pub used_units: usize,
    pub total_units: usize,
}

/// Diagnostics of one policy-gradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub baseline: f64,
    pub grad_norm: f64,
    pub skipped: bool,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: String,
    shapes: Vec<[usize; 2]>,
    layers: Vec<Dense>,
}

struct Forward {
    /// Input of every layer, then the raw output.
    activations: Vec<Vec<f64>>,
}

impl PolicyParams {
    /// The standard 7-256-256-12 network.
    pub fn standard(seed: u64) -> Self {
        Self::with_hidden(&[256, 256], seed)
    }

    /// Network with the given hidden widths, uniform fan-in initialization.
    pub fn with_hidden(hidden: &[usize], seed: u64) -> Self {
        let mut rng = SplitMix64::from_state(seed);
        let mut dims = vec![FEATURE_DIM];
        dims.extend_from_slice(hidden);
        dims.push(2 * ACTION_DIM);
        let mut layers: Vec<Dense> = dims
            .windows(2)
            .map(|d| {
                let bound = 1.0 / (d[0] as f64).sqrt();
                let mut layer = Dense::zeros(d[0], d[1]);
                for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                    *w = rng.uniform_in(-bound, bound);
                }
                layer
            })
            .collect();
        let last = layers.last_mut().expect("at least one layer");
        for b in &mut last.biases[ACTION_DIM..] {
            *b = INITIAL_LOG_STD;
        }
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.layers.first() else {
            return Err(config("policy has no layers"));
        };
        if first.inputs != FEATURE_DIM || self.layers.last().map(|l| l.outputs) != Some(2 * ACTION_DIM) {
            return Err(config(format!(
                "policy must map {FEATURE_DIM} features to {} outputs",
                2 * ACTION_DIM
            )));
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(config(format!("layer {i} output does not match layer {} input", i + 1)));
            }
        }
        for l in &self.layers {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(config("layer storage does not match its shape"));
            }
        }
        if !self.flat().iter().all(|v| v.is_finite()) {
            return Err(config("policy has non-finite parameters"));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(argument(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    fn axpy(&mut self, scale: f64, other: &PolicyParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += scale * y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += scale * y;
            }
        }
    }

    fn norm(&self) -> f64 {
        self.flat().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn forward(&self, features: &StateFeatures) -> Forward {
        let mut activations = vec![features.to_array().to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = layer.forward(activations.last().expect("input"));
            if i < last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            activations.push(out);
        }
        Forward { activations }
    }

    /// Accumulates `d objective / d params` into `grad` given the gradient
    /// with respect to the raw output.
    fn backward(&self, fwd: &Forward, grad_out: &[f64], grad: &mut PolicyParams) {
        let mut delta = grad_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &fwd.activations[i];
            let g = &mut grad.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (w, x) in row.iter_mut().zip(input) {
                    *w += d * x;
                }
            }
            if i == 0 {
                break;
            }
            let mut back = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (b, w) in back.iter_mut().zip(row) {
                    *b += d * w;
                }
            }
            // ReLU derivative, read off the post-activation input of layer i.
            for (b, x) in back.iter_mut().zip(input) {
                if *x <= 0.0 {
                    *b = 0.0;
                }
            }
            delta = back;
        }
    }

    fn head_of(fwd: &Forward) -> PolicyHead {
        let out = fwd.activations.last().expect("output");
        let mut head = PolicyHead {
            mean: [0.0; ACTION_DIM],
            log_std: [0.0; ACTION_DIM],
            clamped: [false; ACTION_DIM],
        };
        for j in 0..ACTION_DIM {
            head.mean[j] = out[j];
            let raw = out[ACTION_DIM + j];
            head.log_std[j] = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
            head.clamped[j] = !(LOG_STD_MIN..=LOG_STD_MAX).contains(&raw);
        }
        head
    }

    pub fn head(&self, features: &StateFeatures) -> PolicyHead {
        Self::head_of(&self.forward(features))
    }

    /// Draws an action; `deterministic` uses the mean instead of a sample.
    pub fn sample_action(&self, features: &StateFeatures, rng: &mut SplitMix64, deterministic: bool) -> SampledAction {
        let head = self.head(features);
        let mut u = [0.0; ACTION_DIM];
        for j in 0..ACTION_DIM {
            u[j] = if deterministic {
                head.mean[j]
            } else {
                head.mean[j] + head.log_std[j].exp() * rng.normal()
            };
        }
        SampledAction {
            action: squash_action(&u),
            pre_squash: u,
            log_prob: log_prob(&head, &u),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION.to_string(),
            shapes: self.layers.iter().map(|l| [l.outputs, l.inputs]).collect(),
            layers: self.layers.clone(),
        };
        fs::write(path, serde_json::to_string(&ckpt)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(config(format!(
                "checkpoint version {} is not {CHECKPOINT_VERSION}",
                ckpt.version
            )));
        }
        let shapes: Vec<[usize; 2]> = ckpt.layers.iter().map(|l| [l.outputs, l.inputs]).collect();
        if shapes != ckpt.shapes {
            return Err(config("checkpoint shape header does not match its layers"));
        }
        let params = Self { layers: ckpt.layers };
        params.validate()?;
        Ok(params)
    }
}

pub fn squash(u: f64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (u.tanh() + 1.0) / 2.0
}

/// Inverse of [`squash`], clipped away from the bounds.
pub fn unsquash(x: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-SQUASH_LIMIT, SQUASH_LIMIT).atanh()
}

pub fn squash_action(u: &[f64; ACTION_DIM]) -> ActionVector {
    let mut a = [0.0; ACTION_DIM];
    for j in 0..ACTION_DIM {
        let (lo, hi) = ACTION_BOUNDS[j];
        a[j] = squash(u[j], lo, hi);
    }
    ActionVector::from_array(a)
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln |dx/du|` of the squash onto `[lo, hi]`.
pub fn log_squash_jacobian(u: f64, lo: f64, hi: f64) -> f64 {
    ((hi - lo) / 2.0).ln() + 2.0 * (LN_2 - u - softplus(-2.0 * u))
}

/// Log-density of the squashed action whose pre-squash value is `u`.
pub fn log_prob(head: &PolicyHead, u: &[f64; ACTION_DIM]) -> f64 {
    (0..ACTION_DIM)
        .map(|j| {
            let (lo, hi) = ACTION_BOUNDS[j];
            let z = (u[j] - head.mean[j]) / head.log_std[j].exp();
            -0.5 * z * z - head.log_std[j] - 0.5 * (2.0 * PI).ln() - log_squash_jacobian(u[j], lo, hi)
        })
        .sum()
}

/// Gradient of `log_prob` with respect to the raw network output.
fn log_prob_output_grad(head: &PolicyHead, u: &[f64; ACTION_DIM], scale: f64) -> Vec<f64> {
    let mut g = vec![0.0; 2 * ACTION_DIM];
    for j in 0..ACTION_DIM {
        let inv_var = (-2.0 * head.log_std[j]).exp();
        let diff = u[j] - head.mean[j];
        g[j] = scale * diff * inv_var;
        if !head.clamped[j] {
            g[ACTION_DIM + j] = scale * (diff * diff * inv_var - 1.0);
        }
    }
    g
}

/// Centered rewards. Differences are taken against the first reward before
/// averaging, so equal rewards give exactly zero.
pub fn advantages(rewards: &[f64]) -> Vec<f64> {
    let r0 = rewards[0];
    let d: Vec<f64> = rewards.iter().map(|r| r - r0).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    d.iter().map(|x| x - mean).collect()
}

/// `(1/M) sum_i sum_t log pi(a_t | s_t) * A_i`, whose gradient is the
/// policy-gradient estimate.
pub fn surrogate_objective(params: &PolicyParams, batch: &[Trajectory]) -> Result<f64> {
    check_batch(batch)?;
    let adv = advantages(&batch.iter().map(|t| t.reward).collect::<Vec<_>>());
    let m = batch.len() as f64;
    Ok(batch
        .iter()
        .zip(&adv)
        .map(|(traj, a)| {
            traj.steps
                .iter()
                .map(|s| log_prob(&params.head(&s.features), &s.pre_squash) * a / m)
                .sum::<f64>()
        })
        .sum())
}

fn check_batch(batch: &[Trajectory]) -> Result<()> {
    if batch.len() < 2 {
        return Err(argument(format!("policy update needs at least 2 trajectories, got {}", batch.len())));
    }
    Ok(())
}

/// Policy-gradient estimate with the batch-mean baseline.
pub fn policy_gradient(params: &PolicyParams, batch: &[Trajectory]) -> Result<PolicyParams> {
    check_batch(batch)?;
    let adv = advantages(&batch.iter().map(|t| t.reward).collect::<Vec<_>>());
    let m = batch.len() as f64;
    let mut grad = params.zeros_like();
    for (traj, &a) in batch.iter().zip(&adv) {
        if a == 0.0 {
            continue;
        }
        for step in &traj.steps {
            let fwd = params.forward(&step.features);
            let head = PolicyParams::head_of(&fwd);
            let g = log_prob_output_grad(&head, &step.pre_squash, a / m);
            params.backward(&fwd, &g, &mut grad);
        }
    }
    Ok(grad)
}

/// One gradient-ascent step. A non-finite gradient leaves `params` unchanged.
pub fn reinforce_update(params: &PolicyParams, batch: &[Trajectory], lr: f64) -> Result<(PolicyParams, UpdateStats)> {
    let grad = policy_gradient(params, batch)?;
    let baseline = batch.iter().map(|t| t.reward).sum::<f64>() / batch.len() as f64;
    let grad_norm = grad.norm();
    if !grad_norm.is_finite() {
        eprintln!("warning: non-finite policy gradient, update skipped");
        return Ok((params.clone(), UpdateStats { baseline, grad_norm, skipped: true }));
    }
    let mut next = params.clone();
    next.axpy(lr, &grad);
    Ok((next, UpdateStats { baseline, grad_norm, skipped: false }))
}

/// Inverse-squashed regression targets for `action`.
pub fn clone_targets(action: &ActionVector) -> [f64; ACTION_DIM] {
    let a = action.to_array();
    let mut t = [0.0; ACTION_DIM];
    for j in 0..ACTION_DIM {
        let (lo, hi) = ACTION_BOUNDS[j];
        t[j] = unsquash(a[j], lo, hi);
    }
    t
}

/// Mean over the dataset of the summed squared error between the network's
/// pre-squash means and the inverse-squashed targets.
pub fn clone_loss(params: &PolicyParams, dataset: &[(StateFeatures, ActionVector)]) -> f64 {
    dataset
        .iter()
        .map(|(f, a)| {
            let head = params.head(f);
            clone_targets(a)
                .iter()
                .zip(head.mean)
                .map(|(t, m)| (m - t).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / dataset.len() as f64
}

/// Full-batch gradient descent on [`clone_loss`]. Returns the trained
/// parameters and the loss before each epoch followed by the final loss.
pub fn behavioral_clone(
    params: &PolicyParams,
    dataset: &[(StateFeatures, ActionVector)],
    epochs: usize,
    lr: f64,
) -> Result<(PolicyParams, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(argument("behavioral cloning needs a non-empty dataset"));
    }
    params.validate()?;
    let n = dataset.len() as f64;
    let mut current = params.clone();
    let mut losses = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        let mut grad = current.zeros_like();
        let mut loss = 0.0;
        for (f, a) in dataset {
            let fwd = current.forward(f);
            let out = fwd.activations.last().expect("output");
            let mut g = vec![0.0; 2 * ACTION_DIM];
            for (j, t) in clone_targets(a).iter().enumerate() {
                let diff = out[j] - t;
                loss += diff * diff / n;
                g[j] = 2.0 * diff / n;
            }
            current.backward(&fwd, &g, &mut grad);
        }
        losses.push(loss);
        current.axpy(-lr, &grad);
    }
    losses.push(clone_loss(&current, dataset));
    Ok((current, losses))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(x: f64) -> StateFeatures {
        StateFeatures {
            mean_of_means: 0.5 + x,
            max_of_means: 0.7 + x,
            var_of_means: 0.01,
            mean_of_vars: 0.002,
            max_of_vars: 0.03,
            depth_frac: 0.3,
            budget_frac: 0.6,
        }
    }

    #[test]
    fn shapes_and_flat_round_trip() {
        let p = PolicyParams::standard(1);
        assert_eq!(p.param_count(), 7 * 256 + 256 + 256 * 256 + 256 + 256 * 12 + 12);
        assert!(p.validate().is_ok());
        let mut q = p.zeros_like();
        q.set_flat(&p.flat()).unwrap();
        assert_eq!(p, q);
        assert!(q.set_flat(&[0.0]).is_err());
    }

    #[test]
    fn squash_inverts() {
        for &x in &[0.3, 1.0, 1.9] {
            assert!((squash(unsquash(x, 0.25, 2.0), 0.25, 2.0) - x).abs() < 1e-12);
        }
        assert!(unsquash(2.0, 0.25, 2.0).is_finite());
        assert!((unsquash(2.0, 0.25, 2.0) - (1.0f64 - 1e-6).atanh()).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_gives_midpoints() {
        let mut p = PolicyParams::with_hidden(&[4], 3);
        for l in &mut p.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        let s = p.sample_action(&features(0.0), &mut SplitMix64::from_state(0), true);
        for (x, (lo, hi)) in s.action.to_array().into_iter().zip(ACTION_BOUNDS) {
            assert!((x - (lo + hi) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn jacobian_matches_direct_formula() {
        for &u in &[-3.0, -0.2, 0.0, 0.7, 4.0] {
            let direct = ((2.0 - 0.25) / 2.0 * (1.0 - f64::tanh(u).powi(2))).ln();
            assert!((log_squash_jacobian(u, 0.25, 2.0) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn equal_rewards_give_zero_gradient() {
        let p = PolicyParams::with_hidden(&[4], 5);
        let mut rng = SplitMix64::from_state(9);
        let batch: Vec<Trajectory> = (0..4)
            .map(|i| {
                let f = features(i as f64 * 0.01);
                let s = p.sample_action(&f, &mut rng, false);
                Trajectory {
                    steps: vec![TrajectoryStep { features: f, pre_squash: s.pre_squash, log_prob: s.log_prob }],
                    reward: 0.95,
                    used_units: 10,
                    total_units: 20,
                }
            })
            .collect();
        let (next, stats) = reinforce_update(&p, &batch, 0.1).unwrap();
        assert_eq!(next, p);
        assert_eq!(stats.grad_norm, 0.0);
        assert!(reinforce_update(&p, &batch[..1], 0.1).is_err());
    }

    #[test]
    fn single_pair_clone_converges() {
        let p = PolicyParams::with_hidden(&[16], 2);
        let target = ActionVector { beta: 1.2, gamma: 0.8, tau: 0.005, delta: 0.05, nu1: 0.4, nu2: 0.3 };
        let data = vec![(features(0.0), target)];
        let (q, losses) = behavioral_clone(&p, &data, 400, 0.05).unwrap();
        assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-24));
        let got = q.sample_action(&features(0.0), &mut SplitMix64::from_state(0), true).action;
        for ((g, t), (lo, hi)) in got.to_array().iter().zip(target.to_array()).zip(ACTION_BOUNDS) {
            assert!((g - t).abs() <= 1e-3 * (hi - lo), "{g} vs {t}");
        }
        assert!(behavioral_clone(&p, &[], 1, 0.1).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let p = PolicyParams::with_hidden(&[8, 8], 11);
        p.save(&path).unwrap();
        assert_eq!(PolicyParams::load(&path).unwrap(), p);
        std::fs::write(&path, r#"{"version":"other","shapes":[],"layers":[]}"#).unwrap();
        assert!(PolicyParams::load(&path).is_err());
    }
}
