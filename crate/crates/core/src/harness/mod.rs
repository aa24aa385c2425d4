//! Experiment runner: single-chain degradation studies, compute-matched
//! method comparisons and parameter sweeps.

pub mod output;
pub mod theory;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{run_a_uats, ActionMode, PolicyParams, TrainConfig};
use crate::env::EnvConfig;
use crate::error::{argument, config, Result};
use crate::rng::derive_seed;
use crate::scorer::Scorer;
use crate::search::{chain_budget, run_baseline, run_h_uats, BaselineMethod, EpisodeReport, SearchParams};

pub use output::{emit_results, format_g9, parse_results, round_g9, rows_to_csv, sorted_rows, ResultRow};
pub use theory::{
    doubling_ratios, greedy_step_loss, linear_r2, ucb_degradation_bound, TheoryPoint, TheorySummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Theory,
    Compare,
    Ablate,
    TrainController,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "best-of-n")]
    BestOfN,
    #[serde(rename = "beam-search")]
    BeamSearch,
    #[serde(rename = "rebase")]
    Rebase,
    #[serde(rename = "h-uats")]
    HUats,
    #[serde(rename = "a-uats")]
    AUats,
    #[serde(rename = "oracle-pass@k")]
    OraclePassAtK,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::BestOfN,
        Method::BeamSearch,
        Method::Rebase,
        Method::HUats,
        Method::AUats,
        Method::OraclePassAtK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::BestOfN => "best-of-n",
            Method::BeamSearch => "beam-search",
            Method::Rebase => "rebase",
            Method::HUats => "h-uats",
            Method::AUats => "a-uats",
            Method::OraclePassAtK => "oracle-pass@k",
        }
    }

    fn baseline(self) -> Option<BaselineMethod> {
        match self {
            Method::BestOfN => Some(BaselineMethod::BestOfN),
            Method::BeamSearch => Some(BaselineMethod::BeamSearch),
            Method::Rebase => Some(BaselineMethod::Rebase),
            Method::OraclePassAtK => Some(BaselineMethod::OraclePassAtK),
            Method::HUats | Method::AUats => None,
        }
    }
}

/// Swept parameter of an ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationParam {
    K0,
    Tau,
    Delta,
    /// Re-evaluation passes per step; 0 disables re-evaluation.
    B,
    /// Multiplier on both score noise levels.
    Noise,
    /// 1 runs the full pipeline, 0 skips partitioning and re-evaluation.
    Uncertainty,
}

impl AblationParam {
    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| argument(format!("unknown ablation parameter {name:?}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            AblationParam::K0 => "k0",
            AblationParam::Tau => "tau",
            AblationParam::Delta => "delta",
            AblationParam::B => "b",
            AblationParam::Noise => "noise",
            AblationParam::Uncertainty => "uncertainty",
        }
    }
}

/// A complete experiment description, read from JSON. Omitted fields take
/// the defaults of the experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub env: Option<EnvConfig>,
    #[serde(default)]
    pub params: Option<SearchParams>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub t_grid: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Base seed; replication `r` runs episode seed `derive_seed(seed, r)`
    /// for every method.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Share of the per-step matched budget spent on re-evaluation.
    #[serde(default = "default_reeval_share")]
    pub reeval_share: f64,
    #[serde(default)]
    pub ablation: Option<AblationSpec>,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSpec {
    pub parameter: String,
    pub grid: Vec<f64>,
    /// Candidate paths that set the compute-matched budget.
    #[serde(default = "default_ablation_n")]
    pub n: usize,
}

fn default_reps() -> usize {
    1000
}

fn default_reeval_share() -> f64 {
    0.1
}

fn default_ablation_n() -> usize {
    16
}

pub const DEFAULT_T_GRID: [usize; 5] = [5, 10, 20, 40, 80];
pub const DEFAULT_N_GRID: [usize; 4] = [4, 16, 64, 256];

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            env: None,
            params: None,
            methods: Vec::new(),
            n_grid: Vec::new(),
            t_grid: Vec::new(),
            reps: default_reps(),
            seed: 0,
            output_dir: None,
            reeval_share: default_reeval_share(),
            ablation: None,
            checkpoint: None,
            train: None,
        }
    }

    pub fn env(&self) -> EnvConfig {
        self.env.clone().unwrap_or_else(|| match self.kind {
            ExperimentKind::Theory => EnvConfig::theory_default(),
            _ => EnvConfig::compare_default(),
        })
    }

    pub fn params(&self) -> SearchParams {
        self.params.clone().unwrap_or_else(|| match self.kind {
            ExperimentKind::Theory => SearchParams {
                k0: 4,
                alpha: 1.0,
                ..SearchParams::default()
            },
            _ => SearchParams::default(),
        })
    }

    pub fn t_grid(&self) -> Vec<usize> {
        if self.t_grid.is_empty() {
            DEFAULT_T_GRID.to_vec()
        } else {
            self.t_grid.clone()
        }
    }

    pub fn n_grid(&self) -> Vec<usize> {
        if self.n_grid.is_empty() {
            DEFAULT_N_GRID.to_vec()
        } else {
            self.n_grid.clone()
        }
    }

    pub fn methods(&self) -> Vec<Method> {
        if self.methods.is_empty() {
            Method::ALL.into_iter().filter(|&m| m != Method::AUats).collect()
        } else {
            self.methods.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut cfg = self.train.clone().unwrap_or_default();
        if self.train.is_none() {
            cfg.seed = self.seed;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(config("reps >= 1 violated"));
        }
        self.env().validate()?;
        self.params().validate()?;
        if !(0.0..1.0).contains(&self.reeval_share) {
            return Err(config("reeval_share must lie in [0, 1)"));
        }
        match self.kind {
            ExperimentKind::Theory => {
                if self.t_grid().contains(&0) {
                    return Err(config("t_grid entries must be >= 1"));
                }
            }
            ExperimentKind::Compare => {
                if self.n_grid().contains(&0) {
                    return Err(config("n_grid entries must be >= 1"));
                }
                if self.methods().contains(&Method::AUats) && self.checkpoint.is_none() {
                    return Err(config("a-uats requires a controller checkpoint"));
                }
            }
            ExperimentKind::Ablate => {
                let Some(a) = &self.ablation else {
                    return Err(config("ablate requires an ablation section"));
                };
                AblationParam::parse(&a.parameter)?;
                if a.grid.is_empty() {
                    return Err(config("ablation grid must be non-empty"));
                }
                if a.n == 0 {
                    return Err(config("ablation n must be >= 1"));
                }
            }
            ExperimentKind::TrainController => self.train_config().validate()?,
        }
        Ok(())
    }
}

/// What one episode contributes to a result row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub correct: bool,
    pub final_true_reward: f64,
    pub used_units: usize,
    pub total_units: usize,
}

impl From<&EpisodeReport> for EpisodeSummary {
    fn from(r: &EpisodeReport) -> Self {
        Self {
            correct: r.outcome.correct,
            final_true_reward: r.final_node.true_reward,
            used_units: r.ledger.used_units,
            total_units: r.ledger.total_units,
        }
    }
}

/// Runs `run(seed)` for replications `0..reps` in parallel, in replication order.
pub fn replicate(
    reps: usize,
    seed: u64,
    run: impl Fn(u64) -> Result<EpisodeReport> + Sync,
) -> Result<Vec<EpisodeSummary>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| run(derive_seed(seed, r)).map(|rep| EpisodeSummary::from(&rep)))
        .collect()
}

/// Aggregates episodes into one row.
pub fn aggregate(method: &str, x: f64, r0: f64, eps: &[EpisodeSummary]) -> ResultRow {
    let n = eps.len() as f64;
    let acc: Vec<f64> = eps.iter().map(|e| f64::from(u8::from(e.correct))).collect();
    let accuracy = acc.iter().sum::<f64>() / n;
    let stderr = if eps.len() > 1 {
        (acc.iter().map(|a| (a - accuracy).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    let final_true_reward = eps.iter().map(|e| e.final_true_reward).sum::<f64>() / n;
    ResultRow {
        method: method.to_string(),
        x,
        accuracy,
        stderr,
        final_true_reward,
        used_units: eps.iter().map(|e| e.used_units as f64).sum::<f64>() / n,
        degradation: r0 - final_true_reward,
    }
}

/// Mean and standard error of `values`.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Parameters `method` runs with at `n` candidate paths.
pub fn method_params(method: Method, base: &SearchParams, n: usize, horizon: usize, reeval_share: f64) -> SearchParams {
    match method {
        Method::HUats | Method::AUats => base.compute_matched(n, horizon, reeval_share),
        Method::BeamSearch => SearchParams {
            beam_width: n.min(4),
            ..base.baseline_matched(n, horizon)
        },
        _ => base.baseline_matched(n, horizon),
    }
}

/// One episode of `method`. `policy` is required for A-UATS.
pub fn run_method(
    method: Method,
    env: &EnvConfig,
    params: &SearchParams,
    scorer: &dyn Scorer,
    seed: u64,
    policy: Option<&PolicyParams>,
) -> Result<EpisodeReport> {
    match method {
        Method::HUats => run_h_uats(env, params, scorer, seed),
        Method::AUats => {
            let policy = policy.ok_or_else(|| config("a-uats requires a controller checkpoint"))?;
            run_a_uats(env, params, scorer, seed, policy, seed, true, ActionMode::PerStep).map(|(r, _)| r)
        }
        other => run_baseline(other.baseline().expect("baseline method"), env, params, scorer, seed),
    }
}

/// Greedy and UCB single chains over the horizon grid.
pub fn run_theory(spec: &ExperimentSpec, scorer: &dyn Scorer) -> Result<(Vec<ResultRow>, TheorySummary)> {
    spec.validate()?;
    let base_env = spec.env();
    let params = spec.params();
    let grid = spec.t_grid();
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &t in &grid {
        let env = EnvConfig { t, ..base_env.clone() };
        let run = |method: BaselineMethod, ucb: bool| -> Result<(ResultRow, f64, f64)> {
            let p = SearchParams {
                total_budget: chain_budget(&env, &params, ucb),
                ..params.clone()
            };
            let eps = replicate(spec.reps, spec.seed, |s| run_baseline(method, &env, &p, scorer, s))?;
            let losses: Vec<f64> = eps.iter().map(|e| env.r0 - e.final_true_reward).collect();
            let (d, se) = mean_se(&losses);
            let name = if ucb { "ucb-chain" } else { "greedy-chain" };
            Ok((aggregate(name, t as f64, env.r0, &eps), d, se))
        };
        let (greedy_row, greedy, greedy_se) = run(BaselineMethod::GreedyChain, false)?;
        let (ucb_row, ucb, ucb_se) = run(BaselineMethod::UcbChain, true)?;
        rows.push(greedy_row);
        rows.push(ucb_row);
        points.push(TheoryPoint {
            horizon: t,
            greedy,
            greedy_se,
            greedy_predicted: t as f64 * greedy_step_loss(&env),
            ucb,
            ucb_se,
            ucb_bound: ucb_degradation_bound(env.epsilon, t, params.k0),
        });
    }
    let ts: Vec<f64> = grid.iter().map(|&t| t as f64).collect();
    let greedy: Vec<f64> = points.iter().map(|p| p.greedy).collect();
    let ucb: Vec<f64> = points.iter().map(|p| p.ucb).collect();
    let summary = TheorySummary {
        greedy_r2: linear_r2(&ts, &greedy),
        greedy_ratios: doubling_ratios(&grid, &greedy),
        ucb_ratios: doubling_ratios(&grid, &ucb),
        points,
    };
    Ok((rows, summary))
}

/// Per-seed outcomes of every method at every `N`, keyed by (method, N).
pub type PairedOutcomes = Vec<((Method, usize), Vec<EpisodeSummary>)>;

/// Compute-matched comparison with common random numbers across methods.
pub fn run_compare_paired(
    spec: &ExperimentSpec,
    scorer: &dyn Scorer,
    policy: Option<&PolicyParams>,
) -> Result<PairedOutcomes> {
    spec.validate()?;
    let env = spec.env();
    let base = spec.params();
    let mut out = Vec::new();
    for &n in &spec.n_grid() {
        for method in spec.methods() {
            let p = method_params(method, &base, n, env.t, spec.reeval_share);
            let eps = replicate(spec.reps, spec.seed, |s| run_method(method, &env, &p, scorer, s, policy))?;
            out.push(((method, n), eps));
        }
    }
    Ok(out)
}

pub fn run_compare(spec: &ExperimentSpec, scorer: &dyn Scorer, policy: Option<&PolicyParams>) -> Result<Vec<ResultRow>> {
    let r0 = spec.env().r0;
    Ok(run_compare_paired(spec, scorer, policy)?
        .iter()
        .map(|((m, n), eps)| aggregate(m.name(), *n as f64, r0, eps))
        .collect())
}

/// Environment and H-UATS parameters at one ablation grid point.
pub fn ablation_point(
    param: AblationParam,
    value: f64,
    env: &EnvConfig,
    base: &SearchParams,
    n: usize,
    reeval_share: f64,
) -> Result<(EnvConfig, SearchParams)> {
    let plan = |p: &SearchParams| p.compute_matched(n, env.t, reeval_share);
    let whole = |v: f64| -> Result<usize> {
        if v < 0.0 || v.fract() != 0.0 {
            return Err(argument(format!("{} grid values must be whole numbers, got {v}", param.name())));
        }
        Ok(v as usize)
    };
    Ok(match param {
        AblationParam::K0 => {
            let k0 = whole(value)?;
            (env.clone(), plan(&SearchParams { k0, ..base.clone() }))
        }
        AblationParam::Tau => (env.clone(), SearchParams { tau: value, ..plan(base) }),
        AblationParam::Delta => (env.clone(), SearchParams { delta: value, ..plan(base) }),
        AblationParam::B => (env.clone(), SearchParams { b_budget: whole(value)?, ..plan(base) }),
        AblationParam::Noise => (
            EnvConfig {
                sigma_id: env.sigma_id * value,
                sigma_ood: env.sigma_ood * value,
                ..env.clone()
            },
            plan(base),
        ),
        AblationParam::Uncertainty => {
            let on = match whole(value)? {
                0 => false,
                1 => true,
                _ => return Err(argument("uncertainty grid values must be 0 or 1")),
            };
            (env.clone(), SearchParams { uncertainty: on, ..plan(base) })
        }
    })
}

/// Per-seed H-UATS outcomes at each ablation grid point.
pub fn run_ablation_paired(spec: &ExperimentSpec, scorer: &dyn Scorer) -> Result<Vec<(f64, Vec<EpisodeSummary>)>> {
    spec.validate()?;
    let a = spec.ablation.as_ref().expect("validated");
    let param = AblationParam::parse(&a.parameter)?;
    let env = spec.env();
    let base = spec.params();
    a.grid
        .iter()
        .map(|&v| {
            let (e, p) = ablation_point(param, v, &env, &base, a.n, spec.reeval_share)?;
            e.validate()?;
            p.validate()?;
            let eps = replicate(spec.reps, spec.seed, |s| run_h_uats(&e, &p, scorer, s))?;
            Ok((v, eps))
        })
        .collect()
}

pub fn run_ablation(spec: &ExperimentSpec, scorer: &dyn Scorer) -> Result<Vec<ResultRow>> {
    let r0 = spec.env().r0;
    let name = format!("h-uats/{}", spec.ablation.as_ref().map(|a| a.parameter.as_str()).unwrap_or(""));
    Ok(run_ablation_paired(spec, scorer)?
        .iter()
        .map(|(v, eps)| aggregate(&name, *v, r0, eps))
        .collect())
}

/// One named pass/fail check of an experiment's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Shape checks of the single-chain study.
pub fn check_theory(summary: &TheorySummary) -> Vec<Check> {
    let mut checks = vec![Check::new(
        "greedy linear fit r2 >= 0.98",
        summary.greedy_r2 >= 0.98,
        format!("r2 = {:.5}", summary.greedy_r2),
    )];
    for p in &summary.points {
        let dev = (p.greedy - p.greedy_predicted).abs();
        checks.push(Check::new(
            format!("greedy D({}) within 3 se of closed form", p.horizon),
            dev <= 3.0 * p.greedy_se,
            format!("measured {:.5} predicted {:.5} se {:.5}", p.greedy, p.greedy_predicted, p.greedy_se),
        ));
        checks.push(Check::new(
            format!("ucb D({}) <= bound + 0.02", p.horizon),
            p.ucb <= p.ucb_bound + 0.02,
            format!("measured {:.5} bound {:.5}", p.ucb, p.ucb_bound),
        ));
    }
    let greedy_last = summary.greedy_ratios.last().copied();
    let ucb_last = summary.ucb_ratios.last().copied();
    if let Some((t, r)) = greedy_last {
        checks.push(Check::new(
            format!("greedy D({})/D({t}) in [1.8, 2.2]", 2 * t),
            (1.8..=2.2).contains(&r),
            format!("ratio {r:.4}"),
        ));
    }
    if let Some((t, r)) = ucb_last {
        checks.push(Check::new(
            format!("ucb D({})/D({t}) <= 1.6", 2 * t),
            r <= 1.6,
            format!("ratio {r:.4}"),
        ));
    }
    if let (Some((_, g)), Some((_, u))) = (greedy_last, ucb_last) {
        checks.push(Check::new(
            "ucb doubling ratio below greedy",
            u < g,
            format!("{u:.4} vs {g:.4}"),
        ));
    }
    checks
}

/// One-sided paired test of `a > b + margin`. Returns the mean difference
/// and the p-value under a normal approximation.
pub fn paired_test(a: &[EpisodeSummary], b: &[EpisodeSummary], margin: f64) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, Normal};
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| f64::from(u8::from(x.correct)) - f64::from(u8::from(y.correct)))
        .collect();
    let (mean, se) = mean_se(&diffs);
    let p = if se == 0.0 {
        if mean > margin {
            0.0
        } else {
            1.0
        }
    } else {
        1.0 - Normal::standard().cdf((mean - margin) / se)
    };
    (mean, p)
}

/// Budget parity, oracle dominance and the H-UATS over REBASE margin.
pub fn check_compare(outcomes: &PairedOutcomes) -> Vec<Check> {
    let mut checks = Vec::new();
    let over = outcomes
        .iter()
        .flat_map(|(_, eps)| eps)
        .filter(|e| e.used_units > e.total_units)
        .count();
    checks.push(Check::new("every run within budget", over == 0, format!("{over} overruns")));
    let acc = |eps: &[EpisodeSummary]| eps.iter().filter(|e| e.correct).count() as f64 / eps.len() as f64;
    let find = |m: Method, n: usize| outcomes.iter().find(|((mm, nn), _)| *mm == m && *nn == n).map(|(_, e)| e);
    let mut ns: Vec<usize> = outcomes.iter().map(|((_, n), _)| *n).collect();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        if let Some(oracle) = find(Method::OraclePassAtK, n) {
            let best_other = outcomes
                .iter()
                .filter(|((m, nn), _)| *nn == n && *m != Method::OraclePassAtK)
                .map(|(_, e)| acc(e))
                .fold(0.0, f64::max);
            checks.push(Check::new(
                format!("oracle dominates at N={n}"),
                acc(oracle) >= best_other,
                format!("{:.4} vs {:.4}", acc(oracle), best_other),
            ));
        }
        if n >= 16 {
            if let (Some(h), Some(r)) = (find(Method::HUats, n), find(Method::Rebase, n)) {
                let (diff, p) = paired_test(h, r, 0.0);
                checks.push(Check::new(
                    format!("h-uats exceeds rebase by >= 2 points at N={n}"),
                    diff >= 0.02 && p < 0.05,
                    format!("difference {:.4}, p = {:.4}", diff, p),
                ));
            }
        }
    }
    checks
}

/// Shape checks of a sweep: an interior optimum for thresholds, a plateau
/// from `k0 = 7` on for the pass count.
pub fn check_ablation(parameter: &str, rows: &[ResultRow]) -> Vec<Check> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.x.total_cmp(&b.x));
    match parameter {
        "tau" | "delta" if rows.len() >= 3 => {
            let interior = rows[1..rows.len() - 1]
                .iter()
                .map(|r| r.accuracy)
                .fold(f64::NEG_INFINITY, f64::max);
            let (first, last) = (rows[0].accuracy, rows[rows.len() - 1].accuracy);
            vec![Check::new(
                format!("{parameter} sweep has a strictly interior maximum"),
                interior > first && interior > last,
                format!("interior best {interior:.4}, endpoints {first:.4} and {last:.4}"),
            )]
        }
        "k0" => {
            let Some(anchor) = rows.iter().find(|r| r.x == 7.0) else {
                return vec![Check::new("k0 sweep includes k0 = 7", false, "no k0 = 7 point")];
            };
            let rising = rows
                .windows(2)
                .filter(|w| w[1].x <= 7.0)
                .all(|w| w[1].accuracy >= w[0].accuracy - w[1].stderr);
            let excess = rows
                .iter()
                .filter(|r| r.x > 7.0)
                .map(|r| r.accuracy - anchor.accuracy)
                .fold(f64::NEG_INFINITY, f64::max);
            vec![
                Check::new(
                    "k0 sweep non-decreasing up to k0 = 7 within one standard error",
                    rising,
                    String::new(),
                ),
                Check::new(
                    "no point after k0 = 7 exceeds it by more than its standard error",
                    excess <= anchor.stderr,
                    format!("largest excess {excess:.4}, standard error {:.4}", anchor.stderr),
                ),
            ]
        }
        _ => Vec::new(),
    }
}
