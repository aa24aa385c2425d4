//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{allocation_case, hamilton_oracle};
use uats::controller::{
    clone_dataset, policy_gradient, reinforce_update, surrogate_objective, train, training_mixture, question,
    run_a_uats, warm_start, ActionMode, ActionVector, PolicyParams, StateFeatures, TrainConfig, Trajectory,
    TrajectoryStep, ACTION_BOUNDS, ACTION_DIM,
};
use uats::env::EnvConfig;
use uats::harness::{
    ablation_point, aggregate, check_ablation, paired_test, run_ablation_paired, run_compare_paired, run_theory, AblationParam,
    AblationSpec, EpisodeSummary, ExperimentKind, ExperimentSpec, Method, PairedOutcomes,
};
use uats::rng::{derive_seed, SplitMix64, StreamId};
use uats::scorer::{synthetic_scores, LocalScorer};
use uats::search::{allocate_proportional, run_h_uats, EpisodeReport, SearchParams};

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

/// Every episode summary produced by the suite, for the ledger criterion.
#[derive(Default)]
struct Spent {
    episodes: usize,
    overruns: usize,
}

impl Spent {
    fn add(&mut self, eps: &[EpisodeSummary]) {
        self.episodes += eps.len();
        self.overruns += eps.iter().filter(|e| e.used_units > e.total_units).count();
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> (bool, String) {
    (elapsed.as_secs_f64() <= limit_secs as f64, format!("{:.1}s of {limit_secs}s", elapsed.as_secs_f64()))
}

fn theory(scorer: &LocalScorer) -> (Verdict, Verdict) {
    let start = Instant::now();
    let spec = ExperimentSpec {
        reps: 2000,
        seed: 1,
        ..ExperimentSpec::new(ExperimentKind::Theory)
    };
    let (_, s) = run_theory(&spec, scorer).expect("theory run");
    let (fast, time) = within(start.elapsed(), 120);
    let last = |r: &[(usize, f64)]| r.iter().find(|(t, _)| *t == 40).map(|(_, v)| *v).unwrap_or(f64::NAN);
    let greedy_ratio = last(&s.greedy_ratios);
    let ucb_ratio = last(&s.ucb_ratios);
    let matches = s.points.iter().all(|p| (p.greedy - p.greedy_predicted).abs() <= 3.0 * p.greedy_se);
    let worst = s
        .points
        .iter()
        .map(|p| (p.greedy - p.greedy_predicted).abs() / p.greedy_se)
        .fold(0.0, f64::max);
    let ac1 = Verdict::new(
        s.greedy_r2 >= 0.98 && (1.8..=2.2).contains(&greedy_ratio) && matches && fast,
        format!(
            "r2 {:.5}, D(80)/D(40) {greedy_ratio:.4}, worst closed-form deviation {worst:.2} se, {time}",
            s.greedy_r2
        ),
    );
    let bounded = s.points.iter().all(|p| p.ucb <= p.ucb_bound + 0.02);
    let ac2 = Verdict::new(
        ucb_ratio <= 1.6 && bounded && fast,
        format!(
            "D(80)/D(40) {ucb_ratio:.4}, D(80) {:.5} vs bound {:.5}, {time}",
            s.points.last().map_or(f64::NAN, |p| p.ucb),
            s.points.last().map_or(f64::NAN, |p| p.ucb_bound)
        ),
    );
    (ac1, ac2)
}

fn coverage() -> Verdict {
    let trials = 100_000u64;
    let mut worst = Vec::new();
    let mut ok = true;
    for t in [3usize, 5, 10] {
        let radius = (2.0 * (t as f64).ln() / t as f64).sqrt();
        let misses = (0..trials)
            .filter(|&j| {
                let xs = synthetic_scores(0.5, 0.3, t, StreamId::new(1000 + t as u64, j), false);
                (xs.iter().sum::<f64>() / t as f64 - 0.5).abs() > radius
            })
            .count();
        let freq = misses as f64 / trials as f64;
        let limit = 2.0 * (t as f64).powi(-4);
        ok &= freq <= limit;
        worst.push(format!("t={t}: {freq:.2e} <= {limit:.2e}"));
    }
    Verdict::new(ok, worst.join(", "))
}

fn compare(scorer: &LocalScorer, epsilon: f64, spent: &mut Spent) -> PairedOutcomes {
    let spec = ExperimentSpec {
        env: Some(EnvConfig { epsilon, ..EnvConfig::compare_default() }),
        methods: vec![Method::Rebase, Method::HUats],
        n_grid: vec![16, 64, 256],
        reps: 1000,
        seed: 2,
        ..ExperimentSpec::new(ExperimentKind::Compare)
    };
    let out = run_compare_paired(&spec, scorer, None).expect("compare run");
    for (_, eps) in &out {
        spent.add(eps);
    }
    out
}

fn ordering(scorer: &LocalScorer, spent: &mut Spent) -> Verdict {
    let start = Instant::now();
    let noisy = compare(scorer, 0.2, spent);
    let clean = compare(scorer, 0.0, spent);
    let (fast, time) = within(start.elapsed(), 900);
    let acc = |eps: &[EpisodeSummary]| eps.iter().filter(|e| e.correct).count() as f64 / eps.len() as f64;
    let find = |o: &PairedOutcomes, m: Method, n: usize| {
        o.iter().find(|((mm, nn), _)| *mm == m && *nn == n).map(|(_, e)| e.clone()).expect("method ran")
    };
    let mut ok = fast;
    let mut parts = Vec::new();
    for n in [16, 64, 256] {
        let (h, r) = (find(&noisy, Method::HUats, n), find(&noisy, Method::Rebase, n));
        let (diff, p) = paired_test(&h, &r, 0.0);
        let gap0 = acc(&find(&clean, Method::HUats, n)) - acc(&find(&clean, Method::Rebase, n));
        ok &= diff >= 0.02 && p < 0.05 && gap0.abs() <= 0.01;
        parts.push(format!("N={n}: +{:.1} pts (p={p:.3}), eps=0 gap {:.1} pts", 100.0 * diff, 100.0 * gap0));
    }
    parts.push(time);
    Verdict::new(ok, parts.join("; "))
}

fn ablation(scorer: &LocalScorer, spent: &mut Spent) -> Verdict {
    let mut sweep = |parameter: &str, grid: Vec<f64>| {
        let spec = ExperimentSpec {
            reps: 1000,
            seed: 3,
            ablation: Some(AblationSpec { parameter: parameter.into(), grid, n: 16 }),
            ..ExperimentSpec::new(ExperimentKind::Ablate)
        };
        let points = run_ablation_paired(&spec, scorer).expect("ablation run");
        points
            .iter()
            .map(|(v, eps)| {
                spent.add(eps);
                aggregate(parameter, *v, spec.env().r0, eps)
            })
            .collect::<Vec<_>>()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, grid) in [
        ("k0", (2..=10).map(f64::from).collect::<Vec<_>>()),
        ("tau", vec![1e-4, 1e-3, 3e-3, 1e-2, 2e-2]),
        ("delta", vec![0.005, 0.02, 0.04, 0.08, 0.15]),
    ] {
        let rows = sweep(name, grid);
        let checks = check_ablation(name, &rows);
        let pass = !checks.is_empty() && checks.iter().all(|c| c.passed);
        ok &= pass;
        let accs: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.accuracy)).collect();
        parts.push(format!("{name} {} [{}]", if pass { "ok" } else { "fails" }, accs.join(" ")));
    }
    let env = EnvConfig::compare_default();
    let base = SearchParams::default();
    let (e0, b0) = ablation_point(AblationParam::B, 0.0, &env, &base, 16, 0.1).expect("b point");
    let (e1, u0) = ablation_point(AblationParam::Uncertainty, 0.0, &env, &base, 16, 0.1).expect("uncertainty point");
    let identical = (0..1000u64).all(|r| {
        let s = derive_seed(3, r);
        let a = run_h_uats(&e0, &b0, scorer, s).expect("b=0 run");
        let b = run_h_uats(&e1, &u0, scorer, s).expect("no-uncertainty run");
        same_trajectory(&a, &b)
    });
    ok &= identical;
    parts.push(format!("B=0 identical to w/o uncertainty: {identical}"));
    Verdict::new(ok, parts.join("; "))
}

fn same_trajectory(a: &EpisodeReport, b: &EpisodeReport) -> bool {
    let beams = |r: &EpisodeReport| r.trace.iter().map(|s| s.beam.clone()).collect::<Vec<_>>();
    beams(a) == beams(b) && a.final_node == b.final_node && a.ledger == b.ledger && a.outcome == b.outcome
}

fn allocation() -> Verdict {
    let mut rng = SplitMix64::from_state(60);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (values, budget, temperature) = allocation_case(&mut rng);
        let got = allocate_proportional(&values, budget, temperature).expect("valid case");
        if got.total() != budget || got.counts != hamilton_oracle(&values, budget, temperature) {
            mismatches += 1;
        }
    }
    Verdict::new(mismatches == 0, format!("{mismatches} of 1000 cases differ"))
}

fn random_features(rng: &mut SplitMix64) -> StateFeatures {
    let means = [rng.uniform(), rng.uniform(), rng.uniform()];
    let vars = [0.05 * rng.uniform(), 0.05 * rng.uniform()];
    let mean = (means[0] + means[1] + means[2]) / 3.0;
    StateFeatures {
        mean_of_means: mean,
        max_of_means: means.iter().cloned().fold(f64::MIN, f64::max),
        var_of_means: means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / 3.0,
        mean_of_vars: (vars[0] + vars[1]) / 2.0,
        max_of_vars: vars[0].max(vars[1]),
        depth_frac: rng.uniform(),
        budget_frac: rng.uniform(),
    }
}

fn rollouts(params: &PolicyParams, rewards: &[f64], seed: u64) -> Vec<Trajectory> {
    let mut rng = SplitMix64::from_state(seed);
    rewards
        .iter()
        .map(|&reward| {
            let steps = (0..3)
                .map(|_| {
                    let features = random_features(&mut rng);
                    let s = params.sample_action(&features, &mut rng, false);
                    TrajectoryStep { features, pre_squash: s.pre_squash, log_prob: s.log_prob }
                })
                .collect();
            Trajectory { steps, reward, used_units: 50, total_units: 100 }
        })
        .collect()
}

fn gradient_checks() -> (bool, String) {
    let params = PolicyParams::with_hidden(&[8], 4);
    let zero = [0.0, 0.95, 0.1 + 0.2].iter().all(|&r| {
        let batch = rollouts(&params, &[r; 10], 3);
        policy_gradient(&params, &batch).expect("gradient").flat().iter().all(|g| *g == 0.0)
    });
    let rewards = [0.25, 0.5, 1.0, 0.0, 0.75, 0.125, 0.5, 0.875, 0.25, 1.0];
    let batch = rollouts(&params, &rewards, 6);
    let (a, _) = reinforce_update(&params, &batch, 1e-3).expect("update");
    let shift = [0.5, -0.25, 3.0].iter().all(|c| {
        let shifted: Vec<Trajectory> = batch.iter().map(|t| Trajectory { reward: t.reward + c, ..t.clone() }).collect();
        reinforce_update(&params, &shifted, 1e-3).expect("update").0 == a
    });
    let small = PolicyParams::with_hidden(&[4], 21);
    let batch = rollouts(&small, &[0.9, 0.1, 0.55, 0.3, 1.0], 8);
    let analytic = policy_gradient(&small, &batch).expect("gradient").flat();
    let base = small.flat();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        if analytic[i].abs() < 1e-6 {
            continue;
        }
        let at = |x: f64| {
            let mut p = small.clone();
            let mut flat = base.clone();
            flat[i] = x;
            p.set_flat(&flat).expect("shape");
            surrogate_objective(&p, &batch).expect("objective")
        };
        let numeric = (at(base[i] + 1e-5) - at(base[i] - 1e-5)) / 2e-5;
        worst = worst.max((analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()));
    }
    (
        zero && shift && worst <= 1e-4,
        format!("zero gradient {zero}, shift invariant {shift}, finite-difference rel error {worst:.1e}"),
    )
}

fn controller(scorer: &LocalScorer, spent: &mut Spent) -> Verdict {
    let start = Instant::now();
    let (grads_ok, grads) = gradient_checks();
    let mixture = training_mixture();
    let cfg = TrainConfig::default();
    let base = SearchParams::default().compute_matched(cfg.n, mixture[0].t, 0.1);
    let init = warm_start(&mixture, &base, scorer, &cfg).expect("warm start");
    let held_out = clone_dataset(&mixture, &base, scorer, 8, 12_345).expect("held-out states");
    let target = ActionVector::identity(&base).to_array();
    let mut rng = SplitMix64::from_state(0);
    let mut bc_worst = 0.0f64;
    for (f, _) in &held_out {
        let a = init.sample_action(f, &mut rng, true).action.to_array();
        for j in 0..ACTION_DIM {
            let (lo, hi) = ACTION_BOUNDS[j];
            bc_worst = bc_worst.max((a[j] - target[j]).abs() / (hi - lo));
        }
    }
    let (policy, log) = train(&init, &mixture, &base, scorer, &cfg).expect("training");
    let mean = |s: &[uats::controller::RoundLog]| s.iter().map(|r| r.mean_reward).sum::<f64>() / s.len() as f64;
    let (first, last) = (mean(&log[..50]), mean(&log[log.len() - 50..]));
    let (h, a): (Vec<EpisodeSummary>, Vec<EpisodeSummary>) = (0..1000u64)
        .map(|q| {
            let (v, seed) = question(mixture.len(), 9_999, q);
            let env = &mixture[v];
            let h = run_h_uats(env, &base, scorer, seed).expect("h-uats");
            let (a, _) = run_a_uats(env, &base, scorer, seed, &policy, seed, true, ActionMode::PerStep).expect("a-uats");
            (EpisodeSummary::from(&h), EpisodeSummary::from(&a))
        })
        .unzip();
    spent.add(&h);
    spent.add(&a);
    let acc = |eps: &[EpisodeSummary]| eps.iter().filter(|e| e.correct).count() as f64 / eps.len() as f64;
    let (acc_h, acc_a) = (acc(&h), acc(&a));
    let (fast, time) = within(start.elapsed(), 1800);
    Verdict::new(
        grads_ok && bc_worst <= 0.05 && last >= first && acc_a >= acc_h - 0.01 && fast,
        format!(
            "{grads}; cloning error {:.2}% of range; reward first 50 {first:.4}, last 50 {last:.4}; \
             a-uats {:.1}% vs h-uats {:.1}%; {time}",
            100.0 * bc_worst,
            100.0 * acc_a,
            100.0 * acc_h
        ),
    )
}

fn budget(scorer: &LocalScorer, spent: &mut Spent) -> Verdict {
    let env = EnvConfig::compare_default();
    let spec = ExperimentSpec {
        n_grid: vec![4, 16],
        reps: 200,
        seed: 4,
        ..ExperimentSpec::new(ExperimentKind::Compare)
    };
    let out = run_compare_paired(&spec, scorer, None).expect("compare run");
    let mut matched = true;
    for ((_, n), eps) in &out {
        spent.add(eps);
        matched &= eps.iter().all(|e| e.total_units <= n * env.t * 19);
    }
    let base = SearchParams::default();
    let generation_multiple = (0..200u64).all(|s| {
        let r = run_h_uats(&env, &base.compute_matched(16, env.t, 0.1), scorer, s).expect("h-uats");
        r.ledger.generation_units % 18 == 0
    });
    let ok = spent.overruns == 0 && base.gen_cost == 18 && matched && generation_multiple;
    Verdict::new(
        ok,
        format!(
            "{} overruns in {} episodes, generation cost {}, totals within N*T*19: {matched}, \
             generation charged in multiples of 18: {generation_multiple}",
            spent.overruns, spent.episodes, base.gen_cost
        ),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let cfg = dir.path().join("compare.json");
    fs::write(&cfg, r#"{"kind":"compare","n_grid":[4,16],"reps":200}"#).expect("config");
    let run = |out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_uats"))
            .args(["compare", "--config", cfg.to_str().expect("utf-8 path"), "--seed", "17", "--out", out])
            .current_dir(dir.path())
            .output()
            .expect("spawn uats");
        status.status.success().then(|| fs::read(dir.path().join(out).join("results.csv")).expect("results.csv"))
    };
    match (run("first"), run("second")) {
        (Some(a), Some(b)) => Verdict::new(a == b, format!("{} bytes, identical: {}", a.len(), a == b)),
        _ => Verdict::new(false, "a CLI run failed"),
    }
}

fn main() -> ExitCode {
    let scorer = LocalScorer::default();
    let mut spent = Spent::default();
    let mut all = true;
    let mut report = |name: &str, v: Verdict| {
        all &= v.passed;
        println!("{name} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    };
    let (ac1, ac2) = theory(&scorer);
    report("AC1", ac1);
    report("AC2", ac2);
    report("AC3", coverage());
    report("AC4", ordering(&scorer, &mut spent));
    report("AC5", ablation(&scorer, &mut spent));
    report("AC6", allocation());
    report("AC7", controller(&scorer, &mut spent));
    report("AC8", budget(&scorer, &mut spent));
    report("AC9", determinism());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
