use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use uats::controller::{training_mixture, train, warm_start, write_round_log, PolicyParams};
use uats::harness::{
    check_ablation, check_compare, check_theory, emit_results, run_ablation, run_compare_paired, run_theory, aggregate,
    AblationSpec, Check, ExperimentKind, ExperimentSpec, ResultRow,
};
use uats::scorer::{BackendKind, ScorerBackend};
use uats::{Error, Result};

const OUT_DIR_VAR: &str = "UATS_OUT_DIR";

#[derive(Parser)]
#[command(name = "uats", version, about = "Uncertainty-aware tree search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy and UCB single chains over a horizon grid.
    Theory(CommonArgs),
    /// Compute-matched comparison of search methods.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Controller checkpoint for a-uats.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// One-parameter sweep of the heuristic search.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameter to sweep: k0, tau, delta, b, noise or uncertainty.
        #[arg(long)]
        parameter: Option<String>,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Behavioral-cloning warm start followed by policy-gradient training.
    TrainController(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment description.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory (default: $UATS_OUT_DIR, then ./results).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Backend::Local)]
    backend: Backend,
    /// Scoring service base URL for the remote backend.
    #[arg(long)]
    endpoint: Option<String>,
    /// Evaluate the experiment's pass/fail checks; exit 3 on failure.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Local,
    Remote,
}

enum Failure {
    Config(Error),
    Runtime(Error),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Argument(_) => Failure::Config(e),
            other => Failure::Runtime(other),
        }
    }
}

fn load_spec(kind: ExperimentKind, args: &CommonArgs) -> std::result::Result<ExperimentSpec, Failure> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(Error::Config(format!("{}: {e}", path.display()))))?;
            let spec: ExperimentSpec = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(Error::Config(format!("{}: {e}", path.display()))))?;
            if spec.kind != kind {
                return Err(Failure::Config(Error::Config(format!(
                    "{} describes a different experiment kind",
                    path.display()
                ))));
            }
            spec
        }
        None => ExperimentSpec::new(kind),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
        if let Some(train) = spec.train.as_mut() {
            train.seed = seed;
        }
    }
    if let Some(reps) = args.reps {
        spec.reps = reps;
    }
    if let Some(out) = &args.out {
        spec.output_dir = Some(out.clone());
    }
    Ok(spec)
}

fn out_dir(spec: &ExperimentSpec) -> PathBuf {
    spec.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn backend(args: &CommonArgs, clamp: bool) -> Result<ScorerBackend> {
    Ok(match args.backend {
        Backend::Local => ScorerBackend::local(clamp),
        Backend::Remote => ScorerBackend {
            kind: BackendKind::Remote,
            endpoint: Some(
                args.endpoint
                    .clone()
                    .ok_or_else(|| Error::Config("--backend remote requires --endpoint".into()))?,
            ),
            clamp_scores: clamp,
        },
    })
}

fn report(rows: &[ResultRow], dir: &Path, title: &str) -> Result<()> {
    for path in emit_results(rows, dir, Some(title))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn finish_checks(enabled: bool, checks: &[Check]) -> std::result::Result<(), Failure> {
    if !enabled {
        return Ok(());
    }
    for c in checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Theory(args) => {
            let spec = load_spec(ExperimentKind::Theory, &args)?;
            spec.validate()?;
            let scorer = backend(&args, spec.env().clamp_scores)?.build()?;
            let (rows, summary) = run_theory(&spec, scorer.as_ref())?;
            let dir = out_dir(&spec);
            report(&rows, &dir, "accuracy vs horizon")?;
            fs::write(dir.join("theory_summary.json"), serde_json::to_string_pretty(&summary).map_err(Error::from)?)
                .map_err(Error::from)?;
            for p in &summary.points {
                println!(
                    "T={:>3}  greedy D={:.5} (closed form {:.5})  ucb D={:.5} (bound {:.5})",
                    p.horizon, p.greedy, p.greedy_predicted, p.ucb, p.ucb_bound
                );
            }
            finish_checks(args.check, &check_theory(&summary))
        }
        Command::Compare { common: args, checkpoint } => {
            let mut spec = load_spec(ExperimentKind::Compare, &args)?;
            if checkpoint.is_some() {
                spec.checkpoint = checkpoint;
            }
            spec.validate()?;
            let policy = spec.checkpoint.as_deref().map(PolicyParams::load).transpose()?;
            let scorer = backend(&args, spec.env().clamp_scores)?.build()?;
            let outcomes = run_compare_paired(&spec, scorer.as_ref(), policy.as_ref())?;
            let r0 = spec.env().r0;
            let rows: Vec<ResultRow> = outcomes
                .iter()
                .map(|((m, n), eps)| aggregate(m.name(), *n as f64, r0, eps))
                .collect();
            report(&rows, &out_dir(&spec), "accuracy vs candidate paths")?;
            finish_checks(args.check, &check_compare(&outcomes))
        }
        Command::Ablate { common: args, parameter, grid } => {
            let mut spec = load_spec(ExperimentKind::Ablate, &args)?;
            if parameter.is_some() || grid.is_some() {
                let current = spec.ablation.take();
                spec.ablation = Some(AblationSpec {
                    parameter: parameter
                        .or_else(|| current.as_ref().map(|a| a.parameter.clone()))
                        .unwrap_or_default(),
                    grid: grid.or_else(|| current.as_ref().map(|a| a.grid.clone())).unwrap_or_default(),
                    n: current.map(|a| a.n).unwrap_or(16),
                });
            }
            spec.validate()?;
            let scorer = backend(&args, spec.env().clamp_scores)?.build()?;
            let rows = run_ablation(&spec, scorer.as_ref())?;
            let param = spec.ablation.as_ref().map(|a| a.parameter.clone()).unwrap_or_default();
            report(&rows, &out_dir(&spec), &format!("accuracy vs {param}"))?;
            finish_checks(args.check, &check_ablation(&param, &rows))
        }
        Command::TrainController(args) => {
            let spec = load_spec(ExperimentKind::TrainController, &args)?;
            spec.validate()?;
            let cfg = spec.train_config();
            let scorer = backend(&args, spec.env().clamp_scores)?.build()?;
            let mixture = training_mixture();
            let base = spec.params().compute_matched(cfg.n, mixture[0].t, spec.reeval_share);
            let init = warm_start(&mixture, &base, scorer.as_ref(), &cfg)?;
            let (policy, log) = train(&init, &mixture, &base, scorer.as_ref(), &cfg)?;
            let dir = out_dir(&spec);
            fs::create_dir_all(&dir).map_err(Error::from)?;
            let ckpt = dir.join("policy.json");
            policy.save(&ckpt)?;
            let mut csv = Vec::new();
            write_round_log(&log, &mut csv)?;
            fs::write(dir.join("training_log.csv"), csv).map_err(Error::from)?;
            println!("wrote {}", ckpt.display());
            println!("wrote {}", dir.join("training_log.csv").display());
            let window = log.len().min(50);
            let mean = |s: &[uats::controller::RoundLog]| s.iter().map(|r| r.mean_reward).sum::<f64>() / s.len().max(1) as f64;
            let first = mean(&log[..window]);
            let last = mean(&log[log.len() - window..]);
            println!("mean reward: first {window} rounds {first:.6}, last {window} rounds {last:.6}");
            finish_checks(
                args.check,
                &[Check::new(
                    "final rounds reward >= first rounds reward",
                    last >= first,
                    format!("{last:.6} vs {first:.6}"),
                )],
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Check) => {
            eprintln!("acceptance check failed");
            ExitCode::from(3)
        }
    }
}
