mod config;
mod experiments;
mod recipes;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::DiagramSpec;
use experiments::{RunError, RunOutput};

const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "bratteli", version, about = "Randomly ordered Bratteli diagram experiments")]
struct Cli {
    /// Output root directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a single experiment with explicit parameters.
    Run {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Replay a named acceptance recipe (or list them).
    Recipe {
        name: Option<String>,
        /// Override the recipe's trial count (for quick reruns).
        #[arg(long)]
        trials: Option<u64>,
        /// List available recipes.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args)]
struct DiagramArgs {
    /// Diagram spec: const:K, square, cube, levels:1,a,b,..., odometer,
    /// finite-rank-2 or file:PATH.
    #[arg(long = "M")]
    m: DiagramSpec,
    #[arg(long)]
    depth: usize,
}

#[derive(Subcommand)]
enum Experiment {
    /// Sample one order from the uniform product measure and dump its ranks.
    SampleOrder {
        #[command(flatten)]
        diagram: DiagramArgs,
        #[arg(long)]
        seed: u64,
    },
    /// Enumerate a full successor orbit from the minimal path.
    SuccessorOrbit {
        #[command(flatten)]
        diagram: DiagramArgs,
        #[arg(long)]
        seed: u64,
        /// Terminal vertex at the deepest level.
        #[arg(long, default_value_t = 0)]
        vertex: usize,
    },
    /// Wright-Fisher trajectories with martingale summary statistics.
    WfSim {
        #[command(flatten)]
        diagram: DiagramArgs,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        start_level: usize,
        /// Number of initially marked vertices at the start level.
        #[arg(long, default_value_t = 1)]
        init_count: usize,
    },
    /// Domination fraction per level vs the reciprocal level-size sum.
    DonnellyScan {
        #[command(flatten)]
        diagram: DiagramArgs,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        start_level: usize,
    },
    /// Surviving-tribe histogram at a schedule of depths.
    Census {
        /// Diagram spec (depth is taken from the last census depth).
        #[arg(long = "M")]
        m: DiagramSpec,
        /// Ancestor level whose tribes are counted.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Strictly increasing census depths.
        #[arg(long, value_delimiter = ',', required = true)]
        depths: Vec<usize>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Evolve-and-split good-family rate.
    EvolveSplit {
        #[command(flatten)]
        diagram: DiagramArgs,
        /// Explicit split schedule (default: greedy within the variance budget).
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<usize>>,
        /// Number of split stages when the schedule is derived.
        #[arg(long, default_value_t = 3)]
        stages: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        kappa: f64,
    },
    /// Equitable-set cascade down the diagram.
    Cascade {
        #[command(flatten)]
        diagram: DiagramArgs,
        #[arg(long)]
        start_level: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1e-3)]
        exp_tol: f64,
        /// Tolerance for the starting equitable set.
        #[arg(long, default_value_t = 0.05)]
        eps0: f64,
    },
    /// Exhaustive good-ordering counts against the 1/(n-1) bound.
    LemmaOracle {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        random_instances: u64,
        #[arg(long)]
        seed: u64,
        /// Include the extremal degree-profile instance.
        #[arg(long)]
        extremal: bool,
    },
    /// Monte Carlo imperfection-probability estimate with analytic bound.
    Imperfection {
        #[arg(long = "M")]
        m: DiagramSpec,
        #[arg(long)]
        n: usize,
        #[arg(long = "big-N")]
        big_n: usize,
        #[arg(long)]
        n_prime: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Exact rational census (and optionally imperfection) by enumeration.
    ExactOracle {
        #[arg(long = "M")]
        m: DiagramSpec,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long = "big-N")]
        big_n: usize,
        /// Level n for the exact imperfection probe (with --n-prime).
        #[arg(long, requires = "n_prime")]
        n: Option<usize>,
        #[arg(long, requires = "n")]
        n_prime: Option<usize>,
        /// Enumeration cap on the order-space size.
        #[arg(long, default_value_t = 10_000_000)]
        cap: u128,
    },
}

fn dispatch(experiment: Experiment) -> Result<RunOutput, RunError> {
    match experiment {
        Experiment::SampleOrder { diagram, seed } => {
            experiments::sample_order(&diagram.m, diagram.depth, seed)
        }
        Experiment::SuccessorOrbit { diagram, seed, vertex } => {
            experiments::successor_orbit(&diagram.m, diagram.depth, seed, vertex)
        }
        Experiment::WfSim { diagram, trials, seed, start_level, init_count } => {
            experiments::wf_sim(&diagram.m, diagram.depth, trials, seed, start_level, init_count)
        }
        Experiment::DonnellyScan { diagram, trials, seed, start_level } => {
            experiments::donnelly_scan(&diagram.m, diagram.depth, trials, seed, start_level)
        }
        Experiment::Census { m, k, depths, trials, seed } => {
            experiments::census_run(&m, k, &depths, trials, seed)
        }
        Experiment::EvolveSplit { diagram, schedule, stages, trials, seed, kappa } => {
            experiments::evolve_split(&diagram.m, diagram.depth, schedule, stages, trials, seed, kappa)
        }
        Experiment::Cascade { diagram, start_level, trials, seed, delta, exp_tol, eps0 } => {
            experiments::cascade(
                &diagram.m,
                diagram.depth,
                start_level,
                delta,
                exp_tol,
                trials,
                seed,
                eps0,
            )
        }
        Experiment::LemmaOracle { n, random_instances, seed, extremal } => {
            experiments::lemma_oracle(n, random_instances, seed, extremal)
        }
        Experiment::Imperfection { m, n, big_n, n_prime, trials, seed } => {
            experiments::imperfection(&m, n, big_n, n_prime, trials, seed)
        }
        Experiment::ExactOracle { m, k, big_n, n, n_prime, cap } => {
            experiments::exact_oracle(&m, k, big_n, n.zip(n_prime), cap)
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    artifact_version: &'a str,
    config_hash: String,
    seed: u64,
    config: &'a config::ResolvedConfig,
    metrics: Vec<(String, String)>,
}

fn write_output(out: &PathBuf, output: &RunOutput) -> anyhow::Result<()> {
    fs::create_dir_all(out)?;
    let hash = format!("{:016x}", output.config.hash());
    fs::write(out.join("results.csv"), &output.results_csv)?;
    if let Some(summary_csv) = &output.summary_csv {
        fs::write(out.join("summary.csv"), summary_csv)?;
    }
    let summary = Summary {
        artifact_version: ARTIFACT_VERSION,
        config_hash: hash.clone(),
        seed: output.config.seed,
        config: &output.config,
        metrics: output.metrics.clone(),
    };
    fs::write(out.join("summary.toml"), toml::to_string_pretty(&summary)?)?;
    let mut events = String::new();
    events.push_str(&serde_json::to_string(&serde_json::json!({
        "event": "run",
        "experiment": output.config.experiment,
        "config_hash": hash,
        "seed": output.config.seed,
    }))?);
    events.push('\n');
    for (key, value) in &output.metrics {
        events.push_str(&serde_json::to_string(&serde_json::json!({
            "event": "metric",
            "key": key,
            "value": value,
        }))?);
        events.push('\n');
    }
    fs::write(out.join("events.jsonl"), events)?;
    Ok(())
}

fn configure_workers() {
    if let Ok(v) = std::env::var("BRATTELI_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                // Ignore failure if a pool already exists (e.g. in tests).
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn finish(out_dir: &PathBuf, result: Result<RunOutput, RunError>) -> ExitCode {
    match result {
        Ok(output) => {
            if let Err(e) = write_output(out_dir, &output) {
                eprintln!("error writing outputs: {e:#}");
                return ExitCode::from(1);
            }
            for (k, v) in &output.metrics {
                println!("{k} = {v}");
            }
            println!("wrote {}", out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_workers();
    match cli.cmd {
        Cmd::Run { experiment } => finish(&cli.out, dispatch(experiment)),
        Cmd::Recipe { name, trials, list } => {
            let Some(name) = name else {
                for r in recipes::registry() {
                    println!("{:22} {}", r.name, r.description);
                }
                // Listing explicitly is fine; omitting the name otherwise is
                // a usage error.
                return if list { ExitCode::SUCCESS } else { ExitCode::from(2) };
            };
            if list {
                for r in recipes::registry() {
                    println!("{:22} {}", r.name, r.description);
                }
                return ExitCode::SUCCESS;
            }
            match recipes::find(&name) {
                Some(recipe) => finish(&cli.out, recipe.run(trials)),
                None => {
                    eprintln!("unknown recipe {name:?}; available:");
                    for r in recipes::registry() {
                        eprintln!("  {:22} {}", r.name, r.description);
                    }
                    ExitCode::from(2)
                }
            }
        }
    }
}
