use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use certsched_core::bench::{
    emit_csv, sweep_constellation, sweep_orders, BenchConfig, BenchError, CONSTELLATION, FULL_ORDERS, QUICK_ORDERS,
};
use certsched_core::explain::{CorrectionAtom, ExplainConfig};
use certsched_core::scenario::{
    canonical_scenario, generate_synthetic, load_scenario, tiny_scenario, FilterParams, ScenarioError, ScenarioSpec,
    SyntheticParams,
};
use certsched_core::verify::VerifyError;
use certsched_service::{AppState, QueryKind, Session};

#[derive(Debug, Parser)]
#[command(name = "certsched", version, about = "Certificate-backed explanations for satellite scheduling")]
struct Cli {
    /// Global cloud threshold in milli-units.
    #[arg(long, global = true, default_value_t = 200)]
    cloud_threshold: i64,
    /// Solver seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON file with objective weights; defaults apply otherwise.
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scenario and print the schedule.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer a why, why-not or what-if query for one order.
    Explain {
        scenario: PathBuf,
        #[arg(long)]
        order: String,
        #[arg(long, value_enum)]
        kind: Kind,
        /// JSON array of correction atoms forming the what-if change space.
        #[arg(long)]
        changes: Option<PathBuf>,
    },
    /// Apply correction atoms, re-solve and print the schedule diff.
    Apply {
        scenario: PathBuf,
        /// JSON array of correction atoms.
        #[arg(long)]
        atoms: PathBuf,
    },
    /// Run every faithfulness check and print the evaluation report.
    Verify {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8)]
        seeds: u64,
        /// Print the markdown report to stdout instead of JSON.
        #[arg(long)]
        markdown: bool,
    },
    /// Scalability sweep over synthetic instances, as CSV.
    Bench {
        #[arg(value_enum)]
        axis: Axis,
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        parallel: bool,
        /// Generator seed.
        #[arg(long, default_value_t = 7)]
        instance_seed: u64,
    },
    /// Generate a scenario document.
    Generate {
        #[arg(long, default_value_t = 25)]
        orders: usize,
        #[arg(long, default_value_t = 10)]
        satellites: usize,
        #[arg(long, default_value_t = 5)]
        stations: usize,
        /// Emit a built-in scenario instead of a synthetic one.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "CERTSCHED_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Why,
    Whynot,
    Whatif,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Axis {
    Orders,
    Constellation,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Canonical,
    Tiny2,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        #[source]
        source: ScenarioError,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Generate(#[from] ScenarioError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Explain(#[from] certsched_core::explain::ExplainError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Bad input files count as usage errors.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Scenario { .. } | CliError::Json { .. } => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn read_scenario(path: &Path) -> Result<ScenarioSpec, CliError> {
    load_scenario(&read(path)?).map_err(|source| CliError::Scenario {
        path: path.to_path_buf(),
        source,
    })
}

fn read_atoms(path: &Path) -> Result<Vec<CorrectionAtom>, CliError> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("output types serialize"));
}

fn explain_config(cli: &Cli) -> Result<ExplainConfig, CliError> {
    let mut cfg = ExplainConfig::with_seed(cli.seed);
    if let Some(path) = &cli.weights {
        cfg.weights = serde_json::from_str(&read(path)?).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(cfg)
}

fn session(cli: &Cli, path: &Path) -> Result<Session, CliError> {
    let filter = FilterParams::with_threshold(cli.cloud_threshold);
    Ok(Session::create("cli".into(), read_scenario(path)?, &filter, explain_config(cli)?)?)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Solve { scenario, out } => {
            let s = session(&cli, scenario)?;
            let summary = s.summary();
            eprintln!(
                "{}: {} of {} orders scheduled, objective {} milli",
                summary.scenario, summary.n_scheduled, summary.n_orders, summary.objective_milli
            );
            match out {
                Some(p) => fs::write(p, serde_json::to_string_pretty(&summary).expect("summary serializes"))?,
                None => print_json(&summary),
            }
        }
        Command::Explain {
            scenario,
            order,
            kind,
            changes,
        } => {
            let s = session(&cli, scenario)?;
            let kind = match kind {
                Kind::Why => QueryKind::Why,
                Kind::Whynot => QueryKind::Whynot,
                Kind::Whatif => QueryKind::Whatif,
            };
            let space = changes.as_deref().map(read_atoms).transpose()?;
            let v = s.query(order, kind, space.as_deref())?;
            eprintln!("{order}: {}", v.get("case").and_then(|c| c.as_str()).unwrap_or("answered"));
            print_json(&v);
        }
        Command::Apply { scenario, atoms } => {
            let mut s = session(&cli, scenario)?;
            let out = s.apply_correction(&read_atoms(atoms)?)?;
            eprintln!(
                "objective {} -> {} milli; +{:?} -{:?}",
                out.diff.objective_before_milli, out.diff.objective_after_milli, out.diff.newly_scheduled, out.diff.newly_unscheduled
            );
            print_json(&out);
        }
        Command::Verify {
            scenario,
            seeds,
            markdown,
        } => {
            let s = session(&cli, scenario)?;
            let r = s.report((0..*seeds).collect())?;
            if *markdown {
                print!("{}", r.to_markdown());
            } else {
                eprint!("{}", r.to_markdown());
                print_json(&r);
            }
            if !r.all_passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bench {
            axis,
            quick,
            parallel,
            instance_seed,
        } => {
            let cfg = BenchConfig {
                seed: *instance_seed,
                cloud_threshold_milli: cli.cloud_threshold,
                parallel: *parallel,
                explain: explain_config(&cli)?,
            };
            let rows = match axis {
                Axis::Orders => sweep_orders(if *quick { &QUICK_ORDERS } else { &FULL_ORDERS }, &cfg)?,
                Axis::Constellation => {
                    let sats = if *quick { &CONSTELLATION[..3] } else { &CONSTELLATION[..] };
                    sweep_constellation(sats, &cfg)?
                }
            };
            for r in &rows {
                eprintln!(
                    "{}={}: {} certificates, solve {:.1} ms, extract {:.1} ms",
                    r.axis, r.value, r.n_certificates, r.solve_ms, r.total_extract_ms
                );
            }
            print!("{}", emit_csv(&rows)?);
        }
        Command::Generate {
            orders,
            satellites,
            stations,
            preset,
        } => {
            let sc = match preset {
                Some(Preset::Canonical) => canonical_scenario(),
                Some(Preset::Tiny2) => tiny_scenario(),
                None => generate_synthetic(&SyntheticParams::sized(*satellites, *stations, *orders), cli.seed)?,
            };
            println!("{}", sc.to_canonical_json());
        }
        Command::Serve { port, bind } => {
            let addr = SocketAddr::new(*bind, *port);
            let state = Arc::new(AppState::new(explain_config(&cli)?));
            eprintln!("listening on http://{addr}");
            tokio::runtime::Runtime::new()?.block_on(certsched_service::serve(addr, state))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
