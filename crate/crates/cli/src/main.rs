use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use pipebot_cli::commands;
use pipebot_cli::server::{router, AppState};
use pipebot_core::fixtures;

#[derive(Parser)]
#[command(name = "pipebot", version, about = "Plan, simulate and serve sewer inspection missions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the solution file for a mission.
    Plan { kis: PathBuf, mission: PathBuf },
    /// Simulate a mission to its end. Exit code 0 completed, 2 partial,
    /// 3 retreated to safety, 4 stranded.
    Run {
        kis: PathBuf,
        mission: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the event trace as NDJSON.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Check a solution file; exit code 1 on a violation.
    Validate { kis: PathBuf, mission: PathBuf, plan: PathBuf },
    /// Write the PDDL domain and problem for a mission.
    Pddl {
        kis: PathBuf,
        mission: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Start the HTTP gateway.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Map served at /world; the built-in test network when absent.
        #[arg(long)]
        kis: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Plan { kis, mission } => {
            let g = commands::load_map(&kis)?;
            let m = commands::load_mission(&mission, &g)?;
            let (text, dropped) = commands::plan(&g, &m)?;
            for id in dropped {
                eprintln!("dropped task {id}: unreachable");
            }
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run { kis, mission, scenario, seed, log } => {
            let g = commands::load_map(&kis)?;
            let m = commands::load_mission(&mission, &g)?;
            let run = commands::run(&g, &m, scenario.as_deref(), seed)?;
            if let Some(path) = log {
                fs::write(&path, run.log.to_ndjson()).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&run.snapshot())?);
            Ok(ExitCode::from(run.status.exit_code() as u8))
        }
        Cmd::Validate { kis, mission, plan } => {
            let g = commands::load_map(&kis)?;
            let m = commands::load_mission(&mission, &g)?;
            let text = fs::read_to_string(&plan).with_context(|| format!("reading {}", plan.display()))?;
            match commands::validate(&g, &m, &text) {
                Ok(()) => {
                    println!("OK");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    println!("Violation: {e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Cmd::Pddl { kis, mission, out_dir } => {
            let g = commands::load_map(&kis)?;
            let m = commands::load_mission(&mission, &g)?;
            let (domain, problem) = commands::pddl(&g, &m);
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("domain.pddl"), domain)?;
            fs::write(out_dir.join("problem.pddl"), problem)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Serve { port, host, kis } => {
            let world = match kis {
                Some(path) => commands::load_map(&path)?,
                None => fixtures::ais_test_env(),
            };
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad listen address")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, router(AppState::new(world))).await
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
