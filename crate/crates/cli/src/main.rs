use std::io::{self, IsTerminal};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use itcsp::animator::{animate, replay, Scenario, DEFAULT_TAU_BUDGET};
use itcsp::laws::{check_laws, worked_examples, LawConfig};
use itcsp::model::Model;
use itcsp::semantics::{compile, module_alphabet};
use itcsp::service::SessionManager;

#[derive(Parser)]
#[command(name = "itcsp", version, about = "Animate and check robot state-machine models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Instantiation overrides, e.g. `min_int=-2,max_int=2`. Repeatable.
    #[arg(long = "config", value_name = "K=V", value_delimiter = ',')]
    config: Vec<String>,
    /// Internal steps allowed between two visible events.
    #[arg(long, default_value_t = DEFAULT_TAU_BUDGET)]
    tau_budget: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum MergeKind {
    Sound,
    /// A merge that is not well formed; the laws should fail.
    Broken,
}

#[derive(Subcommand)]
enum Cmd {
    /// Step through a model, choosing events by number from stdin.
    Animate {
        #[command(flatten)]
        m: ModelArgs,
    },
    /// Print the transcript of choosing a scenario's events in order.
    Replay {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
    },
    /// Exit 0 iff the scenario is a trace of the model for `max-steps` events.
    Check {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
    },
    /// Check the operator laws on generated trees.
    Laws {
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
        cases: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Depth of generated trees.
        #[arg(long, default_value_t = 5)]
        depth: u32,
        #[arg(long, value_enum, default_value_t = MergeKind::Sound)]
        merge: MergeKind,
    },
    /// Serve the JSON session API.
    Serve {
        #[arg(long, env = "ITCSP_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "ITCSP_MODELS_DIR", default_value = "models")]
        models_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU_BUDGET)]
        tau_budget: usize,
        /// Minutes before an unused session is dropped.
        #[arg(long, default_value_t = 30)]
        idle_minutes: u64,
    },
}

fn load(m: &ModelArgs) -> Result<Model> {
    Model::load(&m.model, &m.config).with_context(|| format!("cannot load {}", m.model.display()))
}

fn scenario(model: &Model, path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    Scenario::parse(&name, &text, &module_alphabet(model)).with_context(|| format!("in {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Animate { m } => {
            let model = load(&m)?;
            let stdin = io::stdin();
            let echo = !stdin.is_terminal();
            animate(compile(&model), &model.banner, m.tau_budget, &mut stdin.lock(), &mut io::stdout().lock(), echo)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Replay { m, scenario: path, max_steps } => {
            let model = load(&m)?;
            let sc = scenario(&model, &path)?;
            let ok = itcsp_cli::replay_transcript(
                compile(&model),
                &model.banner,
                &sc,
                max_steps,
                m.tau_budget,
                &mut io::stdout().lock(),
            )?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Check { m, scenario: path, max_steps } => {
            let model = load(&m)?;
            let sc = scenario(&model, &path)?;
            let report = replay(&compile(&model), &sc, max_steps, m.tau_budget);
            println!("{report}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Laws { cases, seed, depth, merge } => {
            let cfg = LawConfig {
                cases,
                seed,
                tree_depth: depth,
                broken_merge: matches!(merge, MergeKind::Broken),
                ..LawConfig::default()
            };
            let mut ok = true;
            for (name, holds) in worked_examples() {
                println!("{} {name}", if holds { "ok  " } else { "FAIL" });
                ok &= holds;
            }
            for o in check_laws(&cfg) {
                match &o.failure {
                    None => println!("ok   {} ({cases} cases)", o.name),
                    Some(cex) => {
                        println!("FAIL {}\n     counterexample: {cex}", o.name);
                        ok = false;
                    }
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Serve { port, models_dir, tau_budget, idle_minutes } => {
            let mut manager = SessionManager::new()
                .with_tau_budget(tau_budget)
                .with_idle(Duration::from_secs(idle_minutes * 60));
            let n = manager.add_dir(&models_dir)?;
            if n == 0 {
                bail!("no models in {}", models_dir.display());
            }
            let manager = Arc::new(manager);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let addr = SocketAddr::from(([127, 0, 0, 1], port));
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("serving {n} models on http://{}", listener.local_addr()?);
                let sweeper = manager.clone();
                tokio::spawn(async move {
                    loop {
                        tokio::time::sleep(Duration::from_secs(60)).await;
                        sweeper.expire_idle();
                    }
                });
                axum::serve(listener, itcsp_cli::app(manager)).await?;
                Ok::<_, anyhow::Error>(())
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
