use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tourdesk::intent::{classify, score_categories};
use tourdesk::service::journal::SessionLog;
use tourdesk::service::repl::{self, ReplOptions};
use tourdesk::service::{http, Resources, ServiceConfig, SessionHub, SystemClock};

#[derive(Parser)]
#[command(
    name = "tourdesk",
    version,
    about = "Tourist information dialogue service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP/WebSocket service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `listen` from the config.
        #[arg(long)]
        listen: Option<String>,
        /// Overrides `log_dir` from the config.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Talk to the guide in the terminal.
    Repl {
        #[arg(long)]
        config: PathBuf,
        /// Two attraction ids separated by a comma.
        #[arg(long)]
        spots: String,
        /// Spot to recommend; by default the one with more information.
        #[arg(long)]
        recommend: Option<String>,
        /// Overrides `session.deadline_secs` from the config.
        #[arg(long)]
        deadline_secs: Option<u64>,
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Show classifier decisions.
        #[arg(long)]
        debug: bool,
    },
    /// Classify one utterance and print per-category scores as JSON.
    Classify {
        #[arg(long)]
        config: PathBuf,
        text: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &PathBuf, log_dir: Option<PathBuf>) -> Result<ServiceConfig> {
    let mut config = ServiceConfig::load(path)?;
    if let Some(dir) = log_dir {
        config.log_dir = dir;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve {
            config,
            listen,
            log_dir,
        } => {
            let config = load_config(&config, log_dir)?;
            let listen = listen.unwrap_or_else(|| config.listen.clone());
            let journal = SessionLog::open(&config.log_dir)
                .with_context(|| format!("cannot open log dir {}", config.log_dir.display()))?;
            let hub = SessionHub::new(
                Arc::new(Resources::load(config)?),
                Some(journal),
                Arc::new(SystemClock),
            );
            let restored = hub.restore()?;
            if restored > 0 {
                log::info!("restored {restored} sessions");
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(http::serve(Arc::new(hub), &listen))
        }
        Command::Repl {
            config,
            spots,
            recommend,
            deadline_secs,
            log_dir,
            debug,
        } => {
            let mut config = load_config(&config, log_dir)?;
            if let Some(secs) = deadline_secs {
                config.session.deadline_secs = secs;
            }
            let Some((a, b)) = spots.split_once(',') else {
                bail!("--spots takes two ids separated by a comma, got {spots:?}");
            };
            let journal = SessionLog::open(&config.log_dir)
                .with_context(|| format!("cannot open log dir {}", config.log_dir.display()))?;
            let hub = SessionHub::new(
                Arc::new(Resources::load(config)?),
                Some(journal),
                Arc::new(SystemClock),
            );
            let opts = ReplOptions {
                spot_a_id: a.trim().to_string(),
                spot_b_id: b.trim().to_string(),
                recommended_id: recommend,
                debug,
            };
            repl::run(&hub, &opts, io::stdin().lock(), io::stdout().lock())
        }
        Command::Classify { config, text } => {
            let resources = Resources::load(load_config(&config, None)?)?;
            let e = &resources.engine;
            let tokens = tourdesk::embeddings::tokenize(&text, e.segmenter.as_ref())?;
            let embedded = tourdesk::embeddings::embed(&e.store, &tokens);
            let result = serde_json::json!({
                "tokens": tokens.tokens,
                "oov": embedded.oov,
                "classification": classify(&text, &e.registry, &e.store, e.segmenter.as_ref(), &e.thresholds),
                "scores": score_categories(&embedded, &e.registry, &e.thresholds),
            });
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(())
        }
    }
}
