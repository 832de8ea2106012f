use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use srcsent_cli::commands::{self, *};
use srcsent_cli::service::{load_score_dir, serve, AppState};
use srcsent_core::corpus::load_pairs;
use srcsent_core::pipeline::AnnotationStore;
use srcsent_core::ScorerRegistry;

#[derive(Parser)]
#[command(
    name = "srcsent",
    version,
    about = "Find the input sentences a summary was built from"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every pair with the configured methods.
    Score(ScoreArgs),
    /// NDCG and MAP of score dumps against human votes.
    Evaluate(EvaluateArgs),
    /// Per-split corpus statistics and reconstructability verdicts.
    Stats(StatsArgs),
    /// Pearson correlation between methods.
    Correlate(CorrelateArgs),
    /// Histograms of source-sentence positions.
    Positions(PositionsArgs),
    /// Pick source sentences from a score dump.
    Select(SelectArgs),
    /// Write a corpus with only the selected sentences.
    ExportSrconly(ExportArgs),
    /// Inter-annotator agreement.
    Agreement(AgreementArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// List the registered scoring methods.
    Methods,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Annotation log; created if missing.
    #[arg(long)]
    annotations: PathBuf,
    /// Directory of `<method>.scores.jsonl` dumps.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

fn run_server(args: ServeArgs) -> Result<()> {
    let pairs =
        load_pairs(&args.corpus).with_context(|| format!("loading {}", args.corpus.display()))?;
    let store = AnnotationStore::open(&args.annotations)?;
    let scores = match &args.scores {
        Some(dir) => load_score_dir(dir)?,
        None => Default::default(),
    };
    let state = AppState::new(pairs, store, scores);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let registry = ScorerRegistry::with_builtin();
    let out = match cli.command {
        Command::Score(a) => commands::score(&a, &registry)?,
        Command::Evaluate(a) => evaluate_cmd(&a)?,
        Command::Stats(a) => stats(&a)?,
        Command::Correlate(a) => correlate(&a)?,
        Command::Positions(a) => positions(&a)?,
        Command::Select(a) => select(&a)?,
        Command::ExportSrconly(a) => export_srconly(&a)?,
        Command::Agreement(a) => agreement(&a)?,
        Command::Serve(a) => return run_server(a),
        Command::Methods => registry.names().join("\n") + "\n",
    };
    print!("{out}");
    Ok(())
}
