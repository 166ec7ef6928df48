use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lmbo::harness::{self, ModelDocument, RunConfig};
use lmbo::Result;

#[derive(Parser)]
#[command(name = "lmbo", version, about = "Tune, train, evaluate and apply LM-trained MLP regressors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Model document for eval / predict / embed; overrides the config.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Bayesian optimisation of the architecture.
    Tune,
    /// Train the configured architecture.
    Train,
    /// Score a stored model on the configured dataset.
    Eval,
    /// Predict the rows of an input table.
    Predict {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Enlarge a stored model without changing its predictions.
    Embed {
        /// Comma-separated hidden widths of the target network.
        #[arg(long, value_delimiter = ',', required = true)]
        hidden: Vec<usize>,
    },
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| lmbo::Error::Config("--config <path> is required".into()))?;
    let mut c = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(o) = &cli.out {
        c.out_dir = o.clone();
    }
    if let Some(m) = &cli.model {
        c.model = Some(m.clone());
    }
    Ok(c)
}

fn run(cli: &Cli) -> Result<()> {
    let config = load(cli)?;
    match &cli.command {
        Command::Tune => {
            harness::cmd_tune(&config)?;
            print!("{}", std::fs::read_to_string(config.out_dir.join("report.txt"))?);
        }
        Command::Train => {
            harness::cmd_train(&config)?;
            print!("{}", std::fs::read_to_string(config.out_dir.join("report.txt"))?);
        }
        Command::Eval => print!("{}", harness::cmd_eval(&config)?.to_text()),
        Command::Predict { input } => {
            for p in harness::cmd_predict(&config, input.as_deref())? {
                println!("{p}");
            }
        }
        Command::Embed { hidden } => {
            let doc = ModelDocument::load(&config.model_path())?;
            let big = harness::embed_document(&doc, hidden.clone())?;
            let path = config.out_dir.join("embedded_model.json");
            big.save(&path)?;
            println!("{} -> {} written to {}", doc.arch, big.arch, path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
