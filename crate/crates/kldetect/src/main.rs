//! `kldetect` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kldetect::config::{ConfigError, Overrides, RunConfig};
use kldetect::pipeline;
use kldetect::synth::SynthParams;

#[derive(Parser)]
#[command(
    name = "kldetect",
    version,
    about = "Detect compromised accounts by divergence between user and attacker language models"
)]
struct Cli {
    /// Key-value configuration file (see README for the key list).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file. Mandatory in one of the two.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker-thread cap. Results are identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Injected-span ratio: a number in (0,1) or "rnd".
    #[arg(long, global = true)]
    ratio: Option<String>,

    /// Feature set, e.g. "lm" or "lm+compa+vandam".
    #[arg(long = "feature-set", global = true)]
    feature_set: Option<String>,

    /// KL direction: user-attack (default) or attack-user.
    #[arg(long = "kl-direction", global = true)]
    kl_direction: Option<String>,

    /// Interval samples per account.
    #[arg(long, global = true)]
    samples: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inject simulated takeovers; write the simulated corpus and gold labels.
    Simulate,
    /// Extract feature TSVs from the simulated corpus.
    Features,
    /// Train an SVM on all labeled accounts; write the model file.
    Train,
    /// Cross-validate the configured feature sets at the configured ratio.
    Evaluate,
    /// Full grid: simulate, extract, and cross-validate every (feature set,
    /// ratio) combination.
    Pipeline,
    /// Generate a deterministic synthetic corpus in the stream format.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output corpus path (TSV).
    #[arg(long)]
    out: PathBuf,
    /// Number of accounts.
    #[arg(long, default_value_t = 200)]
    accounts: usize,
    /// Mixture weight of the shared vocabulary (higher = more overlap
    /// between accounts).
    #[arg(long, default_value_t = 0.55)]
    shared_weight: f64,
}

enum Failure {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        Failure::Config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Failure {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Command::Synth(args) = &cli.command {
        let seed = cli.seed.ok_or_else(|| {
            ConfigError("synth requires --seed for reproducible generation".to_string())
        })?;
        let params = SynthParams {
            accounts: args.accounts,
            shared_weight: args.shared_weight,
            seed,
            ..SynthParams::default()
        };
        let path = pipeline::cmd_synth(&params, &args.out)?;
        println!(
            "wrote synthetic corpus: {} ({} accounts, seed {})",
            path.display(),
            args.accounts,
            seed
        );
        return Ok(());
    }

    let overrides = Overrides {
        seed: cli.seed,
        jobs: cli.jobs,
        ratio: cli.ratio.clone(),
        feature_set: cli.feature_set.clone(),
        kl_direction: cli.kl_direction.clone(),
        samples: cli.samples,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    cfg.require_corpus()?;

    match cli.command {
        Command::Synth(_) => unreachable!("handled above"),
        Command::Simulate => {
            let summary = pipeline::cmd_simulate(&cfg)?;
            println!(
                "simulated {} accounts: {} compromised, {} skipped",
                summary.accounts,
                summary.compromised,
                summary.skipped.len()
            );
            println!("corpus: {}", summary.corpus_path.display());
            println!("gold:   {}", summary.gold_path.display());
        }
        Command::Features => {
            for path in pipeline::cmd_features(&cfg)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Train => {
            let path = pipeline::cmd_train(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Evaluate => {
            let out = pipeline::cmd_evaluate(&cfg)?;
            print!("{}", out.table);
            println!("report: {}", out.report_path.display());
        }
        Command::Pipeline => {
            let out = pipeline::cmd_pipeline(&cfg)?;
            print!("{}", out.table);
            println!("report: {}", out.report_path.display());
        }
    }
    Ok(())
}
