mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polarlex_core::lexicon::Weighting;

use commands::{Classify, Failure, KappaArgs};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "polarlex",
    version,
    about = "Word-level sentiment lexicon toolkit"
)]
struct Cli {
    /// Run configuration (`key = value` lines); flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// `train:test` parts or a train fraction, e.g. `7:3` or `0.7`.
    #[arg(long)]
    split_ratio: Option<String>,
    /// Split without stratifying by label.
    #[arg(long)]
    unstratified: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus, report its composition and write the train/test split.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Count bigrams and write annotation candidates.
    Extract {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        min_count: Option<usize>,
        #[arg(long, value_parser = ["full", "train"])]
        scope: Option<String>,
        /// Suffix rules applied before counting.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Agreement between two annotators.
    Kappa {
        /// One annotation log, or two annotation logs or judgment sheets.
        #[arg(required = true, num_args = 1..=2)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = WeightingArg::Unweighted)]
        weighting: WeightingArg,
        /// Drop pairs where either judgment is uncertain.
        #[arg(long)]
        exclude_borderline: bool,
        #[arg(long)]
        json: bool,
    },
    /// Label distribution of one or more lexicons.
    Stats {
        #[arg(required = true)]
        lexicons: Vec<PathBuf>,
        /// Row names, one per lexicon; file stems by default.
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
    },
    /// Majority polling with unigram and bigram lexicons.
    Poll {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        baseline_lexicon: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        bigram_lexicon: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Comma-separated subset of baseline, unigram, bigram, unigram+bigram.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_parser = ["off", "on", "both"])]
        segmentation: Option<String>,
        #[arg(long, value_parser = ["auto", "test", "full"])]
        eval_scope: Option<String>,
        #[arg(long)]
        min_count: Option<usize>,
        /// Evaluate without a train/test split (unigram modes only).
        #[arg(long)]
        no_split: bool,
    },
    /// Train classifiers on embedding features with and without polarity counts.
    Classify {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        bigram_lexicon: Option<PathBuf>,
        /// Comma-separated classifier names.
        #[arg(long)]
        classifiers: Option<String>,
        #[arg(long, value_parser = ["raw", "per_token"])]
        tail_scaling: Option<String>,
        #[arg(long)]
        min_count: Option<usize>,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "annotations")]
        data_dir: PathBuf,
        /// Static files for the annotation UI.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Unweighted,
    Linear,
}

impl CorpusArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.set_opt("corpus", self.corpus.as_ref().map(|p| p.display()));
        cfg.set_opt("out_dir", self.out_dir.as_ref().map(|p| p.display()));
        cfg.set_opt("split_ratio", self.split_ratio.as_ref());
        if self.unstratified {
            cfg.set("stratified", false);
        }
    }
}

fn set_path(cfg: &mut RunConfig, key: &str, path: &Option<PathBuf>) {
    cfg.set_opt(key, path.as_ref().map(|p| p.display()));
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            if !path.exists() {
                return Err(Failure::Config(anyhow::anyhow!(
                    "config file {} does not exist",
                    path.display()
                )));
            }
            RunConfig::load(path).config()?
        }
        None => RunConfig::default(),
    };
    cfg.set_opt("seed", cli.seed);

    match cli.command {
        Command::Ingest { corpus } => {
            corpus.apply(&mut cfg);
            commands::ingest(&cfg)
        }
        Command::Extract {
            corpus,
            min_count,
            scope,
            rules,
            out,
        } => {
            corpus.apply(&mut cfg);
            cfg.set_opt("min_count", min_count);
            cfg.set_opt("extract_scope", scope);
            set_path(&mut cfg, "rules", &rules);
            commands::extract(&cfg, out.as_deref())
        }
        Command::Kappa {
            files,
            weighting,
            exclude_borderline,
            json,
        } => {
            let weighting = match weighting {
                WeightingArg::Unweighted => Weighting::Unweighted,
                WeightingArg::Linear => Weighting::Linear,
            };
            commands::kappa(
                &cfg,
                &KappaArgs {
                    files: &files,
                    weighting,
                    include_borderline: !exclude_borderline,
                    json,
                },
            )
        }
        Command::Stats { lexicons, names } => commands::stats(&cfg, &lexicons, &names),
        Command::Poll {
            corpus,
            baseline_lexicon,
            lexicon,
            bigram_lexicon,
            rules,
            mode,
            segmentation,
            eval_scope,
            min_count,
            no_split,
        } => {
            corpus.apply(&mut cfg);
            set_path(&mut cfg, "baseline_lexicon", &baseline_lexicon);
            set_path(&mut cfg, "lexicon", &lexicon);
            set_path(&mut cfg, "bigram_lexicon", &bigram_lexicon);
            set_path(&mut cfg, "rules", &rules);
            cfg.set_opt("modes", mode);
            cfg.set_opt("segmentation", segmentation);
            cfg.set_opt("eval_scope", eval_scope);
            cfg.set_opt("min_count", min_count);
            if no_split {
                cfg.set("no_split", true);
            }
            commands::poll(&cfg)
        }
        Command::Classify {
            corpus,
            embeddings,
            lexicon,
            bigram_lexicon,
            classifiers,
            tail_scaling,
            min_count,
        } => {
            corpus.apply(&mut cfg);
            set_path(&mut cfg, "embeddings", &embeddings);
            set_path(&mut cfg, "lexicon", &lexicon);
            set_path(&mut cfg, "bigram_lexicon", &bigram_lexicon);
            cfg.set_opt("classifiers", classifiers);
            cfg.set_opt("tail_scaling", tail_scaling);
            cfg.set_opt("min_count", min_count);
            commands::classify(&cfg)
        }
        Command::Serve {
            host,
            port,
            data_dir,
            ui_dir,
        } => commands::serve(&host, port, data_dir, ui_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.exit_code())
        }
    }
}
