use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{parse_override, RunConfig};

/// Signature verification and identification with multi-section codebooks.
#[derive(Parser, Debug)]
#[command(name = "msvq", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override any configuration field, e.g. `--set model.sections=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override, global = true)]
    overrides: Vec<(String, String)>,

    /// Scoring threads. Results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// More log output; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Corpus directory (`corpus`).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,

    /// Synthetic user count (`synthetic.n_users`).
    #[arg(long, global = true)]
    users: Option<usize>,

    /// Synthetic corpus seed (`synthetic.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Sections per model (`model.sections`).
    #[arg(long, global = true)]
    sections: Option<usize>,

    /// Codebook size per section (`model.codebook_size`).
    #[arg(long, global = true)]
    codebook_size: Option<usize>,

    /// Feature set FS1..FS6 (`model.feature_set`).
    #[arg(long, global = true)]
    feature_set: Option<String>,

    /// Fusion strategy (`fusion.strategy`).
    #[arg(long, global = true)]
    fusion: Option<String>,

    /// Matcher: vq or dtw (`matcher`).
    #[arg(long, global = true)]
    matcher: Option<String>,
}

impl GlobalArgs {
    /// Flag overrides come after `--set` ones so explicit flags win.
    fn load_config(&self) -> anyhow::Result<RunConfig> {
        let mut o = self.overrides.clone();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k.to_string(), v));
            }
        };
        let quoted = |s: &Option<String>| s.as_ref().map(|v| format!("{v:?}"));
        push(
            "corpus",
            self.corpus
                .as_ref()
                .map(|p| format!("{:?}", p.display().to_string())),
        );
        push("synthetic.n_users", self.users.map(|v| v.to_string()));
        push("synthetic.seed", self.seed.map(|v| v.to_string()));
        push("model.sections", self.sections.map(|v| v.to_string()));
        push(
            "model.codebook_size",
            self.codebook_size.map(|v| v.to_string()),
        );
        push(
            "model.feature_set",
            quoted(&self.feature_set).map(|v| v.to_uppercase()),
        );
        push(
            "fusion.strategy",
            quoted(&self.fusion).map(|v| v.to_uppercase()),
        );
        push("matcher", quoted(&self.matcher).map(|v| v.to_lowercase()));
        RunConfig::load(self.config.as_deref(), &o)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model file per user of a corpus.
    Enroll {
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one signature against one model.
    Verify {
        #[arg(long)]
        model: PathBuf,
        /// Signature file (SIGv1, or SVC when the extension is .svc).
        #[arg(long)]
        signature: PathBuf,
        /// Accept when the score is at most this value.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Rank enrolled models for one signature.
    Identify {
        /// Directory of model files.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        signature: PathBuf,
        /// Number of candidates to print.
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Run the full verification and identification protocol.
    Eval {
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare DTW and codebook matching costs.
    Bench {
        #[arg(long = "K")]
        templates: Option<usize>,
        #[arg(long = "I")]
        test_len: Option<usize>,
        #[arg(long = "J")]
        ref_len: Option<usize>,
        #[arg(long = "L")]
        codebook_size: Option<usize>,
        #[arg(long = "S")]
        sections: Option<usize>,
        /// Also write the report into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}");
            eprintln!(
                "error: {}",
                msg.split_whitespace().collect::<Vec<_>>().join(" ")
            );
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Synth { out } => commands::synth(&g.load_config()?, &out),
        Command::Enroll { out } => commands::enroll(&g.load_config()?, &out, g.workers),
        Command::Verify {
            model,
            signature,
            threshold,
        } => commands::verify(&g.load_config()?, &model, &signature, threshold),
        Command::Identify {
            models,
            signature,
            top,
        } => commands::identify(&g.load_config()?, &models, &signature, top),
        Command::Eval { out } => commands::eval(&g.load_config()?, &out, g.workers),
        Command::Bench {
            templates,
            test_len,
            ref_len,
            codebook_size,
            sections,
            out,
        } => {
            let mut cfg = g.load_config()?;
            let b = &mut cfg.bench;
            b.templates = templates.unwrap_or(b.templates);
            b.test_len = test_len.unwrap_or(b.test_len);
            b.ref_len = ref_len.unwrap_or(b.ref_len);
            b.codebook_size = codebook_size.unwrap_or(b.codebook_size);
            b.sections = sections.unwrap_or(b.sections);
            commands::bench(&cfg, out.as_deref())
        }
    }
}
