use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use calmfeed_cli::stages;
use calmfeed_cli::RunConfig;
use calmfeed_core::corpus::synthetic::{synthetic_rows, write_csv};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "calmfeed", version, about = "Measure and soften the emotional intensity of news texts")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// AG-News-style CSV (class index, title, description).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// High-impact threshold.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Texts sampled per category.
    #[arg(long, global = true)]
    per_class: Option<usize>,
    /// Use offline backends for every stage.
    #[arg(long, global = true)]
    mock_backends: bool,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Rewrite only texts whose stimulus score reaches this value.
    #[arg(long, global = true)]
    min_stimulus: Option<f64>,
    /// Exit with 0 even when some results failed validation.
    #[arg(long, global = true)]
    allow_flagged: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the corpus and score every text.
    Analyze,
    /// Rewrite texts into BALANCED and COOL modes.
    Detox,
    /// Check rewrites for semantic preservation.
    Verify,
    /// Simulate consumers and produce weekly summaries with advice.
    Weekly,
    /// Recommend a presentation mode for each persona.
    Recommend,
    /// Compare conditions and write the report and figure data.
    Evaluate,
    /// Render report.json as Markdown.
    Report,
    /// Run analyze, detox, verify, evaluate and report.
    Run,
    /// Write a synthetic AG-News-style corpus.
    SynthCorpus {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 250)]
        rows_per_class: usize,
    },
}

impl Cli {
    fn run_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.corpus {
            cfg.corpus_path = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.per_class {
            cfg.per_class_count = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.min_stimulus {
            cfg.min_stimulus = Some(v);
        }
        if self.allow_flagged {
            cfg.allow_flagged = true;
        }
        if self.mock_backends {
            cfg.force_mock_backends();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: &Cli) -> anyhow::Result<ExitCode> {
    if let Command::SynthCorpus { output, rows_per_class } = &cli.command {
        let seed = cli.seed.unwrap_or(RunConfig::default().seed);
        let file = File::create(output).with_context(|| format!("creating {}", output.display()))?;
        write_csv(&synthetic_rows(*rows_per_class, seed), BufWriter::new(file))?;
        return Ok(ExitCode::SUCCESS);
    }
    let cfg = cli.run_config()?;
    let stage = match cli.command {
        Command::Analyze => stages::analyze,
        Command::Detox => stages::detox,
        Command::Verify => stages::verify,
        Command::Weekly => stages::weekly,
        Command::Recommend => stages::recommend,
        Command::Evaluate => stages::evaluate,
        Command::Report => stages::report,
        Command::Run => stages::run_all,
        Command::SynthCorpus { .. } => unreachable!(),
    };
    let flagged = stage(&cfg)?;
    if flagged > 0 && !cfg.allow_flagged {
        log::error!("{flagged} flagged results; pass --allow-flagged to accept them");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
