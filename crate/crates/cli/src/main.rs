//! `rulescene` — craft → generate → compile → eval → report.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 upstream
//! endpoint failure, 4 data error (missing or malformed inputs), 5 a
//! checked scene document failed to compile.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rulescene_core::{Condition, Variant};

use config::ProjectConfig;

#[derive(Parser)]
#[command(name = "rulescene", version, about = "Traffic-rule benchmark construction and evaluation")]
struct Cli {
    /// Project configuration file.
    #[arg(short, long, global = true, default_value = "rulescene.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the hierarchical rule set from the rule file.
    Craft {
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Generate and gate multiple-choice questions for every hierarchy entry.
    Generate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Compile scene documents to OpenSCENARIO.
    Compile(CompileArgs),
    /// Query the model under evaluation and write answer records.
    Eval(EvalArgs),
    /// Tabulate answer records.
    Report(ConditionArgs),
    /// Check the rule file and scene documents without building anything.
    Validate,
}

#[derive(Args)]
struct CompileArgs {
    /// Sampling step, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Trajectory length, seconds.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Default front/behind gap, metres.
    #[arg(long)]
    gap: Option<f64>,
    /// Default lateral offset without an adjacent lane, metres.
    #[arg(long)]
    lateral_gap: Option<f64>,
}

#[derive(Args)]
struct ConditionArgs {
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    cot: bool,
    #[arg(long)]
    rag: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    condition: ConditionArgs,
    #[arg(long)]
    repeats: Option<u32>,
    /// Split seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    concurrency: Option<usize>,
}

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Endpoint(anyhow::Error),
    Data(anyhow::Error),
    Compile(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Endpoint(_) => 3,
            Failure::Data(_) => 4,
            Failure::Compile(_) => 5,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Endpoint(e) | Failure::Data(e) | Failure::Compile(e) => e,
        }
    }
}

fn condition(cfg: &ProjectConfig, args: &ConditionArgs) -> Condition {
    Condition {
        variant: args.variant.unwrap_or(cfg.eval.variant),
        cot: args.cot || cfg.eval.cot,
        rag: args.rag || cfg.eval.rag,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = ProjectConfig::load(&cli.config).map_err(Failure::Config)?;
    let positive = |n: Option<usize>| match n {
        Some(0) => Err(Failure::Config(anyhow::anyhow!("--concurrency must be positive"))),
        n => Ok(n),
    };
    match cli.command {
        Command::Craft { concurrency } => {
            cfg.concurrency = positive(concurrency)?.or(cfg.concurrency);
            commands::craft(&cfg)
        }
        Command::Generate { seed, concurrency } => {
            cfg.seeds.generation = seed.unwrap_or(cfg.seeds.generation);
            cfg.concurrency = positive(concurrency)?.or(cfg.concurrency);
            commands::generate(&cfg)
        }
        Command::Compile(a) => {
            let c = &mut cfg.compile;
            c.dt = a.dt.unwrap_or(c.dt);
            c.horizon = a.horizon.unwrap_or(c.horizon);
            c.front_gap = a.gap.unwrap_or(c.front_gap);
            c.lateral_gap = a.lateral_gap.unwrap_or(c.lateral_gap);
            cfg.seeds.compile = a.seed.unwrap_or(cfg.seeds.compile);
            let ok = |v: f64| v.is_finite() && v > 0.0;
            if !(ok(c.dt) && ok(c.horizon) && ok(c.front_gap) && ok(c.lateral_gap)) || c.dt > c.horizon {
                return Err(Failure::Config(anyhow::anyhow!("dt, horizon and gaps must be positive with dt <= horizon")));
            }
            commands::compile(&cfg)
        }
        Command::Eval(a) => {
            let cond = condition(&cfg, &a.condition);
            if let Some(r) = a.repeats {
                if !(1..=3).contains(&r) {
                    return Err(Failure::Config(anyhow::anyhow!("--repeats must lie in 1..=3")));
                }
                cfg.eval.repeats = r;
            }
            cfg.seeds.split = a.seed.unwrap_or(cfg.seeds.split);
            cfg.concurrency = positive(a.concurrency)?.or(cfg.concurrency);
            commands::eval(&cfg, cond)
        }
        Command::Report(a) => {
            let cond = condition(&cfg, &a);
            commands::report(&cfg, cond)
        }
        Command::Validate => commands::validate(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
