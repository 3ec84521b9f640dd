//! Batch driver: parameter sweeps over the counting bounds and their
//! oracles, with deterministic CSV/JSON reports.

mod commands;
mod config;
mod report;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use tichain::Error;

use commands::COMMANDS;
use config::SweepConfig;
use report::write_metadata;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Parser)]
#[command(name = "tichain", version, about = "Counting bounds and dense oracles for translation-invariant states on a ring")]
struct Cli {
    /// TOML sweep configuration; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base RNG seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report output directory.
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "both")]
    format: Format,
    /// Worker threads for independent sweep cells.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Cap exponent: refuse cells with q^n > 2^CAP_QN (overrides the
    /// config).
    #[arg(long, global = true)]
    cap_qn: Option<u32>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Exact dimension formulas and the log-domain bound chain.
    Bounds,
    /// Necklace formula vs brute-force orbit enumeration.
    Necklace,
    /// TIMPS span rank vs the MPS counting bound.
    RankMps,
    /// TI circuit span rank vs the depth-d counting bound.
    RankCircuit,
    /// Light-cone cutting and block factorization checks.
    CutVerify,
    /// Shifted traces, cycle bounds, and connected correlators.
    Correlations,
    /// Depth threshold sweep from the overlap bound.
    MinDepth,
    /// Time threshold sweep through the depth model.
    MinTime,
    /// Every command in order.
    All,
}

impl Cmd {
    fn names(self) -> Vec<&'static str> {
        match self {
            Cmd::Bounds => vec!["bounds"],
            Cmd::Necklace => vec!["necklace"],
            Cmd::RankMps => vec!["rank-mps"],
            Cmd::RankCircuit => vec!["rank-circuit"],
            Cmd::CutVerify => vec!["cut-verify"],
            Cmd::Correlations => vec!["correlations"],
            Cmd::MinDepth => vec!["min-depth"],
            Cmd::MinTime => vec!["min-time"],
            Cmd::All => COMMANDS.iter().map(|(n, _)| *n).collect(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match SweepConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("tichain: {e}");
                return ExitCode::from(2);
            }
        },
        None => SweepConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(cap) = cli.cap_qn {
        cfg.cap_qn = cap;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("tichain: {e}");
        return ExitCode::from(2);
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("tichain: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }

    let mut all_pass = true;
    let mut timings: Vec<(String, u128)> = Vec::new();
    for name in cli.command.names() {
        let runner = COMMANDS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| *f)
            .expect("command table covers every name");
        let started = std::time::Instant::now();
        let table = match runner(&cfg, cli.workers, &cli.out) {
            Ok(t) => t,
            Err(e @ Error::Resource(_)) => {
                eprintln!("tichain: {name}: {e}");
                return ExitCode::from(3);
            }
            Err(e) => {
                eprintln!("tichain: {name}: {e}");
                return ExitCode::from(1);
            }
        };
        timings.push((name.to_string(), started.elapsed().as_millis()));
        if cli.format != Format::Csv {
            if let Err(e) = table.write_json(&cli.out) {
                eprintln!("tichain: {name}: {e}");
                return ExitCode::from(1);
            }
        }
        if cli.format != Format::Json {
            if let Err(e) = table.write_csv(&cli.out) {
                eprintln!("tichain: {name}: {e}");
                return ExitCode::from(1);
            }
        }
        let pass = table.all_pass();
        println!(
            "{name}: {} rows, {}",
            table.rows.len(),
            if pass { "pass" } else { "FAIL" }
        );
        all_pass &= pass;
    }
    if let Err(e) = write_metadata(&cli.out, &timings) {
        eprintln!("tichain: {e}");
        return ExitCode::from(1);
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
