//! Command-line surface: run experiments, verify the concentration suite,
//! regenerate plots, and build or inspect datasets.
//!
//! Exit code 0 means success with all required checks passing, 2 means the
//! run completed but a required check failed, 1 means an error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use revlab::datasets::{
    build_bilinear_pairs, build_cot3, build_four_token, build_reversal3, load_dataset,
    save_dataset, Dataset,
};
use revlab::harness::{
    lemma_suite, parse_config, regenerate_plots, run_experiment, ExperimentConfig,
};
use revlab::numerics::Rng;
use revlab::Result;

#[derive(Parser)]
#[command(
    name = "lab",
    about = "Training-dynamics laboratory for weight asymmetry in toy autoregressive models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config file.
    Run {
        /// Path to the experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $LAB_OUT_DIR or ./runs, plus a
        /// kind-seed-hash subdirectory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the concentration / initialization / bound verification suite.
    VerifyLemmas {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate plots from a stored run directory.
    Report {
        /// Run directory containing curves.csv.
        #[arg(long)]
        run: PathBuf,
    },
    /// Build a dataset file, or inspect an existing one.
    Dataset {
        #[arg(long, value_enum)]
        kind: Option<DatasetKindArg>,
        /// Vocabulary size.
        #[arg(long)]
        m: Option<usize>,
        /// Number of both-direction (or full-triple) pairs.
        #[arg(long)]
        pairs: Option<usize>,
        /// Total held-out items (reversal3 splits them evenly between the
        /// two directions).
        #[arg(long)]
        test: Option<usize>,
        /// Embedding dimension (bilinear only).
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (default: <kind>-<seed>.json).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Validate and summarize an existing dataset file instead.
        #[arg(long)]
        inspect: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKindArg {
    Reversal3,
    Cot3,
    FourToken,
    Bilinear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, out),
        Command::VerifyLemmas { seed, out } => cmd_verify(seed, out),
        Command::Report { run } => {
            let path = regenerate_plots(&run)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Dataset {
            kind,
            m,
            pairs,
            test,
            dim,
            seed,
            out,
            inspect,
        } => cmd_dataset(kind, m, pairs, test, dim, seed, out, inspect),
    }
}

fn out_root() -> PathBuf {
    std::env::var_os("LAB_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExitCode> {
    let mut cfg: ExperimentConfig = parse_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_override = out.or_else(|| cfg.out_dir.clone());
    let resolved = cfg.resolve()?;
    let dir = out_override.unwrap_or_else(|| {
        out_root().join(format!(
            "{}-seed{}-{}",
            resolved.kind.name(),
            resolved.seed,
            resolved.short_hash()
        ))
    });
    let artifacts = run_experiment(&resolved, &dir)?;
    for f in &artifacts.files {
        println!("wrote {}", dir.join(f).display());
    }
    if artifacts.oracle_ok {
        println!("oracles: pass");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("oracles: FAIL (see oracle_report.json)");
        Ok(ExitCode::from(2))
    }
}

fn cmd_verify(seed: u64, out: Option<PathBuf>) -> Result<ExitCode> {
    let report = lemma_suite(seed)?;
    for check in &report.checks {
        println!(
            "{} {}",
            if check.pass { "pass" } else { "FAIL" },
            check.name
        );
    }
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => std::fs::write(&path, format!("{json}\n"))?,
        None => println!("{json}"),
    }
    Ok(if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_dataset(
    kind: Option<DatasetKindArg>,
    m: Option<usize>,
    pairs: Option<usize>,
    test: Option<usize>,
    dim: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    inspect: Option<PathBuf>,
) -> Result<ExitCode> {
    if let Some(path) = inspect {
        let ds = load_dataset(&path)?;
        summarize(&ds);
        return Ok(ExitCode::SUCCESS);
    }
    let kind = kind.ok_or_else(|| {
        revlab::Error::Config("either --kind (build) or --inspect FILE is required".into())
    })?;
    let seed = seed.unwrap_or(0);
    let mut rng = Rng::new(seed).substream("dataset");
    let ds = match kind {
        DatasetKindArg::Reversal3 => {
            let total_test = test.unwrap_or(60);
            Dataset::Reversal3(build_reversal3(
                m.unwrap_or(800),
                pairs.unwrap_or(140),
                total_test / 2,
                total_test - total_test / 2,
                &mut rng,
            )?)
        }
        DatasetKindArg::Cot3 => Dataset::Cot3(build_cot3(
            m.unwrap_or(800),
            pairs.unwrap_or(140),
            test.unwrap_or(60),
            &mut rng,
        )?),
        DatasetKindArg::FourToken => Dataset::FourToken(build_four_token(
            m.unwrap_or(100),
            pairs.unwrap_or(10),
            test.unwrap_or(5),
            &mut rng,
        )?),
        DatasetKindArg::Bilinear => Dataset::Bilinear(build_bilinear_pairs(
            m.unwrap_or(64),
            pairs.unwrap_or(8),
            dim.unwrap_or(512),
            &mut rng,
        )?),
    };
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{}-{}.json", ds.kind_name(), seed)));
    save_dataset(&ds, &path)?;
    println!("wrote {}", path.display());
    summarize(&ds);
    Ok(ExitCode::SUCCESS)
}

fn summarize(ds: &Dataset) {
    match ds {
        Dataset::Reversal3(d) => println!(
            "reversal3: m={} pairs={} train={} test={}",
            d.m,
            d.n_total(),
            d.train.len(),
            d.test.len()
        ),
        Dataset::Cot3(d) => println!(
            "cot3: m={} triples={} train={} test={}",
            d.m,
            d.n_total(),
            d.train.len(),
            d.test.len()
        ),
        Dataset::FourToken(d) => println!(
            "four_token: m={} pairs={} train={} test={}",
            d.m,
            d.n_total(),
            d.train.len(),
            d.test.len()
        ),
        Dataset::Bilinear(d) => println!(
            "bilinear: m={} n={} d={} train={} test=1",
            d.vocab(),
            d.n(),
            d.dim(),
            d.train.len()
        ),
    }
}
