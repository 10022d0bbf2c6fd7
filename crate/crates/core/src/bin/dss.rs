use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dss::gck::SweepMode;
use dss::io::KeyValueConfig;
use dss::prior::PriorKind;
use dss::run::{execute, Command, DataSource, Generator, RunRecord};
use dss::{Error, Result};

/// Time-varying parameter regression with dynamic spike-and-slab priors.
#[derive(Parser)]
#[command(name = "dss", version = dss::run::version())]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Shrinkage prior: nmig, ng or laplace.
    #[arg(long)]
    prior: Option<PriorKind>,
    /// Total MCMC iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Burn-in iterations.
    #[arg(long)]
    burn: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Chain seed; also the base seed of simulated data.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write every retained draw.
    #[arg(long)]
    save_draws: bool,
    /// Regime sampler: gck or naive.
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write simulated datasets as CSV.
    Simulate {
        #[arg(long, default_value = "example1")]
        generator: Generator,
        #[arg(long)]
        replications: Option<usize>,
        /// Number of series of the recursive design.
        #[arg(long)]
        q: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit one regression from a CSV file or a simulated design.
    Fit {
        /// CSV file with a header row.
        #[arg(long, conflicts_with = "generator")]
        data: Option<PathBuf>,
        #[arg(long, default_value = "y")]
        response: String,
        /// Comma-separated predictor columns (default: all other columns).
        #[arg(long, value_delimiter = ',')]
        predictors: Vec<String>,
        /// Fit a simulated dataset instead of a file.
        #[arg(long)]
        generator: Option<Generator>,
        /// Equation of the recursive design (its number of regressors).
        #[arg(long, default_value_t = 1)]
        equation: usize,
        #[arg(long)]
        standardize: bool,
        /// Also write summaries on the original data scale.
        #[arg(long)]
        original_scale: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the three priors on replicated single-equation simulations.
    #[command(name = "reproduce-table2")]
    ReproduceTable2 {
        #[arg(long)]
        replications: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the three priors on the recursive-regression simulation.
    #[command(name = "reproduce-table3")]
    ReproduceTable3 {
        /// Number of series (default 6).
        #[arg(long, conflicts_with = "full")]
        q: Option<usize>,
        /// Use all 10 series and 10,000 iterations.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the quarterly inflation regression (data are standardized).
    #[command(name = "fit-inflation")]
    FitInflation {
        /// CSV file with the inflation column layout.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Also write summaries on the original data scale.
        #[arg(long)]
        original_scale: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat a run from its run.json.
    Rerun {
        record: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn resolve(command: Command, common: &Common, edit: impl FnOnce(&mut RunRecord)) -> Result<RunRecord> {
    let mut rec = RunRecord::defaults(command);
    if let Some(path) = &common.config {
        rec.apply_config(&KeyValueConfig::load(path)?)?;
    }
    edit(&mut rec);
    if let Some(k) = common.prior {
        rec.mcmc.kind = k;
        rec.priors = vec![k];
    }
    if let Some(v) = common.iters {
        rec.mcmc.n_iter = v;
    }
    if let Some(v) = common.burn {
        rec.mcmc.n_burn = v;
    }
    if let Some(v) = common.thin {
        rec.mcmc.thin = v;
    }
    if let Some(v) = common.seed {
        rec.mcmc.seed = v;
    }
    if common.save_draws {
        rec.mcmc.save_paths = true;
    }
    if let Some(s) = &common.sweep {
        rec.mcmc.sweep_mode = match s.as_str() {
            "gck" => SweepMode::Gck,
            "naive" => SweepMode::Naive,
            other => return Err(Error::Config(format!("invalid sweep '{other}' (gck or naive)"))),
        };
    }
    Ok(rec)
}

fn run(cli: Cli) -> Result<String> {
    let (rec, out) = match cli.command {
        Cmd::Simulate { generator, replications, q, common } => {
            let rec = resolve(Command::Simulate, &common, |r| {
                r.generator = Some(generator);
                r.replications = replications.unwrap_or(r.replications);
                r.dim = q.unwrap_or(r.dim);
            })?;
            (rec, common.out)
        }
        Cmd::Fit { data, response, predictors, generator, equation, standardize, original_scale, common } => {
            let rec = resolve(Command::Fit, &common, |r| {
                r.standardize |= standardize;
                r.original_scale |= original_scale;
                if data.is_some() || generator.is_some() {
                    r.data = Some(match (data, generator) {
                        (Some(path), _) => DataSource::Csv { path, response, predictors },
                        (None, Some(Generator::Example1)) => DataSource::Example1 {
                            seed: common.seed.unwrap_or(1),
                            innovation_sd: r.innovation_sd,
                        },
                        (None, _) => DataSource::Example2 {
                            seed: common.seed.unwrap_or(1),
                            dim: r.dim,
                            equation,
                        },
                    });
                }
            })?;
            (rec, common.out)
        }
        Cmd::ReproduceTable2 { replications, common } => {
            let rec = resolve(Command::ReproduceTable2, &common, |r| {
                r.replications = replications.unwrap_or(r.replications);
            })?;
            (rec, common.out)
        }
        Cmd::ReproduceTable3 { q, full, common } => {
            let rec = resolve(Command::ReproduceTable3, &common, |r| {
                if full {
                    r.dim = 10;
                    r.mcmc.n_iter = 10_000;
                    r.mcmc.n_burn = 5_000;
                }
                r.dim = q.unwrap_or(r.dim);
            })?;
            (rec, common.out)
        }
        Cmd::FitInflation { data, original_scale, common } => {
            let rec = resolve(Command::FitInflation, &common, |r| {
                r.original_scale |= original_scale;
                if let Some(path) = data {
                    r.data = Some(DataSource::Inflation { path });
                }
            })?;
            (rec, common.out)
        }
        Cmd::Rerun { record, out } => (RunRecord::load(&record)?, out),
    };
    let report = execute(&rec, &out)?;
    Ok(report.text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
