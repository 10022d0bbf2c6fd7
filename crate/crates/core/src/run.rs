//! Resolved run recipes and the drivers behind each command-line command.
//!
//! A [`RunRecord`] holds everything needed to repeat a run. It is written to
//! `run.json` next to the outputs, and executing it again reproduces them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{standardize, Dataset};
use crate::datagen::{
    example1_stationary_innovation_sd, generate_example1_with, generate_example2_sized, generate_inflation_fixture, replicate, EXAMPLE2_DIM, EXAMPLE2_LEN,
};
use crate::error::{Error, Result};
use crate::io::{emit_results, load_csv, load_inflation, write_dataset, EmitOptions, KeyValueConfig};
use crate::prior::{Hyperparameters, PriorKind};
use crate::sampler::{compute_rmse, run_chain, run_chains, ChainOutput, McmcConfig};

/// Package version followed by `git describe` output when built from a
/// checkout.
pub fn version() -> &'static str {
    env!("DSS_VERSION")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Fit,
    ReproduceTable2,
    ReproduceTable3,
    FitInflation,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::ReproduceTable2 => "reproduce-table2",
            Command::ReproduceTable3 => "reproduce-table3",
            Command::FitInflation => "fit-inflation",
        }
    }
}

/// Simulation designs available to `simulate` and `fit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Example1,
    Example2,
    /// Synthetic data with the inflation column layout.
    InflationFixture,
}

impl std::str::FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(Generator::Example1),
            "example2" => Ok(Generator::Example2),
            "inflation-fixture" => Ok(Generator::InflationFixture),
            other => Err(Error::Config(format!(
                "unknown generator '{other}' (example1, example2 or inflation-fixture)"
            ))),
        }
    }
}

/// Rows of the synthetic inflation fixture.
pub const INFLATION_FIXTURE_ROWS: usize = 20;

/// Where the data of a single fit comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// A CSV file; an empty predictor list means every non-response column.
    Csv { path: PathBuf, response: String, predictors: Vec<String> },
    /// A CSV file with the quarterly inflation layout.
    Inflation { path: PathBuf },
    /// A simulated single-equation dataset.
    Example1 {
        seed: u64,
        #[serde(default)]
        innovation_sd: Option<f64>,
    },
    /// Equation `equation` (1-based regressor count) of a simulated
    /// recursive system with `dim` series.
    Example2 { seed: u64, dim: usize, equation: usize },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv { path, response, predictors } => {
                check_exists(path)?;
                load_csv(path, response, predictors)
            }
            DataSource::Inflation { path } => {
                check_exists(path)?;
                load_inflation(path)
            }
            DataSource::Example1 { seed, innovation_sd } => Ok(example1(*seed, *innovation_sd)),
            DataSource::Example2 { seed, dim, equation } => {
                if *equation == 0 || equation >= dim {
                    return Err(Error::Config(format!("equation must be in 1..{dim}, got {equation}")));
                }
                let (_, eqs) = generate_example2_sized(*seed, EXAMPLE2_LEN, *dim);
                Ok(eqs[equation - 1].clone())
            }
        }
    }
}

fn example1(seed: u64, innovation_sd: Option<f64>) -> Dataset {
    generate_example1_with(seed, innovation_sd.unwrap_or_else(example1_stationary_innovation_sd))
}

fn check_exists(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Data(format!("{}: no such file", path.display())))
    }
}

/// Fully resolved description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub command: Command,
    /// Data for `fit` and `fit-inflation`.
    pub data: Option<DataSource>,
    /// Design for `simulate`.
    pub generator: Option<Generator>,
    pub standardize: bool,
    /// Also write coefficient summaries on the original scale of the data.
    pub original_scale: bool,
    /// Priors compared by the table commands.
    pub priors: Vec<PriorKind>,
    /// Number of simulated datasets for `simulate` and `reproduce-table2`.
    pub replications: usize,
    /// Number of series of the recursive-regression design.
    pub dim: usize,
    /// Innovation standard deviation of the AR(1) coefficients of the
    /// single-equation design; `None` gives them stationary variance 0.25.
    #[serde(default)]
    pub innovation_sd: Option<f64>,
    /// Sampler settings. Its seed is also the base data seed of the
    /// simulation commands.
    pub mcmc: McmcConfig,
}

impl RunRecord {
    /// Defaults for `command`: the matching hyperparameter preset and chain
    /// lengths.
    pub fn defaults(command: Command) -> Self {
        let (hp, n_iter, n_burn) = match command {
            Command::ReproduceTable3 => (Hyperparameters::example2(), 4_000, 2_000),
            Command::FitInflation => (Hyperparameters::inflation(), 20_000, 10_000),
            _ => (Hyperparameters::example1(), 10_000, 5_000),
        };
        Self {
            version: version().to_string(),
            command,
            data: None,
            generator: None,
            standardize: command == Command::FitInflation,
            original_scale: false,
            priors: PriorKind::ALL.to_vec(),
            replications: if command == Command::ReproduceTable2 { 5 } else { 1 },
            dim: if command == Command::ReproduceTable3 { 6 } else { EXAMPLE2_DIM },
            innovation_sd: None,
            mcmc: McmcConfig::new(PriorKind::Nmig, hp, n_iter, n_burn, 1),
        }
    }

    /// Apply the entries of a configuration file. A `preset` key replaces the
    /// hyperparameters before the individual overrides are applied.
    pub fn apply_config(&mut self, cfg: &KeyValueConfig) -> Result<()> {
        if let Some(name) = cfg.get_str("preset") {
            self.mcmc.hp = Hyperparameters::preset(name)?;
        }
        cfg.apply_mcmc(&mut self.mcmc)?;
        if let Some(k) = cfg.get::<PriorKind>("prior")? {
            self.priors = vec![k];
        }
        if let Some(v) = cfg.get_bool("standardize")? {
            self.standardize = v;
        }
        if let Some(v) = cfg.get("replications")? {
            self.replications = v;
        }
        if let Some(v) = cfg.get("q")? {
            self.dim = v;
        }
        if let Some(v) = cfg.get::<f64>("innovation_sd")? {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("innovation_sd must be positive, got {v}")));
            }
            self.innovation_sd = Some(v);
        }
        if let Some(path) = cfg.get_str("data") {
            let path = PathBuf::from(path);
            self.data = Some(match self.command {
                Command::FitInflation => DataSource::Inflation { path },
                _ => DataSource::Csv {
                    path,
                    response: cfg.get_str("response").unwrap_or("y").to_string(),
                    predictors: cfg.get_list("predictors").unwrap_or_default(),
                },
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.mcmc.validate()?;
        for k in &self.priors {
            self.mcmc.hp.validate(*k)?;
        }
        match self.command {
            Command::Fit | Command::FitInflation if self.data.is_none() => {
                Err(Error::Config(format!("{} needs a data source", self.command.as_str())))
            }
            Command::Simulate if self.generator.is_none() => Err(Error::Config("simulate needs a generator".into())),
            Command::ReproduceTable2 | Command::ReproduceTable3 if self.priors.is_empty() => {
                Err(Error::Config("no priors selected".into()))
            }
            _ if self.replications == 0 => Err(Error::Config("at least one replication is required".into())),
            Command::ReproduceTable3 | Command::Simulate if self.dim < 2 => {
                Err(Error::Config(format!("the recursive design needs at least 2 series, got {}", self.dim)))
            }
            _ => Ok(()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let p = dir.join("run.json");
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Output(e.to_string()))?;
        fs::write(&p, json).map_err(|e| Error::Output(format!("{}: {e}", p.display())))?;
        Ok(p)
    }
}

/// Files written by a run and a human-readable report.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub text: String,
}

/// RMSE of the posterior mean and median of one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsePair {
    pub mean: f64,
    pub median: f64,
}

/// One row per prior of a simulation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub prior: PriorKind,
    pub rmse: RmsePair,
}

/// Execute a run and write its outputs into `out`.
pub fn execute(record: &RunRecord, out: &Path) -> Result<RunReport> {
    record.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::Output(format!("{}: {e}", out.display())))?;
    match record.command {
        Command::Simulate => simulate(record, out),
        Command::Fit | Command::FitInflation => fit(record, out),
        Command::ReproduceTable2 => table2(record, out).map(|(r, _)| r),
        Command::ReproduceTable3 => table3(record, out).map(|(r, _)| r),
    }
}

fn simulate(record: &RunRecord, out: &Path) -> Result<RunReport> {
    let seed = record.mcmc.seed;
    let mut files = Vec::new();
    match record.generator.expect("validated") {
        Generator::Example1 => {
            for d in replicate(|s| example1(s, record.innovation_sd), record.replications, seed)? {
                let p = out.join(format!("example1_seed{}.csv", d.meta.seed.unwrap_or(seed)));
                write_dataset(&p, &d)?;
                files.push(p);
            }
        }
        Generator::Example2 => {
            let systems = replicate(|s| (s, generate_example2_sized(s, EXAMPLE2_LEN, record.dim)), record.replications, seed)?;
            for (s, (_, eqs)) in systems {
                for d in eqs {
                    let p = out.join(format!("example2_seed{s}_{}.csv", d.response_name));
                    write_dataset(&p, &d)?;
                    files.push(p);
                }
            }
        }
        Generator::InflationFixture => {
            for d in replicate(|s| generate_inflation_fixture(s, INFLATION_FIXTURE_ROWS), record.replications, seed)? {
                let p = out.join(format!("inflation_fixture_seed{}.csv", d.meta.seed.unwrap_or(seed)));
                write_dataset(&p, &d)?;
                files.push(p);
            }
        }
    }
    files.push(record.write(out)?);
    let text = format!("wrote {} files to {}\n", files.len(), out.display());
    Ok(RunReport { files, text })
}

fn fit(record: &RunRecord, out: &Path) -> Result<RunReport> {
    let raw = record.data.as_ref().expect("validated").load()?;
    let (data, scale) = if record.standardize {
        let (d, s) = standardize(&raw)?;
        (d, Some(s))
    } else {
        (raw, None)
    };
    let chain = run_chain(&data, &record.mcmc)?;
    let opts = EmitOptions {
        truth: data.truth.as_ref(),
        archive: chain.archive.as_ref(),
        original_scale: if record.original_scale { scale.as_ref() } else { None },
    };
    let files = emit_results(out, &chain.summary, &data.predictor_names, record, &opts)?;
    let mut text = String::new();
    let _ = writeln!(text, "{} iterations, {} draws kept", record.mcmc.n_iter, chain.summary.n_kept);
    for (j, name) in data.predictor_names.iter().enumerate() {
        let _ = writeln!(
            text,
            "{name}: phi acceptance {:.3}, transition acceptance {:.3}",
            chain.summary.phi_acceptance[j], chain.summary.transition_acceptance[j]
        );
    }
    if let Some(truth) = &data.truth {
        let _ = writeln!(
            text,
            "RMSE (mean) {:.4}, RMSE (median) {:.4}",
            compute_rmse(&chain.summary.beta.mean, truth)?,
            compute_rmse(&chain.summary.beta.median, truth)?
        );
    }
    Ok(RunReport { files, text })
}

fn rmse_of(chain: &ChainOutput, data: &Dataset) -> Result<RmsePair> {
    let truth = data.truth.as_ref().ok_or_else(|| Error::Data("simulated data without truth".into()))?;
    Ok(RmsePair {
        mean: compute_rmse(&chain.summary.beta.mean, truth)?,
        median: compute_rmse(&chain.summary.beta.median, truth)?,
    })
}

fn config_for(record: &RunRecord, kind: PriorKind, seed: u64) -> McmcConfig {
    McmcConfig { kind, seed, save_paths: false, ..record.mcmc.clone() }
}

fn write_table(path: &Path, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Output(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(["prior", "rmse_mean", "rmse_median"]).map_err(err)?;
    for r in rows {
        w.write_record([r.prior.as_str().to_string(), format!("{}", r.rmse.mean), format!("{}", r.rmse.median)])
            .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table with one row per prior.
pub fn format_table(title: &str, rows: &[TableRow]) -> String {
    let mut s = format!("{title}\n{:<10}{:>14}{:>16}\n", "prior", "RMSE (mean)", "RMSE (median)");
    for r in rows {
        let _ = writeln!(s, "{:<10}{:>14.4}{:>16.4}", r.prior.as_str(), r.rmse.mean, r.rmse.median);
    }
    s
}

/// Single-equation study: every prior on `replications` simulated datasets;
/// RMSEs are averaged over replications.
pub fn table2(record: &RunRecord, out: &Path) -> Result<(RunReport, Vec<TableRow>)> {
    record.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::Output(format!("{}: {e}", out.display())))?;
    let base = record.mcmc.seed;
    let datasets = replicate(|s| example1(s, record.innovation_sd), record.replications, base)?;
    let jobs: Vec<(&Dataset, McmcConfig)> = record
        .priors
        .iter()
        .flat_map(|&k| datasets.iter().map(move |d| (d, k)))
        .map(|(d, k)| (d, config_for(record, k, d.meta.seed.unwrap_or(base))))
        .collect();
    let results = run_chains(&jobs);

    let per_rep = out.join("table2_replications.csv");
    let mut w = csv::Writer::from_path(&per_rep).map_err(|e| Error::Output(format!("{}: {e}", per_rep.display())))?;
    let err = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(["prior", "seed", "rmse_mean", "rmse_median"]).map_err(err)?;
    let mut rows = Vec::new();
    for (pi, &kind) in record.priors.iter().enumerate() {
        let mut sum = RmsePair { mean: 0.0, median: 0.0 };
        for (ri, d) in datasets.iter().enumerate() {
            let idx = pi * datasets.len() + ri;
            let chain = results[idx].as_ref().map_err(|e| Error::Numerical(format!("{} prior, seed {}: {e}", kind, jobs[idx].1.seed)))?;
            let r = rmse_of(chain, d)?;
            w.write_record([kind.as_str().to_string(), jobs[idx].1.seed.to_string(), format!("{}", r.mean), format!("{}", r.median)])
                .map_err(err)?;
            sum.mean += r.mean;
            sum.median += r.median;
        }
        let n = datasets.len() as f64;
        rows.push(TableRow { prior: kind, rmse: RmsePair { mean: sum.mean / n, median: sum.median / n } });
    }
    w.flush()?;
    let table = out.join("table2.csv");
    write_table(&table, &rows)?;
    let files = vec![table, per_rep, record.write(out)?];
    let text = format_table(&format!("Mean RMSE over {} replications, single-equation example", datasets.len()), &rows);
    Ok((RunReport { files, text }, rows))
}

/// Recursive-regression study: every equation of one simulated system is
/// fitted under every prior; RMSE is pooled over all coefficient paths.
pub fn table3(record: &RunRecord, out: &Path) -> Result<(RunReport, Vec<TableRow>)> {
    record.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::Output(format!("{}: {e}", out.display())))?;
    let seed = record.mcmc.seed;
    let (_, eqs) = generate_example2_sized(seed, EXAMPLE2_LEN, record.dim);
    let jobs: Vec<(&Dataset, McmcConfig)> = record
        .priors
        .iter()
        .flat_map(|&k| eqs.iter().enumerate().map(move |(i, d)| (d, k, i)))
        .map(|(d, k, i)| (d, config_for(record, k, seed.wrapping_add(i as u64))))
        .collect();
    let results = run_chains(&jobs);

    let per_eq = out.join("table3_equations.csv");
    let mut w = csv::Writer::from_path(&per_eq).map_err(|e| Error::Output(format!("{}: {e}", per_eq.display())))?;
    let err = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(["prior", "equation", "rmse_mean", "rmse_median"]).map_err(err)?;
    let mut rows = Vec::new();
    for (pi, &kind) in record.priors.iter().enumerate() {
        let (mut ss_mean, mut ss_median, mut count) = (0.0, 0.0, 0usize);
        for (ei, d) in eqs.iter().enumerate() {
            let idx = pi * eqs.len() + ei;
            let chain = results[idx].as_ref().map_err(|e| Error::Numerical(format!("{} prior, equation {}: {e}", kind, d.response_name)))?;
            let r = rmse_of(chain, d)?;
            w.write_record([kind.as_str().to_string(), d.response_name.clone(), format!("{}", r.mean), format!("{}", r.median)])
                .map_err(err)?;
            let cells = d.x.len();
            ss_mean += r.mean * r.mean * cells as f64;
            ss_median += r.median * r.median * cells as f64;
            count += cells;
        }
        let c = count as f64;
        rows.push(TableRow { prior: kind, rmse: RmsePair { mean: (ss_mean / c).sqrt(), median: (ss_median / c).sqrt() } });
    }
    w.flush()?;
    let table = out.join("table3.csv");
    write_table(&table, &rows)?;
    let files = vec![table, per_eq, record.write(out)?];
    let text = format_table(
        &format!("Pooled RMSE over {} recursive regressions ({} series)", eqs.len(), record.dim),
        &rows,
    );
    Ok((RunReport { files, text }, rows))
}
