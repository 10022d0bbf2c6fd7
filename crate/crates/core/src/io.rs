//! CSV input, key-value configuration files and result files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::{Dataset, Standardization};
use crate::error::{Error, Result};
use crate::gck::SweepMode;
use crate::prior::{Hyperparameters, PriorKind, SlabWeight};
use crate::sampler::{compute_rmse, DrawArchive, McmcConfig, PosteriorSummary};

/// Response column of the quarterly inflation dataset.
pub const INFLATION_RESPONSE: &str = "INFLATION";

/// The 31 predictor columns of the quarterly inflation dataset, in order.
pub const INFLATION_PREDICTORS: [&str; 31] = [
    "GDP",
    "PCE",
    "GPI",
    "RGEGI",
    "IMGS",
    "NFP",
    "M2",
    "ENERGY",
    "FOOD",
    "MATERIALS",
    "OUTPUT_GAP",
    "GS10",
    "GS5",
    "GS3",
    "GS1",
    "PRIVATE_EMPLOYMENT",
    "PMI_MANU",
    "AHEPNSE",
    "DJIA",
    "M1",
    "ISM_SDI",
    "CONSUMER",
    "UNRATE",
    "TBILL3",
    "TBILL_SPREAD",
    "HOUSING_STARTS",
    "INF_EXP",
    "LAG1",
    "LAG2",
    "LAG3",
    "LAG4",
];

/// Header and numeric records of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TabularData {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("column '{name}' not found (columns: {})", self.header.join(", "))))
    }
}

fn read_records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut records = Vec::new();
    for rec in rdr.records() {
        records.push(rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?);
    }
    Ok((header, records))
}

/// Read the named columns of a CSV file as numbers. Other columns may hold
/// arbitrary text.
pub fn load_columns(path: &Path, columns: &[&str]) -> Result<TabularData> {
    let (header, records) = read_records(path)?;
    let idx = columns
        .iter()
        .map(|c| {
            header.iter().position(|h| h == c).ok_or_else(|| {
                Error::Data(format!("{}: column '{c}' not found (columns: {})", path.display(), header.join(", ")))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(records.len());
    for rec in &records {
        // header is line 1
        let line = rec.position().map_or(0, |p| p.line());
        let row = idx
            .iter()
            .zip(columns)
            .map(|(&i, name)| {
                let cell = rec.get(i).unwrap_or("");
                if cell.is_empty() {
                    return Err(Error::Data(format!("{}: line {line}, column '{name}': empty cell", path.display())));
                }
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Data(format!("{}: line {line}, column '{name}': '{cell}' is not a number", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(TabularData { header: columns.iter().map(|s| s.to_string()).collect(), rows })
}

/// Column names of a CSV file.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    Ok(read_records(path)?.0)
}

/// Load a regression dataset: `response` against `predictors`. An empty
/// predictor list selects every other column.
pub fn load_csv(path: &Path, response: &str, predictors: &[String]) -> Result<Dataset> {
    let predictors: Vec<String> = if predictors.is_empty() {
        read_header(path)?.into_iter().filter(|h| h != response).collect()
    } else {
        predictors.to_vec()
    };
    let mut cols: Vec<&str> = vec![response];
    cols.extend(predictors.iter().map(String::as_str));
    let tab = load_columns(path, &cols)?;
    if tab.rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let n = tab.rows.len();
    let y = tab.rows.iter().map(|r| r[0]).collect();
    let x = DMatrix::from_fn(n, predictors.len(), |t, j| tab.rows[t][j + 1]);
    Ok(Dataset::new(y, x)?
        .with_names(response, predictors)?
        .with_meta(&path.display().to_string(), None))
}

/// Check that a CSV header contains the inflation response and all 31
/// predictors.
pub fn validate_inflation_schema(header: &[String]) -> Result<()> {
    let missing: Vec<&str> = std::iter::once(INFLATION_RESPONSE)
        .chain(INFLATION_PREDICTORS)
        .filter(|c| !header.iter().any(|h| h == c))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Data(format!("inflation file is missing columns: {}", missing.join(", "))))
    }
}

/// Load the quarterly inflation data, checking its schema.
pub fn load_inflation(path: &Path) -> Result<Dataset> {
    validate_inflation_schema(&read_header(path)?)?;
    let preds: Vec<String> = INFLATION_PREDICTORS.iter().map(|s| s.to_string()).collect();
    load_csv(path, INFLATION_RESPONSE, &preds)
}

/// Write a dataset as CSV: response first, then predictors, then the true
/// coefficient paths (as `beta_<name>`) when known.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![data.response_name.clone()];
    header.extend(data.predictor_names.iter().cloned());
    if data.truth.is_some() {
        header.extend(data.predictor_names.iter().map(|n| format!("beta_{n}")));
    }
    w.write_record(&header).map_err(out_err)?;
    for t in 0..data.len() {
        let mut row = vec![fmt_num(data.y[t])];
        row.extend(data.x.row(t).iter().map(|v| fmt_num(*v)));
        if let Some(tr) = &data.truth {
            row.extend(tr.row(t).iter().map(|v| fmt_num(*v)));
        }
        w.write_record(&row).map_err(out_err)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn out_err(e: csv::Error) -> Error {
    Error::Output(e.to_string())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Output(format!("{}: {e}", path.display())))
}

/// Flat `key = value` configuration with `#` comments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyValueConfig {
    entries: BTreeMap<String, String>,
}

/// Keys accepted in configuration files.
pub const CONFIG_KEYS: &[&str] = &[
    "preset",
    "prior",
    "iters",
    "burn",
    "seed",
    "thin",
    "save_draws",
    "sweep",
    "slab_weight",
    "standardize",
    "data",
    "response",
    "predictors",
    "replications",
    "q",
    "innovation_sd",
    "r",
    "nu",
    "a_tau",
    "c_psi",
    "C_psi",
    "a_sigma",
    "b_sigma",
    "a_phi",
    "b_phi",
    "a_omega",
    "b_omega",
    "alpha",
];

impl KeyValueConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !CONFIG_KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'"))),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get_str(key) {
            None => Ok(None),
            Some("true" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "no" | "0") => Ok(Some(false)),
            Some(v) => Err(Error::Config(format!("invalid boolean '{v}' for '{key}'"))),
        }
    }

    pub fn get_list(&self, key: &str) -> Option<Vec<String>> {
        self.get_str(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    /// Apply every hyperparameter key present to `hp`.
    pub fn apply_hyperparameters(&self, hp: &mut Hyperparameters) -> Result<()> {
        let fields: [(&str, &mut f64); 12] = [
            ("r", &mut hp.spike_ratio),
            ("nu", &mut hp.nu),
            ("a_tau", &mut hp.a_tau),
            ("c_psi", &mut hp.c_psi),
            ("C_psi", &mut hp.cap_c_psi),
            ("a_sigma", &mut hp.a_sigma),
            ("b_sigma", &mut hp.b_sigma),
            ("a_phi", &mut hp.a_phi),
            ("b_phi", &mut hp.b_phi),
            ("a_omega", &mut hp.a_omega),
            ("b_omega", &mut hp.b_omega),
            ("alpha", &mut hp.alpha),
        ];
        for (key, slot) in fields {
            if let Some(v) = self.get::<f64>(key)? {
                *slot = v;
            }
        }
        if let Some(v) = self.get_str("slab_weight") {
            hp.slab_weight = match v {
                "stationary" => SlabWeight::Stationary,
                "stay_slab" => SlabWeight::StaySlab,
                other => return Err(Error::Config(format!("invalid slab_weight '{other}' (stationary or stay_slab)"))),
            };
        }
        Ok(())
    }

    /// Apply the sampler keys present to `cfg`.
    pub fn apply_mcmc(&self, cfg: &mut McmcConfig) -> Result<()> {
        if let Some(k) = self.get::<PriorKind>("prior")? {
            cfg.kind = k;
        }
        if let Some(v) = self.get("iters")? {
            cfg.n_iter = v;
        }
        if let Some(v) = self.get("burn")? {
            cfg.n_burn = v;
        }
        if let Some(v) = self.get("seed")? {
            cfg.seed = v;
        }
        if let Some(v) = self.get("thin")? {
            cfg.thin = v;
        }
        if let Some(v) = self.get_bool("save_draws")? {
            cfg.save_paths = v;
        }
        if let Some(v) = self.get_str("sweep") {
            cfg.sweep_mode = match v {
                "gck" => SweepMode::Gck,
                "naive" => SweepMode::Naive,
                other => return Err(Error::Config(format!("invalid sweep '{other}' (gck or naive)"))),
            };
        }
        self.apply_hyperparameters(&mut cfg.hp)
    }
}

/// Output options for [`emit_results`].
#[derive(Debug, Clone, Default)]
pub struct EmitOptions<'a> {
    pub truth: Option<&'a DMatrix<f64>>,
    pub archive: Option<&'a DrawArchive>,
    /// Also write coefficient summaries on the original data scale.
    pub original_scale: Option<&'a Standardization>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Output(format!("{}: {e}", dir.display())))
}

fn write_path_summary(path: &Path, summary: &PosteriorSummary, names: &[String], scale: Option<&Standardization>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["predictor", "j", "t", "mean", "median", "q025", "q975", "inclusion"]).map_err(out_err)?;
    let b = &summary.beta;
    let (n, q) = b.mean.shape();
    for j in 0..q {
        let f = |v: f64| scale.map_or(v, |s| s.coefficient_to_original(j, v));
        for t in 0..n {
            w.write_record([
                names[j].clone(),
                (j + 1).to_string(),
                (t + 1).to_string(),
                fmt_num(f(b.mean[(t, j)])),
                fmt_num(f(b.median[(t, j)])),
                fmt_num(f(b.lower[(t, j)])),
                fmt_num(f(b.upper[(t, j)])),
                fmt_num(b.inclusion[(t, j)]),
            ])
            .map_err(out_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write `summary.csv`, `scalars.csv`, `rmse.csv` (when the truth is known),
/// `run.json` and, optionally, draw archives into `dir`.
pub fn emit_results<R: Serialize>(
    dir: &Path,
    summary: &PosteriorSummary,
    predictor_names: &[String],
    record: &R,
    opts: &EmitOptions<'_>,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();

    let p = dir.join("summary.csv");
    write_path_summary(&p, summary, predictor_names, None)?;
    written.push(p);
    if let Some(scale) = opts.original_scale {
        let p = dir.join("summary_original_scale.csv");
        write_path_summary(&p, summary, predictor_names, Some(scale))?;
        written.push(p);
    }

    let p = dir.join("scalars.csv");
    let mut w = csv_writer(&p)?;
    w.write_record(["parameter", "mean", "median", "q025", "q975", "acceptance"]).map_err(out_err)?;
    for s in &summary.scalars {
        let acc = acceptance_for(&s.name, summary).map(fmt_num).unwrap_or_default();
        let m = &s.moments;
        w.write_record([s.name.clone(), fmt_num(m.mean), fmt_num(m.median), fmt_num(m.lower), fmt_num(m.upper), acc])
            .map_err(out_err)?;
    }
    w.flush()?;
    written.push(p);

    if let Some(truth) = opts.truth {
        let p = dir.join("rmse.csv");
        let mut w = csv_writer(&p)?;
        w.write_record(["estimator", "rmse"]).map_err(out_err)?;
        w.write_record(["mean".to_string(), fmt_num(compute_rmse(&summary.beta.mean, truth)?)]).map_err(out_err)?;
        w.write_record(["median".to_string(), fmt_num(compute_rmse(&summary.beta.median, truth)?)]).map_err(out_err)?;
        w.flush()?;
        written.push(p);
    }

    let p = dir.join("run.json");
    let json = serde_json::to_string_pretty(record).map_err(|e| Error::Output(e.to_string()))?;
    fs::write(&p, json).map_err(|e| Error::Output(format!("{}: {e}", p.display())))?;
    written.push(p);

    if let Some(arch) = opts.archive {
        written.extend(write_archive(dir, arch, predictor_names)?);
    }
    Ok(written)
}

/// Acceptance rate reported next to a scalar parameter, if it is updated by
/// Metropolis-Hastings.
fn acceptance_for(name: &str, summary: &PosteriorSummary) -> Option<f64> {
    let (block, idx) = name.rsplit_once('_')?;
    let j: usize = idx.parse().ok()?;
    match block {
        "phi" => summary.phi_acceptance.get(j - 1).copied(),
        "omega11" | "omega00" => summary.transition_acceptance.get(j - 1).copied(),
        _ => None,
    }
}

/// One CSV shard per parameter block: coefficient paths, regimes (when
/// kept) and scalar parameters, one row per retained draw.
pub fn write_archive(dir: &Path, arch: &DrawArchive, names: &[String]) -> Result<Vec<PathBuf>> {
    let (n, q) = (arch.len, arch.dim);
    let cell_names: Vec<String> = (0..n).flat_map(|t| (0..q).map(move |j| (t, j))).map(|(t, j)| format!("{}_t{}", names[j], t + 1)).collect();
    let mut out = Vec::new();

    let p = dir.join("draws_beta.csv");
    let mut w = csv_writer(&p)?;
    let mut header = vec!["draw".to_string()];
    header.extend(cell_names.iter().cloned());
    w.write_record(&header).map_err(out_err)?;
    for d in 0..arch.n_draws() {
        let mut row = vec![(d + 1).to_string()];
        row.extend(arch.beta.iter().map(|c| fmt_num(c[d])));
        w.write_record(&row).map_err(out_err)?;
    }
    w.flush()?;
    out.push(p);

    if !arch.regimes.is_empty() {
        let p = dir.join("draws_regimes.csv");
        let mut w = csv_writer(&p)?;
        w.write_record(&header).map_err(out_err)?;
        for d in 0..arch.n_draws() {
            let mut row = vec![(d + 1).to_string()];
            row.extend(arch.regimes.iter().map(|c| if c[d] { "1".to_string() } else { "0".to_string() }));
            w.write_record(&row).map_err(out_err)?;
        }
        w.flush()?;
        out.push(p);
    }

    let p = dir.join("draws_scalars.csv");
    let mut w = csv_writer(&p)?;
    let mut header = vec!["draw".to_string()];
    header.extend(arch.scalar_names.iter().cloned());
    w.write_record(&header).map_err(out_err)?;
    for (d, vals) in arch.scalars.iter().enumerate() {
        let mut row = vec![(d + 1).to_string()];
        row.extend(vals.iter().map(|v| fmt_num(*v)));
        w.write_record(&row).map_err(out_err)?;
    }
    w.flush()?;
    out.push(p);
    Ok(out)
}
