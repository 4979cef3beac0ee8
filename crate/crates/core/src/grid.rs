//! Model × variant grid runs and the four command entry points.
//!
//! A run is described by one [`GridConfig`] document. Results are computed in
//! full before anything is written; each output file is written to a
//! temporary name and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ep::{ep_counts, write_ep_counts, EpConfig, EpCount};
use crate::error::{Error, Result};
use crate::eval::{evaluate, percent_improvement, CellResult, EvalOptions, Metric, PenaltyTable, DEFAULT_FOLDS};
use crate::ingest::{
    clean_cohort, parse_diary_csv, read_demographics_csv, write_cleaning_reports, write_demographics_csv,
    write_diary_csv, CleaningReport, Cohort,
};
use crate::models::{find_model, registry, write_registry, ModelEntry};
use crate::synth::{generate, SynthConfig};
use crate::variants::{builtin_specs, find_spec, materialize_with, write_spec_table, VariantDataset, DEFAULT_MIN_RECORDS};

pub const NAIVE_MODEL: &str = "naive";

/// Column label used for cohort-level rows in the long results table.
pub const COHORT_ROW: &str = "cohort";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Diary CSV; when absent the cohort is generated from `synth`.
    pub input: Option<PathBuf>,
    pub demographics: Option<PathBuf>,
    pub synth: Option<SynthConfig>,
    /// Variant ids; empty means every built-in variant.
    pub variants: Vec<String>,
    /// Registry names or symbols; empty means the whole registry. The naive
    /// baseline is always added.
    pub models: Vec<String>,
    pub k: usize,
    pub min_records: usize,
    /// Root seed for every random choice, including synthetic data.
    pub seed: u64,
    pub penalty_table: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub ep: EpConfig,
    /// Keep the row tags of every fold in the outcome.
    pub audit: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            input: None,
            demographics: None,
            synth: None,
            variants: Vec::new(),
            models: Vec::new(),
            k: DEFAULT_FOLDS,
            min_records: DEFAULT_MIN_RECORDS,
            seed: 0,
            penalty_table: None,
            out: None,
            jobs: None,
            ep: EpConfig::default(),
            audit: false,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn load_synth_config(path: &Path) -> Result<SynthConfig> {
    parse_toml(&read_to_string(path)?, path)
}

impl GridConfig {
    /// Reads a TOML grid document. Relative paths inside it are resolved
    /// against the document's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg: GridConfig = parse_toml(&read_to_string(path)?, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.input, &mut cfg.demographics, &mut cfg.penalty_table, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn variant_specs(&self) -> Result<Vec<crate::variants::VariantSpec>> {
        if self.variants.is_empty() {
            return Ok(builtin_specs());
        }
        self.variants.iter().map(|v| find_spec(v)).collect()
    }

    /// Requested models in registry order, with the naive baseline included.
    pub fn model_entries(&self) -> Result<Vec<ModelEntry>> {
        if self.models.is_empty() {
            return Ok(registry());
        }
        let mut wanted: Vec<ModelEntry> = self.models.iter().map(|m| find_model(m)).collect::<Result<_>>()?;
        wanted.push(find_model(NAIVE_MODEL)?);
        Ok(registry().into_iter().filter(|r| wanted.iter().any(|w| w.name == r.name)).collect())
    }

    pub fn penalty(&self) -> Result<PenaltyTable> {
        match &self.penalty_table {
            None => Ok(PenaltyTable::default()),
            Some(p) => {
                let file = fs::File::open(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                PenaltyTable::from_csv(file)
            }
        }
    }

    /// Checks every name and number before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.variant_specs()?;
        self.model_entries()?;
        self.penalty()?;
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.input.is_some() && self.synth.is_some() {
            return Err(Error::Config("give either `input` or `synth`, not both".into()));
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        Ok(())
    }

    /// Loads (or generates) the raw cohort.
    pub fn load_cohort(&self) -> Result<Cohort> {
        match &self.input {
            Some(path) => {
                let file = fs::File::open(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let mut cohort = parse_diary_csv(file)?;
                if let Some(d) = &self.demographics {
                    let file = fs::File::open(d).map_err(|e| Error::Config(format!("cannot read {}: {e}", d.display())))?;
                    read_demographics_csv(file, &mut cohort)?;
                }
                Ok(cohort)
            }
            None => {
                let synth = SynthConfig {
                    seed: self.seed,
                    ..self.synth.clone().unwrap_or_default()
                };
                generate(&synth)
            }
        }
    }
}

/// Everything a grid run produces.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub config: GridConfig,
    pub variants: Vec<crate::variants::VariantSpec>,
    pub models: Vec<ModelEntry>,
    pub cleaning: BTreeMap<String, CleaningReport>,
    pub ep_counts: BTreeMap<String, EpCount>,
    pub datasets: Vec<VariantDataset>,
    /// In (variant, model) order.
    pub cells: Vec<CellResult>,
}

impl GridOutcome {
    pub fn cell(&self, variant: &str, model: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.variant == variant && c.model == model)
    }
}

/// Cleans the cohort, materializes each variant and cross-validates every
/// (variant, model) cell.
pub fn run_grid(cfg: &GridConfig) -> Result<GridOutcome> {
    cfg.validate()?;
    let variants = cfg.variant_specs()?;
    let models = cfg.model_entries()?;
    let (cohort, cleaning) = clean_cohort(&cfg.load_cohort()?);
    let opts = EvalOptions {
        k: cfg.k,
        seed: cfg.seed,
        penalty: cfg.penalty()?,
        audit: cfg.audit,
    };

    let datasets: Vec<VariantDataset> = variants
        .par_iter()
        .map(|spec| materialize_with(&cohort, spec, cfg.min_records, &cfg.ep))
        .collect();
    if let Some(empty) = datasets.iter().find(|d| d.per_patient.values().all(|p| p.rows.len() < cfg.k)) {
        return Err(Error::Precondition(format!(
            "variant {} has no patient with at least {} rows and {} folds' worth of data; lower min_records",
            empty.spec.id, cfg.min_records, cfg.k
        )));
    }

    let jobs: Vec<(&VariantDataset, &ModelEntry)> =
        datasets.iter().flat_map(|d| models.iter().map(move |m| (d, m))).collect();
    let cells = jobs
        .par_iter()
        .map(|(d, m)| evaluate(d, m, &opts))
        .collect::<Result<Vec<_>>>()?;

    Ok(GridOutcome {
        config: cfg.clone(),
        ep_counts: ep_counts(&cohort, &cfg.ep),
        variants,
        models,
        cleaning,
        datasets,
        cells,
    })
}

fn fmt(v: f64) -> String {
    v.to_string()
}

/// Writes `name` inside `dir` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn table_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// File names a run writes besides the per-metric tables.
pub const RUN_FILES: [&str; 7] = [
    "results_long.csv",
    "ep_counts.csv",
    "cleaning_report.csv",
    "variants.csv",
    "models.csv",
    "excluded.csv",
    "metadata.csv",
];

pub fn wide_file(m: Metric) -> String {
    format!("wide_{}.csv", m.label())
}

pub fn heatmap_file(m: Metric) -> String {
    format!("heatmap_{}.csv", m.label())
}

/// Renders every output table, keyed by file name.
pub fn render_outputs(o: &GridOutcome) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();

    let mut long = Vec::new();
    for c in &o.cells {
        for m in Metric::ALL {
            long.push(vec![c.model.clone(), c.variant.clone(), m.label().into(), COHORT_ROW.into(), fmt(c.cohort(m))]);
            for (pid, r) in &c.per_patient {
                long.push(vec![c.model.clone(), c.variant.clone(), m.label().into(), pid.clone(), fmt(r.metrics.get(m))]);
            }
        }
    }
    let header = |cols: &[&str]| cols.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    files.insert(
        "results_long.csv".into(),
        table_bytes(&header(&["model", "variant", "metric", "patient", "value"]), &long)?,
    );

    let mut grid_header = vec!["variant".to_string()];
    grid_header.extend(o.models.iter().map(|m| m.name.to_string()));
    for m in Metric::ALL {
        let mut wide = Vec::new();
        let mut heat = Vec::new();
        for v in &o.variants {
            let cells: Vec<&CellResult> = o.models.iter().filter_map(|e| o.cell(&v.id, e.name)).collect();
            let mut w = vec![v.id.clone()];
            w.extend(cells.iter().map(|c| fmt(c.cohort(m))));
            let mut h = vec![v.id.clone()];
            h.extend(cells.iter().map(|c| fmt(c.improvement(m))));
            wide.push(w);
            heat.push(h);
        }
        files.insert(wide_file(m), table_bytes(&grid_header, &wide)?);
        files.insert(heatmap_file(m), table_bytes(&grid_header, &heat)?);
    }

    files.insert("ep_counts.csv".into(), csv_bytes(|b| write_ep_counts(b, &o.ep_counts))?);
    files.insert("cleaning_report.csv".into(), csv_bytes(|b| write_cleaning_reports(b, &o.cleaning))?);
    files.insert("variants.csv".into(), csv_bytes(|b| write_spec_table(b, &o.variants))?);
    files.insert("models.csv".into(), csv_bytes(|b| write_registry(b, &o.models))?);

    let mut excluded = Vec::new();
    for d in &o.datasets {
        for (pid, n) in &d.excluded_patients {
            excluded.push(vec![d.spec.id.clone(), String::new(), pid.clone(), n.to_string(), "min_records".into()]);
        }
    }
    for c in &o.cells {
        for (pid, n) in &c.excluded {
            excluded.push(vec![c.variant.clone(), c.model.clone(), pid.clone(), n.to_string(), "fewer_rows_than_folds".into()]);
        }
    }
    files.insert(
        "excluded.csv".into(),
        table_bytes(&header(&["variant", "model", "patient", "rows", "reason"]), &excluded)?,
    );

    let penalty = o.config.penalty()?;
    let meta = vec![
        vec!["seed".into(), o.config.seed.to_string()],
        vec!["k".into(), o.config.k.to_string()],
        vec!["min_records".into(), o.config.min_records.to_string()],
        vec!["patients".into(), o.cleaning.len().to_string()],
        vec!["penalty_weights".into(), penalty.weights.map(fmt).join(" ")],
        vec!["preprocessing".into(), "imputation means, standardization and PCA fitted per training fold".into()],
        vec!["stacking_learner".into(), "ridge".into()],
    ];
    files.insert("metadata.csv".into(), table_bytes(&header(&["key", "value"]), &meta)?);
    Ok(files)
}

pub fn write_outputs(o: &GridOutcome, dir: &Path) -> Result<()> {
    let files = render_outputs(o)?;
    fs::create_dir_all(dir)?;
    for (name, bytes) in &files {
        write_atomic(dir, name, bytes)?;
    }
    Ok(())
}

/// One line of the best-model summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub naive: f64,
    pub best_value: f64,
    pub improvement_pct: f64,
    pub best_model: String,
    pub best_variant: String,
}

/// Model names and one `(variant, values)` row per variant.
type WideTable = (Vec<String>, Vec<(String, Vec<f64>)>);

fn read_wide(path: &Path) -> Result<WideTable> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let models: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let variant = rec.get(0).unwrap_or_default().to_string();
        let values = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(col, s)| {
                s.parse::<f64>().map_err(|_| Error::Schema {
                    line: line as u64 + 2,
                    column: models.get(col).cloned().unwrap_or_default(),
                    message: format!("cannot parse `{s}` in {}", path.display()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((variant, values));
    }
    Ok((models, rows))
}

/// Best non-naive cell per metric from the wide tables of a results
/// directory. A run with only the naive model reports the naive cell itself.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>> {
    let mut out = Vec::new();
    for m in Metric::ALL {
        let (models, rows) = read_wide(&dir.join(wide_file(m)))?;
        let naive_col = models
            .iter()
            .position(|n| n == NAIVE_MODEL)
            .ok_or_else(|| Error::Precondition(format!("{} has no `{NAIVE_MODEL}` column", wide_file(m))))?;
        let only_naive = models.len() == 1;
        let mut best: Option<(f64, usize, usize)> = None;
        for (r, (_, values)) in rows.iter().enumerate() {
            for (c, &v) in values.iter().enumerate() {
                if (c != naive_col || only_naive) && best.is_none_or(|(b, _, _)| v < b) {
                    best = Some((v, r, c));
                }
            }
        }
        let (value, r, c) =
            best.ok_or_else(|| Error::Precondition(format!("{} has no result rows", wide_file(m))))?;
        let naive = rows[r].1[naive_col];
        out.push(SummaryRow {
            metric: m.label().into(),
            naive,
            best_value: value,
            improvement_pct: percent_improvement(naive, value),
            best_model: models[c].clone(),
            best_variant: rows[r].0.clone(),
        });
    }
    Ok(out)
}

pub fn write_summary<W: std::io::Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn require_parent(out: &Path) -> Result<()> {
    match out.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Error::Config(format!(
            "output directory {} does not exist",
            p.display()
        ))),
        _ => Ok(()),
    }
}

/// Path of the demographics file written next to a synthetic diary.
pub fn demographics_path(diary: &Path) -> PathBuf {
    let stem = diary.file_stem().and_then(|s| s.to_str()).unwrap_or("cohort");
    diary.with_file_name(format!("{stem}_demographics.csv"))
}

/// Generates a cohort and writes its diary CSV to `out` plus the
/// demographics next to it.
pub fn cmd_synth(cfg: &SynthConfig, out: &Path) -> Result<Cohort> {
    require_parent(out)?;
    let cohort = generate(cfg)?;
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = |p: &Path| p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    write_atomic(dir, &name(out), &csv_bytes(|b| write_diary_csv(b, cohort.values()))?)?;
    let demo = demographics_path(out);
    write_atomic(dir, &name(&demo), &csv_bytes(|b| write_demographics_csv(b, cohort.values()))?)?;
    Ok(cohort)
}

/// Per-patient record counts, cleaning and EP statistics, and per-variant
/// row counts, as CSV tables keyed by file name.
pub fn cmd_inspect(cfg: &GridConfig) -> Result<BTreeMap<String, Vec<u8>>> {
    cfg.validate()?;
    let (cohort, cleaning) = clean_cohort(&cfg.load_cohort()?);
    let mut files = BTreeMap::new();
    files.insert("cleaning_report.csv".into(), csv_bytes(|b| write_cleaning_reports(b, &cleaning))?);
    files.insert("ep_counts.csv".into(), csv_bytes(|b| write_ep_counts(b, &ep_counts(&cohort, &cfg.ep)))?);
    let mut rows = Vec::new();
    for spec in cfg.variant_specs()? {
        let d = materialize_with(&cohort, &spec, cfg.min_records, &cfg.ep);
        for (pid, p) in &d.per_patient {
            rows.push(vec![spec.id.clone(), pid.clone(), p.rows.len().to_string(), "1".into()]);
        }
        for (pid, n) in &d.excluded_patients {
            rows.push(vec![spec.id.clone(), pid.clone(), n.to_string(), "0".into()]);
        }
    }
    let header: Vec<String> = ["variant", "patient", "rows", "included"].map(String::from).to_vec();
    files.insert("variant_rows.csv".into(), table_bytes(&header, &rows)?);
    Ok(files)
}

pub fn write_files(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("output directory {} does not exist", dir.display())));
    }
    for (name, bytes) in files {
        write_atomic(dir, name, bytes)?;
    }
    Ok(())
}

/// Runs the grid and writes every table into `out`.
pub fn cmd_run(cfg: &GridConfig, out: &Path) -> Result<GridOutcome> {
    cfg.validate()?;
    require_parent(out)?;
    let outcome = run_grid(cfg)?;
    write_outputs(&outcome, out)?;
    Ok(outcome)
}

/// Summarizes a results directory and writes `summary.csv` into it.
pub fn cmd_report(dir: &Path) -> Result<Vec<SummaryRow>> {
    let rows = summarize(dir)?;
    write_atomic(dir, "summary.csv", &csv_bytes(|b| write_summary(b, &rows))?)?;
    Ok(rows)
}
