//! Per-patient contiguous cross-validation of one model on one dataset
//! variant.
//!
//! Everything fitted from data is fitted inside the training folds: mean
//! imputation statistics, PCA standardization and projection, and the model
//! itself. The stacked feature comes from other patients only.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{contiguous_kfold, FoldPlan, DEFAULT_FOLDS};
use super::metrics::{compute, Metric, PenaltyTable};
use crate::error::{Error, Result};
use crate::features::{encode_row, pca_fit};
use crate::ingest::{MealMeans, MissingPolicy};
use crate::model::{FeatureRow, PredictionPair};
use crate::models::{stacking_learner, Example, Instance, ModelEntry, NaiveLearner, Predictor, RowTag};
use crate::scaling::Standardizer;
use crate::variants::{materialize_patient, PatientRows, VariantDataset};

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub k: usize,
    pub seed: u64,
    pub penalty: PenaltyTable,
    /// Keep the train/test row tags of every fold.
    pub audit: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: DEFAULT_FOLDS,
            seed: 0,
            penalty: PenaltyTable::default(),
            audit: false,
        }
    }
}

/// One value per [`Metric`], in `Metric::ALL` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues(pub [f64; 6]);

impl MetricValues {
    pub fn from_pairs(pairs: &[PredictionPair], penalty: &PenaltyTable) -> Result<Self> {
        let mut v = [0.0; 6];
        for m in Metric::ALL {
            v[m.index()] = compute(m, pairs, penalty)?;
        }
        Ok(MetricValues(v))
    }

    pub fn get(&self, m: Metric) -> f64 {
        self.0[m.index()]
    }
}

/// `(naive − model) / naive × 100`.
pub fn percent_improvement(naive: f64, model: f64) -> f64 {
    (naive - model) / naive * 100.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientResult {
    pub rows: usize,
    /// Test-fold pairs of all folds, pooled in fold order.
    pub pairs: Vec<PredictionPair>,
    pub metrics: MetricValues,
    /// Naive baseline under the same fold plan.
    pub naive: MetricValues,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAudit {
    pub patient: String,
    pub fold: usize,
    pub train: Vec<RowTag>,
    pub test: Vec<RowTag>,
    /// Rows the stacking learner was fitted on.
    pub stack_train: Vec<RowTag>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub model: String,
    pub variant: String,
    pub per_patient: BTreeMap<String, PatientResult>,
    /// Patients with fewer rows than folds, with their row count.
    pub excluded: Vec<(String, usize)>,
    pub audit: Vec<FoldAudit>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl CellResult {
    /// Unweighted mean over patients of the per-patient micro-averages.
    pub fn cohort(&self, m: Metric) -> f64 {
        mean(self.per_patient.values().map(|p| p.metrics.get(m)))
    }

    pub fn naive_cohort(&self, m: Metric) -> f64 {
        mean(self.per_patient.values().map(|p| p.naive.get(m)))
    }

    pub fn improvement(&self, m: Metric) -> f64 {
        percent_improvement(self.naive_cohort(m), self.cohort(m))
    }
}

/// Deterministic 64-bit seed from a root seed and string keys (FNV-1a).
pub fn derive_seed(root: u64, keys: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ root;
    for k in keys {
        for b in k.bytes().chain(std::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn examples_for(patient: &str, rows: &[FeatureRow], ds: &VariantDataset) -> Vec<Example> {
    rows.iter()
        .enumerate()
        .map(|(r, row)| Example {
            instance: Instance {
                features: encode_row(row, &ds.config),
                meal: row.meal,
            },
            target_bg: row.target_bg,
            tag: RowTag {
                patient: patient.to_string(),
                row: r,
            },
        })
        .collect()
}

struct Stacker {
    model: Box<dyn Predictor>,
    trained_on: Vec<RowTag>,
}

fn fit_stacker(ds: &VariantDataset, target: &str) -> Result<Stacker> {
    let pool: Vec<Example> = ds
        .per_patient
        .iter()
        .filter(|(id, _)| id.as_str() != target)
        .flat_map(|(id, p)| examples_for(id, &p.rows, ds))
        .collect();
    if pool.is_empty() {
        return Err(Error::fit(
            "stacking",
            format!("no other patients besides `{target}` in {}", ds.spec.id),
        ));
    }
    let model = stacking_learner().fit(&pool)?;
    Ok(Stacker {
        model,
        trained_on: pool.into_iter().map(|e| e.tag).collect(),
    })
}

fn needs_refit(ds: &VariantDataset) -> bool {
    ds.spec.policy.cho == MissingPolicy::ImputeMean || ds.spec.policy.bolus == MissingPolicy::ImputeMean
}

/// Rows for fold `j`, rebuilt with imputation means that ignore the test
/// fold's target records.
fn fold_rows(ds: &VariantDataset, p: &PatientRows, plan: &FoldPlan, j: usize) -> Result<Vec<FeatureRow>> {
    if !needs_refit(ds) {
        return Ok(p.rows.clone());
    }
    let held_out: BTreeSet<usize> = plan.test(j).map(|r| p.targets[r]).collect();
    let means = MealMeans::from_records(
        p.history
            .records
            .iter()
            .enumerate()
            .filter(|(i, _)| !held_out.contains(i))
            .map(|(_, r)| r),
    );
    let rebuilt = materialize_patient(&p.history, &ds.spec, &ds.config, &ds.ep, Some(&means));
    if rebuilt.targets != p.targets {
        return Err(Error::Numerical(format!(
            "fold {j} of {} rebuilt a different row set",
            p.history.patient_id
        )));
    }
    Ok(rebuilt.rows)
}

fn evaluate_patient(
    ds: &VariantDataset,
    id: &str,
    p: &PatientRows,
    entry: &ModelEntry,
    opts: &EvalOptions,
    stacker: Option<&Stacker>,
) -> Result<(PatientResult, Vec<FoldAudit>)> {
    let n = p.rows.len();
    let plan = contiguous_kfold(n, opts.k)?;
    let mut pairs = Vec::with_capacity(n);
    let mut naive_pairs = Vec::with_capacity(n);
    let mut audits = Vec::new();

    for j in 0..plan.k() {
        let rows = fold_rows(ds, p, &plan, j)?;
        let mut examples = examples_for(id, &rows, ds);
        let train_idx: Vec<usize> = plan.train(j).collect();

        if let Some(k) = ds.spec.pca {
            let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| examples[i].instance.features.clone()).collect();
            let scaler = Standardizer::fit(&train_x);
            let pca = pca_fit(&scaler.transform_all(&train_x), k)?;
            for e in &mut examples {
                e.instance.features = pca.apply(&scaler.transform(&e.instance.features));
            }
        }
        if let Some(s) = stacker {
            for (e, row) in examples.iter_mut().zip(&rows) {
                let raw = Instance {
                    features: encode_row(row, &ds.config),
                    meal: row.meal,
                };
                e.instance.features.push(s.model.predict(&raw));
            }
        }

        let train: Vec<Example> = train_idx.iter().map(|&i| examples[i].clone()).collect();
        let seed = derive_seed(opts.seed, &[&ds.spec.id, entry.name, id, &j.to_string()]);
        let model = entry.learner(seed).fit(&train)?;
        let naive = NaiveLearner.fit_model(&train)?;
        for e in &examples[plan.test(j)] {
            pairs.push(PredictionPair::new(model.predict(&e.instance), e.target_bg));
            naive_pairs.push(PredictionPair::new(naive.mean_bg, e.target_bg));
        }
        if opts.audit {
            audits.push(FoldAudit {
                patient: id.to_string(),
                fold: j,
                train: train.iter().map(|e| e.tag.clone()).collect(),
                test: examples[plan.test(j)].iter().map(|e| e.tag.clone()).collect(),
                stack_train: stacker.map(|s| s.trained_on.clone()).unwrap_or_default(),
            });
        }
    }
    let result = PatientResult {
        rows: n,
        metrics: MetricValues::from_pairs(&pairs, &opts.penalty)?,
        naive: MetricValues::from_pairs(&naive_pairs, &opts.penalty)?,
        pairs,
    };
    Ok((result, audits))
}

/// Cross-validates `entry` on every patient of `ds` with at least `k` rows.
pub fn evaluate(ds: &VariantDataset, entry: &ModelEntry, opts: &EvalOptions) -> Result<CellResult> {
    opts.penalty.validate()?;
    let (eligible, excluded): (Vec<_>, Vec<_>) = ds
        .per_patient
        .iter()
        .partition(|(_, p)| p.rows.len() >= opts.k);

    let outcomes: Vec<(String, PatientResult, Vec<FoldAudit>)> = eligible
        .par_iter()
        .map(|(id, p)| {
            let stacker = if entry.stacking { Some(fit_stacker(ds, id)?) } else { None };
            let (res, audit) = evaluate_patient(ds, id, p, entry, opts, stacker.as_ref())?;
            Ok(((*id).clone(), res, audit))
        })
        .collect::<Result<_>>()?;

    let mut per_patient = BTreeMap::new();
    let mut audit = Vec::new();
    for (id, res, a) in outcomes {
        per_patient.insert(id, res);
        audit.extend(a);
    }
    Ok(CellResult {
        model: entry.name.to_string(),
        variant: ds.spec.id.clone(),
        per_patient,
        excluded: excluded.into_iter().map(|(id, p)| (id.clone(), p.rows.len())).collect(),
        audit,
    })
}
