//! The dataset-variant matrix: which records are kept, how gaps are filled,
//! and which features each variant exposes.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ep::{ep_decisions, EpConfig};
use crate::error::{Error, Result};
use crate::features::{build_feature_rows, DowMode, FeatureConfig, PCA_COMPONENTS};
use crate::ingest::{impute_with_means, Cohort, ImputationPolicy, MealMeans, MissingPolicy};
use crate::model::{FeatureRow, PatientHistory};

/// Minimum rows a patient needs to stay in a variant on the full cohort.
pub const DEFAULT_MIN_RECORDS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub id: String,
    pub ep_rules: bool,
    pub dow_mode: DowMode,
    pub include_basal: bool,
    pub include_static: bool,
    pub pca: Option<usize>,
    pub policy: ImputationPolicy,
}

impl VariantSpec {
    pub fn feature_config(&self, static_defaults: [f64; 4]) -> FeatureConfig {
        FeatureConfig {
            dow_mode: self.dow_mode,
            include_basal: self.include_basal,
            include_static: self.include_static,
            pca: self.pca,
            static_defaults,
        }
    }
}

/// The variant matrix without the externally-defined "Kok" rows
/// (9 and 13 of each family).
pub fn builtin_specs() -> Vec<VariantSpec> {
    use DowMode::*;
    use MissingPolicy::*;
    // (number, dow, basal, static, pca, carbs, bolus)
    let rows: [(u8, DowMode, bool, bool, bool, MissingPolicy, MissingPolicy); 11] = [
        (1, Integer, true, false, false, Throwout, ImputeMean),
        (2, Integer, true, false, false, Throwout, Throwout),
        (3, Integer, true, false, false, ImputeMean, ImputeZero),
        (4, Integer, true, false, false, ImputeZero, ImputeMean),
        (5, OneHot, true, true, false, ImputeMean, ImputeMean),
        (6, Integer, true, false, false, ImputeMean, ImputeMean),
        (7, OneHot, true, false, false, ImputeMean, ImputeMean),
        (8, Omit, false, false, false, ImputeMean, ImputeMean),
        (10, Integer, true, false, false, ImputeZero, ImputeZero),
        (11, Integer, true, false, false, ImputeMean, Throwout),
        (12, Omit, false, false, true, ImputeMean, ImputeMean),
    ];
    [("e", true), ("a", false)]
        .into_iter()
        .flat_map(|(family, ep_rules)| {
            rows.iter().map(move |&(n, dow_mode, include_basal, include_static, pca, cho, bolus)| {
                VariantSpec {
                    id: format!("D_{family}{n}"),
                    ep_rules,
                    dow_mode,
                    include_basal,
                    include_static,
                    pca: pca.then_some(PCA_COMPONENTS),
                    policy: ImputationPolicy { cho, bolus },
                }
            })
        })
        .collect()
}

pub fn find_spec(id: &str) -> Result<VariantSpec> {
    builtin_specs()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::Unknown {
            kind: "variant",
            name: id.to_string(),
        })
}

pub fn write_spec_table<W: Write>(out: W, specs: &[VariantSpec]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "variant",
        "ep_rules",
        "dow_features",
        "basal_feature",
        "patient_specific_features",
        "pca_transform",
        "missing_carbs",
        "missing_bolus",
    ])?;
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for s in specs {
        w.write_record([
            s.id.clone(),
            flag(s.ep_rules),
            s.dow_mode.table_code().to_string(),
            flag(s.include_basal),
            flag(s.include_static),
            flag(s.pca.is_some()),
            s.policy.cho.label().to_string(),
            s.policy.bolus.label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One patient's rows in a variant, with enough provenance to rebuild them
/// from different imputation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRows {
    /// The cleaned history the rows were built from.
    pub history: PatientHistory,
    pub rows: Vec<FeatureRow>,
    /// Index in `history` of each row's target record.
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantDataset {
    pub spec: VariantSpec,
    pub config: FeatureConfig,
    pub ep: EpConfig,
    pub per_patient: BTreeMap<String, PatientRows>,
    /// Patients left with fewer than `min_records` rows, with their row count.
    pub excluded_patients: Vec<(String, usize)>,
}

impl VariantDataset {
    pub fn total_rows(&self) -> usize {
        self.per_patient.values().map(|p| p.rows.len()).sum()
    }
}

/// Cohort-wide mean demographics used to fill gaps.
pub fn cohort_static_defaults(cohort: &Cohort) -> [f64; 4] {
    let profiles: Vec<_> = cohort.values().filter_map(|h| h.profile.as_ref()).collect();
    if profiles.is_empty() {
        return [0.0; 4];
    }
    let n = profiles.len() as f64;
    let heights: Vec<f64> = profiles.iter().filter_map(|p| p.height).collect();
    [
        profiles.iter().map(|p| p.age).sum::<f64>() / n,
        profiles.iter().map(|p| p.sex.code()).sum::<f64>() / n,
        if heights.is_empty() {
            0.0
        } else {
            heights.iter().sum::<f64>() / heights.len() as f64
        },
        profiles.iter().map(|p| p.weight).sum::<f64>() / n,
    ]
}

/// Builds one patient's rows. `means` defaults to the statistics of the whole
/// history; pass training-only means to rebuild rows inside a CV split.
pub fn materialize_patient(
    h: &PatientHistory,
    spec: &VariantSpec,
    cfg: &FeatureConfig,
    ep: &EpConfig,
    means: Option<&MealMeans>,
) -> PatientRows {
    let own;
    let means = match means {
        Some(m) => m,
        None => {
            own = MealMeans::from_records(&h.records);
            &own
        }
    };
    let decisions = spec.ep_rules.then(|| ep_decisions(h, ep));
    let imputed = impute_with_means(h, spec.policy, means);
    let built = build_feature_rows(&imputed.history, cfg);
    let mut rows = Vec::with_capacity(built.len());
    let mut targets = Vec::with_capacity(built.len());
    for (r, row) in built.into_iter().enumerate() {
        let target = imputed.kept[r + 1];
        if decisions.as_ref().is_none_or(|d| d[target].predictable) {
            rows.push(row);
            targets.push(target);
        }
    }
    PatientRows {
        history: h.clone(),
        rows,
        targets,
    }
}

/// Materializes a variant from a cleaned cohort.
pub fn materialize(cohort: &Cohort, spec: &VariantSpec, min_records: usize) -> VariantDataset {
    materialize_with(cohort, spec, min_records, &EpConfig::default())
}

pub fn materialize_with(
    cohort: &Cohort,
    spec: &VariantSpec,
    min_records: usize,
    ep: &EpConfig,
) -> VariantDataset {
    let config = spec.feature_config(cohort_static_defaults(cohort));
    let built: Vec<(String, PatientRows)> = cohort
        .par_iter()
        .map(|(id, h)| (id.clone(), materialize_patient(h, spec, &config, ep, None)))
        .collect();
    let mut per_patient = BTreeMap::new();
    let mut excluded_patients = Vec::new();
    for (id, p) in built {
        if p.rows.len() < min_records.max(1) {
            excluded_patients.push((id, p.rows.len()));
        } else {
            per_patient.insert(id, p);
        }
    }
    VariantDataset {
        spec: spec.clone(),
        config,
        ep: *ep,
        per_patient,
        excluded_patients,
    }
}
