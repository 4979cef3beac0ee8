//! Predictor registry.
//!
//! Every learner except the naive baseline fits log BG and exponentiates its
//! output, so predictions are always strictly positive mmol/L.

pub mod ensemble;
pub mod forest;
pub mod gpr;
pub mod knn;
pub mod naive;
pub mod ridge;
pub mod stacking;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MealSlot;

pub use ensemble::{combine_log_predictions, WeightedGprLearner, WeightedGprModel};
pub use forest::{RandomForestLearner, RegressionTree};
pub use gpr::{GprConfig, GprLearner, GprModel, Posterior};
pub use knn::KnnLearner;
pub use naive::NaiveLearner;
pub use ridge::RidgeLearner;
pub use stacking::stack;

/// Identifies a row across the whole run: (patient, row position).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowTag {
    pub patient: String,
    pub row: usize,
}

/// Model input: numeric features plus the meal slot (per-meal models split
/// on it).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: Vec<f64>,
    pub meal: MealSlot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub instance: Instance,
    /// mmol/L, ≥ 1.
    pub target_bg: f64,
    pub tag: RowTag,
}

impl Example {
    pub fn log_target(&self) -> f64 {
        self.target_bg.ln()
    }
}

pub(crate) fn feature_matrix(train: &[Example]) -> Vec<Vec<f64>> {
    train.iter().map(|e| e.instance.features.clone()).collect()
}

pub trait Predictor: Send + Sync {
    /// Predicted BG in mmol/L.
    fn predict(&self, x: &Instance) -> f64;
}

pub trait Learner: Send + Sync {
    fn name(&self) -> &str;
    fn fit(&self, train: &[Example]) -> Result<Box<dyn Predictor>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Naive,
    Ridge,
    Knn,
    RandomForest,
    Gpr,
    WeightedGpr,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Naive => "BG History Average",
            Algorithm::Ridge => "Ridge Regression",
            Algorithm::Knn => "KNN",
            Algorithm::RandomForest => "Random Forest",
            Algorithm::Gpr | Algorithm::WeightedGpr => "GPR",
        }
    }
}

pub const RIDGE_ALPHA: f64 = 1.0;
pub const KNN_K: usize = 10;
pub const RF_MAX_DEPTH: usize = 4;
pub const RF_TREES: usize = 100;
pub const GPR_NUGGET: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: &'static str,
    pub symbol: &'static str,
    pub algorithm: Algorithm,
    /// Feeds a leave-one-patient-out prediction in as an extra feature.
    pub stacking: bool,
}

impl ModelEntry {
    pub fn confidence_weighting(&self) -> bool {
        self.algorithm == Algorithm::WeightedGpr
    }

    /// Builds the learner; `seed` only matters for randomized algorithms.
    pub fn learner(&self, seed: u64) -> Box<dyn Learner> {
        match self.algorithm {
            Algorithm::Naive => Box::new(NaiveLearner),
            Algorithm::Ridge => Box::new(RidgeLearner::new(RIDGE_ALPHA)),
            Algorithm::Knn => Box::new(KnnLearner::new(KNN_K)),
            Algorithm::RandomForest => Box::new(RandomForestLearner {
                max_depth: RF_MAX_DEPTH,
                trees: RF_TREES,
                min_leaf: forest::MIN_LEAF,
                seed,
            }),
            Algorithm::Gpr => Box::new(GprLearner::new(GprConfig::default())),
            Algorithm::WeightedGpr => Box::new(WeightedGprLearner::new(GprConfig::default())),
        }
    }
}

/// Learner used to produce the stacked feature. Ridge stands in for the
/// support-vector learner, which is not shipped.
pub fn stacking_learner() -> Box<dyn Learner> {
    Box::new(RidgeLearner::new(RIDGE_ALPHA))
}

pub fn registry() -> Vec<ModelEntry> {
    use Algorithm::*;
    let e = |name, symbol, algorithm, stacking| ModelEntry {
        name,
        symbol,
        algorithm,
        stacking,
    };
    vec![
        e("gpr_be", "M^w_gpr", WeightedGpr, false),
        e("gpr_be_AllPat_AllMeals", "M^ws_gpr", WeightedGpr, true),
        e("gpr_IndPat_AllMeals", "M_gpr", Gpr, false),
        e("gpr_AllPat_AllMeals", "M^s_gpr", Gpr, true),
        e("rf4", "M_rf", RandomForest, false),
        e("KNN10U", "M_knn", Knn, false),
        e("ridge", "M_ridge", Ridge, false),
        e("naive", "M_avg", Naive, false),
    ]
}

/// Looks a model up by registry name or by symbol.
pub fn find_model(name: &str) -> Result<ModelEntry> {
    registry()
        .into_iter()
        .find(|m| m.name == name || m.symbol == name)
        .ok_or_else(|| Error::Unknown {
            kind: "model",
            name: name.to_string(),
        })
}

pub fn write_registry<W: Write>(out: W, entries: &[ModelEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "symbol", "algorithm", "confidence_weighting", "stacking"])?;
    let flag = |b: bool| if b { "1" } else { "0" };
    for m in entries {
        w.write_record([
            m.name,
            m.symbol,
            m.algorithm.label(),
            flag(m.confidence_weighting()),
            flag(m.stacking),
        ])?;
    }
    w.flush()?;
    Ok(())
}
