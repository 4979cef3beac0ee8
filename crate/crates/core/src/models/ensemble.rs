//! Confidence-weighted GPR ensemble.
//!
//! A patient-wide GPR and one GPR per meal slot are fitted in a shared
//! standardized feature space. At a query the two posterior means are
//! averaged with weights `1/σ_patient` and `1/σ_meal`, in log-BG space.

use std::collections::BTreeMap;

use super::gpr::{GprConfig, GprModel, Posterior};
use super::{feature_matrix, Example, Instance, Learner, Predictor};
use crate::error::{Error, Result};
use crate::model::MealSlot;
use crate::scaling::Standardizer;

/// Which members produced an ensemble output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Blend {
    Weighted,
    /// No per-meal model for the query's slot.
    PatientOnly,
    /// One member had zero posterior spread and was used alone.
    Exact,
}

/// `(α·p + β·m) / (α + β)` with `α = 1/σ_p`, `β = 1/σ_m`. A member with
/// `σ = 0` wins outright; if both do, their plain mean is returned.
pub fn combine_log_predictions(pred_p: f64, sd_p: f64, pred_m: f64, sd_m: f64) -> (f64, Blend) {
    match (sd_p > 0.0, sd_m > 0.0) {
        (true, true) => {
            let (a, b) = (1.0 / sd_p, 1.0 / sd_m);
            ((a * pred_p + b * pred_m) / (a + b), Blend::Weighted)
        }
        (false, true) => (pred_p, Blend::Exact),
        (true, false) => (pred_m, Blend::Exact),
        (false, false) => (0.5 * (pred_p + pred_m), Blend::Exact),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WeightedGprLearner {
    pub config: GprConfig,
}

#[derive(Debug, Clone)]
pub struct WeightedGprModel {
    pub patient: GprModel,
    pub per_meal: BTreeMap<MealSlot, GprModel>,
}

impl WeightedGprModel {
    pub fn members(&self, x: &Instance) -> (Posterior, Option<Posterior>) {
        let p = self.patient.posterior(&x.features);
        let m = self.per_meal.get(&x.meal).map(|g| g.posterior(&x.features));
        (p, m)
    }

    /// Combined log-BG prediction and how it was obtained.
    pub fn predict_log(&self, x: &Instance) -> (f64, Blend) {
        match self.members(x) {
            (p, Some(m)) => combine_log_predictions(p.mean, p.sd, m.mean, m.sd),
            (p, None) => (p.mean, Blend::PatientOnly),
        }
    }
}

impl Predictor for WeightedGprModel {
    fn predict(&self, x: &Instance) -> f64 {
        self.predict_log(x).0.exp()
    }
}

impl WeightedGprLearner {
    pub fn new(config: GprConfig) -> Self {
        WeightedGprLearner { config }
    }

    pub fn fit_model(&self, train: &[Example]) -> Result<WeightedGprModel> {
        if train.is_empty() {
            return Err(Error::fit("weighted gpr", "empty training set"));
        }
        let xs = feature_matrix(train);
        let ys: Vec<f64> = train.iter().map(Example::log_target).collect();
        let scaler = self.config.standardize_inputs.then(|| Standardizer::fit(&xs));
        let patient = GprModel::fit_with_scaler(&xs, &ys, self.config, scaler.clone())?;

        let mut per_meal = BTreeMap::new();
        for slot in MealSlot::ALL {
            let idx: Vec<usize> = (0..train.len()).filter(|&i| train[i].instance.meal == slot).collect();
            if idx.is_empty() {
                continue;
            }
            let sx: Vec<Vec<f64>> = idx.iter().map(|&i| xs[i].clone()).collect();
            let sy: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
            per_meal.insert(slot, GprModel::fit_with_scaler(&sx, &sy, self.config, scaler.clone())?);
        }
        Ok(WeightedGprModel { patient, per_meal })
    }
}

impl Learner for WeightedGprLearner {
    fn name(&self) -> &str {
        "weighted gpr"
    }

    fn fit(&self, train: &[Example]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.fit_model(train)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testutil::example;

    #[test]
    fn equal_spread_is_plain_mean() {
        let (v, how) = combine_log_predictions(1.2, 0.3, 2.0, 0.3);
        assert!((v - 1.6).abs() < 1e-12);
        assert_eq!(how, Blend::Weighted);
    }

    #[test]
    fn weighted_substitution() {
        let (v, _) = combine_log_predictions(6.0, 1.0, 8.0, 2.0);
        assert!((v - 6.666_666_666_666_667).abs() < 1e-4);
    }

    #[test]
    fn vanishing_meal_weight() {
        let (v, _) = combine_log_predictions(6.0, 1.0, 8.0, 1e6);
        assert!((v - 6.0).abs() < 1e-4);
    }

    #[test]
    fn zero_spread_member_is_used_alone() {
        assert_eq!(combine_log_predictions(6.0, 0.0, 8.0, 2.0), (6.0, Blend::Exact));
        assert_eq!(combine_log_predictions(6.0, 1.0, 8.0, 0.0), (8.0, Blend::Exact));
    }

    #[test]
    fn unseen_slot_falls_back_to_patient_model() {
        let train: Vec<Example> = (0..6)
            .map(|i| example(vec![i as f64], MealSlot::BeforeLunch, 5.0 + i as f64, i))
            .collect();
        let m = WeightedGprLearner::new(GprConfig::default()).fit_model(&train).unwrap();
        let q = Instance {
            features: vec![2.5],
            meal: MealSlot::DuringNight,
        };
        let (v, how) = m.predict_log(&q);
        assert_eq!(how, Blend::PatientOnly);
        assert_eq!(v, m.patient.posterior(&q.features).mean);
    }
}
