use super::{Example, Instance, Learner, Predictor};
use crate::error::{Error, Result};

/// Predicts the patient's average training BG, whatever the input.
#[derive(Debug, Clone, Copy, Default)]
pub struct NaiveLearner;

#[derive(Debug, Clone, Copy)]
pub struct NaiveModel {
    pub mean_bg: f64,
}

impl Predictor for NaiveModel {
    fn predict(&self, _x: &Instance) -> f64 {
        self.mean_bg
    }
}

impl NaiveLearner {
    pub fn fit_model(&self, train: &[Example]) -> Result<NaiveModel> {
        if train.is_empty() {
            return Err(Error::fit("naive", "empty training set"));
        }
        let mean_bg = train.iter().map(|e| e.target_bg).sum::<f64>() / train.len() as f64;
        Ok(NaiveModel { mean_bg })
    }
}

impl Learner for NaiveLearner {
    fn name(&self) -> &str {
        "naive"
    }

    fn fit(&self, train: &[Example]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.fit_model(train)?))
    }
}
