use super::{feature_matrix, Example, Instance, Learner, Predictor};
use crate::error::{Error, Result};
use crate::scaling::Standardizer;

/// Uniform-weight k-nearest neighbours under Euclidean distance on
/// standardized features; averages log BG of the neighbours.
#[derive(Debug, Clone, Copy)]
pub struct KnnLearner {
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    scaler: Standardizer,
    points: Vec<Vec<f64>>,
    log_targets: Vec<f64>,
}

impl KnnModel {
    /// Indices of the neighbours used for `features`, nearest first. Ties
    /// resolve to the earlier training row.
    pub fn neighbours(&self, features: &[f64]) -> Vec<usize> {
        let q = self.scaler.transform(features);
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(d.len());
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
        }
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().map(|(_, i)| i).collect()
    }
}

impl Predictor for KnnModel {
    fn predict(&self, x: &Instance) -> f64 {
        let idx = self.neighbours(&x.features);
        let mean = idx.iter().map(|&i| self.log_targets[i]).sum::<f64>() / idx.len() as f64;
        mean.exp()
    }
}

impl KnnLearner {
    pub fn new(k: usize) -> Self {
        KnnLearner { k }
    }

    pub fn fit_model(&self, train: &[Example]) -> Result<KnnModel> {
        if train.is_empty() || self.k == 0 {
            return Err(Error::fit("knn", "empty training set or k = 0"));
        }
        let x = feature_matrix(train);
        let scaler = Standardizer::fit(&x);
        Ok(KnnModel {
            k: self.k,
            points: scaler.transform_all(&x),
            scaler,
            log_targets: train.iter().map(Example::log_target).collect(),
        })
    }
}

impl Learner for KnnLearner {
    fn name(&self) -> &str {
        "knn"
    }

    fn fit(&self, train: &[Example]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.fit_model(train)?))
    }
}
