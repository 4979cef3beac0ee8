use nalgebra::{DMatrix, DVector};

use super::{feature_matrix, Example, Instance, Learner, Predictor};
use crate::error::{Error, Result};
use crate::scaling::Standardizer;

/// L2-penalized least squares on standardized features with an unpenalized
/// intercept, fitted to log BG.
#[derive(Debug, Clone, Copy)]
pub struct RidgeLearner {
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct RidgeModel {
    pub scaler: Standardizer,
    /// One weight per input column in standardized units; constant columns
    /// get exactly 0.
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl RidgeModel {
    pub fn predict_log(&self, features: &[f64]) -> f64 {
        let z = self.scaler.transform(features);
        self.intercept + z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }
}

impl Predictor for RidgeModel {
    fn predict(&self, x: &Instance) -> f64 {
        self.predict_log(&x.features).exp()
    }
}

impl RidgeLearner {
    pub fn new(alpha: f64) -> Self {
        RidgeLearner { alpha }
    }

    pub fn fit_model(&self, train: &[Example]) -> Result<RidgeModel> {
        if train.len() < 2 {
            return Err(Error::fit("ridge", "needs at least two rows"));
        }
        let x = feature_matrix(train);
        let scaler = Standardizer::fit(&x);
        let z = scaler.transform_all(&x);
        let y: Vec<f64> = train.iter().map(Example::log_target).collect();
        let intercept = y.iter().sum::<f64>() / y.len() as f64;

        let active: Vec<usize> = (0..scaler.dim()).filter(|&j| !scaler.is_constant(j)).collect();
        let mut weights = vec![0.0; scaler.dim()];
        if !active.is_empty() {
            let n = z.len();
            let p = active.len();
            let design = DMatrix::from_fn(n, p, |i, j| z[i][active[j]]);
            let rhs = DVector::from_iterator(n, y.iter().map(|v| v - intercept));
            let gram = design.transpose() * &design + DMatrix::identity(p, p) * self.alpha;
            let xty = design.transpose() * rhs;
            let chol = gram
                .cholesky()
                .ok_or_else(|| Error::Numerical("ridge normal equations not positive definite".into()))?;
            let w = chol.solve(&xty);
            for (k, &j) in active.iter().enumerate() {
                weights[j] = w[k];
            }
        }
        Ok(RidgeModel {
            scaler,
            weights,
            intercept,
        })
    }
}

impl Learner for RidgeLearner {
    fn name(&self) -> &str {
        "ridge"
    }

    fn fit(&self, train: &[Example]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.fit_model(train)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testutil::{example, simple};
    use crate::model::MealSlot;

    #[test]
    fn constant_column_gets_zero_weight() {
        let train: Vec<Example> = (0..6)
            .map(|i| {
                let t = i as f64;
                example(vec![t, 3.0], MealSlot::BeforeLunch, (1.0 + t).max(1.0), i)
            })
            .collect();
        let m = RidgeLearner::new(1.0).fit_model(&train).unwrap();
        assert_eq!(m.weights[1], 0.0);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn identical_rows_give_intercept_only_model() {
        let train = simple(&[2.0, 2.0, 2.0], &[4.0, 9.0, 6.0]);
        let m = RidgeLearner::new(1.0).fit_model(&train).unwrap();
        let geo = (4.0f64 * 9.0 * 6.0).powf(1.0 / 3.0);
        assert!((m.predict(&train[0].instance) - geo).abs() < 1e-12);
    }

    #[test]
    fn heavy_shrinkage_tends_to_geometric_mean() {
        let train = simple(&[0.0, 1.0, 2.0, 3.0], &[3.0, 5.0, 8.0, 13.0]);
        let m = RidgeLearner::new(1e12).fit_model(&train).unwrap();
        let geo = (3.0f64 * 5.0 * 8.0 * 13.0).powf(0.25);
        for e in &train {
            assert!((m.predict(&e.instance) - geo).abs() < 1e-6);
        }
    }

    #[test]
    fn single_row_is_rejected() {
        assert!(RidgeLearner::new(1.0).fit(&simple(&[1.0], &[5.0])).is_err());
    }
}
