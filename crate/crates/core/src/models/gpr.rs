//! Gaussian process regression with a squared-exponential kernel and a
//! constant nugget on the diagonal.
//!
//! With the default configuration inputs are standardized, log-BG targets are
//! centered on their training mean and scaled to unit variance before the
//! posterior is computed; means and standard deviations are reported back in
//! log-BG units.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{feature_matrix, Example, Instance, Learner, Predictor, GPR_NUGGET};
use crate::error::{Error, Result};
use crate::scaling::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GprConfig {
    pub nugget: f64,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub standardize_inputs: bool,
    /// Use the training-target mean as prior mean (otherwise 0).
    pub center_targets: bool,
    /// Divide centered targets by their standard deviation.
    pub normalize_targets: bool,
}

impl Default for GprConfig {
    fn default() -> Self {
        GprConfig {
            nugget: GPR_NUGGET,
            length_scale: 1.0,
            signal_variance: 1.0,
            standardize_inputs: true,
            center_targets: true,
            normalize_targets: true,
        }
    }
}

/// Posterior of the latent function at one input, in target units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone)]
pub struct GprModel {
    cfg: GprConfig,
    scaler: Option<Standardizer>,
    inputs: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
}

impl GprModel {
    /// Fits on raw inputs and targets (targets already in the unit the
    /// posterior should be reported in).
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], cfg: GprConfig) -> Result<Self> {
        let scaler = cfg.standardize_inputs.then(|| Standardizer::fit(xs));
        Self::fit_with_scaler(xs, ys, cfg, scaler)
    }

    /// Fits with a caller-supplied input standardization, so several models
    /// can share one feature space.
    pub fn fit_with_scaler(
        xs: &[Vec<f64>],
        ys: &[f64],
        cfg: GprConfig,
        scaler: Option<Standardizer>,
    ) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::fit("gpr", "needs at least one row and matching targets"));
        }
        if !(cfg.nugget > 0.0 && cfg.length_scale > 0.0 && cfg.signal_variance > 0.0) {
            return Err(Error::Config("gpr nugget, length scale and signal variance must be positive".into()));
        }
        let inputs: Vec<Vec<f64>> = match &scaler {
            Some(s) => s.transform_all(xs),
            None => xs.to_vec(),
        };
        let n = ys.len();
        let y_mean = if cfg.center_targets {
            ys.iter().sum::<f64>() / n as f64
        } else {
            0.0
        };
        let y_scale = if cfg.normalize_targets {
            let var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        } else {
            1.0
        };
        let mut k = DMatrix::from_fn(n, n, |i, j| kernel(&cfg, &inputs[i], &inputs[j]));
        for i in 0..n {
            k[(i, i)] += cfg.nugget;
        }
        let chol = k
            .cholesky()
            .ok_or_else(|| Error::Numerical("kernel matrix is not positive definite".into()))?;
        let t = DVector::from_iterator(n, ys.iter().map(|y| (y - y_mean) / y_scale));
        let alpha = chol.solve(&t);
        Ok(GprModel {
            cfg,
            scaler,
            inputs,
            chol,
            alpha,
            y_mean,
            y_scale,
        })
    }

    pub fn config(&self) -> &GprConfig {
        &self.cfg
    }

    pub fn scaler(&self) -> Option<&Standardizer> {
        self.scaler.as_ref()
    }

    pub fn prior_mean(&self) -> f64 {
        self.y_mean
    }

    /// Prior variance of the latent function, in target units.
    pub fn prior_variance(&self) -> f64 {
        self.cfg.signal_variance * self.y_scale * self.y_scale
    }

    /// Observation-noise variance in target units.
    pub fn noise_variance(&self) -> f64 {
        self.cfg.nugget * self.y_scale * self.y_scale
    }

    fn cross(&self, x: &[f64]) -> DVector<f64> {
        let q = match &self.scaler {
            Some(s) => s.transform(x),
            None => x.to_vec(),
        };
        DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|p| kernel(&self.cfg, p, &q)),
        )
    }

    pub fn posterior(&self, x: &[f64]) -> Posterior {
        let ks = self.cross(x);
        let mean = self.y_mean + self.y_scale * ks.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .expect("cholesky factor has a positive diagonal");
        let latent = (self.cfg.signal_variance - v.dot(&v)).clamp(0.0, self.cfg.signal_variance);
        Posterior {
            mean,
            sd: self.y_scale * latent.sqrt(),
        }
    }

    /// Variance of a new noisy observation at `x`.
    pub fn predictive_variance(&self, x: &[f64]) -> f64 {
        self.posterior(x).sd.powi(2) + self.noise_variance()
    }
}

fn kernel(cfg: &GprConfig, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    cfg.signal_variance * (-0.5 * d2 / (cfg.length_scale * cfg.length_scale)).exp()
}

#[derive(Debug, Clone, Copy)]
pub struct GprLearner {
    pub config: GprConfig,
}

impl GprLearner {
    pub fn new(config: GprConfig) -> Self {
        GprLearner { config }
    }

    pub fn fit_model(&self, train: &[Example]) -> Result<GprModel> {
        let xs = feature_matrix(train);
        let ys: Vec<f64> = train.iter().map(Example::log_target).collect();
        GprModel::fit(&xs, &ys, self.config)
    }
}

impl Predictor for GprModel {
    fn predict(&self, x: &Instance) -> f64 {
        self.posterior(&x.features).mean.exp()
    }
}

impl Learner for GprLearner {
    fn name(&self) -> &str {
        "gpr"
    }

    fn fit(&self, train: &[Example]) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.fit_model(train)?))
    }
}
