//! Principal component projection fitted on training rows.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of components kept by the PCA dataset variants.
pub const PCA_COMPONENTS: usize = 4;

const MIN_ROWS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    means: Vec<f64>,
    /// Unit-norm principal directions, largest variance first.
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    /// Set when fewer than the requested number of non-degenerate directions
    /// exist; the missing ones are zero vectors.
    pub rank_deficient: bool,
}

impl PcaModel {
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Projects a row onto the components after centering.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = row.iter().zip(&self.means).map(|(v, m)| v - m).collect();
        self.components
            .iter()
            .map(|c| c.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maps component scores back to the input space.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.means.clone();
        for (c, s) in self.components.iter().zip(scores) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += s * v;
            }
        }
        out
    }
}

/// Top-`k` eigenvectors of the column-centered sample covariance.
pub fn pca_fit(rows: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n < MIN_ROWS || d < k {
        return Err(Error::Precondition(format!(
            "PCA needs at least {MIN_ROWS} rows and {k} columns, got {n}x{d}"
        )));
    }
    let mut means = vec![0.0; d];
    for r in rows {
        for (m, v) in means.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - means[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let tol = top * 1e-10 + f64::MIN_POSITIVE;

    let mut components = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut rank_deficient = false;
    for &j in order.iter().take(k) {
        let lambda = eig.eigenvalues[j];
        if lambda <= tol {
            rank_deficient = true;
            components.push(vec![0.0; d]);
            eigenvalues.push(0.0);
            continue;
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        // Sign convention: largest-magnitude entry positive.
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        eigenvalues.push(lambda);
    }
    Ok(PcaModel {
        means,
        components,
        eigenvalues,
        rank_deficient,
    })
}
