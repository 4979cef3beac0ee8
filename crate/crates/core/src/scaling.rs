//! Column standardization fitted on training rows.

use serde::{Deserialize, Serialize};

/// Columns with a spread below this are treated as constant.
pub const MIN_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    means: Vec<f64>,
    /// `None` marks a constant column; it maps to 0 after transformation.
    scales: Vec<Option<f64>>,
}

impl Standardizer {
    /// Population mean and standard deviation per column.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut means = vec![0.0; dim];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in vars.iter_mut().zip(r).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let scales = vars
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                (sd > MIN_SCALE).then_some(sd)
            })
            .collect();
        Standardizer { means, scales }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn is_constant(&self, col: usize) -> bool {
        self.scales[col].is_none()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.scales)
            .map(|((v, m), s)| s.map_or(0.0, |s| (v - m) / s))
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}
