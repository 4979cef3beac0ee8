//! Independent reference implementations shared by the integration tests.
//! None of them call into the library's numerics.

#![allow(dead_code)]

use glybench::model::PredictionPair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_pairs(rng: &mut ChaCha8Rng, n: usize) -> Vec<PredictionPair> {
    (0..n)
        .map(|_| PredictionPair::new(rng.random_range(1.0..25.0), rng.random_range(1.0..25.0)))
        .collect()
}

pub fn oracle_l1(pairs: &[PredictionPair]) -> f64 {
    let mut s = 0.0;
    for p in pairs {
        s += (p.predicted - p.actual).abs();
    }
    s / pairs.len() as f64
}

pub fn oracle_rl1(pairs: &[PredictionPair]) -> f64 {
    let mut s = 0.0;
    for p in pairs {
        s += (p.predicted - p.actual).abs() / p.actual;
    }
    s / pairs.len() as f64
}

pub fn oracle_rmse(pairs: &[PredictionPair]) -> f64 {
    let mut s = 0.0;
    for p in pairs {
        s += (p.predicted - p.actual) * (p.predicted - p.actual);
    }
    (s / pairs.len() as f64).sqrt()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, p);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                let pivot = a[c].clone();
                for (v, pv) in a[r].iter_mut().zip(pivot) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn solve(m: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    invert(m)
        .iter()
        .map(|row| row.iter().zip(b).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn pop_mean_sd(col: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = col.clone().count() as f64;
    let m = col.clone().sum::<f64>() / n;
    let v = col.map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

pub struct DenseGpr {
    pub nugget: f64,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub standardize: bool,
    pub center: bool,
    pub normalize: bool,
}

impl DenseGpr {
    fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        self.signal_variance * (-d2 / (2.0 * self.length_scale.powi(2))).exp()
    }

    /// Posterior mean and standard deviation at `q` via an explicit inverse.
    pub fn posterior(&self, xs: &[Vec<f64>], ys: &[f64], q: &[f64]) -> (f64, f64) {
        let d = xs[0].len();
        let mut xs = xs.to_vec();
        let mut q = q.to_vec();
        if self.standardize {
            for c in 0..d {
                let (m, s) = pop_mean_sd(xs.iter().map(|r| r[c]));
                for r in xs.iter_mut() {
                    r[c] = if s > 1e-12 { (r[c] - m) / s } else { 0.0 };
                }
                q[c] = if s > 1e-12 { (q[c] - m) / s } else { 0.0 };
            }
        }
        let (mut ym, mut ys_sd) = pop_mean_sd(ys.iter().copied());
        if !self.center {
            ym = 0.0;
            ys_sd = (ys.iter().map(|y| y * y).sum::<f64>() / ys.len() as f64).sqrt();
        }
        let scale = if self.normalize && ys_sd > 1e-12 { ys_sd } else { 1.0 };
        let n = xs.len();
        let mut kmat = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                kmat[i][j] = self.k(&xs[i], &xs[j]) + if i == j { self.nugget } else { 0.0 };
            }
        }
        let kinv = invert(&kmat);
        let ks: Vec<f64> = xs.iter().map(|x| self.k(x, &q)).collect();
        let t: Vec<f64> = ys.iter().map(|y| (y - ym) / scale).collect();
        let mut mean = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                mean += ks[i] * kinv[i][j] * t[j];
                quad += ks[i] * kinv[i][j] * ks[j];
            }
        }
        let var = (self.signal_variance - quad).max(0.0);
        (ym + scale * mean, scale * var.sqrt())
    }
}

/// Leading `k` eigenpairs of a symmetric matrix by power iteration with
/// deflation.
pub fn power_eigen(cov: &[Vec<f64>], k: usize) -> Vec<(f64, Vec<f64>)> {
    let n = cov.len();
    let mut a: Vec<Vec<f64>> = cov.to_vec();
    let mut out = Vec::new();
    for c in 0..k {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i + c) as f64 * 0.37).collect();
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let w: Vec<f64> = a.iter().map(|r| r.iter().zip(&v).map(|(x, y)| x * y).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = next;
            lambda = norm;
            if diff < 1e-15 {
                break;
            }
        }
        for i in 0..n {
            for j in 0..n {
                a[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out
}
