//! Insulin-on-board decay curve.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::PatientHistory;

/// (elapsed hours, fraction of the bolus still active).
pub const IOB_KNOTS: [(f64, f64); 6] = [
    (0.0, 1.00),
    (1.66, 0.78),
    (2.50, 0.48),
    (3.33, 0.27),
    (4.15, 0.12),
    (5.00, 0.03),
];

/// Insulin is considered fully absorbed after this many minutes.
pub const IOB_HORIZON_MIN: f64 = 300.0;

/// Shape-preserving piecewise cubic Hermite interpolant (PCHIP).
///
/// Interior slopes are the weighted harmonic mean of neighbouring secants and
/// are zeroed at local extrema, so monotone data gives a monotone curve.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::Precondition("spline needs at least two knots".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("spline knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();

        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes.fill(delta[0]);
            return Ok(MonotoneCubic { xs, ys, slopes });
        }
        for k in 1..n - 1 {
            let (d0, d1) = (delta[k - 1], delta[k]);
            if d0 * d1 > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    /// Evaluates the interpolant; outside the knot range the end values are held.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&xk| xk <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

// Three-point end slope, clipped so it cannot break monotonicity.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

fn iob_curve() -> &'static MonotoneCubic {
    static CURVE: OnceLock<MonotoneCubic> = OnceLock::new();
    CURVE.get_or_init(|| MonotoneCubic::new(&IOB_KNOTS).expect("static knots are valid"))
}

/// Fraction of a bolus still active `elapsed_minutes` after injection.
pub fn iob_fraction(elapsed_minutes: f64) -> Result<f64> {
    if elapsed_minutes.is_nan() || elapsed_minutes < 0.0 {
        return Err(Error::Precondition(format!(
            "elapsed time must be non-negative, got {elapsed_minutes}"
        )));
    }
    if elapsed_minutes > IOB_HORIZON_MIN {
        return Ok(0.0);
    }
    Ok(iob_curve().eval(elapsed_minutes / 60.0).clamp(0.0, 1.0))
}

/// Insulin still active at record `i` from every earlier bolus in the
/// trailing five hours.
pub fn compute_iob(h: &PatientHistory, i: usize) -> f64 {
    let Some(now) = h.records.get(i) else {
        return 0.0;
    };
    h.records[..i]
        .iter()
        .rev()
        .filter_map(|r| {
            let units = r.bolus.filter(|b| *b > 0.0)?;
            let elapsed = now.minutes_since(r)?;
            (0.0..=IOB_HORIZON_MIN)
                .contains(&elapsed)
                .then(|| units * iob_fraction(elapsed).unwrap_or(0.0))
        })
        .fold(0.0, |acc, v| acc + v)
}
