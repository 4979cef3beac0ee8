//! Loss functions over prediction pairs, including glucose-specific variants
//! that weight each error by the clinical risk zone it falls in.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PredictionPair, MGDL_PER_MMOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    L1,
    RelL1,
    Rmse,
    GMad,
    GMard,
    GRmse,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::L1,
        Metric::RelL1,
        Metric::Rmse,
        Metric::GMad,
        Metric::GMard,
        Metric::GRmse,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::L1 => "L1",
            Metric::RelL1 => "rL1",
            Metric::Rmse => "RMSE",
            Metric::GMad => "gMAD",
            Metric::GMard => "gMARD",
            Metric::GRmse => "gRMSE",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "metric",
                name: s.to_string(),
            })
    }
}

/// The aggregation a glucose-specific metric is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseMetric {
    Mad,
    Mard,
    Rmse,
}

fn check(pairs: &[PredictionPair]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Precondition("metrics need at least one prediction pair".into()));
    }
    Ok(())
}

fn aggregate(pairs: &[PredictionPair], base: BaseMetric, weight: impl Fn(&PredictionPair) -> f64) -> Result<f64> {
    check(pairs)?;
    let n = pairs.len() as f64;
    let total: f64 = match base {
        BaseMetric::Mad => pairs
            .iter()
            .map(|p| weight(p) * (p.predicted - p.actual).abs())
            .sum(),
        BaseMetric::Mard => pairs
            .iter()
            .map(|p| weight(p) * (p.predicted - p.actual).abs() / p.actual)
            .sum(),
        BaseMetric::Rmse => pairs
            .iter()
            .map(|p| (weight(p) * (p.predicted - p.actual)).powi(2))
            .sum(),
    };
    Ok(match base {
        BaseMetric::Rmse => (total / n).sqrt(),
        _ => total / n,
    })
}

/// Mean absolute error, mmol/L.
pub fn l1(pairs: &[PredictionPair]) -> Result<f64> {
    aggregate(pairs, BaseMetric::Mad, |_| 1.0)
}

/// Mean absolute error relative to the observed value.
pub fn rl1(pairs: &[PredictionPair]) -> Result<f64> {
    aggregate(pairs, BaseMetric::Mard, |_| 1.0)
}

pub fn rmse(pairs: &[PredictionPair]) -> Result<f64> {
    aggregate(pairs, BaseMetric::Rmse, |_| 1.0)
}

/// Base metric with every per-pair error multiplied by its zone penalty
/// (inside the square for RMSE).
pub fn g_metric(pairs: &[PredictionPair], penalty: &PenaltyTable, base: BaseMetric) -> Result<f64> {
    penalty.validate()?;
    aggregate(pairs, base, |p| penalty.weight(p.actual, p.predicted))
}

pub fn compute(metric: Metric, pairs: &[PredictionPair], penalty: &PenaltyTable) -> Result<f64> {
    match metric {
        Metric::L1 => l1(pairs),
        Metric::RelL1 => rl1(pairs),
        Metric::Rmse => rmse(pairs),
        Metric::GMad => g_metric(pairs, penalty, BaseMetric::Mad),
        Metric::GMard => g_metric(pairs, penalty, BaseMetric::Mard),
        Metric::GRmse => g_metric(pairs, penalty, BaseMetric::Rmse),
    }
}

/// Clarke error grid zones, A (clinically accurate) to E (erroneous).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClarkeZone {
    A,
    B,
    C,
    D,
    E,
}

impl ClarkeZone {
    pub const ALL: [ClarkeZone; 5] = [ClarkeZone::A, ClarkeZone::B, ClarkeZone::C, ClarkeZone::D, ClarkeZone::E];

    fn label(self) -> &'static str {
        match self {
            ClarkeZone::A => "A",
            ClarkeZone::B => "B",
            ClarkeZone::C => "C",
            ClarkeZone::D => "D",
            ClarkeZone::E => "E",
        }
    }
}

/// Zone of a (reference, predicted) pair given in mmol/L.
pub fn clarke_zone(reference: f64, predicted: f64) -> ClarkeZone {
    let r = reference * MGDL_PER_MMOL;
    let p = predicted * MGDL_PER_MMOL;
    if (r <= 70.0 && p <= 70.0) || (p <= 1.2 * r && p >= 0.8 * r) {
        ClarkeZone::A
    } else if (r >= 180.0 && p <= 70.0) || (r <= 70.0 && p >= 180.0) {
        ClarkeZone::E
    } else if ((70.0..=290.0).contains(&r) && p >= r + 110.0)
        || ((130.0..=180.0).contains(&r) && p <= 1.4 * r - 182.0)
    {
        ClarkeZone::C
    } else if (r >= 240.0 && (70.0..=180.0).contains(&p))
        || (r <= 175.0 / 3.0 && (70.0..=180.0).contains(&p))
        || ((175.0 / 3.0..=70.0).contains(&r) && p >= 1.2 * r)
    {
        ClarkeZone::D
    } else {
        ClarkeZone::B
    }
}

/// Multiplicative error weight per Clarke zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTable {
    pub weights: [f64; 5],
}

impl Default for PenaltyTable {
    fn default() -> Self {
        PenaltyTable {
            weights: [1.0, 2.0, 4.0, 6.0, 8.0],
        }
    }
}

impl PenaltyTable {
    pub fn identity() -> Self {
        PenaltyTable { weights: [1.0; 5] }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.weights.iter().find(|w| w.is_nan() || **w < 1.0) {
            return Err(Error::Config(format!("penalty weights must be >= 1, found {w}")));
        }
        Ok(())
    }

    pub fn weight(&self, reference: f64, predicted: f64) -> f64 {
        self.weights[clarke_zone(reference, predicted) as usize]
    }

    /// Reads a `zone,weight` CSV; zones not listed keep their default weight.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut table = PenaltyTable::default();
        let mut rdr = csv::Reader::from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != ["zone", "weight"] {
            return Err(Error::Config("penalty table header must be `zone,weight`".into()));
        }
        for row in rdr.records() {
            let row = row?;
            let zone = ClarkeZone::ALL
                .into_iter()
                .find(|z| Some(z.label()) == row.get(0))
                .ok_or_else(|| Error::Config(format!("unknown zone `{}`", row.get(0).unwrap_or(""))))?;
            let w: f64 = row
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad weight for zone {}", zone.label())))?;
            table.weights[zone as usize] = w;
        }
        table.validate()?;
        Ok(table)
    }
}
