//! Feature engineering: insulin on board, the per-event time/BG
//! decomposition, day-of-week encodings, demographics and PCA.

pub mod iob;
pub mod pca;

use std::io::Write;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiaryRecord, FeatureRow, PatientHistory, MIN_BG};

pub use iob::{compute_iob, iob_fraction, MonotoneCubic, IOB_HORIZON_MIN, IOB_KNOTS};
pub use pca::{pca_fit, PcaModel, PCA_COMPONENTS};

/// Elapsed times are floored here so that every Δt stays strictly positive
/// even for records sharing a timestamp.
pub const MIN_DT_MINUTES: f64 = 1.0;

/// Δt reported when no earlier CHO or bolus event exists in the history.
pub const NO_EVENT_DT_MINUTES: f64 = 1440.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DowMode {
    Omit,
    Integer,
    OneHot,
}

impl DowMode {
    /// Column value used in the variant table: 0, 1 or 7.
    pub fn table_code(self) -> u8 {
        match self {
            DowMode::Omit => 0,
            DowMode::Integer => 1,
            DowMode::OneHot => 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub dow_mode: DowMode,
    pub include_basal: bool,
    pub include_static: bool,
    /// Number of principal components, when the variant projects.
    pub pca: Option<usize>,
    /// Used for patients (or fields) without demographics:
    /// age, sex code, height, weight.
    pub static_defaults: [f64; 4],
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            dow_mode: DowMode::Integer,
            include_basal: true,
            include_static: false,
            pca: None,
            static_defaults: [0.0; 4],
        }
    }
}

/// Day-of-week values for `mode`, Monday = 0.
pub fn encode_dow(date: NaiveDate, mode: DowMode) -> Vec<f64> {
    let d = date.weekday().num_days_from_monday() as usize;
    match mode {
        DowMode::Omit => Vec::new(),
        DowMode::Integer => vec![d as f64],
        DowMode::OneHot => {
            let mut v = vec![0.0; 7];
            v[d] = 1.0;
            v
        }
    }
}

pub fn to_log_target(bg: f64) -> Result<f64> {
    if bg.is_nan() || bg < MIN_BG {
        return Err(Error::Precondition(format!("blood glucose {bg} is below 1 mmol/L")));
    }
    Ok(bg.ln())
}

pub fn from_log(pred: f64) -> f64 {
    pred.exp()
}

struct PriorEvent {
    amount: f64,
    bg: f64,
    dt: f64,
}

fn minutes_between(later: &DiaryRecord, earlier: &DiaryRecord) -> f64 {
    later
        .minutes_since(earlier)
        .unwrap_or(0.0)
        .max(MIN_DT_MINUTES)
}

/// Most recent record strictly before `i` with a positive `amount`.
fn prior_event(
    records: &[DiaryRecord],
    i: usize,
    amount: impl Fn(&DiaryRecord) -> Option<f64>,
) -> PriorEvent {
    let now = &records[i];
    records[..i]
        .iter()
        .rev()
        .find_map(|r| {
            let a = amount(r).filter(|a| *a > 0.0)?;
            Some(PriorEvent {
                amount: a,
                bg: r.bg.unwrap_or(MIN_BG),
                dt: minutes_between(now, r),
            })
        })
        .unwrap_or(PriorEvent {
            amount: 0.0,
            bg: now.bg.unwrap_or(MIN_BG),
            dt: NO_EVENT_DT_MINUTES,
        })
}

fn demographics(h: &PatientHistory, defaults: [f64; 4]) -> [f64; 4] {
    match &h.profile {
        Some(p) => [p.age, p.sex.code(), p.height.unwrap_or(defaults[2]), p.weight],
        None => defaults,
    }
}

/// One row per consecutive record pair `(i, i + 1)`, in timestamp order.
///
/// The history must be cleaned and imputed. The CHO and bolus terms refer to
/// the most recent earlier record with a positive amount; Δt values are
/// measured up to record `i`.
pub fn build_feature_rows(h: &PatientHistory, cfg: &FeatureConfig) -> Vec<FeatureRow> {
    let recs = &h.records;
    if recs.len() < 2 {
        return Vec::new();
    }
    let demo = cfg.include_static.then(|| demographics(h, cfg.static_defaults));
    (0..recs.len() - 1)
        .map(|i| {
            let (r, next) = (&recs[i], &recs[i + 1]);
            let cho = prior_event(recs, i, |x| x.cho);
            let bolus = prior_event(recs, i, |x| x.bolus);
            FeatureRow {
                meal: r.meal,
                date: r.date.expect("cleaned history has dates"),
                ev: r.ev.map_or(crate::ingest::EV_DEFAULT.value(), |e| e.value()) as f64,
                pv: r.pv,
                basal: r.basal.unwrap_or(crate::ingest::BASAL_DEFAULT),
                bg: r.bg.unwrap_or(MIN_BG),
                iob: compute_iob(h, i),
                cho_prev: cho.amount,
                bolus_prev: bolus.amount,
                bg_at_cho: cho.bg,
                bg_at_bolus: bolus.bg,
                dt_cho: cho.dt,
                dt_bolus: bolus.dt,
                demographics: demo,
                stacked: None,
                target_bg: next.bg.unwrap_or(MIN_BG),
                horizon_dt: minutes_between(next, r),
            }
        })
        .collect()
}

/// Names of the numeric columns produced by [`encode_row`].
pub fn feature_names(cfg: &FeatureConfig) -> Vec<String> {
    let mut names = vec!["meal".to_string()];
    match cfg.dow_mode {
        DowMode::Omit => {}
        DowMode::Integer => names.push("dow".into()),
        DowMode::OneHot => names.extend((0..7).map(|d| format!("dow_{d}"))),
    }
    names.extend(["ev", "pv"].map(String::from));
    if cfg.include_basal {
        names.push("basal".into());
    }
    names.extend(
        [
            "bg", "iob", "cho_prev", "bolus_prev", "bg_at_cho", "bg_at_bolus", "dt_cho", "dt_bolus",
        ]
        .map(String::from),
    );
    if cfg.include_static {
        names.extend(["age", "sex", "height", "weight"].map(String::from));
    }
    names.push("horizon_dt".into());
    names
}

/// Numeric model input for a row (everything except the target and the
/// stacked prediction).
pub fn encode_row(row: &FeatureRow, cfg: &FeatureConfig) -> Vec<f64> {
    let mut v = Vec::with_capacity(24);
    v.push(row.meal.index() as f64);
    v.extend(encode_dow(row.date, cfg.dow_mode));
    v.push(row.ev);
    v.push(row.pv);
    if cfg.include_basal {
        v.push(row.basal);
    }
    v.extend([
        row.bg,
        row.iob,
        row.cho_prev,
        row.bolus_prev,
        row.bg_at_cho,
        row.bg_at_bolus,
        row.dt_cho,
        row.dt_bolus,
    ]);
    if cfg.include_static {
        v.extend(row.demographics.unwrap_or(cfg.static_defaults));
    }
    v.push(row.horizon_dt);
    v
}

pub const FEATURE_CSV_HEADER: [&str; 20] = [
    "meal", "dow", "ev", "pv", "basal", "bg", "iob", "cho_prev", "bolus_prev", "bg_at_cho",
    "bg_at_bolus", "dt_cho", "dt_bolus", "age", "sex", "height", "weight", "horizon_dt",
    "target_bg", "stacked",
];

/// Debug dump of feature rows; `stacked` is the last column.
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FEATURE_CSV_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.meal.label().to_string(),
            r.date.weekday().num_days_from_monday().to_string(),
        ];
        rec.extend(
            [
                r.ev, r.pv, r.basal, r.bg, r.iob, r.cho_prev, r.bolus_prev, r.bg_at_cho,
                r.bg_at_bolus, r.dt_cho, r.dt_bolus,
            ]
            .iter()
            .map(f64::to_string),
        );
        match r.demographics {
            Some(d) => rec.extend(d.iter().map(f64::to_string)),
            None => rec.extend(std::iter::repeat_n(String::new(), 4)),
        }
        rec.push(r.horizon_dt.to_string());
        rec.push(r.target_bg.to_string());
        rec.push(r.stacked.map(|s| s.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
