//! Diary CSV I/O, cleaning and missing-value imputation.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    DiaryRecord, ExerciseLevel, MealSlot, PatientHistory, Sex, StaticProfile, MIN_BG,
};

pub const DIARY_HEADER: [&str; 10] = [
    "patient_id", "meal", "date", "time", "bg", "cho", "bolus", "basal", "ev", "pv",
];

pub const DEMOGRAPHICS_HEADER: [&str; 5] = ["patient_id", "age", "sex", "height", "weight"];

pub type Cohort = BTreeMap<String, PatientHistory>;

const DATE_FMT: &str = "%Y-%m-%d";
const TIME_FMT: &str = "%H:%M:%S";

struct FieldReader<'a> {
    row: &'a csv::StringRecord,
    line: u64,
}

impl FieldReader<'_> {
    fn err(&self, col: usize, message: impl Into<String>) -> Error {
        Error::Schema {
            line: self.line,
            column: DIARY_HEADER.get(col).copied().unwrap_or("?").to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, col: usize) -> Result<&str> {
        self.row
            .get(col)
            .ok_or_else(|| self.err(col, "missing column"))
    }

    fn opt<T>(&self, col: usize, parse: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>> {
        let s = self.raw(col)?;
        if s.is_empty() {
            return Ok(None);
        }
        parse(s)
            .map(Some)
            .ok_or_else(|| self.err(col, format!("cannot parse `{s}`")))
    }

    fn non_negative(&self, col: usize) -> Result<Option<f64>> {
        let v = self.opt(col, |s| s.parse::<f64>().ok())?;
        match v {
            Some(x) if x.is_nan() || x < 0.0 => Err(self.err(col, format!("negative value {x}"))),
            _ => Ok(v),
        }
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = found.iter().collect();
    if got != expected {
        return Err(Error::Schema {
            line: 1,
            column: "header".into(),
            message: format!("expected `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

/// Parses a raw diary CSV into per-patient histories sorted by timestamp.
pub fn parse_diary_csv<R: Read>(input: R) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    check_header(rdr.headers()?, &DIARY_HEADER)?;
    let mut cohort = Cohort::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let f = FieldReader { row: &row, line };
        if row.len() != DIARY_HEADER.len() {
            return Err(f.err(row.len().min(DIARY_HEADER.len() - 1), "wrong field count"));
        }
        let patient_id = f.raw(0)?;
        if patient_id.is_empty() {
            return Err(f.err(0, "empty patient id"));
        }
        let meal = f
            .raw(1)?
            .parse::<MealSlot>()
            .map_err(|e| f.err(1, e))?;
        let record = DiaryRecord {
            meal,
            date: f.opt(2, |s| NaiveDate::parse_from_str(s, DATE_FMT).ok())?,
            time: f.opt(3, |s| NaiveTime::parse_from_str(s, TIME_FMT).ok())?,
            bg: f.non_negative(4)?,
            cho: f.non_negative(5)?,
            bolus: f.non_negative(6)?,
            basal: f.non_negative(7)?,
            ev: f.opt(8, |s| s.parse::<u8>().ok().and_then(ExerciseLevel::from_value))?,
            pv: f.non_negative(9)?.unwrap_or(0.0),
        };
        cohort
            .entry(patient_id.to_string())
            .or_insert_with(|| PatientHistory::new(patient_id, Vec::new()))
            .records
            .push(record);
    }
    for h in cohort.values_mut() {
        h.sort();
    }
    Ok(cohort)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the canonical diary CSV. Patients in id order, records in history
/// order; floats use the shortest round-tripping representation.
pub fn write_diary_csv<'a, W: Write>(
    out: W,
    histories: impl IntoIterator<Item = &'a PatientHistory>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIARY_HEADER)?;
    for h in histories {
        for r in &h.records {
            w.write_record([
                h.patient_id.clone(),
                r.meal.label().to_string(),
                fmt_opt(r.date.map(|d| d.format(DATE_FMT))),
                fmt_opt(r.time.map(|t| t.format(TIME_FMT))),
                fmt_opt(r.bg),
                fmt_opt(r.cho),
                fmt_opt(r.bolus),
                fmt_opt(r.basal),
                fmt_opt(r.ev.map(ExerciseLevel::value)),
                r.pv.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Attaches demographics from a `patient_id,age,sex,height,weight` CSV.
/// Height may be empty. Unknown patients are ignored.
pub fn read_demographics_csv<R: Read>(input: R, cohort: &mut Cohort) -> Result<()> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(rdr.headers()?, &DEMOGRAPHICS_HEADER)?;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |col: usize, msg: String| Error::Schema {
            line,
            column: DEMOGRAPHICS_HEADER[col].to_string(),
            message: msg,
        };
        let num = |col: usize| -> Result<f64> {
            let s = row.get(col).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0)
                .ok_or_else(|| err(col, format!("expected positive number, found `{s}`")))
        };
        let height = match row.get(3).unwrap_or("") {
            "" => None,
            _ => Some(num(3)?),
        };
        let profile = StaticProfile {
            age: num(1)?,
            sex: row.get(2).unwrap_or("").parse::<Sex>().map_err(|e| err(2, e))?,
            height,
            weight: num(4)?,
        };
        if let Some(h) = cohort.get_mut(row.get(0).unwrap_or("")) {
            h.profile = Some(profile);
        }
    }
    Ok(())
}

pub fn write_demographics_csv<'a, W: Write>(
    out: W,
    histories: impl IntoIterator<Item = &'a PatientHistory>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DEMOGRAPHICS_HEADER)?;
    for h in histories {
        if let Some(p) = &h.profile {
            let sex = match p.sex {
                Sex::Female => "F",
                Sex::Male => "M",
            };
            w.write_record([
                h.patient_id.clone(),
                p.age.to_string(),
                sex.to_string(),
                fmt_opt(p.height),
                p.weight.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub dropped_missing_bg: usize,
    pub dropped_missing_date: usize,
    pub clamped_low_bg: usize,
}

impl CleaningReport {
    pub fn dropped(&self) -> usize {
        self.dropped_missing_bg + self.dropped_missing_date
    }
}

/// Drops records without a BG reading or without a full timestamp and lifts
/// BG readings below 1 mmol/L to 1 mmol/L.
pub fn clean(h: &PatientHistory) -> (PatientHistory, CleaningReport) {
    let mut report = CleaningReport::default();
    let mut records = Vec::with_capacity(h.records.len());
    for r in &h.records {
        let Some(bg) = r.bg else {
            report.dropped_missing_bg += 1;
            continue;
        };
        if r.timestamp().is_none() {
            report.dropped_missing_date += 1;
            continue;
        }
        let mut r = r.clone();
        if bg < MIN_BG {
            r.bg = Some(MIN_BG);
            report.clamped_low_bg += 1;
        }
        records.push(r);
    }
    let mut out = PatientHistory {
        patient_id: h.patient_id.clone(),
        profile: h.profile.clone(),
        records,
    };
    out.sort();
    (out, report)
}

pub fn clean_cohort(cohort: &Cohort) -> (Cohort, BTreeMap<String, CleaningReport>) {
    let mut cleaned = Cohort::new();
    let mut reports = BTreeMap::new();
    for (id, h) in cohort {
        let (c, r) = clean(h);
        cleaned.insert(id.clone(), c);
        reports.insert(id.clone(), r);
    }
    (cleaned, reports)
}

pub fn write_cleaning_reports<W: Write>(
    out: W,
    reports: &BTreeMap<String, CleaningReport>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "patient_id",
        "dropped_missing_bg",
        "dropped_missing_date",
        "clamped_low_bg",
    ])?;
    for (id, r) in reports {
        w.write_record([
            id.clone(),
            r.dropped_missing_bg.to_string(),
            r.dropped_missing_date.to_string(),
            r.clamped_low_bg.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissingPolicy {
    Throwout,
    ImputeMean,
    ImputeZero,
}

impl MissingPolicy {
    pub fn label(self) -> &'static str {
        match self {
            MissingPolicy::Throwout => "Throwout",
            MissingPolicy::ImputeMean => "Impute Mean",
            MissingPolicy::ImputeZero => "Impute 0",
        }
    }
}

/// How missing CHO and bolus values are handled. Missing exercise always
/// becomes `Normal` and missing basal always becomes 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImputationPolicy {
    pub cho: MissingPolicy,
    pub bolus: MissingPolicy,
}

pub const EV_DEFAULT: ExerciseLevel = ExerciseLevel::Normal;
pub const BASAL_DEFAULT: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImputedField {
    Cho,
    Bolus,
}

/// Level at which a mean imputation had to fall back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fallback {
    PatientMean,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeFallback {
    pub meal: MealSlot,
    pub field: ImputedField,
    pub used: Fallback,
}

#[derive(Debug, Clone, Copy, Default)]
struct RunningMean {
    sum: f64,
    n: usize,
}

impl RunningMean {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

#[derive(Debug, Clone, Default)]
struct FieldMeans {
    per_meal: [RunningMean; 8],
    overall: RunningMean,
}

impl FieldMeans {
    fn push(&mut self, meal: MealSlot, v: Option<f64>) {
        if let Some(v) = v {
            self.per_meal[meal.index()].push(v);
            self.overall.push(v);
        }
    }

    fn resolve(&self, meal: MealSlot) -> (f64, Option<Fallback>) {
        if let Some(m) = self.per_meal[meal.index()].get() {
            (m, None)
        } else if let Some(m) = self.overall.get() {
            (m, Some(Fallback::PatientMean))
        } else {
            (0.0, Some(Fallback::Zero))
        }
    }
}

/// Per-meal and patient-wide means of present (never imputed) CHO and bolus
/// values.
#[derive(Debug, Clone, Default)]
pub struct MealMeans {
    cho: FieldMeans,
    bolus: FieldMeans,
}

impl MealMeans {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a DiaryRecord>) -> Self {
        let mut m = MealMeans::default();
        for r in records {
            m.cho.push(r.meal, r.cho);
            m.bolus.push(r.meal, r.bolus);
        }
        m
    }

    pub fn cho(&self, meal: MealSlot) -> Option<f64> {
        self.cho.per_meal[meal.index()].get()
    }

    pub fn bolus(&self, meal: MealSlot) -> Option<f64> {
        self.bolus.per_meal[meal.index()].get()
    }
}

#[derive(Debug, Clone)]
pub struct Imputed {
    pub history: PatientHistory,
    /// Index in the input history of each output record.
    pub kept: Vec<usize>,
    pub fallbacks: Vec<ImputeFallback>,
}

impl Imputed {
    pub fn dropped(&self, input_len: usize) -> usize {
        input_len - self.kept.len()
    }
}

/// Imputes with means taken from `h` itself.
pub fn impute(h: &PatientHistory, policy: ImputationPolicy) -> Imputed {
    let means = MealMeans::from_records(&h.records);
    impute_with_means(h, policy, &means)
}

/// Imputes with externally supplied means, e.g. computed from the training
/// part of a cross-validation split only.
pub fn impute_with_means(h: &PatientHistory, policy: ImputationPolicy, means: &MealMeans) -> Imputed {
    let mut records = Vec::with_capacity(h.records.len());
    let mut kept = Vec::with_capacity(h.records.len());
    let mut fallbacks = Vec::new();
    'records: for (i, r) in h.records.iter().enumerate() {
        let mut r = r.clone();
        for (field, p, stats) in [
            (ImputedField::Cho, policy.cho, &means.cho),
            (ImputedField::Bolus, policy.bolus, &means.bolus),
        ] {
            let slot = match field {
                ImputedField::Cho => &mut r.cho,
                ImputedField::Bolus => &mut r.bolus,
            };
            if slot.is_some() {
                continue;
            }
            match p {
                MissingPolicy::Throwout => continue 'records,
                MissingPolicy::ImputeZero => *slot = Some(0.0),
                MissingPolicy::ImputeMean => {
                    let (v, fb) = stats.resolve(r.meal);
                    *slot = Some(v);
                    if let Some(used) = fb {
                        fallbacks.push(ImputeFallback {
                            meal: r.meal,
                            field,
                            used,
                        });
                    }
                }
            }
        }
        r.ev.get_or_insert(EV_DEFAULT);
        r.basal.get_or_insert(BASAL_DEFAULT);
        records.push(r);
        kept.push(i);
    }
    Imputed {
        history: PatientHistory {
            patient_id: h.patient_id.clone(),
            profile: h.profile.clone(),
            records,
        },
        kept,
        fallbacks,
    }
}
