//! Domain vocabulary shared by the whole pipeline: raw diary records, patient
//! histories, processed feature rows and prediction pairs.
//!
//! Blood glucose is stored in mmol/L everywhere. Missing raw values are
//! `Option::None`, never a sentinel number.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

/// mmol/L to mg/dl.
pub const MGDL_PER_MMOL: f64 = 18.016;

/// Lowest admissible blood glucose after cleaning (mmol/L).
pub const MIN_BG: f64 = 1.0;

/// The eight diary slots, in daily order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MealSlot {
    BeforeBreakfast,
    AfterBreakfast,
    BeforeLunch,
    AfterLunch,
    BeforeSupper,
    AfterSupper,
    BeforeBed,
    DuringNight,
}

impl MealSlot {
    pub const ALL: [MealSlot; 8] = [
        MealSlot::BeforeBreakfast,
        MealSlot::AfterBreakfast,
        MealSlot::BeforeLunch,
        MealSlot::AfterLunch,
        MealSlot::BeforeSupper,
        MealSlot::AfterSupper,
        MealSlot::BeforeBed,
        MealSlot::DuringNight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            MealSlot::BeforeBreakfast => "BeforeBreakfast",
            MealSlot::AfterBreakfast => "AfterBreakfast",
            MealSlot::BeforeLunch => "BeforeLunch",
            MealSlot::AfterLunch => "AfterLunch",
            MealSlot::BeforeSupper => "BeforeSupper",
            MealSlot::AfterSupper => "AfterSupper",
            MealSlot::BeforeBed => "BeforeBed",
            MealSlot::DuringNight => "DuringNight",
        }
    }

    /// The slot preceding this one in the daily cycle (`BeforeBreakfast`
    /// follows `DuringNight`).
    pub fn previous(self) -> MealSlot {
        MealSlot::ALL[(self.index() + 7) % 8]
    }
}

impl fmt::Display for MealSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MealSlot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MealSlot::ALL
            .iter()
            .copied()
            .find(|m| m.label() == s)
            .ok_or_else(|| format!("unknown meal slot `{s}`"))
    }
}

/// Self-reported exercise level and its numeric encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExerciseLevel {
    LessThanNormal,
    Normal,
    Active,
    VeryActive,
}

impl ExerciseLevel {
    pub const ALL: [ExerciseLevel; 4] = [
        ExerciseLevel::LessThanNormal,
        ExerciseLevel::Normal,
        ExerciseLevel::Active,
        ExerciseLevel::VeryActive,
    ];

    pub fn value(self) -> u8 {
        match self {
            ExerciseLevel::LessThanNormal => 2,
            ExerciseLevel::Normal => 4,
            ExerciseLevel::Active => 7,
            ExerciseLevel::VeryActive => 10,
        }
    }

    pub fn from_value(v: u8) -> Option<Self> {
        ExerciseLevel::ALL.iter().copied().find(|e| e.value() == v)
    }
}

/// One raw diary entry. Every optional field may be absent in raw input;
/// `bg`, `date` and `time` are guaranteed present once a history is cleaned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiaryRecord {
    pub meal: MealSlot,
    pub date: Option<NaiveDate>,
    pub time: Option<NaiveTime>,
    pub bg: Option<f64>,
    pub cho: Option<f64>,
    pub bolus: Option<f64>,
    pub basal: Option<f64>,
    pub ev: Option<ExerciseLevel>,
    /// Pump infusion rate in units/hour, 0 for non-pump patients.
    pub pv: f64,
}

impl DiaryRecord {
    pub fn timestamp(&self) -> Option<NaiveDateTime> {
        Some(self.date?.and_time(self.time?))
    }

    /// Minutes from `earlier` to `self`; `None` if either timestamp is missing.
    pub fn minutes_since(&self, earlier: &DiaryRecord) -> Option<f64> {
        let d = self.timestamp()? - earlier.timestamp()?;
        Some(d.num_seconds() as f64 / 60.0)
    }

    pub(crate) fn sort_key(&self) -> (Option<NaiveDate>, Option<NaiveTime>) {
        (self.date, self.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub fn code(self) -> f64 {
        match self {
            Sex::Female => 0.0,
            Sex::Male => 1.0,
        }
    }
}

impl FromStr for Sex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" | "Female" | "female" => Ok(Sex::Female),
            "M" | "Male" | "male" => Ok(Sex::Male),
            other => Err(format!("unknown sex label `{other}`")),
        }
    }
}

/// Patient demographics. Height is optional because it is frequently
/// unreported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticProfile {
    pub age: f64,
    pub sex: Sex,
    pub height: Option<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientHistory {
    pub patient_id: String,
    pub profile: Option<StaticProfile>,
    pub records: Vec<DiaryRecord>,
}

impl PatientHistory {
    pub fn new(patient_id: impl Into<String>, records: Vec<DiaryRecord>) -> Self {
        PatientHistory {
            patient_id: patient_id.into(),
            profile: None,
            records,
        }
    }

    /// Stable sort by (date, time).
    pub fn sort(&mut self) {
        self.records.sort_by_key(DiaryRecord::sort_key);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A broken invariant found by [`validate_history`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingBg(usize),
    LowBg(usize),
    MissingTimestamp(usize),
    NegativeValue { index: usize, field: &'static str },
    OutOfOrder(usize, usize),
    NonPositiveProfile(&'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingBg(i) => write!(f, "bg missing @{i}"),
            Violation::LowBg(i) => write!(f, "bg<1.0 @{i}"),
            Violation::MissingTimestamp(i) => write!(f, "timestamp missing @{i}"),
            Violation::NegativeValue { index, field } => write!(f, "{field}<0 @{index}"),
            Violation::OutOfOrder(a, b) => write!(f, "order @({a},{b})"),
            Violation::NonPositiveProfile(field) => write!(f, "profile.{field}<=0"),
        }
    }
}

/// Checks every cleaned-history invariant. Never fails; returns one entry per
/// violation.
pub fn validate_history(h: &PatientHistory) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, r) in h.records.iter().enumerate() {
        match r.bg {
            None => out.push(Violation::MissingBg(i)),
            Some(bg) if bg < MIN_BG => out.push(Violation::LowBg(i)),
            Some(_) => {}
        }
        if r.timestamp().is_none() {
            out.push(Violation::MissingTimestamp(i));
        }
        let fields = [
            ("cho", r.cho),
            ("bolus", r.bolus),
            ("basal", r.basal),
            ("pv", Some(r.pv)),
        ];
        for (field, v) in fields {
            if v.is_some_and(|v| v < 0.0) {
                out.push(Violation::NegativeValue { index: i, field });
            }
        }
    }
    for (i, pair) in h.records.windows(2).enumerate() {
        if let (Some(a), Some(b)) = (pair[0].timestamp(), pair[1].timestamp()) {
            if b < a {
                out.push(Violation::OutOfOrder(i, i + 1));
            }
        }
    }
    if let Some(p) = &h.profile {
        if p.age <= 0.0 {
            out.push(Violation::NonPositiveProfile("age"));
        }
        if p.height.is_some_and(|v| v <= 0.0) {
            out.push(Violation::NonPositiveProfile("height"));
        }
        if p.weight <= 0.0 {
            out.push(Violation::NonPositiveProfile("weight"));
        }
    }
    out
}

/// One processed prediction instance: what is known at record `i`, the
/// horizon to record `i + 1`, and the blood glucose observed there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub meal: MealSlot,
    pub date: NaiveDate,
    pub ev: f64,
    pub pv: f64,
    pub basal: f64,
    pub bg: f64,
    pub iob: f64,
    pub cho_prev: f64,
    pub bolus_prev: f64,
    pub bg_at_cho: f64,
    pub bg_at_bolus: f64,
    pub dt_cho: f64,
    pub dt_bolus: f64,
    /// age, sex code, height, weight
    pub demographics: Option<[f64; 4]>,
    pub stacked: Option<f64>,
    pub target_bg: f64,
    pub horizon_dt: f64,
}

impl FeatureRow {
    pub fn dow(&self) -> Weekday {
        self.date.weekday()
    }
}

/// A model output paired with the observed value, both mmol/L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionPair {
    pub predicted: f64,
    pub actual: f64,
}

impl PredictionPair {
    pub fn new(predicted: f64, actual: f64) -> Self {
        PredictionPair { predicted, actual }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(date: &str, time: &str, bg: f64) -> DiaryRecord {
        DiaryRecord {
            meal: MealSlot::BeforeBreakfast,
            date: Some(date.parse().unwrap()),
            time: Some(time.parse().unwrap()),
            bg: Some(bg),
            cho: None,
            bolus: None,
            basal: None,
            ev: None,
            pv: 0.0,
        }
    }

    #[test]
    fn clean_history_has_no_violations() {
        let h = PatientHistory::new(
            "p",
            vec![
                rec("2015-11-25", "08:36:00", 16.2),
                rec("2015-11-25", "10:19:00", 14.7),
            ],
        );
        assert!(validate_history(&h).is_empty());
    }

    #[test]
    fn low_bg_is_reported_with_index() {
        let mut recs: Vec<_> = (0..5)
            .map(|i| rec("2015-11-25", &format!("0{i}:00:00"), 6.0))
            .collect();
        recs[3].bg = Some(0.5);
        let v = validate_history(&PatientHistory::new("p", recs));
        let labels: Vec<String> = v.iter().map(ToString::to_string).collect();
        assert_eq!(labels, vec!["bg<1.0 @3"]);
    }

    #[test]
    fn out_of_order_pair_is_reported() {
        let h = PatientHistory::new(
            "p",
            vec![
                rec("2015-11-25", "08:00:00", 6.0),
                rec("2015-11-25", "12:00:00", 6.0),
                rec("2015-11-25", "09:00:00", 6.0),
            ],
        );
        let labels: Vec<String> = validate_history(&h).iter().map(ToString::to_string).collect();
        assert_eq!(labels, vec!["order @(1,2)"]);
    }

    #[test]
    fn meal_slots_are_totally_ordered_in_daily_sequence() {
        for w in MealSlot::ALL.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert_eq!(MealSlot::BeforeBreakfast.previous(), MealSlot::DuringNight);
        assert_eq!(MealSlot::BeforeLunch.previous(), MealSlot::AfterBreakfast);
        for m in MealSlot::ALL {
            assert_eq!(m.label().parse::<MealSlot>().unwrap(), m);
        }
        assert!("Brunch".parse::<MealSlot>().is_err());
    }

    #[test]
    fn exercise_levels_map_to_fixed_values() {
        let values: Vec<u8> = ExerciseLevel::ALL.iter().map(|e| e.value()).collect();
        assert_eq!(values, vec![2, 4, 7, 10]);
        for e in ExerciseLevel::ALL {
            assert_eq!(ExerciseLevel::from_value(e.value()), Some(e));
        }
        assert_eq!(ExerciseLevel::from_value(5), None);
    }
}
