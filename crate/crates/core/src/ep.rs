//! "Expert predictable" record filter.
//!
//! A target record `i` is predictable when the preceding record is not
//! hypoglycemic, the preceding meal reading exists, and the same meal
//! transition was logged on enough of the recent days.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::Cohort;
use crate::model::{MealSlot, PatientHistory};

/// BG below this (mmol/L) counts as hypoglycemia.
pub const HYPO_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EpRule {
    PrevHypo,
    PrevMealMissing,
    SixOfEight,
}

/// What counts as "the preceding meal".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecedingMeal {
    /// The immediately previous diary record, whatever its slot.
    AnyPrevious,
    /// The previous record must sit in the slot just before the target's
    /// slot in the daily cycle.
    AdjacentSlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpConfig {
    pub hypo_threshold: f64,
    /// Calendar days looked back over, excluding the target's own date.
    pub window_days: u64,
    pub required_days: usize,
    pub preceding: PrecedingMeal,
}

impl Default for EpConfig {
    fn default() -> Self {
        EpConfig {
            hypo_threshold: HYPO_THRESHOLD,
            window_days: 8,
            required_days: 6,
            preceding: PrecedingMeal::AnyPrevious,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpDecision {
    pub predictable: bool,
    pub failed_rules: Vec<EpRule>,
}

impl EpDecision {
    fn from_failures(mut failed_rules: Vec<EpRule>) -> Self {
        failed_rules.sort();
        EpDecision {
            predictable: failed_rules.is_empty(),
            failed_rules,
        }
    }
}

/// Bitmask of slots logged per calendar date.
struct SlotCalendar(BTreeMap<NaiveDate, u8>);

impl SlotCalendar {
    fn new(h: &PatientHistory) -> Self {
        let mut days = BTreeMap::new();
        for r in &h.records {
            if let (Some(d), Some(_)) = (r.date, r.bg) {
                *days.entry(d).or_insert(0u8) |= 1 << r.meal.index();
            }
        }
        SlotCalendar(days)
    }

    fn days_with_both(&self, before: NaiveDate, window: u64, a: MealSlot, b: MealSlot) -> usize {
        let want = (1u8 << a.index()) | (1u8 << b.index());
        (1..=window)
            .filter_map(|k| before.checked_sub_days(Days::new(k)))
            .filter(|d| self.0.get(d).is_some_and(|m| m & want == want))
            .count()
    }
}

fn decide(h: &PatientHistory, i: usize, cfg: &EpConfig, cal: &SlotCalendar) -> EpDecision {
    if i == 0 || i >= h.records.len() {
        return EpDecision::from_failures(vec![EpRule::PrevMealMissing]);
    }
    let (prev, cur) = (&h.records[i - 1], &h.records[i]);
    let mut failed = Vec::new();

    if prev.bg.is_some_and(|bg| bg < cfg.hypo_threshold) {
        failed.push(EpRule::PrevHypo);
    }
    let slot_ok = match cfg.preceding {
        PrecedingMeal::AnyPrevious => true,
        PrecedingMeal::AdjacentSlot => prev.meal == cur.meal.previous(),
    };
    if prev.bg.is_none() || !slot_ok {
        failed.push(EpRule::PrevMealMissing);
    }
    let enough_days = cur.date.is_some_and(|d| {
        cal.days_with_both(d, cfg.window_days, cur.meal, prev.meal) >= cfg.required_days
    });
    if !enough_days {
        failed.push(EpRule::SixOfEight);
    }
    EpDecision::from_failures(failed)
}

/// Whether record `i` of a cleaned history is expert predictable. Only
/// records up to and including `i` and earlier dates are consulted.
pub fn is_expert_predictable(h: &PatientHistory, i: usize, cfg: &EpConfig) -> EpDecision {
    let past = PatientHistory {
        patient_id: h.patient_id.clone(),
        profile: None,
        records: h.records[..(i + 1).min(h.records.len())].to_vec(),
    };
    decide(h, i, cfg, &SlotCalendar::new(&past))
}

/// Decisions for every record of a cleaned history.
///
/// Same result as calling [`is_expert_predictable`] per record: the calendar
/// lookup only reads dates strictly before each target's own date.
pub fn ep_decisions(h: &PatientHistory, cfg: &EpConfig) -> Vec<EpDecision> {
    let cal = SlotCalendar::new(h);
    (0..h.records.len()).map(|i| decide(h, i, cfg, &cal)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpCount {
    pub total: usize,
    pub ep_count: usize,
}

pub fn ep_counts(cohort: &Cohort, cfg: &EpConfig) -> BTreeMap<String, EpCount> {
    cohort
        .iter()
        .map(|(id, h)| {
            let ep_count = ep_decisions(h, cfg).iter().filter(|d| d.predictable).count();
            (id.clone(), EpCount { total: h.len(), ep_count })
        })
        .collect()
}

pub fn write_ep_counts<W: Write>(out: W, counts: &BTreeMap<String, EpCount>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["patient_id", "total", "ep_count"])?;
    for (id, c) in counts {
        w.write_record([id.clone(), c.total.to_string(), c.ep_count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiaryRecord;

    fn rec(meal: MealSlot, date: NaiveDate, time: &str, bg: f64) -> DiaryRecord {
        DiaryRecord {
            meal,
            date: Some(date),
            time: Some(time.parse().unwrap()),
            bg: Some(bg),
            cho: Some(0.0),
            bolus: Some(0.0),
            basal: Some(0.0),
            ev: None,
            pv: 0.0,
        }
    }

    /// `full_days` of the 8 days before the target day log both AfterBreakfast
    /// and BeforeLunch; the rest log AfterBreakfast only. The target day ends
    /// with AfterBreakfast (bg = `prev_bg`) then BeforeLunch.
    fn fixture(full_days: u64, prev_bg: f64) -> (PatientHistory, usize) {
        let target: NaiveDate = "2015-11-25".parse().unwrap();
        let mut recs = Vec::new();
        for k in (1..=8).rev() {
            let d = target - Days::new(k);
            recs.push(rec(MealSlot::AfterBreakfast, d, "10:00:00", 7.0));
            if k <= full_days {
                recs.push(rec(MealSlot::BeforeLunch, d, "12:00:00", 6.5));
            }
        }
        recs.push(rec(MealSlot::AfterBreakfast, target, "10:00:00", prev_bg));
        recs.push(rec(MealSlot::BeforeLunch, target, "12:00:00", 6.0));
        let i = recs.len() - 1;
        (PatientHistory::new("p", recs), i)
    }

    #[test]
    fn hypoglycemic_predecessor_fails() {
        let (h, i) = fixture(8, 3.5);
        let d = is_expert_predictable(&h, i, &EpConfig::default());
        assert!(!d.predictable);
        assert_eq!(d.failed_rules, vec![EpRule::PrevHypo]);
    }

    #[test]
    fn eight_full_days_pass() {
        let (h, i) = fixture(8, 6.0);
        let d = is_expert_predictable(&h, i, &EpConfig::default());
        assert!(d.predictable, "{d:?}");
    }

    #[test]
    fn six_full_days_is_the_boundary() {
        let (h, i) = fixture(6, 6.0);
        assert!(is_expert_predictable(&h, i, &EpConfig::default()).predictable);
    }

    #[test]
    fn five_of_eight_fails() {
        let (h, i) = fixture(5, 6.0);
        let d = is_expert_predictable(&h, i, &EpConfig::default());
        assert_eq!(d.failed_rules, vec![EpRule::SixOfEight]);
    }

    #[test]
    fn first_record_has_no_predecessor() {
        let (h, _) = fixture(8, 6.0);
        let d = is_expert_predictable(&h, 0, &EpConfig::default());
        assert_eq!(d.failed_rules, vec![EpRule::PrevMealMissing]);
    }

    #[test]
    fn adjacent_slot_mode_checks_the_slot() {
        let (mut h, i) = fixture(8, 6.0);
        let cfg = EpConfig {
            preceding: PrecedingMeal::AdjacentSlot,
            ..EpConfig::default()
        };
        assert!(is_expert_predictable(&h, i, &cfg).predictable);
        h.records[i - 1].meal = MealSlot::BeforeBreakfast;
        let d = is_expert_predictable(&h, i, &cfg);
        assert!(d.failed_rules.contains(&EpRule::PrevMealMissing));
    }

    #[test]
    fn batch_decisions_match_single_calls() {
        let (h, _) = fixture(7, 6.0);
        let cfg = EpConfig::default();
        let all = ep_decisions(&h, &cfg);
        for (i, d) in all.iter().enumerate() {
            assert_eq!(*d, is_expert_predictable(&h, i, &cfg), "record {i}");
        }
    }

    #[test]
    fn future_records_do_not_change_a_decision() {
        let (h, i) = fixture(5, 6.0);
        let before = is_expert_predictable(&h, i, &EpConfig::default());
        let mut longer = h.clone();
        let next_day: NaiveDate = "2015-11-26".parse().unwrap();
        longer.records.push(rec(MealSlot::AfterBreakfast, next_day, "10:00:00", 6.0));
        longer.records.push(rec(MealSlot::BeforeLunch, next_day, "12:00:00", 6.0));
        assert_eq!(ep_decisions(&longer, &EpConfig::default())[i], before);
    }
}
