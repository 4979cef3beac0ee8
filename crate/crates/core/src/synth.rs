//! Seeded synthetic diary cohorts.
//!
//! BG follows `bg_t = (μ + offset[slot_t]) · exp(d_t)` with
//! `d_t = φ·d_{t−1} + σ·ε_t`, so the slot offsets and the autoregressive term
//! are the only learnable structure. Each patient draws from its own stream
//! derived from `(seed, patient_id)`.

use chrono::{Days, NaiveDate, NaiveTime, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::derive_seed;
use crate::ingest::Cohort;
use crate::model::{DiaryRecord, ExerciseLevel, MealSlot, PatientHistory, Sex, StaticProfile, MIN_BG};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledMeal {
    pub slot: MealSlot,
    pub time: NaiveTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BgModel {
    /// Patient means are drawn uniformly from this range (mmol/L).
    pub mean_range: (f64, f64),
    /// AR(1) coefficient in [0, 1).
    pub ar: f64,
    /// Innovation standard deviation on the log scale.
    pub noise: f64,
    /// Additive offset per slot (mmol/L), indexed in daily slot order.
    pub slot_offsets: [f64; 8],
}

impl Default for BgModel {
    fn default() -> Self {
        BgModel {
            mean_range: (6.5, 9.5),
            ar: 0.4,
            noise: 0.25,
            slot_offsets: [0.0, 2.0, -0.5, 1.5, 0.0, 1.5, 0.5, -0.5],
        }
    }
}

/// Probability that each field (or whole record) is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Missingness {
    pub record: f64,
    pub bg: f64,
    pub date: f64,
    pub cho: f64,
    pub bolus: f64,
    pub basal: f64,
    pub ev: f64,
    pub height: f64,
}

impl Default for Missingness {
    fn default() -> Self {
        Missingness {
            record: 0.08,
            bg: 0.02,
            date: 0.002,
            cho: 0.10,
            bolus: 0.08,
            basal: 0.30,
            ev: 0.30,
            height: 0.15,
        }
    }
}

impl Missingness {
    pub fn none() -> Self {
        Missingness {
            record: 0.0,
            bg: 0.0,
            date: 0.0,
            cho: 0.0,
            bolus: 0.0,
            basal: 0.0,
            ev: 0.0,
            height: 0.0,
        }
    }

    fn rates(&self) -> [f64; 8] {
        [
            self.record, self.bg, self.date, self.cho, self.bolus, self.basal, self.ev, self.height,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub patients: usize,
    pub days: usize,
    pub start_date: NaiveDate,
    pub schedule: Vec<ScheduledMeal>,
    /// Uniform timestamp jitter of ± this many minutes.
    pub jitter_minutes: u32,
    pub bg: BgModel,
    pub missing: Missingness,
    pub pump_fraction: f64,
    pub seed: u64,
}

fn at(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).expect("valid wall-clock time")
}

impl Default for SynthConfig {
    fn default() -> Self {
        use MealSlot::*;
        SynthConfig {
            patients: 5,
            days: 60,
            start_date: NaiveDate::from_ymd_opt(2015, 11, 1).expect("valid date"),
            schedule: vec![
                ScheduledMeal { slot: BeforeBreakfast, time: at(7, 30) },
                ScheduledMeal { slot: AfterBreakfast, time: at(9, 30) },
                ScheduledMeal { slot: BeforeLunch, time: at(12, 0) },
                ScheduledMeal { slot: AfterLunch, time: at(14, 0) },
                ScheduledMeal { slot: BeforeSupper, time: at(18, 0) },
                ScheduledMeal { slot: AfterSupper, time: at(20, 0) },
            ],
            jitter_minutes: 30,
            bg: BgModel::default(),
            missing: Missingness::default(),
            pump_fraction: 0.4,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// No learnable structure: i.i.d. multiplicative noise around each
    /// patient's mean.
    pub fn zero_signal() -> Self {
        SynthConfig {
            bg: BgModel {
                ar: 0.0,
                noise: 0.3,
                slot_offsets: [0.0; 8],
                ..BgModel::default()
            },
            ..SynthConfig::default()
        }
    }

    /// Large meal-slot effects and strong persistence.
    pub fn high_signal() -> Self {
        SynthConfig {
            bg: BgModel {
                ar: 0.6,
                noise: 0.15,
                slot_offsets: [-1.5, 4.0, -1.0, 3.0, -0.5, 3.5, 1.0, -1.0],
                ..BgModel::default()
            },
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.patients == 0 || self.days == 0 || self.schedule.is_empty() {
            return bad("patients, days and schedule must be non-empty");
        }
        if self.schedule.windows(2).any(|w| w[1].time <= w[0].time) {
            return bad("schedule times must be strictly increasing");
        }
        let (lo, hi) = self.bg.mean_range;
        if !(lo >= MIN_BG && hi >= lo) {
            return bad("bg.mean_range must satisfy 1 <= low <= high");
        }
        if !(0.0..1.0).contains(&self.bg.ar) || self.bg.noise.is_nan() || self.bg.noise < 0.0 {
            return bad("bg.ar must be in [0, 1) and bg.noise >= 0");
        }
        if self
            .missing
            .rates()
            .iter()
            .chain([&self.pump_fraction])
            .any(|r| !(0.0..=1.0).contains(r))
        {
            return bad("rates must lie in [0, 1]");
        }
        Ok(())
    }

    /// Records per patient before any missingness.
    pub fn scheduled_records(&self) -> usize {
        self.days * self.schedule.len()
    }
}

pub fn patient_id(i: usize) -> String {
    format!("P{:02}", i + 1)
}

fn is_meal_start(slot: MealSlot) -> bool {
    matches!(
        slot,
        MealSlot::BeforeBreakfast | MealSlot::BeforeLunch | MealSlot::BeforeSupper
    )
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn generate_patient(cfg: &SynthConfig, idx: usize) -> PatientHistory {
    let id = patient_id(idx);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[&id]));
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let miss = &cfg.missing;

    let (lo, hi) = cfg.bg.mean_range;
    let mu = if hi > lo { rng.random_range(lo..hi) } else { lo };
    let on_pump = rng.random::<f64>() < cfg.pump_fraction;
    let pump_rates = [0.5, 0.7, 0.9, 0.6].map(|r: f64| if on_pump { r } else { 0.0 });
    let carb_ratio = rng.random_range(8.0..15.0);
    let height = 170.0 + 10.0 * std_normal.sample(&mut rng);
    let profile = StaticProfile {
        age: rng.random_range(18.0..75.0f64).round(),
        sex: if rng.random::<bool>() { Sex::Male } else { Sex::Female },
        height: (rng.random::<f64>() >= miss.height).then(|| round1(height)),
        weight: round1(75.0 + 12.0 * std_normal.sample(&mut rng)).max(40.0),
    };

    let mut deviation = 0.0;
    let mut records = Vec::with_capacity(cfg.scheduled_records());
    for day in 0..cfg.days {
        let date = cfg.start_date + Days::new(day as u64);
        for meal in &cfg.schedule {
            deviation = cfg.bg.ar * deviation + cfg.bg.noise * std_normal.sample(&mut rng);
            let level = mu + cfg.bg.slot_offsets[meal.slot.index()];
            let bg = (level * deviation.exp()).max(MIN_BG);

            let j = cfg.jitter_minutes as i64;
            let shift = if j > 0 { rng.random_range(-j..=j) } else { 0 };
            let time = meal.time.overflowing_add_signed(TimeDelta::minutes(shift)).0;

            let starts_meal = is_meal_start(meal.slot);
            let cho = if starts_meal {
                round1((50.0 + 15.0 * std_normal.sample(&mut rng)).max(5.0))
            } else {
                0.0
            };
            let bolus = if starts_meal {
                round1(cho / carb_ratio + ((bg - 7.0) / 3.0).max(0.0))
            } else {
                0.0
            };
            let ev = ExerciseLevel::ALL[match rng.random::<f64>() {
                u if u < 0.1 => 0,
                u if u < 0.75 => 1,
                u if u < 0.93 => 2,
                _ => 3,
            }];
            let pv = pump_rates[(time.format("%H").to_string().parse::<usize>().unwrap_or(0) / 6).min(3)];

            let mut keep = |rate: f64| rng.random::<f64>() >= rate;
            let record_kept = keep(miss.record);
            let record = DiaryRecord {
                meal: meal.slot,
                date: keep(miss.date).then_some(date),
                time: Some(time),
                bg: keep(miss.bg).then_some(bg),
                cho: keep(miss.cho).then_some(cho),
                bolus: keep(miss.bolus).then_some(bolus),
                basal: keep(miss.basal).then_some(0.0),
                ev: keep(miss.ev).then_some(ev),
                pv,
            };
            if record_kept {
                records.push(record);
            }
        }
    }
    let mut h = PatientHistory {
        patient_id: id,
        profile: Some(profile),
        records,
    };
    h.sort();
    h
}

/// Generates a cohort; identical configurations give identical cohorts.
pub fn generate(cfg: &SynthConfig) -> Result<Cohort> {
    cfg.validate()?;
    Ok((0..cfg.patients)
        .map(|i| {
            let h = generate_patient(cfg, i);
            (h.patient_id.clone(), h)
        })
        .collect())
}
