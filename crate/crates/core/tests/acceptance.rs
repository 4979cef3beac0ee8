//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use rand::Rng;

use common::{close, oracle_l1, oracle_rl1, oracle_rmse, random_pairs, rng, DenseGpr};
use glybench::ep::{is_expert_predictable, EpConfig};
use glybench::eval::{g_metric, l1, rl1, rmse, BaseMetric, Metric, PenaltyTable};
use glybench::features::{iob_fraction, IOB_KNOTS};
use glybench::grid::{render_outputs, run_grid, GridConfig, GridOutcome};
use glybench::ingest::clean_cohort;
use glybench::model::{DiaryRecord, MealSlot, PatientHistory, PredictionPair};
use glybench::models::{combine_log_predictions, GprConfig, GprModel};
use glybench::synth::{generate, SynthConfig};
use glybench::variants::{builtin_specs, materialize};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> std::result::Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:?}, limit {limit:?}"))
}

fn metric_oracle() -> Check {
    let start = Instant::now();
    let mut r = rng(1);
    for f in 0..200 {
        let n = r.random_range(1..60);
        let pairs = random_pairs(&mut r, n);
        for (got, want, name) in [
            (l1(&pairs), oracle_l1(&pairs), "l1"),
            (rl1(&pairs), oracle_rl1(&pairs), "rl1"),
            (rmse(&pairs), oracle_rmse(&pairs), "rmse"),
        ] {
            let got = got.map_err(|e| e.to_string())?;
            ensure(close(got, want, 1e-12), format!("fixture {f}: {name} {got} vs {want}"))?;
        }
    }
    let low = [PredictionPair::new(5.0, 3.0)];
    let high = [PredictionPair::new(10.0, 12.0)];
    let appendix = (l1(&low), l1(&high), rl1(&low), rl1(&high));
    ensure(
        matches!(appendix, (Ok(a), Ok(b), Ok(c), Ok(d)) if a == 2.0 && b == 2.0 && c == 2.0 / 3.0 && d == 2.0 / 12.0),
        format!("relative-loss pairs gave {appendix:?}"),
    )?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("200 fixtures within 1e-12, worked pairs exact, {:?}", start.elapsed()))
}

fn gpr_oracle() -> Check {
    let start = Instant::now();
    let mut r = rng(2);
    let mut fixtures = 0;
    for f in 0..300 {
        let n = r.random_range(1..=6);
        let d = r.random_range(1..=3);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(-3.0..3.0)).collect()).collect();
        let ys: Vec<f64> = (0..n).map(|_| r.random_range(0.5..3.0)).collect();
        let raw = f % 2 == 0;
        let cfg = GprConfig {
            nugget: r.random_range(0.05..1.0),
            length_scale: r.random_range(0.3..3.0),
            signal_variance: r.random_range(0.3..2.0),
            standardize_inputs: !raw,
            center_targets: !raw,
            normalize_targets: !raw,
        };
        let oracle = DenseGpr {
            nugget: cfg.nugget,
            length_scale: cfg.length_scale,
            signal_variance: cfg.signal_variance,
            standardize: !raw,
            center: !raw,
            normalize: !raw,
        };
        let model = GprModel::fit(&xs, &ys, cfg).map_err(|e| e.to_string())?;
        for _ in 0..4 {
            let q: Vec<f64> = (0..d).map(|_| r.random_range(-4.0..4.0)).collect();
            let p = model.posterior(&q);
            let (m, s) = oracle.posterior(&xs, &ys, &q);
            ensure(
                (p.mean - m).abs() < 1e-8 && (p.sd - s).abs() < 1e-8,
                format!("fixture {f}: ({}, {}) vs ({m}, {s})", p.mean, p.sd),
            )?;
        }
        fixtures += 1;
    }
    let raw = GprConfig {
        standardize_inputs: false,
        center_targets: false,
        normalize_targets: false,
        ..GprConfig::default()
    };
    let single = GprModel::fit(&[vec![0.0]], &[2.5], raw).map_err(|e| e.to_string())?;
    let shrunk = single.posterior(&[0.0]).mean;
    ensure((shrunk - 0.8 * 2.5).abs() < 1e-12, format!("single point gave {shrunk}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{fixtures} fixtures within 1e-8, single-point shrinkage 0.8, {:?}", start.elapsed()))
}

fn ensemble_eq() -> Check {
    let (a, _) = combine_log_predictions(1.2, 0.3, 2.0, 0.3);
    ensure((a - 1.6).abs() < 1e-4, format!("equal spread gave {a}"))?;
    let (b, _) = combine_log_predictions(6.0, 1.0, 8.0, 2.0);
    ensure((b - 6.6667).abs() < 1e-4, format!("weighted example gave {b}"))?;
    let (c, _) = combine_log_predictions(6.0, 1.0, 8.0, 1e6);
    ensure((c - 6.0).abs() < 1e-4, format!("vanishing weight gave {c}"))?;
    let mut r = rng(3);
    for i in 0..1000 {
        let (p, m) = (r.random_range(-2.0..4.0), r.random_range(-2.0..4.0));
        let (sp, sm) = (r.random_range(0.01..3.0), r.random_range(0.01..3.0));
        let (v, _) = combine_log_predictions(p, sp, m, sm);
        ensure(
            v >= p.min(m) - 1e-12 && v <= p.max(m) + 1e-12,
            format!("draw {i}: {v} outside [{p}, {m}]"),
        )?;
        let c = r.random_range(0.01..100.0);
        let (w, _) = combine_log_predictions(p, sp * c, m, sm * c);
        ensure((v - w).abs() < 1e-12, format!("draw {i}: rescaling moved {v} to {w}"))?;
    }
    Ok("worked examples within 1e-4; convexity and rescaling hold on 1000 draws".into())
}

fn iob() -> Check {
    for (h, f) in IOB_KNOTS {
        let got = iob_fraction(h * 60.0).map_err(|e| e.to_string())?;
        ensure((got - f).abs() < 1e-9, format!("knot {h} h gave {got}"))?;
    }
    let mut prev = f64::INFINITY;
    for minute in 0..=400 {
        let v = iob_fraction(minute as f64).map_err(|e| e.to_string())?;
        ensure(v <= prev + 1e-15, format!("rises at minute {minute}"))?;
        prev = v;
    }
    let row = 10.4 * iob_fraction(103.0).map_err(|e| e.to_string())?;
    ensure((row - 7.90).abs() <= 0.10, format!("10.4 U after 103 min gave {row}"))?;
    Ok(format!("knots within 1e-9, monotone on 1-minute grid, 10.4 U at 103 min = {row:.3}"))
}

fn diary(meal: MealSlot, date: NaiveDate, time: &str, bg: f64) -> DiaryRecord {
    DiaryRecord {
        meal,
        date: Some(date),
        time: Some(time.parse().expect("fixture time")),
        bg: Some(bg),
        cho: Some(0.0),
        bolus: Some(0.0),
        basal: Some(0.0),
        ev: None,
        pv: 0.0,
    }
}

/// Target BeforeLunch on day D, preceded by AfterBreakfast on D; `full_days`
/// of the eight days before D log both slots.
fn ep_fixture(full_days: u64, prev_bg: f64) -> (PatientHistory, usize) {
    let target: NaiveDate = "2015-11-25".parse().expect("fixture date");
    let mut recs = Vec::new();
    for k in (1..=8).rev() {
        let d = target - Days::new(k);
        recs.push(diary(MealSlot::AfterBreakfast, d, "10:00:00", 7.0));
        if k <= full_days {
            recs.push(diary(MealSlot::BeforeLunch, d, "12:00:00", 6.5));
        }
    }
    recs.push(diary(MealSlot::AfterBreakfast, target, "10:00:00", prev_bg));
    recs.push(diary(MealSlot::BeforeLunch, target, "12:00:00", 6.0));
    let i = recs.len() - 1;
    (PatientHistory::new("fixture", recs), i)
}

fn ep_filter() -> Check {
    let cfg = EpConfig::default();
    let verdict = |full, bg| {
        let (h, i) = ep_fixture(full, bg);
        is_expert_predictable(&h, i, &cfg).predictable
    };
    ensure(!verdict(8, 3.5), "hypoglycemic predecessor accepted")?;
    ensure(verdict(6, 6.0), "6 of 8 days rejected")?;
    ensure(!verdict(5, 6.0), "5 of 8 days accepted")?;

    let mut checked = 0;
    for seed in 0..5 {
        let (cohort, _) = clean_cohort(&generate(&SynthConfig { seed, ..SynthConfig::default() }).map_err(|e| e.to_string())?);
        let specs = builtin_specs();
        for e in specs.iter().filter(|s| s.ep_rules) {
            let a_id = e.id.replacen("D_e", "D_a", 1);
            let a = specs.iter().find(|s| s.id == a_id).ok_or(format!("no {a_id}"))?;
            let (de, da) = (materialize(&cohort, e, 1), materialize(&cohort, a, 1));
            for (pid, rows) in &de.per_patient {
                let all = da.per_patient.get(pid).map_or(0, |p| p.rows.len());
                ensure(rows.rows.len() <= all, format!("seed {seed} {pid}: |{}| > |{a_id}|", e.id))?;
                let a_targets: BTreeSet<usize> = da.per_patient[pid].targets.iter().copied().collect();
                ensure(
                    rows.targets.iter().all(|t| a_targets.contains(t)),
                    format!("seed {seed} {pid}: {} row missing from {a_id}", e.id),
                )?;
                checked += 1;
            }
        }
    }
    Ok(format!("three rule fixtures pass; D_e ⊆ D_a on {checked} (seed, variant, patient) triples"))
}

const GRID_VARIANTS: [&str; 8] = ["D_e1", "D_e2", "D_e6", "D_e12", "D_a1", "D_a6", "D_a8", "D_a12"];
const GRID_MODELS: [&str; 7] = ["naive", "ridge", "KNN10U", "rf4", "M_gpr", "M^w_gpr", "M^ws_gpr"];

fn grid_config(audit: bool) -> GridConfig {
    GridConfig {
        synth: Some(SynthConfig::default()),
        variants: GRID_VARIANTS.map(String::from).to_vec(),
        models: GRID_MODELS.map(String::from).to_vec(),
        k: 10,
        min_records: 20,
        seed: 2024,
        audit,
        ..GridConfig::default()
    }
}

fn cv_hygiene(outcome: &GridOutcome) -> Check {
    let mut folds = 0;
    for cell in &outcome.cells {
        let mut per_patient: std::collections::BTreeMap<&str, BTreeSet<usize>> = Default::default();
        for a in &cell.audit {
            let train: BTreeSet<_> = a.train.iter().collect();
            let test: BTreeSet<_> = a.test.iter().collect();
            ensure(
                train.is_disjoint(&test),
                format!("{}/{} {} fold {}: overlap", cell.variant, cell.model, a.patient, a.fold),
            )?;
            ensure(
                a.train.iter().chain(&a.test).all(|t| t.patient == a.patient),
                "rows from another patient in a CV split",
            )?;
            ensure(
                a.stack_train.iter().all(|t| t.patient != a.patient),
                format!("{}/{} {}: stacker saw the target patient", cell.variant, cell.model, a.patient),
            )?;
            let seen = per_patient.entry(&a.patient).or_default();
            for t in &a.test {
                ensure(seen.insert(t.row), format!("row {} tested twice", t.row))?;
            }
            ensure(
                a.train.len() + a.test.len() == cell.per_patient[&a.patient].rows,
                "split does not cover the patient",
            )?;
            folds += 1;
        }
        for (pid, seen) in per_patient {
            ensure(seen.len() == cell.per_patient[pid].rows, format!("{pid}: rows never tested"))?;
        }
    }
    ensure(folds > 0, "no folds audited")?;
    Ok(format!("{folds} folds over {} cells: zero train/test overlap, full coverage", outcome.cells.len()))
}

fn end_to_end(first: &GridOutcome, elapsed: Duration) -> Check {
    within(elapsed, Duration::from_secs(300))?;
    ensure(first.cells.len() == 56, format!("{} cells", first.cells.len()))?;
    ensure(first.cleaning.len() == 5, "cohort is not 5 patients")?;
    let files = render_outputs(first).map_err(|e| e.to_string())?;
    for m in Metric::ALL {
        ensure(files.contains_key(&format!("wide_{}.csv", m.label())), format!("no {m} table"))?;
    }
    let again = run_grid(&grid_config(true)).map_err(|e| e.to_string())?;
    ensure(render_outputs(&again).map_err(|e| e.to_string())? == files, "rerun differs")?;
    Ok(format!("56 cells in {elapsed:.1?}, six metric tables, rerun byte-identical"))
}

fn preset_l1(synth: SynthConfig, models: &[&str]) -> std::result::Result<GridOutcome, String> {
    let cfg = GridConfig {
        synth: Some(synth),
        variants: vec!["D_a6".into()],
        models: models.iter().map(|m| m.to_string()).collect(),
        k: 10,
        min_records: 20,
        seed: 11,
        ..GridConfig::default()
    };
    run_grid(&cfg).map_err(|e| e.to_string())
}

fn signal_detection() -> Check {
    let zero = preset_l1(SynthConfig::zero_signal(), &GRID_MODELS)?;
    let gaps: Vec<(String, f64)> = zero
        .cells
        .iter()
        .map(|c| (c.model.clone(), (c.cohort(Metric::L1) / c.naive_cohort(Metric::L1) - 1.0) * 100.0))
        .collect();
    let listing = gaps.iter().map(|(m, g)| format!("{m} {g:+.1}%")).collect::<Vec<_>>().join(", ");
    let outside: Vec<&str> = gaps.iter().filter(|(_, g)| g.abs() > 5.0).map(|(m, _)| m.as_str()).collect();

    let high = preset_l1(SynthConfig::high_signal(), &["M^w_gpr"])?;
    let cell = high.cell("D_a6", "gpr_be").ok_or("missing M^w_gpr cell")?;
    let gain = cell.improvement(Metric::L1);

    let report = format!("zero-signal L1 vs naive: {listing}; high-signal M^w_gpr L1 gain {gain:.1}%");
    ensure(gain >= 10.0, format!("high-signal gain below 10%; {report}"))?;
    ensure(outside.is_empty(), format!("{} beyond 5% of naive on zero signal; {report}", outside.join(", ")))?;
    Ok(report)
}

fn identity_penalty(outcome: &GridOutcome) -> Check {
    let id = PenaltyTable::identity();
    let mut n = 0;
    for c in &outcome.cells {
        for p in c.per_patient.values() {
            let pairs = &p.pairs;
            let same = |base, plain: glybench::Result<f64>| -> bool {
                match (g_metric(pairs, &id, base), plain) {
                    (Ok(a), Ok(b)) => a.to_bits() == b.to_bits(),
                    _ => false,
                }
            };
            ensure(
                same(BaseMetric::Mad, l1(pairs)) && same(BaseMetric::Mard, rl1(pairs)) && same(BaseMetric::Rmse, rmse(pairs)),
                format!("{}/{} differs", c.variant, c.model),
            )?;
            n += 1;
        }
    }
    Ok(format!("bit-identical on {n} (cell, patient) results"))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Check)> = vec![
        ("1 metric oracle", metric_oracle()),
        ("2 GPR oracle", gpr_oracle()),
        ("3 confidence-weighted ensemble", ensemble_eq()),
        ("4 insulin on board", iob()),
        ("5 EP filter", ep_filter()),
    ];
    let start = Instant::now();
    let grid = run_grid(&grid_config(true)).map_err(|e| e.to_string());
    let elapsed = start.elapsed();
    match &grid {
        Ok(g) => {
            results.push(("6 CV hygiene", cv_hygiene(g)));
            results.push(("7 end-to-end grid", end_to_end(g, elapsed)));
        }
        Err(e) => {
            results.push(("6 CV hygiene", Err(e.clone())));
            results.push(("7 end-to-end grid", Err(e.clone())));
        }
    }
    results.push(("8 signal detection", signal_detection()));
    results.push((
        "9 identity penalty",
        grid.as_ref().map_err(Clone::clone).and_then(identity_penalty),
    ));

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
