use proptest::prelude::*;

use glybench::eval::{contiguous_kfold, g_metric, l1, rl1, rmse, BaseMetric, PenaltyTable};
use glybench::features::iob_fraction;
use glybench::ingest::{clean, parse_diary_csv, write_diary_csv};
use glybench::model::{validate_history, PredictionPair};
use glybench::models::{combine_log_predictions, GprConfig, GprModel};
use glybench::synth::{generate, Missingness, SynthConfig};

fn pairs() -> impl Strategy<Value = Vec<PredictionPair>> {
    prop::collection::vec((1.0f64..30.0, 1.0f64..30.0), 1..80)
        .prop_map(|v| v.into_iter().map(|(p, a)| PredictionPair::new(p, a)).collect())
}

proptest! {
    #[test]
    fn rmse_dominates_l1(p in pairs()) {
        prop_assert!(rmse(&p).unwrap() >= l1(&p).unwrap() - 1e-12);
    }

    #[test]
    fn penalties_never_lower_a_loss(p in pairs(), w in prop::array::uniform5(1.0f64..10.0)) {
        let t = PenaltyTable { weights: w };
        prop_assert!(g_metric(&p, &t, BaseMetric::Mad).unwrap() >= l1(&p).unwrap() - 1e-12);
        prop_assert!(g_metric(&p, &t, BaseMetric::Mard).unwrap() >= rl1(&p).unwrap() - 1e-12);
        prop_assert!(g_metric(&p, &t, BaseMetric::Rmse).unwrap() >= rmse(&p).unwrap() - 1e-12);
    }

    #[test]
    fn folds_partition_in_order(n in 2usize..500, k in 2usize..20) {
        prop_assume!(n >= k);
        let plan = contiguous_kfold(n, k).unwrap();
        let mut next = 0;
        let sizes: Vec<usize> = plan.folds().iter().map(|f| f.len()).collect();
        for f in plan.folds() {
            prop_assert_eq!(f.start, next);
            prop_assert!(!f.is_empty());
            next = f.end;
        }
        prop_assert_eq!(next, n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        for j in 0..k {
            let train: Vec<usize> = plan.train(j).collect();
            prop_assert_eq!(train.len() + plan.test(j).len(), n);
            prop_assert!(train.iter().all(|i| !plan.test(j).contains(i)));
        }
    }

    #[test]
    fn ensemble_is_convex_and_scale_free(
        p in -3.0f64..4.0, m in -3.0f64..4.0,
        sp in 1e-3f64..5.0, sm in 1e-3f64..5.0, c in 1e-3f64..1e3,
    ) {
        let (v, _) = combine_log_predictions(p, sp, m, sm);
        prop_assert!(v >= p.min(m) - 1e-12 && v <= p.max(m) + 1e-12);
        let (w, _) = combine_log_predictions(p, sp * c, m, sm * c);
        prop_assert!((v - w).abs() < 1e-10);
    }

    #[test]
    fn iob_never_increases(a in 0.0f64..400.0, b in 0.0f64..400.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(iob_fraction(hi).unwrap() <= iob_fraction(lo).unwrap() + 1e-15);
    }

    #[test]
    fn gpr_variance_is_bounded_by_the_prior(
        pts in prop::collection::vec((-3.0f64..3.0, 0.5f64..3.0), 1..12),
        q in -6.0f64..6.0,
    ) {
        let xs: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let m = GprModel::fit(&xs, &ys, GprConfig::default()).unwrap();
        let post = m.posterior(&[q]);
        prop_assert!(post.sd >= 0.0);
        prop_assert!(post.sd * post.sd <= m.prior_variance() + 1e-12);
    }

    #[test]
    fn synthetic_cohorts_clean_idempotently_and_round_trip(seed in 0u64..1000) {
        let cfg = SynthConfig { patients: 2, days: 12, seed, ..SynthConfig::default() };
        let cohort = generate(&cfg).unwrap();
        let mut first = Vec::new();
        write_diary_csv(&mut first, cohort.values()).unwrap();
        let mut second = Vec::new();
        write_diary_csv(&mut second, parse_diary_csv(first.as_slice()).unwrap().values()).unwrap();
        prop_assert_eq!(&first, &second);
        for h in cohort.values() {
            let (once, _) = clean(h);
            let (twice, report) = clean(&once);
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(report.dropped() + report.clamped_low_bg, 0);
            prop_assert!(validate_history(&once).is_empty());
        }
    }
}

#[test]
fn record_counts_follow_the_binomial_model() {
    let keep = 0.9f64;
    let cfg = SynthConfig {
        patients: 1,
        days: 50,
        missing: Missingness {
            record: 1.0 - keep,
            ..Missingness::none()
        },
        ..SynthConfig::default()
    };
    let trials = cfg.scheduled_records() as f64;
    let mean = trials * keep;
    let sd = (trials * keep * (1.0 - keep)).sqrt();
    let counts: Vec<f64> = (0..100)
        .map(|seed| {
            let c = generate(&SynthConfig { seed, ..cfg.clone() }).unwrap();
            c.values().map(|h| h.len()).sum::<usize>() as f64
        })
        .collect();
    let avg = counts.iter().sum::<f64>() / counts.len() as f64;
    assert!((avg - mean).abs() <= 3.0 * sd / 10.0, "average {avg} vs {mean}");
    assert!(counts.iter().all(|c| (c - mean).abs() <= 5.0 * sd));

    let full = generate(&SynthConfig {
        missing: Missingness::none(),
        ..cfg
    })
    .unwrap();
    assert_eq!(full.values().map(|h| h.len()).sum::<usize>() as f64, trials);
}
