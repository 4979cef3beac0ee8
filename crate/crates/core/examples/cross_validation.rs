//! Contiguous 10-fold cross-validation of several models on one variant,
//! with per-patient metrics and the gain over the naive baseline.

use glybench::eval::{contiguous_kfold, evaluate, EvalOptions, Metric};
use glybench::ingest::clean_cohort;
use glybench::models::find_model;
use glybench::synth::{generate, SynthConfig};
use glybench::variants::{find_spec, materialize};

fn main() -> glybench::Result<()> {
    let plan = contiguous_kfold(23, 10)?;
    println!("23 rows in 10 folds: {:?}\n", plan.folds());

    let (cohort, _) = clean_cohort(&generate(&SynthConfig::default())?);
    let ds = materialize(&cohort, &find_spec("D_e6")?, 20);
    let opts = EvalOptions::default();
    for name in ["naive", "ridge", "KNN10U", "rf4", "M^w_gpr"] {
        let cell = evaluate(&ds, &find_model(name)?, &opts)?;
        println!(
            "{:<8} L1 {:.3}  rL1 {:.3}  gain over naive {:+.1}%",
            name,
            cell.cohort(Metric::L1),
            cell.cohort(Metric::RelL1),
            cell.improvement(Metric::L1)
        );
        for (pid, r) in &cell.per_patient {
            println!("    {pid}: {} rows, L1 {:.3} (naive {:.3})", r.rows, r.metrics.get(Metric::L1), r.naive.get(Metric::L1));
        }
    }
    Ok(())
}
