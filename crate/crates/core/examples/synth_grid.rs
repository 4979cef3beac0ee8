//! A desk-scale model x variant grid on a synthetic cohort, written to a
//! results directory and summarized as a best-model-per-variant table.
//!
//! Pass a directory to keep the results; a temporary one is used otherwise.

use std::path::PathBuf;

use glybench::grid::{cmd_report, cmd_run, GridConfig};
use glybench::synth::SynthConfig;

fn main() -> glybench::Result<()> {
    let tmp = tempfile::tempdir()?;
    let out = std::env::args().nth(1).map_or_else(|| tmp.path().join("results"), PathBuf::from);
    let cfg = GridConfig {
        synth: Some(SynthConfig { patients: 4, days: 45, ..SynthConfig::high_signal() }),
        variants: vec!["D_e6".into(), "D_a6".into(), "D_a12".into()],
        models: vec!["ridge".into(), "rf4".into(), "M^w_gpr".into()],
        min_records: 20,
        seed: 1,
        ..GridConfig::default()
    };
    let outcome = cmd_run(&cfg, &out)?;
    println!("{} cells written to {}", outcome.cells.len(), out.display());
    println!("{:<6} {:>8} {:>8} {:>7}  best", "metric", "naive", "best", "gain");
    for r in cmd_report(&out)? {
        println!(
            "{:<6} {:>8.3} {:>8.3} {:>6.1}%  {} on {}",
            r.metric, r.naive, r.best_value, r.improvement_pct, r.best_model, r.best_variant
        );
    }
    Ok(())
}
