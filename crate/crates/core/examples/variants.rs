//! The dataset-variant matrix and the rows each variant yields on a
//! synthetic cohort.

use glybench::features::feature_names;
use glybench::ingest::clean_cohort;
use glybench::synth::{generate, SynthConfig};
use glybench::variants::{builtin_specs, materialize, write_spec_table};

fn main() -> glybench::Result<()> {
    let specs = builtin_specs();
    write_spec_table(std::io::stdout().lock(), &specs)?;

    let (cohort, _) = clean_cohort(&generate(&SynthConfig::default())?);
    println!("\nvariant  rows  inputs");
    for spec in &specs {
        let ds = materialize(&cohort, spec, 20);
        let inputs = match spec.pca {
            Some(k) => format!("{k} principal components"),
            None => feature_names(&ds.config).len().to_string(),
        };
        println!("{:<8} {:>5}  {inputs}", spec.id, ds.total_rows());
    }
    Ok(())
}
