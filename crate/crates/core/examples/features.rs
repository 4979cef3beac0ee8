//! Feature rows for one synthetic patient, as the CSV the models consume.

use glybench::features::{build_feature_rows, feature_names, write_feature_csv, FeatureConfig};
use glybench::ingest::{clean, impute, ImputationPolicy, MissingPolicy};
use glybench::synth::{generate, SynthConfig};

fn main() -> glybench::Result<()> {
    let cohort = generate(&SynthConfig { patients: 1, days: 3, ..SynthConfig::default() })?;
    let history = cohort.values().next().expect("one patient");
    let (cleaned, _) = clean(history);
    let policy = ImputationPolicy { cho: MissingPolicy::ImputeMean, bolus: MissingPolicy::ImputeMean };
    let filled = impute(&cleaned, policy).history;

    let cfg = FeatureConfig::default();
    println!("model inputs: {}\n", feature_names(&cfg).join(", "));
    let rows = build_feature_rows(&filled, &cfg);
    write_feature_csv(std::io::stdout().lock(), &rows)
}
