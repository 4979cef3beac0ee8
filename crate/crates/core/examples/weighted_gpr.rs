//! The confidence-weighted GPR ensemble: a patient-wide GPR and a per-meal
//! GPR blended by their inverse posterior standard deviations.

use glybench::features::encode_row;
use glybench::ingest::clean_cohort;
use glybench::models::{combine_log_predictions, Example, Instance, RowTag, WeightedGprLearner, GprConfig};
use glybench::synth::{generate, SynthConfig};
use glybench::variants::{find_spec, materialize};

fn main() -> glybench::Result<()> {
    let (cohort, _) = clean_cohort(&generate(&SynthConfig::high_signal())?);
    let ds = materialize(&cohort, &find_spec("D_a6")?, 20);
    let (id, p) = ds.per_patient.iter().next().expect("a patient");
    let examples: Vec<Example> = p
        .rows
        .iter()
        .enumerate()
        .map(|(row, r)| Example {
            instance: Instance { features: encode_row(r, &ds.config), meal: r.meal },
            target_bg: r.target_bg,
            tag: RowTag { patient: id.clone(), row },
        })
        .collect();
    let split = examples.len() * 9 / 10;
    let model = WeightedGprLearner::new(GprConfig::default()).fit_model(&examples[..split])?;

    println!("meal             actual  patient(sd)     meal(sd)        blended");
    for e in &examples[split..split + 8] {
        let (pat, meal) = model.members(&e.instance);
        let (blend, how) = model.predict_log(&e.instance);
        let meal_txt = meal.map_or("-".to_string(), |m| format!("{:.2} ({:.2})", m.mean.exp(), m.sd));
        println!(
            "{:<16} {:>6.2}  {:.2} ({:.2})   {:<14}  {:.2} {how:?}",
            e.instance.meal.label(),
            e.target_bg,
            pat.mean.exp(),
            pat.sd,
            meal_txt,
            blend.exp()
        );
    }

    let (v, _) = combine_log_predictions(6.0, 1.0, 8.0, 2.0);
    println!("\nweights 1/1 and 1/2 on predictions 6 and 8 give {v:.4}");
    Ok(())
}
