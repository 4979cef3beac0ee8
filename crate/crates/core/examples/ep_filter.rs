//! Expert-predictable filtering on a synthetic cohort: how many records
//! survive and which rule rejects the rest.

use std::collections::BTreeMap;

use glybench::ep::{ep_decisions, EpConfig, PrecedingMeal};
use glybench::ingest::clean_cohort;
use glybench::synth::{generate, SynthConfig};

fn main() -> glybench::Result<()> {
    let (cohort, _) = clean_cohort(&generate(&SynthConfig::default())?);
    for preceding in [PrecedingMeal::AnyPrevious, PrecedingMeal::AdjacentSlot] {
        let cfg = EpConfig { preceding, ..EpConfig::default() };
        println!("preceding meal = {preceding:?}");
        for (id, h) in &cohort {
            let decisions = ep_decisions(h, &cfg);
            let mut failures: BTreeMap<String, usize> = BTreeMap::new();
            for d in &decisions {
                for rule in &d.failed_rules {
                    *failures.entry(format!("{rule:?}")).or_default() += 1;
                }
            }
            let kept = decisions.iter().filter(|d| d.predictable).count();
            println!("  {id}: {kept}/{} predictable, rejections {failures:?}", h.len());
        }
    }
    Ok(())
}
