//! The six loss functions, Clarke zones and custom penalty tables.

use glybench::eval::{clarke_zone, compute, Metric, PenaltyTable};
use glybench::model::{PredictionPair, MGDL_PER_MMOL};

fn main() -> glybench::Result<()> {
    let pairs = [
        PredictionPair::new(5.0, 3.0),
        PredictionPair::new(10.0, 12.0),
        PredictionPair::new(7.0, 7.5),
        PredictionPair::new(12.0, 3.0),
    ];
    println!("actual  predicted  zone");
    for p in &pairs {
        println!("{:>6.1}  {:>9.1}  {:?}", p.actual, p.predicted, clarke_zone(p.actual, p.predicted));
    }

    let custom = PenaltyTable::from_csv("zone,weight\nD,10\nE,20\n".as_bytes())?;
    println!("\nmetric  default   identity  custom");
    for m in Metric::ALL {
        println!(
            "{:<6} {:>8.4} {:>9.4} {:>8.4}",
            m.label(),
            compute(m, &pairs, &PenaltyTable::default())?,
            compute(m, &pairs, &PenaltyTable::identity())?,
            compute(m, &pairs, &custom)?
        );
    }
    let l1 = compute(Metric::L1, &pairs, &PenaltyTable::default())?;
    println!("\nL1 {l1:.2} mmol/L = {:.1} mg/dl", l1 * MGDL_PER_MMOL);
    Ok(())
}
