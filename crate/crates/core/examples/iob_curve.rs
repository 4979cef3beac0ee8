//! Insulin-on-board decay: the interpolated curve and a worked bolus.

use glybench::features::{iob_fraction, IOB_HORIZON_MIN, IOB_KNOTS};

fn main() -> glybench::Result<()> {
    println!("knots (hours, fraction):");
    for (h, f) in IOB_KNOTS {
        println!("  {h:>5.2} h  {f:.2}");
    }

    println!("\nminutes  fraction");
    for minute in (0..=IOB_HORIZON_MIN as u32 + 30).step_by(30) {
        println!("{minute:>7}  {:.4}", iob_fraction(minute as f64)?);
    }

    let units = 10.4;
    let elapsed = 103.0;
    println!(
        "\n{units} U injected {elapsed} min ago leaves {:.2} U on board",
        units * iob_fraction(elapsed)?
    );
    Ok(())
}
