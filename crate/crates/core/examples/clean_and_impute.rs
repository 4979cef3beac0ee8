//! Parse a diary CSV, clean it and compare the three missing-value policies.

use glybench::ingest::{clean, impute, parse_diary_csv, ImputationPolicy, MissingPolicy};

const DIARY: &str = "\
patient_id,meal,date,time,bg,cho,bolus,basal,ev,pv
p16,BeforeBreakfast,2015-11-02,07:40:00,6.1,45,4.5,,4,0
p16,AfterBreakfast,2015-11-02,09:50:00,9.8,0,0,,4,0
p16,BeforeLunch,2015-11-02,12:10:00,0.6,,5.0,,4,0
p16,AfterLunch,2015-11-02,14:05:00,,0,0,,4,0
p16,BeforeSupper,2015-11-02,18:30:00,7.4,60,,,7,0
p16,BeforeBreakfast,2015-11-03,07:35:00,5.8,40,4.0,,4,0
p16,BeforeLunch,,12:00:00,6.6,55,5.5,,4,0
p16,BeforeLunch,2015-11-03,12:20:00,7.0,,5.0,,4,0
";

fn main() -> glybench::Result<()> {
    let cohort = parse_diary_csv(DIARY.as_bytes())?;
    let raw = &cohort["p16"];
    let (cleaned, report) = clean(raw);
    println!("{} raw records -> {} after cleaning", raw.len(), cleaned.len());
    println!("{report:?}\n");

    for policy in [MissingPolicy::Throwout, MissingPolicy::ImputeMean, MissingPolicy::ImputeZero] {
        let out = impute(&cleaned, ImputationPolicy { cho: policy, bolus: policy });
        println!("{}: {} records kept", policy.label(), out.history.len());
        for r in &out.history.records {
            println!("  {:<16} cho={:<6} bolus={:?}", r.meal.label(), format!("{:?}", r.cho), r.bolus);
        }
        for f in &out.fallbacks {
            println!("  fallback: {f:?}");
        }
    }
    Ok(())
}
