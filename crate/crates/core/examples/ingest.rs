//! Reading event logs from CSV, XES and canonical JSON, then inspecting
//! variants, frequencies and the start/end augmentation.
//!
//! Run: `cargo run -p placeminer --example ingest [path/to/log.{csv,xes,json}]`

use std::error::Error;
use std::path::PathBuf;

use placeminer::log::{parse_csv, parse_xes, CsvColumns, EventLog};

const CSV: &str = "case,activity,order
1,register,1
1,check,2
1,pay,3
2,check,2
2,register,1
2,reject,3
3,register,1
3,check,2
3,pay,3
";

const XES: &str = r#"<log>
  <trace><event><string key="concept:name" value="register"/></event>
         <event><string key="concept:name" value="pay"/></event></trace>
</log>"#;

fn describe(log: &EventLog) {
    println!("  {} traces, {} variants, alphabet {:?}", log.trace_count(), log.variant_count(), log.alphabet());
    for v in log.variants() {
        let names: Vec<&str> = v.events.iter().map(|&a| log.name(a)).collect();
        println!("    {:>3} × ⟨{}⟩", v.count, names.join(", "));
    }
    println!("  digest {}", &log.digest()[..16]);
}

fn main() -> Result<(), Box<dyn Error>> {
    println!("CSV (rows sorted by the order column per case):");
    let log = parse_csv(CSV.as_bytes(), &CsvColumns::default())?;
    describe(&log);

    println!("XES:");
    describe(&parse_xes(XES.as_bytes())?);

    println!("augmented with ▶ and ■:");
    let augmented = log.augment_endpoints();
    describe(&augmented);
    let freq = augmented.activity_frequencies();
    for (name, f) in augmented.alphabet().iter().zip(freq) {
        println!("    {name}: occurs in {f} traces");
    }

    println!("canonical JSON round trip:");
    let back = EventLog::from_json(&log.to_canonical_json())?;
    println!("  same digest: {}", back.digest() == log.digest());

    if let Some(path) = std::env::args().nth(1).map(PathBuf::from) {
        println!("{}:", path.display());
        describe(&EventLog::read_path(&path, &CsvColumns::default())?);
    }
    Ok(())
}
