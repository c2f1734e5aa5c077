//! Runs a small benchmark grid over training-set sizes, models and anchor
//! schemes, and writes the result tables.
//!
//! cargo run --release --example scaling_bench -- [OUT_DIR]

use bustime::bench::{emit_tables, run_bench, BenchPlan, EmitOptions, GroupSize};
use bustime::ingest::Direction;
use bustime::pipeline::build_corpora;
use bustime::segmentation::SegmentationConfig;
use bustime::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("bustime_bench"));
    let out = generate(&SynthConfig { trips: 300, ..SynthConfig::default() })?;
    let corpora = build_corpora(&out.gps, &out.routes, Direction::Outbound, &SegmentationConfig::default());

    let mut plan = BenchPlan::reduced();
    plan.groups = vec![GroupSize::First(50), GroupSize::First(100), GroupSize::Full];
    plan.lstm_groups = [(GroupSize::First(50), 10)].into();
    let report = run_bench(&plan, &[&corpora.stop, &corpora.distance])?;
    for row in &report.rows {
        let mae = row.accuracy.as_ref().map_or(f64::NAN, |a| a.mae);
        println!("{:>5} {:<6} {:<15} MAE {:>7.1} s  train {:.3} s  predict {:.3} s", row.group.to_string(), row.model.name(), row.scheme.to_string(), mae, row.train_s, row.predict_s);
    }
    for p in emit_tables(&report, &dir, EmitOptions::default())? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
