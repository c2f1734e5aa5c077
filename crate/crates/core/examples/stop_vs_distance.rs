//! Aligns the same trips to stops and to 100 m marks, then compares kernel
//! regression accuracy and replay cost under each scheme.
//!
//! cargo run --release --example stop_vs_distance

use bustime::alignment::deviation_stats;
use bustime::evalsim::{accuracy, time_predict, AccuracyMode};
use bustime::ingest::Direction;
use bustime::models::KernelModel;
use bustime::pipeline::build_corpora;
use bustime::segmentation::SegmentationConfig;
use bustime::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = generate(&SynthConfig { trips: 600, ..SynthConfig::default() })?;
    let corpora = build_corpora(&out.gps, &out.routes, Direction::Outbound, &SegmentationConfig::default());
    let dev = deviation_stats(&corpora.stop.deviations)?;
    println!("stop matching deviation: mean {:.1} m, median {:.1} m, p99 {:.1} m", dev.mean, dev.p50, dev.p99);

    for corpus in [&corpora.stop, &corpora.distance] {
        let split = corpus.trips.len() * 4 / 5;
        let ts = corpus.training_set(&corpus.trips[..split])?;
        let model = KernelModel::train(&ts, None)?;
        let (records, secs) = time_predict(&model, &corpus.trips[split..])?;
        let acc = accuracy(&records, AccuracyMode::PerEstimate)?;
        println!(
            "{:<15} {:>3} anchors  MAE {:>6.1} s  MAPE {:>5.2} %  {} estimates in {:.3} s",
            corpus.scheme().to_string(),
            corpus.anchors.len(),
            acc.mae,
            acc.mape,
            records.len(),
            secs
        );
    }
    Ok(())
}
