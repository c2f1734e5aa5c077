//! Trains every predictor on one corpus and scores it by replaying the
//! held-out trips.
//!
//! cargo run --release --example models_tour

use bustime::evalsim::{accuracy, simulate, time_train, AccuracyMode};
use bustime::ingest::Direction;
use bustime::models::{train, LstmConfig, ModelConfig, ModelKind};
use bustime::pipeline::build_corpora;
use bustime::segmentation::SegmentationConfig;
use bustime::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = generate(&SynthConfig { trips: 400, ..SynthConfig::default() })?;
    let corpora = build_corpora(&out.gps, &out.routes, Direction::Outbound, &SegmentationConfig::default());
    let corpus = &corpora.stop;
    let split = corpus.trips.len() * 4 / 5;
    let ts = corpus.training_set(&corpus.trips[..split])?;
    let test = &corpus.trips[split..];
    let cfg = ModelConfig { lstm: LstmConfig { hidden: 8, epochs: 40, ..LstmConfig::default() }, ..ModelConfig::default() };

    println!("{} training trips, {} test trips, {} stops", ts.len(), test.len(), ts.anchor_count());
    println!("{:<9} {:>9} {:>9} {:>8} {:>8}", "model", "MAE s", "RMSE s", "MAPE %", "train s");
    let kinds = [ModelKind::Constant, ModelKind::Delay, ModelKind::Knn, ModelKind::Kr, ModelKind::Bam, ModelKind::Lstm];
    for kind in kinds {
        let (model, secs) = time_train(|| train(kind, &ts, &cfg))?;
        let acc = accuracy(&simulate(&model, test)?, AccuracyMode::PerEstimate)?;
        println!("{:<9} {:>9.1} {:>9.2} {:>8.2} {:>8.2}", kind.name(), acc.mae, acc.rmse, acc.mape, secs);
    }
    Ok(())
}
