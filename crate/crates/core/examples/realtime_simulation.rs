//! Follows one bus along its route and shows how the predicted arrival at
//! the last stop settles as more stops are observed.
//!
//! cargo run --example realtime_simulation

use bustime::ingest::Direction;
use bustime::models::{KnnModel, Predictor, Query};
use bustime::pipeline::build_corpora;
use bustime::segmentation::SegmentationConfig;
use bustime::synth::{generate, SynthConfig};

fn clock(s: f64) -> String {
    let s = s.rem_euclid(86_400.0) as u64;
    format!("{:02}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = generate(&SynthConfig { trips: 300, ..SynthConfig::default() })?;
    let corpora = build_corpora(&out.gps, &out.routes, Direction::Outbound, &SegmentationConfig::default());
    let corpus = &corpora.stop;
    let split = corpus.trips.len() * 4 / 5;
    let model = KnnModel::train(&corpus.training_set(&corpus.trips[..split])?, 10)?;

    let trip = &corpus.trips[split];
    let last = trip.times.len() - 1;
    let dep = trip.departure_time_of_day;
    println!("trip {} departs {}; arrives at the last stop {}", trip.trip_id, clock(dep), clock(dep + trip.times[last]));
    for c in (0..last).step_by(8) {
        let q = Query::new(dep, trip.times[..=c].to_vec());
        let p = model.predict(&q)?;
        let eta = *p.estimates.last().unwrap();
        println!(
            "at stop {:>2} ({}): predicted {}  error {:>+6.0} s",
            c,
            clock(dep + trip.times[c]),
            clock(dep + eta),
            eta - trip.times[last]
        );
    }
    Ok(())
}
