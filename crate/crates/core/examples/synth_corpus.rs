//! Generates a synthetic route and GPS feed with injected faults and writes
//! it as GTFS plus CSV.
//!
//! cargo run --example synth_corpus -- [OUT_DIR]

use bustime::synth::{generate, write_all, Corruption, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("bustime_synth"));
    let cfg = SynthConfig { trips: 200, noisy_points: 0.1, missing_segments: 0.05, invalid_trips: 0.05, ..SynthConfig::default() };
    let out = generate(&cfg)?;
    write_all(&out, &dir)?;

    let r = &out.routes.outbound;
    println!("route {} : {} stops, {:.0} m, scheduled {:.0} s", r.route_id, r.stops.len(), r.total_length, r.scheduled_duration);
    println!("{} GPS fixes for {} trips written to {}", out.gps.len(), out.truth.trips.len(), dir.display());
    let count = |f: fn(&Corruption) -> bool| out.truth.trips.iter().filter(|t| t.labels.iter().any(f)).count();
    println!("noisy fixes in      {} trips", count(|c| matches!(c, Corruption::NoisyPoint { .. })));
    println!("missing segments in {} trips", count(|c| matches!(c, Corruption::MissingSegment { .. })));
    println!("invalid             {} trips", count(|c| matches!(c, Corruption::Invalid(_))));
    let t = &out.truth.trips[0];
    println!("trip {} ({}) reaches the last stop after {:.0} s", t.journey_id, t.direction, t.stop_arrivals.last().unwrap());
    Ok(())
}
