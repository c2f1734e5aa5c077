//! Segments a faulty feed into complete trips and checks every decision
//! against the generator's labels.
//!
//! cargo run --example preprocess_pipeline

use bustime::ingest::group_journeys;
use bustime::segmentation::{segment_all, RejectReason, SegmentationConfig};
use bustime::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig { trips: 300, noisy_points: 0.1, missing_segments: 0.1, invalid_trips: 0.1, ..SynthConfig::default() };
    let out = generate(&cfg)?;
    let journeys = group_journeys(&out.gps);
    let seg = segment_all(&journeys, &out.routes, &SegmentationConfig::default());
    println!("{} journeys -> {} fragments -> {} complete trips", journeys.len(), seg.fragment_count(), seg.trips.len());
    for (reason, n) in &seg.tally.0 {
        println!("  rejected {reason:<32} {n}");
    }

    let (mut kept_clean, mut clean) = (0, 0);
    for t in out.truth.trips.iter().filter(|t| t.is_clean()) {
        clean += 1;
        kept_clean += seg.trips.iter().any(|s| s.trip_id.contains(&format!("-{}-", t.journey_id))) as usize;
    }
    println!("clean trips kept: {kept_clean}/{clean}");

    let mut correct = 0;
    let invalid: Vec<_> = out.truth.trips.iter().filter_map(|t| t.invalid_kind().map(|k| (t, k))).collect();
    for (t, kind) in &invalid {
        let reasons: Vec<RejectReason> = seg.rejects.iter().filter(|r| r.vehicle_journey_id == t.journey_id).map(|r| r.reason).collect();
        correct += reasons.contains(&kind.expected_reason()) as usize;
    }
    println!("invalid trips rejected for the expected reason: {correct}/{}", invalid.len());

    let split = seg.trips.iter().filter(|s| out.truth.by_journey(s.trip_id.split('-').nth(1).unwrap_or("")).is_some_and(|t| t.has_missing_segment())).count();
    println!("fragments surviving from trips with a missing segment: {split}");
    Ok(())
}
