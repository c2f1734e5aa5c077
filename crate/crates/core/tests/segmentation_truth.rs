use bustime::ingest::{group_journeys, Direction, GpsRecord};
use bustime::segmentation::{segment_all, SegmentationConfig};
use bustime::synth::{generate, SpeedModel, SynthConfig};

fn journey_of(trip_id: &str) -> &str {
    trip_id.split('-').nth(1).unwrap()
}

#[test]
fn noise_free_trips_match_generator_truth() {
    let cfg = SynthConfig { trips: 40, gps_noise_sigma: 0.0, ..SynthConfig::default() };
    let out = generate(&cfg).unwrap();
    let seg = segment_all(&group_journeys(&out.gps), &out.routes, &SegmentationConfig::default());
    assert_eq!(seg.trips.len(), 40);
    for trip in &seg.trips {
        let truth = out.truth.by_journey(journey_of(&trip.trip_id)).unwrap();
        assert_eq!(trip.direction, truth.direction);
        assert_eq!(trip.departure_epoch, truth.departure_epoch);
        // deduplication keeps the first of each run of fixes at one position
        let mut fixes = truth.clean.clone();
        fixes.dedup_by(|a, b| a.1 == b.1);
        assert_eq!(trip.points.len(), fixes.len(), "{}", trip.trip_id);
        for (p, (ts, d)) in trip.points.iter().zip(&fixes) {
            assert!((p.t - (ts - truth.departure_epoch)).abs() < 1e-6);
            // straight route: chained chords equal the along-route distance
            assert!((p.d - d).abs() < 0.5, "{}: {} vs {}", trip.trip_id, p.d, d);
        }
    }
}

#[test]
fn noisy_trip_distances_stay_near_truth() {
    let cfg = SynthConfig { trips: 20, ..SynthConfig::default() };
    let out = generate(&cfg).unwrap();
    let seg = segment_all(&group_journeys(&out.gps), &out.routes, &SegmentationConfig::default());
    for trip in &seg.trips {
        let truth = out.truth.by_journey(journey_of(&trip.trip_id)).unwrap();
        let (ts, d) = truth.clean.iter().rev().find(|c| (c.0 - truth.departure_epoch - trip.duration()).abs() < 1e-6).unwrap();
        assert!((ts - truth.departure_epoch - trip.duration()).abs() < 1e-6);
        // chaining noisy fixes adds at most a few noise sigmas per step
        let steps = trip.points.len() as f64;
        assert!(trip.travelled() >= d - 40.0 && trip.travelled() <= d + 4.0 * 10.0 * steps, "{} vs {d}", trip.travelled());
    }
}

#[test]
fn corrupted_corpus_is_sorted_out() {
    let cfg = SynthConfig { trips: 200, noisy_points: 0.1, missing_segments: 0.1, invalid_trips: 0.1, seed: 7, ..SynthConfig::default() };
    let out = generate(&cfg).unwrap();
    let seg = segment_all(&group_journeys(&out.gps), &out.routes, &SegmentationConfig::default());
    let clean: Vec<_> = out.truth.trips.iter().filter(|t| t.is_clean()).collect();
    let kept = clean.iter().filter(|t| seg.trips.iter().any(|s| journey_of(&s.trip_id) == t.journey_id)).count();
    assert!(kept as f64 >= 0.95 * clean.len() as f64, "{kept}/{}", clean.len());
    for t in out.truth.trips.iter().filter(|t| !t.is_clean()) {
        assert!(!seg.trips.iter().any(|s| journey_of(&s.trip_id) == t.journey_id), "{} survived", t.journey_id);
        if let Some(kind) = t.invalid_kind() {
            assert!(seg.rejects.iter().any(|r| r.vehicle_journey_id == t.journey_id && r.reason == kind.expected_reason()), "{}: {kind:?}", t.journey_id);
        }
    }
    assert_eq!(seg.trips.len() + seg.rejects.len(), seg.fragment_count());
    assert!(seg.trips.windows(2).all(|w| w[0].departure_epoch <= w[1].departure_epoch));
}

#[test]
fn layover_splits_one_journey_into_two_trips() {
    let cfg = SynthConfig { trips: 2, speed: SpeedModel::constant(6.0), ..SynthConfig::default() };
    let out = generate(&cfg).unwrap();
    let first: Vec<&GpsRecord> = out.gps.iter().filter(|r| r.vehicle_journey_id == out.truth.trips[0].journey_id).collect();
    let end = first.iter().map(|r| r.timestamp).fold(f64::MIN, f64::max);
    let second = &out.truth.trips[1];
    let shift = end + 1200.0 - second.departure_epoch;
    let mut gps: Vec<GpsRecord> = first.iter().map(|r| (*r).clone()).collect();
    gps.extend(out.gps.iter().filter(|r| r.vehicle_journey_id == second.journey_id).map(|r| GpsRecord {
        timestamp: r.timestamp + shift,
        vehicle_id: first[0].vehicle_id.clone(),
        vehicle_journey_id: first[0].vehicle_journey_id.clone(),
        ..r.clone()
    }));
    let journeys = group_journeys(&gps);
    assert_eq!(journeys.len(), 1);
    let seg = segment_all(&journeys, &out.routes, &SegmentationConfig::default());
    let dirs: Vec<Direction> = seg.trips.iter().map(|t| t.direction).collect();
    assert_eq!(dirs, [Direction::Outbound, Direction::Inbound]);
}

#[test]
fn segmentation_is_deterministic() {
    let cfg = SynthConfig { trips: 60, noisy_points: 0.2, invalid_trips: 0.2, ..SynthConfig::default() };
    let out = generate(&cfg).unwrap();
    let a = segment_all(&group_journeys(&out.gps), &out.routes, &SegmentationConfig::default());
    let b = segment_all(&group_journeys(&out.gps), &out.routes, &SegmentationConfig::default());
    assert_eq!(a.trips, b.trips);
    assert_eq!(a.tally, b.tally);
    assert!(segment_all(&[], &out.routes, &SegmentationConfig::default()).tally.is_empty());
}

#[test]
fn every_missing_segment_splits_its_trip() {
    let cfg = SynthConfig { trips: 30, missing_segments: 1.0, seed: 12, ..SynthConfig::default() };
    let out = generate(&cfg).unwrap();
    let journeys = group_journeys(&out.gps);
    let seg = segment_all(&journeys, &out.routes, &SegmentationConfig::default());
    assert!(out.truth.trips.iter().all(|t| t.has_missing_segment()));
    assert_eq!(seg.fragment_count(), 2 * journeys.len());
    assert!(seg.trips.is_empty(), "{:?}", seg.trips.iter().map(|t| &t.trip_id).collect::<Vec<_>>());
}
