//! Raw journeys to clean origin-to-destination trips.
//!
//! Each journey goes through de-duplication, a split at long time gaps,
//! a direction judgment on its first probe points and a completeness check
//! against the scheduled route. Rejected fragments are tallied by reason.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::geo::{haversine, project, GeoPoint};
use crate::ingest::{Direction, GpsRecord, RawJourney, RouteDefinition, RoutePair};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationConfig {
    /// Split when consecutive records are more than this many seconds apart.
    pub gap_split_s: f64,
    /// Fragments with fewer records are dropped; the direction vector runs
    /// from record 1 to this record.
    pub direction_probe_points: usize,
    pub endpoint_radius_m: f64,
    /// Fraction of scheduled duration and route length a trip must cover.
    pub min_completeness_fraction: f64,
    /// Added to UTC epoch seconds to get local time of day.
    pub utc_offset_s: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            gap_split_s: 900.0,
            direction_probe_points: 30,
            endpoint_radius_m: 300.0,
            min_completeness_fraction: 0.5,
            utc_offset_s: 0.0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gap_split_s > 0.0) || self.direction_probe_points < 2 || !(self.endpoint_radius_m > 0.0) {
            return Err("segmentation thresholds must be positive (probe points >= 2)".into());
        }
        if !(self.min_completeness_fraction > 0.0 && self.min_completeness_fraction <= 1.0) {
            return Err("min_completeness_fraction must be in (0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    TooShort,
    AmbiguousDirection,
    EndpointTooFar,
    TooShortInTimeOrDistance,
}

impl RejectReason {
    pub const ALL: [RejectReason; 4] =
        [RejectReason::TooShort, RejectReason::AmbiguousDirection, RejectReason::EndpointTooFar, RejectReason::TooShortInTimeOrDistance];
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::TooShort => "too_short",
            RejectReason::AmbiguousDirection => "ambiguous_direction",
            RejectReason::EndpointTooFar => "endpoint_too_far",
            RejectReason::TooShortInTimeOrDistance => "too_short_in_time_or_distance",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripPoint {
    /// Seconds since the trip's first record.
    pub t: f64,
    /// Meters travelled since the trip's first record.
    pub d: f64,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedTrip {
    pub trip_id: String,
    pub route_id: String,
    pub direction: Direction,
    pub departure_epoch: f64,
    pub departure_time_of_day: f64,
    pub points: Vec<TripPoint>,
}

impl SegmentedTrip {
    pub fn validate(&self, min_points: usize) -> Result<(), String> {
        let p = &self.points;
        if p.len() < min_points {
            return Err(format!("trip {} has {} points, need {min_points}", self.trip_id, p.len()));
        }
        if p[0].t != 0.0 || p[0].d != 0.0 {
            return Err(format!("trip {} does not start at (0, 0)", self.trip_id));
        }
        if let Some(i) = p.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(format!("trip {}: time not increasing at point {}", self.trip_id, i + 1));
        }
        if let Some(i) = p.windows(2).position(|w| w[1].d < w[0].d) {
            return Err(format!("trip {}: distance decreasing at point {}", self.trip_id, i + 1));
        }
        Ok(())
    }

    pub fn travelled(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.d)
    }

    pub fn duration(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.t)
    }
}

/// A fragment that did not become a trip.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentReject {
    pub reason: RejectReason,
    pub vehicle_id: String,
    pub vehicle_journey_id: String,
    pub first_timestamp: f64,
    pub record_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RejectTally(pub BTreeMap<RejectReason, usize>);

impl RejectTally {
    pub fn add(&mut self, reason: RejectReason) {
        *self.0.entry(reason).or_default() += 1;
    }

    pub fn get(&self, reason: RejectReason) -> usize {
        self.0.get(&reason).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn merge(&mut self, other: &RejectTally) {
        for (r, n) in &other.0 {
            *self.0.entry(*r).or_default() += n;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "reason,count")?;
        for r in RejectReason::ALL {
            writeln!(w, "{r},{}", self.get(r))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SegmentationOutcome {
    pub trips: Vec<SegmentedTrip>,
    pub rejects: Vec<FragmentReject>,
    pub tally: RejectTally,
}

impl SegmentationOutcome {
    pub fn fragment_count(&self) -> usize {
        self.trips.len() + self.rejects.len()
    }
}

/// Keeps only the first record of each run of identical positions.
pub fn deduplicate(journey: &RawJourney) -> RawJourney {
    let mut out: Vec<GpsRecord> = Vec::with_capacity(journey.records.len());
    for r in &journey.records {
        if out.last().is_some_and(|p| p.position == r.position) {
            continue;
        }
        out.push(r.clone());
    }
    RawJourney { records: out }
}

/// Cuts between consecutive records more than `gap_split_s` apart.
pub fn split_by_gap(journey: &RawJourney, cfg: &SegmentationConfig) -> Vec<RawJourney> {
    let mut out = Vec::new();
    let mut cur: Vec<GpsRecord> = Vec::new();
    for r in &journey.records {
        if cur.last().is_some_and(|p| r.timestamp - p.timestamp > cfg.gap_split_s) {
            out.push(RawJourney { records: std::mem::take(&mut cur) });
        }
        cur.push(r.clone());
    }
    if !cur.is_empty() {
        out.push(RawJourney { records: cur });
    }
    out
}

fn planar_vector(a: GeoPoint, b: GeoPoint) -> Option<(f64, f64)> {
    project(a, b).ok().map(|p| (p.x, p.y))
}

fn cosine(u: (f64, f64), v: (f64, f64)) -> f64 {
    let nu = u.0.hypot(u.1);
    let nv = v.0.hypot(v.1);
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (u.0 * v.0 + u.1 * v.1) / (nu * nv)
}

/// Compares the record-1 to record-N vector of the fragment against each
/// direction's first-stop to last-stop vector.
pub fn judge_direction(fragment: &RawJourney, routes: &RoutePair, cfg: &SegmentationConfig) -> Result<Direction, RejectReason> {
    let n = cfg.direction_probe_points;
    if fragment.records.len() < n {
        return Err(RejectReason::TooShort);
    }
    let v = planar_vector(fragment.records[0].position, fragment.records[n - 1].position).ok_or(RejectReason::AmbiguousDirection)?;
    let sim = |r: &RouteDefinition| planar_vector(r.first_stop().position, r.last_stop().position).map_or(f64::NEG_INFINITY, |u| cosine(v, u));
    let out = sim(&routes.outbound);
    let inb = sim(&routes.inbound);
    if out <= 0.0 && inb <= 0.0 {
        return Err(RejectReason::AmbiguousDirection);
    }
    Ok(if out >= inb { Direction::Outbound } else { Direction::Inbound })
}

/// Accepts a direction-judged fragment as a trip of `route`.
///
/// Coverage of duration and length is checked before the endpoint radius,
/// so a trip cut short is reported as too short rather than as ending far
/// from the destination.
pub fn check_completeness(
    fragment: &RawJourney,
    route: &RouteDefinition,
    cfg: &SegmentationConfig,
    trip_id: &str,
) -> Result<SegmentedTrip, RejectReason> {
    // equal timestamps with different fixes: keep the first
    let mut recs: Vec<&GpsRecord> = Vec::with_capacity(fragment.records.len());
    for r in &fragment.records {
        if recs.last().is_none_or(|p| r.timestamp > p.timestamp) {
            recs.push(r);
        }
    }
    if recs.len() < cfg.direction_probe_points {
        return Err(RejectReason::TooShort);
    }
    let t0 = recs[0].timestamp;
    let mut points = Vec::with_capacity(recs.len());
    let mut d = 0.0;
    for (i, r) in recs.iter().enumerate() {
        if i > 0 {
            d += haversine(recs[i - 1].position, r.position);
        }
        points.push(TripPoint { t: r.timestamp - t0, d, position: r.position });
    }
    let last = points.last().unwrap();
    let f = cfg.min_completeness_fraction;
    if last.t < f * route.scheduled_duration || last.d < f * route.total_length {
        return Err(RejectReason::TooShortInTimeOrDistance);
    }
    if haversine(points[0].position, route.first_stop().position) > cfg.endpoint_radius_m
        || haversine(last.position, route.last_stop().position) > cfg.endpoint_radius_m
    {
        return Err(RejectReason::EndpointTooFar);
    }
    let trip = SegmentedTrip {
        trip_id: trip_id.to_string(),
        route_id: route.route_id.clone(),
        direction: route.direction,
        departure_epoch: t0,
        departure_time_of_day: (t0 + cfg.utc_offset_s).rem_euclid(86_400.0),
        points,
    };
    debug_assert!(trip.validate(cfg.direction_probe_points).is_ok());
    Ok(trip)
}

/// Runs de-duplication, gap split, direction and completeness on one journey.
pub fn segment_journey(journey: &RawJourney, routes: &RoutePair, cfg: &SegmentationConfig) -> Vec<Result<SegmentedTrip, FragmentReject>> {
    let Some(first) = journey.records.first() else {
        return Vec::new();
    };
    let (vehicle, jid) = (first.vehicle_id.clone(), first.vehicle_journey_id.clone());
    let deduped = deduplicate(journey);
    split_by_gap(&deduped, cfg)
        .into_iter()
        .enumerate()
        .map(|(k, frag)| {
            let reject = |reason| FragmentReject {
                reason,
                vehicle_id: vehicle.clone(),
                vehicle_journey_id: jid.clone(),
                first_timestamp: frag.records[0].timestamp,
                record_count: frag.records.len(),
            };
            let dir = judge_direction(&frag, routes, cfg).map_err(reject)?;
            let trip_id = format!("{vehicle}-{jid}-{k}");
            check_completeness(&frag, routes.get(dir), cfg, &trip_id).map_err(reject)
        })
        .collect()
}

/// Segments every journey; trips come back sorted by departure epoch.
pub fn segment_all(journeys: &[RawJourney], routes: &RoutePair, cfg: &SegmentationConfig) -> SegmentationOutcome {
    let mut out = SegmentationOutcome::default();
    for j in journeys {
        for res in segment_journey(j, routes, cfg) {
            match res {
                Ok(t) => out.trips.push(t),
                Err(r) => {
                    out.tally.add(r.reason);
                    out.rejects.push(r);
                }
            }
        }
    }
    out.trips.sort_by(|a, b| a.departure_epoch.total_cmp(&b.departure_epoch).then_with(|| a.trip_id.cmp(&b.trip_id)));
    out
}

// ---------------------------------------------------------------------------
// trips files
// ---------------------------------------------------------------------------

pub const TRIPS_HEADER: &str = "trip_id,seq,t_i,d_i,lat,lon";
pub const TRIP_INDEX_HEADER: &str = "trip_id,route_id,direction,departure_epoch,departure_time_of_day";

/// Point rows of every trip.
pub fn write_trips<W: Write>(trips: &[SegmentedTrip], mut w: W) -> io::Result<()> {
    writeln!(w, "{TRIPS_HEADER}")?;
    for t in trips {
        for (i, p) in t.points.iter().enumerate() {
            writeln!(w, "{},{},{},{},{},{}", t.trip_id, i, p.t, p.d, p.position.lat, p.position.lon)?;
        }
    }
    Ok(())
}

/// Per-trip metadata that the point file does not carry.
pub fn write_trip_index<W: Write>(trips: &[SegmentedTrip], mut w: W) -> io::Result<()> {
    writeln!(w, "{TRIP_INDEX_HEADER}")?;
    for t in trips {
        writeln!(w, "{},{},{},{},{}", t.trip_id, t.route_id, t.direction, t.departure_epoch, t.departure_time_of_day)?;
    }
    Ok(())
}

/// One row per rejected fragment.
pub fn write_rejects<W: Write>(rejects: &[FragmentReject], mut w: W) -> io::Result<()> {
    writeln!(w, "vehicle_id,vehicle_journey_id,first_timestamp,record_count,reason")?;
    for r in rejects {
        writeln!(w, "{},{},{},{},{}", r.vehicle_id, r.vehicle_journey_id, r.first_timestamp, r.record_count, r.reason)?;
    }
    Ok(())
}

fn bad(line: usize, msg: impl fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
}

fn num(s: &str, line: usize) -> io::Result<f64> {
    s.trim().parse::<f64>().map_err(|e| bad(line, format!("{s:?}: {e}")))
}

/// Reads the pair of files written by [`write_trips`] and [`write_trip_index`].
pub fn read_trips<R1: BufRead, R2: BufRead>(points: R1, index: R2) -> io::Result<Vec<SegmentedTrip>> {
    let mut trips: Vec<SegmentedTrip> = Vec::new();
    let mut pos: std::collections::HashMap<String, usize> = Default::default();
    for (i, line) in index.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(i + 1, "expected 5 columns"));
        }
        let direction = f[2].parse::<Direction>().map_err(|e| bad(i + 1, e))?;
        pos.insert(f[0].to_string(), trips.len());
        trips.push(SegmentedTrip {
            trip_id: f[0].to_string(),
            route_id: f[1].to_string(),
            direction,
            departure_epoch: num(f[3], i + 1)?,
            departure_time_of_day: num(f[4], i + 1)?,
            points: Vec::new(),
        });
    }
    for (i, line) in points.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(i + 1, "expected 6 columns"));
        }
        let &k = pos.get(f[0]).ok_or_else(|| bad(i + 1, format!("trip {} not in index", f[0])))?;
        let position = GeoPoint::new(num(f[4], i + 1)?, num(f[5], i + 1)?).map_err(|e| bad(i + 1, e))?;
        trips[k].points.push(TripPoint { t: num(f[2], i + 1)?, d: num(f[3], i + 1)?, position });
    }
    for t in &trips {
        t.validate(2).map_err(|e| bad(0, e))?;
    }
    Ok(trips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RouteStop;

    fn rec(ts: f64, p: GeoPoint) -> GpsRecord {
        GpsRecord { timestamp: ts, line_id: "L".into(), vehicle_id: "v".into(), vehicle_journey_id: "j".into(), position: p }
    }

    fn origin() -> GeoPoint {
        GeoPoint::new(53.35, -6.30).unwrap()
    }

    /// 5 km straight route due east with 11 stops.
    fn routes() -> RoutePair {
        let o = origin();
        let stops = (0..=10)
            .map(|i| RouteStop { stop_id: format!("s{i}"), position: o.destination(90.0, i as f64 * 500.0), cumulative_distance: i as f64 * 500.0 })
            .collect();
        let out = RouteDefinition::new("r", Direction::Outbound, stops, 1000.0).unwrap();
        RoutePair { inbound: out.reversed(), outbound: out }
    }

    /// `n` records every 30 s moving east at `speed` from `start_m`.
    fn drive(n: usize, start_m: f64, speed: f64) -> RawJourney {
        let o = origin();
        RawJourney::new((0..n).map(|i| rec(1.4e9 + 30.0 * i as f64, o.destination(90.0, start_m + speed * 30.0 * i as f64))).collect())
    }

    #[test]
    fn dedup_collapses_runs_only() {
        let a = origin();
        let b = a.destination(0.0, 50.0);
        let j = RawJourney::new((0..5).map(|i| rec(1e9 + i as f64, a)).chain([rec(1e9 + 9.0, b)]).collect());
        assert_eq!(deduplicate(&j).len(), 2);
        let alt = RawJourney::new([a, b, a, b].iter().enumerate().map(|(i, &p)| rec(1e9 + i as f64, p)).collect());
        assert_eq!(deduplicate(&alt).len(), 4);
    }

    #[test]
    fn gap_split_boundaries() {
        let cfg = SegmentationConfig::default();
        let mk = |gaps: &[f64]| {
            let mut t = 1e9;
            let mut v = vec![rec(t, origin())];
            for (i, g) in gaps.iter().enumerate() {
                t += g;
                v.push(rec(t, origin().destination(0.0, i as f64 + 1.0)));
            }
            RawJourney { records: v }
        };
        let parts = split_by_gap(&mk(&[30.0, 30.0, 901.0, 30.0]), &cfg);
        assert_eq!(parts.iter().map(|p| p.len()).collect::<Vec<_>>(), vec![3, 2]);
        assert_eq!(split_by_gap(&mk(&[30.0, 900.0, 30.0]), &cfg).len(), 1);
        let j = mk(&[10.0, 20.0]);
        assert_eq!(split_by_gap(&j, &cfg), vec![j]);
    }

    #[test]
    fn direction_judgment() {
        let cfg = SegmentationConfig::default();
        let r = routes();
        let fwd = drive(30, 0.0, 5.0);
        assert_eq!(judge_direction(&fwd, &r, &cfg), Ok(Direction::Outbound));
        let mut rev = fwd.clone();
        rev.records.reverse();
        assert_eq!(judge_direction(&rev, &r, &cfg), Ok(Direction::Inbound));
        let short = drive(29, 0.0, 5.0);
        assert_eq!(judge_direction(&short, &r, &cfg), Err(RejectReason::TooShort));
        // out and back: record 30 sits on record 1, no usable heading
        let o = origin();
        let north = RawJourney::new(
            (0..30).map(|i| rec(1e9 + 30.0 * i as f64, o.destination(0.0, 100.0 * i.min(29 - i) as f64))).collect(),
        );
        assert_eq!(judge_direction(&north, &r, &cfg), Err(RejectReason::AmbiguousDirection));
    }

    #[test]
    fn completeness_accepts_full_trip() {
        let cfg = SegmentationConfig::default();
        let r = routes();
        // 5000 m at 5 m/s = 1000 s -> 35 records reach 5100 m
        let j = drive(35, 0.0, 5.0);
        let trip = check_completeness(&j, &r.outbound, &cfg, "t").unwrap();
        assert_eq!(trip.points.len(), 35);
        assert!(trip.validate(30).is_ok());
        for (i, p) in trip.points.iter().enumerate() {
            assert_eq!(p.t, 30.0 * i as f64);
            assert!((p.d - 150.0 * i as f64).abs() < 1e-6);
        }
        assert_eq!(trip.departure_time_of_day, 1.4e9f64.rem_euclid(86400.0));
    }

    #[test]
    fn completeness_rejects() {
        let cfg = SegmentationConfig::default();
        let r = routes();
        // 40% of the route
        let trunc = drive(31, 0.0, 2000.0 / 900.0);
        assert_eq!(check_completeness(&trunc, &r.outbound, &cfg, "t"), Err(RejectReason::TooShortInTimeOrDistance));
        // starts 350 m past the origin stop, still covers > half
        let late = drive(35, 350.0, 4.6);
        assert_eq!(check_completeness(&late, &r.outbound, &cfg, "t"), Err(RejectReason::EndpointTooFar));
        // ends 350 m short of destination but covers enough
        let early = drive(31, 0.0, 4650.0 / 900.0);
        assert_eq!(check_completeness(&early, &r.outbound, &cfg, "t"), Err(RejectReason::EndpointTooFar));
    }

    #[test]
    fn pipeline_counts_fragments() {
        let cfg = SegmentationConfig::default();
        let r = routes();
        let mut recs = drive(35, 0.0, 5.0).records;
        // second trip after a 20 minute layover at the destination
        let last = recs.last().unwrap().clone();
        recs.extend(drive(35, 0.0, 5.0).records.into_iter().map(|mut x| {
            x.timestamp += last.timestamp - 1.4e9 + 1200.0;
            x
        }));
        recs.push(rec(last.timestamp + 5000.0, origin()));
        let out = segment_all(&[RawJourney::new(recs)], &r, &cfg);
        assert_eq!(out.trips.len(), 2);
        assert_eq!(out.tally.get(RejectReason::TooShort), 1);
        assert_eq!(out.fragment_count(), 3);
        assert!(out.trips[0].departure_epoch < out.trips[1].departure_epoch);
        assert!(segment_all(&[], &r, &cfg).trips.is_empty());
    }

    #[test]
    fn trips_file_round_trip() {
        let cfg = SegmentationConfig::default();
        let r = routes();
        let trip = check_completeness(&drive(35, 0.0, 5.0), &r.outbound, &cfg, "v-j-0").unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_trips(std::slice::from_ref(&trip), &mut a).unwrap();
        write_trip_index(std::slice::from_ref(&trip), &mut b).unwrap();
        let back = read_trips(&a[..], &b[..]).unwrap();
        assert_eq!(back, vec![trip]);
    }
}
