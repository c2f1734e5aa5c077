//! Trips to per-anchor travel-time vectors.
//!
//! Stop-based alignment picks, for each stop in order, the nearest GPS point
//! that is later than every point already used; a per-trip kd-tree answers the
//! nearest-point queries and earlier points are retired as the loop advances.
//! Distance-based alignment interpolates travel time every 100 m.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::geo::{haversine, project, GeoError, GeoPoint, KdTree};
use crate::ingest::RouteDefinition;
use crate::segmentation::SegmentedTrip;

/// Spacing of distance-based anchors in meters.
pub const DISTANCE_ANCHOR_SPACING_M: f64 = 100.0;

// route lengths such as 19000 m can come out as 18999.999999 from float sums
const LENGTH_EPS_M: f64 = 1e-6;
const COVERAGE_EPS_M: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignError {
    #[error("anchor set has scheme {found}, expected {expected}")]
    WrongScheme { expected: Scheme, found: Scheme },
    #[error("trip {trip}: degenerate alignment at anchor {anchor}")]
    DegenerateAlignment { trip: String, anchor: usize },
    #[error("trip {trip} ends at {reached:.1} m, before the last anchor at {needed:.1} m")]
    InsufficientCoverage { trip: String, needed: f64, reached: f64 },
    #[error("trip {trip}: {source}")]
    Projection { trip: String, source: GeoError },
    #[error("no deviations to summarize")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    StopBased,
    DistanceBased,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::StopBased, Scheme::DistanceBased];

    pub fn short_name(self) -> &'static str {
        match self {
            Scheme::StopBased => "stop",
            Scheme::DistanceBased => "distance",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "stop" | "stop_based" | "stop-based" => Ok(Scheme::StopBased),
            "distance" | "distance_based" | "distance-based" => Ok(Scheme::DistanceBased),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub anchor_id: String,
    /// Present for stops, absent for distance marks.
    pub position: Option<GeoPoint>,
    pub cumulative_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub scheme: Scheme,
    pub anchors: Vec<Anchor>,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.anchors.iter().map(|a| a.cumulative_distance).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "anchor_id,scheme,lat,lon,cumulative_distance")?;
        for a in &self.anchors {
            let (lat, lon) = a.position.map_or((String::new(), String::new()), |p| (p.lat.to_string(), p.lon.to_string()));
            writeln!(w, "{},{},{},{},{}", a.anchor_id, self.scheme, lat, lon, a.cumulative_distance)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> io::Result<Self> {
        let mut scheme = None;
        let mut anchors = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let err = |m: String| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {m}", i + 1));
            if f.len() != 5 {
                return Err(err("expected 5 columns".into()));
            }
            let s: Scheme = f[1].parse().map_err(err)?;
            if scheme.is_some_and(|x| x != s) {
                return Err(err("mixed schemes".into()));
            }
            scheme = Some(s);
            let position = if f[2].is_empty() {
                None
            } else {
                let lat = f[2].parse::<f64>().map_err(|e| err(e.to_string()))?;
                let lon = f[3].parse::<f64>().map_err(|e| err(e.to_string()))?;
                Some(GeoPoint::new(lat, lon).map_err(|e| err(e.to_string()))?)
            };
            let d = f[4].parse::<f64>().map_err(|e| err(e.to_string()))?;
            anchors.push(Anchor { anchor_id: f[0].to_string(), position, cumulative_distance: d });
        }
        let scheme = scheme.ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "no anchors"))?;
        Ok(AnchorSet { scheme, anchors })
    }
}

/// Travel time from anchor 0 to each anchor for one trip.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTrip {
    pub trip_id: String,
    /// Unix epoch of the trip's first record; not stored in aligned CSV files.
    pub departure_epoch: Option<f64>,
    pub departure_time_of_day: f64,
    pub times: Vec<f64>,
}

impl AlignedTrip {
    pub fn validate(&self) -> Result<(), String> {
        if self.times.first() != Some(&0.0) {
            return Err(format!("trip {}: times[0] must be 0", self.trip_id));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(format!("trip {}: times not strictly increasing", self.trip_id));
        }
        Ok(())
    }
}

/// Stop anchors and 100 m marks for a route.
pub fn build_anchor_sets(route: &RouteDefinition) -> (AnchorSet, AnchorSet) {
    let stop_based = AnchorSet {
        scheme: Scheme::StopBased,
        anchors: route
            .stops
            .iter()
            .map(|s| Anchor { anchor_id: s.stop_id.clone(), position: Some(s.position), cumulative_distance: s.cumulative_distance })
            .collect(),
    };
    let marks = ((route.total_length + LENGTH_EPS_M) / DISTANCE_ANCHOR_SPACING_M).floor() as usize;
    let distance_based = AnchorSet {
        scheme: Scheme::DistanceBased,
        anchors: (0..=marks)
            .map(|k| {
                let d = k as f64 * DISTANCE_ANCHOR_SPACING_M;
                Anchor { anchor_id: format!("m{d}"), position: None, cumulative_distance: d }
            })
            .collect(),
    };
    (stop_based, distance_based)
}

fn aligned(trip: &SegmentedTrip, anchor0_t: f64, times: Vec<f64>) -> AlignedTrip {
    AlignedTrip {
        trip_id: trip.trip_id.clone(),
        departure_epoch: Some(trip.departure_epoch + anchor0_t),
        departure_time_of_day: (trip.departure_time_of_day + anchor0_t).rem_euclid(86_400.0),
        times,
    }
}

/// Nearest-point stop alignment with chronological retirement.
/// Returns the aligned trip and the stop-to-point deviation of every stop.
pub fn align_stop_based(trip: &SegmentedTrip, anchors: &AnchorSet) -> Result<(AlignedTrip, Vec<f64>), AlignError> {
    if anchors.scheme != Scheme::StopBased {
        return Err(AlignError::WrongScheme { expected: Scheme::StopBased, found: anchors.scheme });
    }
    let origin = anchors.anchors[0].position.expect("stop anchors carry positions");
    let proj = |p: GeoPoint| project(origin, p).map_err(|source| AlignError::Projection { trip: trip.trip_id.clone(), source });
    let pts = trip.points.iter().enumerate().map(|(i, p)| Ok((proj(p.position)?, i))).collect::<Result<Vec<_>, AlignError>>()?;
    let mut tree = KdTree::build(&pts);
    let mut raw_times = Vec::with_capacity(anchors.len());
    let mut deviations = Vec::with_capacity(anchors.len());
    for (k, a) in anchors.anchors.iter().enumerate() {
        let stop = a.position.expect("stop anchors carry positions");
        let (id, _) = tree.nearest(proj(stop)?).ok_or(AlignError::DegenerateAlignment { trip: trip.trip_id.clone(), anchor: k })?;
        let t = trip.points[id].t;
        if raw_times.last().is_some_and(|&prev| t <= prev) {
            return Err(AlignError::DegenerateAlignment { trip: trip.trip_id.clone(), anchor: k });
        }
        raw_times.push(t);
        deviations.push(haversine(stop, trip.points[id].position));
        tree.retire_through(id);
    }
    let t0 = raw_times[0];
    let times = raw_times.iter().map(|t| t - t0).collect();
    Ok((aligned(trip, t0, times), deviations))
}

/// Linear interpolation of travel time at every 100 m mark.
pub fn align_distance_based(trip: &SegmentedTrip, anchors: &AnchorSet) -> Result<AlignedTrip, AlignError> {
    if anchors.scheme != Scheme::DistanceBased {
        return Err(AlignError::WrongScheme { expected: Scheme::DistanceBased, found: anchors.scheme });
    }
    let pts = &trip.points;
    let reached = trip.travelled();
    let needed = anchors.anchors.last().map_or(0.0, |a| a.cumulative_distance);
    if reached + COVERAGE_EPS_M < needed {
        return Err(AlignError::InsufficientCoverage { trip: trip.trip_id.clone(), needed, reached });
    }
    let mut times = Vec::with_capacity(anchors.len());
    let mut j = 0usize;
    for a in &anchors.anchors {
        let target = a.cumulative_distance;
        // first point with d >= target
        while j < pts.len() && pts[j].d < target {
            j += 1;
        }
        let t = if j == pts.len() {
            pts[j - 1].t
        } else if pts[j].d == target || j == 0 {
            pts[j].t
        } else {
            let (p, q) = (&pts[j - 1], &pts[j]);
            p.t + (target - p.d) / (q.d - p.d) * (q.t - p.t)
        };
        times.push(t);
    }
    // stationary stretches (equal d) can give equal interpolated times only if
    // two anchors coincide, which spacing rules out; t is strictly increasing
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        let k = times.windows(2).position(|w| !(w[1] > w[0])).unwrap() + 1;
        return Err(AlignError::DegenerateAlignment { trip: trip.trip_id.clone(), anchor: k });
    }
    Ok(aligned(trip, 0.0, times))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationStats {
    pub mean: f64,
    pub std: f64,
    pub p1: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p99: f64,
    pub count: usize,
}

impl DeviationStats {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "mean,std,1%,25%,50%,75%,99%")?;
        writeln!(w, "{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}", self.mean, self.std, self.p1, self.p25, self.p50, self.p75, self.p99)
    }
}

/// Percentile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, population std and 1/25/50/75/99 percentiles.
pub fn deviation_stats(deviations: &[f64]) -> Result<DeviationStats, AlignError> {
    if deviations.is_empty() {
        return Err(AlignError::EmptyInput);
    }
    let n = deviations.len() as f64;
    let mean = deviations.iter().sum::<f64>() / n;
    let var = deviations.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let mut s = deviations.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(DeviationStats {
        mean,
        std: var.sqrt(),
        p1: percentile(&s, 1.0),
        p25: percentile(&s, 25.0),
        p50: percentile(&s, 50.0),
        p75: percentile(&s, 75.0),
        p99: percentile(&s, 99.0),
        count: deviations.len(),
    })
}

pub fn aligned_header(n: usize) -> String {
    let mut h = String::from("trip_id,departure_time_of_day");
    for i in 0..n {
        h.push_str(&format!(",t_{i}"));
    }
    h
}

/// `trip_id, departure_time_of_day, t_0..t_{n-1}` rows with a header.
pub fn write_aligned<W: Write>(trips: &[AlignedTrip], n: usize, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", aligned_header(n))?;
    for t in trips {
        write!(w, "{},{}", t.trip_id, t.departure_time_of_day)?;
        for x in &t.times {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads an aligned-trips file. Departure epochs are not stored there, so
/// they come back as `None`; row order is taken as chronological order.
pub fn read_aligned<R: BufRead>(r: R) -> io::Result<Vec<AlignedTrip>> {
    let mut out = Vec::new();
    let mut width = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let err = |m: String| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {m}", i + 1));
        if i == 0 {
            if !line.starts_with("trip_id") {
                return Err(err("missing header".into()));
            }
            width = Some(line.split(',').count());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if Some(f.len()) != width {
            return Err(err(format!("expected {} columns, found {}", width.unwrap_or(0), f.len())));
        }
        let nums = f[1..].iter().map(|s| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")))).collect::<Result<Vec<_>, _>>()?;
        let t = AlignedTrip { trip_id: f[0].to_string(), departure_epoch: None, departure_time_of_day: nums[0], times: nums[1..].to_vec() };
        t.validate().map_err(err)?;
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Direction, RouteStop};
    use crate::segmentation::TripPoint;

    fn origin() -> GeoPoint {
        GeoPoint::new(53.35, -6.30).unwrap()
    }

    fn route(len: f64, stops: usize) -> RouteDefinition {
        let o = origin();
        let sp = len / (stops - 1) as f64;
        let stops = (0..stops)
            .map(|i| RouteStop { stop_id: format!("s{i}"), position: o.destination(90.0, i as f64 * sp), cumulative_distance: i as f64 * sp })
            .collect();
        RouteDefinition::new("r", Direction::Outbound, stops, 3600.0).unwrap()
    }

    fn trip_from(points: Vec<(f64, f64)>) -> SegmentedTrip {
        let o = origin();
        SegmentedTrip {
            trip_id: "t".into(),
            route_id: "r".into(),
            direction: Direction::Outbound,
            departure_epoch: 1.4e9,
            departure_time_of_day: 3600.0,
            points: points.into_iter().map(|(t, d)| TripPoint { t, d, position: o.destination(90.0, d) }).collect(),
        }
    }

    #[test]
    fn anchor_counts() {
        let (s, d) = build_anchor_sets(&route(19_000.0, 59));
        assert_eq!((s.len(), d.len()), (59, 191));
        let (_, d) = build_anchor_sets(&route(250.0, 2));
        assert_eq!(d.distances(), vec![0.0, 100.0, 200.0]);
        let (s, _) = build_anchor_sets(&route(250.0, 2));
        assert_eq!(s.len(), 2);
        // a hair under 19 km from float accumulation still yields 191 marks
        let (_, d) = build_anchor_sets(&route(19_000.0 - 1e-9, 59));
        assert_eq!(d.len(), 191);
    }

    #[test]
    fn distance_interpolation() {
        let (_, anchors) = build_anchor_sets(&route(150.0, 2));
        let a = align_distance_based(&trip_from(vec![(0.0, 0.0), (60.0, 150.0)]), &anchors).unwrap();
        assert_eq!(a.times, vec![0.0, 40.0]);
        let b = align_distance_based(&trip_from(vec![(0.0, 0.0), (25.0, 100.0), (60.0, 150.0)]), &anchors).unwrap();
        assert_eq!(b.times, vec![0.0, 25.0]);
        let short = align_distance_based(&trip_from(vec![(0.0, 0.0), (60.0, 99.0)]), &anchors);
        assert!(matches!(short, Err(AlignError::InsufficientCoverage { .. })));
    }

    #[test]
    fn constant_speed_distance_times() {
        let v = 7.5;
        let (_, anchors) = build_anchor_sets(&route(2_000.0, 5));
        let pts = (0..=80).map(|i| (i as f64 * 3.7, i as f64 * 3.7 * v)).collect();
        let a = align_distance_based(&trip_from(pts), &anchors).unwrap();
        for (k, t) in a.times.iter().enumerate() {
            assert!((t - k as f64 * 100.0 / v).abs() < 1e-9);
        }
    }

    #[test]
    fn stop_exact_hits() {
        let r = route(1_000.0, 5);
        let (anchors, _) = build_anchor_sets(&r);
        let trip = trip_from(vec![(0.0, 0.0), (30.0, 250.0), (70.0, 500.0), (100.0, 750.0), (150.0, 1000.0)]);
        let (a, dev) = align_stop_based(&trip, &anchors).unwrap();
        assert_eq!(a.times, vec![0.0, 30.0, 70.0, 100.0, 150.0]);
        assert!(dev.iter().all(|&d| d < 1e-6));
    }

    #[test]
    fn doubling_back_respects_chronology() {
        // stops at 0, 500, 1000 m east. The bus first runs out to 995 m
        // (5 m from stop 2), comes back past stop 1, then returns to within
        // 40 m of stop 2. Stop 2's global nearest point is the early pass;
        // retirement after stop 1 forces the later one.
        let o = origin();
        let at = |east: f64, north: f64| o.destination(90.0, east).destination(0.0, north);
        let path = [(0.0, at(0.0, 0.0)), (60.0, at(995.0, 0.0)), (120.0, at(500.0, 5.0)), (180.0, at(1000.0, 40.0))];
        let mut d = 0.0;
        let mut points = Vec::new();
        for (i, &(t, p)) in path.iter().enumerate() {
            if i > 0 {
                d += haversine(path[i - 1].1, p);
            }
            points.push(TripPoint { t, d, position: p });
        }
        let mut trip = trip_from(vec![(0.0, 0.0)]);
        trip.points = points;
        let (anchors, _) = build_anchor_sets(&route(1_000.0, 3));
        // hand simulation: stop0 -> p0, retire p0; stop1 -> p2 (5 m; p1 is
        // 495 m away), retire p0..p2; stop2 -> p3 (p1 retired)
        let (a, dev) = align_stop_based(&trip, &anchors).unwrap();
        assert_eq!(a.times, vec![0.0, 120.0, 180.0]);
        assert!((dev[1] - 5.0).abs() < 0.01);
        assert!((dev[2] - 40.0).abs() < 0.01);
    }

    #[test]
    fn stop_alignment_exhausts() {
        let r = route(1_000.0, 5);
        let (anchors, _) = build_anchor_sets(&r);
        let trip = trip_from(vec![(0.0, 0.0), (30.0, 500.0), (60.0, 1000.0)]);
        assert!(matches!(align_stop_based(&trip, &anchors), Err(AlignError::DegenerateAlignment { .. })));
    }

    #[test]
    fn wrong_scheme() {
        let (s, d) = build_anchor_sets(&route(1_000.0, 3));
        let trip = trip_from(vec![(0.0, 0.0), (60.0, 1000.0)]);
        assert!(matches!(align_stop_based(&trip, &d), Err(AlignError::WrongScheme { .. })));
        assert!(matches!(align_distance_based(&trip, &s), Err(AlignError::WrongScheme { .. })));
    }

    #[test]
    fn stats_basic() {
        let s = deviation_stats(&[5.0; 4]).unwrap();
        assert_eq!((s.mean, s.std, s.p1, s.p50, s.p99), (5.0, 0.0, 5.0, 5.0, 5.0));
        let s = deviation_stats(&[7.0]).unwrap();
        assert_eq!((s.mean, s.std, s.p1, s.p25, s.p75, s.p99, s.count), (7.0, 0.0, 7.0, 7.0, 7.0, 7.0, 1));
        assert_eq!(deviation_stats(&[]), Err(AlignError::EmptyInput));
        // 1..=5: p25 at rank 1 -> 2, p99 at rank 3.96 -> 4.96
        let s = deviation_stats(&[3.0, 1.0, 5.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.p25, 2.0);
        assert!((s.p99 - 4.96).abs() < 1e-12);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aligned_csv_round_trip() {
        let t = AlignedTrip { trip_id: "a".into(), departure_epoch: None, departure_time_of_day: 3600.5, times: vec![0.0, 12.25, 40.0] };
        let mut buf = Vec::new();
        write_aligned(std::slice::from_ref(&t), 3, &mut buf).unwrap();
        assert!(std::str::from_utf8(&buf).unwrap().starts_with("trip_id,departure_time_of_day,t_0,t_1,t_2\n"));
        assert_eq!(read_aligned(&buf[..]).unwrap(), vec![t]);
    }
}
