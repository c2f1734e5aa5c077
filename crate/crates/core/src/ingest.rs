//! GTFS schedule and raw GPS feed parsing.
//!
//! The GPS layout is the 15-column public Dublin feed:
//!
//! ```text
//! timestamp_us, line_id, direction, journey_pattern, timeframe,
//! vehicle_journey_id, operator, congestion, lon, lat, delay, block,
//! vehicle_id, stop_id, at_stop
//! ```
//!
//! Only the timestamp, line, journey, vehicle and coordinate columns are
//! kept. A header row is optional and detected by a non-numeric first field.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geo::{haversine, project, GeoPoint, PlanarPoint};

/// 2000-01-01T00:00:00Z. Earlier timestamps are treated as sensor garbage.
pub const MIN_VALID_EPOCH_S: f64 = 946_684_800.0;

const GPS_MIN_COLUMNS: usize = 13;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing GTFS file {0}")]
    MissingFile(PathBuf),
    #[error("cannot read {path}: {source}")]
    UnreadableFile { path: PathBuf, source: io::Error },
    #[error("{file}:{line}: {reason}")]
    MalformedRow { file: PathBuf, line: u64, reason: String },
    #[error("route {0} has no stops")]
    RouteWithoutStops(String),
    #[error("route {route}: {reason}")]
    InvalidRoute { route: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Outbound,
    Inbound,
}

impl Direction {
    /// GTFS `direction_id`: 0 is outbound, 1 inbound.
    pub fn from_gtfs(id: &str) -> Option<Self> {
        match id.trim() {
            "" | "0" => Some(Direction::Outbound),
            "1" => Some(Direction::Inbound),
            _ => None,
        }
    }

    pub fn gtfs_id(self) -> u8 {
        match self {
            Direction::Outbound => 0,
            Direction::Inbound => 1,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Outbound => Direction::Inbound,
            Direction::Inbound => Direction::Outbound,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Outbound => "outbound",
            Direction::Inbound => "inbound",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "outbound" | "0" => Ok(Direction::Outbound),
            "inbound" | "1" => Ok(Direction::Inbound),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// One raw telemetry row.
#[derive(Debug, Clone, PartialEq)]
pub struct GpsRecord {
    /// Unix epoch seconds.
    pub timestamp: f64,
    pub line_id: String,
    pub vehicle_id: String,
    pub vehicle_journey_id: String,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteStop {
    pub stop_id: String,
    pub position: GeoPoint,
    /// Meters from the first stop along the route.
    pub cumulative_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteDefinition {
    pub route_id: String,
    pub direction: Direction,
    pub stops: Vec<RouteStop>,
    /// Scheduled first-departure to last-arrival, seconds.
    pub scheduled_duration: f64,
    /// Meters; equals the last stop's cumulative distance.
    pub total_length: f64,
}

impl RouteDefinition {
    /// Validates the stop list and derives `total_length`.
    pub fn new(route_id: impl Into<String>, direction: Direction, stops: Vec<RouteStop>, scheduled_duration: f64) -> Result<Self, IngestError> {
        let route_id = route_id.into();
        if stops.len() < 2 {
            return Err(IngestError::RouteWithoutStops(route_id));
        }
        if stops[0].cumulative_distance != 0.0 {
            return Err(IngestError::InvalidRoute { route: route_id, reason: "first stop distance is not 0".into() });
        }
        if let Some(w) = stops.windows(2).find(|w| w[1].cumulative_distance <= w[0].cumulative_distance) {
            return Err(IngestError::InvalidRoute {
                route: route_id,
                reason: format!("stop distances not strictly increasing at stop {}", w[1].stop_id),
            });
        }
        let total_length = stops.last().unwrap().cumulative_distance;
        Ok(Self { route_id, direction, stops, scheduled_duration, total_length })
    }

    pub fn first_stop(&self) -> &RouteStop {
        &self.stops[0]
    }

    pub fn last_stop(&self) -> &RouteStop {
        self.stops.last().unwrap()
    }

    /// The same stops traversed in the opposite direction.
    pub fn reversed(&self) -> RouteDefinition {
        let total = self.total_length;
        let stops = self
            .stops
            .iter()
            .rev()
            .map(|s| RouteStop { stop_id: s.stop_id.clone(), position: s.position, cumulative_distance: total - s.cumulative_distance })
            .collect();
        RouteDefinition {
            route_id: self.route_id.clone(),
            direction: self.direction.reversed(),
            stops,
            scheduled_duration: self.scheduled_duration,
            total_length: total,
        }
    }
}

/// Both directions of one line.
#[derive(Debug, Clone)]
pub struct RoutePair {
    pub outbound: RouteDefinition,
    pub inbound: RouteDefinition,
}

impl RoutePair {
    /// Picks `route_id` from parsed routes. A missing inbound direction is
    /// synthesized by reversing the outbound stop list.
    pub fn select(routes: &[RouteDefinition], route_id: &str) -> Result<Self, IngestError> {
        let find = |d| routes.iter().find(|r| r.route_id == route_id && r.direction == d).cloned();
        match (find(Direction::Outbound), find(Direction::Inbound)) {
            (Some(outbound), Some(inbound)) => Ok(Self { outbound, inbound }),
            (Some(outbound), None) => Ok(Self { inbound: outbound.reversed(), outbound }),
            (None, Some(inbound)) => Ok(Self { outbound: inbound.reversed(), inbound }),
            (None, None) => Err(IngestError::RouteWithoutStops(route_id.to_string())),
        }
    }

    pub fn get(&self, direction: Direction) -> &RouteDefinition {
        match direction {
            Direction::Outbound => &self.outbound,
            Direction::Inbound => &self.inbound,
        }
    }
}

/// Records of one (vehicle, vehicle journey) pair in time order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawJourney {
    pub records: Vec<GpsRecord>,
}

impl RawJourney {
    pub fn new(mut records: Vec<GpsRecord>) -> Self {
        records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

// ---------------------------------------------------------------------------
// GTFS
// ---------------------------------------------------------------------------

struct Table {
    path: PathBuf,
    reader: csv::Reader<fs::File>,
    columns: HashMap<String, usize>,
}

impl Table {
    fn open(dir: &Path, name: &str) -> Result<Option<Self>, IngestError> {
        let path = dir.join(name);
        if !path.exists() {
            return Ok(None);
        }
        let file = fs::File::open(&path).map_err(|source| IngestError::UnreadableFile { path: path.clone(), source })?;
        let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file);
        let headers = reader
            .headers()
            .map_err(|e| IngestError::MalformedRow { file: path.clone(), line: 1, reason: e.to_string() })?
            .clone();
        let columns = headers.iter().enumerate().map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i)).collect();
        Ok(Some(Self { path, reader, columns }))
    }

    fn require(dir: &Path, name: &str) -> Result<Self, IngestError> {
        Self::open(dir, name)?.ok_or_else(|| IngestError::MissingFile(dir.join(name)))
    }

    fn column(&self, name: &str) -> Result<usize, IngestError> {
        self.columns.get(name).copied().ok_or_else(|| IngestError::MalformedRow {
            file: self.path.clone(),
            line: 1,
            reason: format!("missing column {name}"),
        })
    }

    fn rows(&mut self) -> impl Iterator<Item = Result<(u64, csv::StringRecord), IngestError>> + '_ {
        let path = self.path.clone();
        self.reader.records().map(move |r| {
            r.map(|rec| (rec.position().map_or(0, |p| p.line()), rec))
                .map_err(|e| IngestError::MalformedRow { file: path.clone(), line: e.position().map_or(0, |p| p.line()), reason: e.to_string() })
        })
    }
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, file: &Path, line: u64) -> Result<&'a str, IngestError> {
    rec.get(idx).ok_or_else(|| IngestError::MalformedRow { file: file.to_path_buf(), line, reason: format!("missing field {idx}") })
}

fn parse_num(s: &str, file: &Path, line: u64, what: &str) -> Result<f64, IngestError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| IngestError::MalformedRow { file: file.to_path_buf(), line, reason: format!("bad {what} {s:?}") })
}

/// `HH:MM:SS` (hours may exceed 23) to seconds.
pub fn parse_gtfs_time(s: &str) -> Option<f64> {
    let mut parts = s.trim().split(':');
    let h: u32 = parts.next()?.parse().ok()?;
    let m: u32 = parts.next()?.parse().ok()?;
    let sec: u32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || m >= 60 || sec >= 60 {
        return None;
    }
    Some((h * 3600 + m * 60 + sec) as f64)
}

pub fn format_gtfs_time(seconds: f64) -> String {
    let s = seconds.round() as u64;
    format!("{:02}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60)
}

struct StopTime {
    seq: u32,
    stop_id: String,
    arrival: Option<f64>,
    departure: Option<f64>,
    shape_dist: Option<f64>,
    line: u64,
}

type RouteKey = (String, Direction);
/// A trip id and its optional shape id.
type TripShape = (String, Option<String>);

/// Reads a GTFS directory and returns one route per (route, direction).
///
/// Each direction is represented by its trip with the most stop times.
/// Stop distances come from `shape_dist_traveled` when every stop has one,
/// otherwise from projecting stops onto the trip's shape, otherwise from
/// chaining haversine distances between consecutive stops.
pub fn parse_gtfs(dir: &Path) -> Result<Vec<RouteDefinition>, IngestError> {
    let mut routes_tbl = Table::require(dir, "routes.txt")?;
    let mut trips_tbl = Table::require(dir, "trips.txt")?;
    let mut stops_tbl = Table::require(dir, "stops.txt")?;
    let mut st_tbl = Table::require(dir, "stop_times.txt")?;
    let shapes_tbl = Table::open(dir, "shapes.txt")?;

    let rid = routes_tbl.column("route_id")?;
    let routes_path = routes_tbl.path.clone();
    let mut known_routes = Vec::new();
    for row in routes_tbl.rows() {
        let (line, rec) = row?;
        known_routes.push(field(&rec, rid, &routes_path, line)?.to_string());
    }

    let (sid, slat, slon) = (stops_tbl.column("stop_id")?, stops_tbl.column("stop_lat")?, stops_tbl.column("stop_lon")?);
    let mut stops: HashMap<String, GeoPoint> = HashMap::new();
    let stops_path = stops_tbl.path.clone();
    for row in stops_tbl.rows() {
        let (line, rec) = row?;
        let lat = parse_num(field(&rec, slat, &stops_path, line)?, &stops_path, line, "stop_lat")?;
        let lon = parse_num(field(&rec, slon, &stops_path, line)?, &stops_path, line, "stop_lon")?;
        let p = GeoPoint::new(lat, lon).map_err(|e| IngestError::MalformedRow { file: stops_path.clone(), line, reason: e.to_string() })?;
        stops.insert(field(&rec, sid, &stops_path, line)?.to_string(), p);
    }

    let (t_route, t_trip) = (trips_tbl.column("route_id")?, trips_tbl.column("trip_id")?);
    let t_dir = trips_tbl.columns.get("direction_id").copied();
    let t_shape = trips_tbl.columns.get("shape_id").copied();
    let trips_path = trips_tbl.path.clone();
    // (route, direction) -> trip ids in file order
    let mut pairs: Vec<(RouteKey, Vec<TripShape>)> = Vec::new();
    for row in trips_tbl.rows() {
        let (line, rec) = row?;
        let route = field(&rec, t_route, &trips_path, line)?.to_string();
        if !known_routes.contains(&route) {
            return Err(IngestError::MalformedRow { file: trips_path.clone(), line, reason: format!("unknown route_id {route}") });
        }
        let dir_raw = t_dir.and_then(|i| rec.get(i)).unwrap_or("");
        let direction = Direction::from_gtfs(dir_raw)
            .ok_or_else(|| IngestError::MalformedRow { file: trips_path.clone(), line, reason: format!("bad direction_id {dir_raw:?}") })?;
        let trip = field(&rec, t_trip, &trips_path, line)?.to_string();
        let shape = t_shape.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()).map(str::to_string);
        let key = (route, direction);
        match pairs.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push((trip, shape)),
            None => pairs.push((key, vec![(trip, shape)])),
        }
    }

    let (st_trip, st_stop, st_seq) = (st_tbl.column("trip_id")?, st_tbl.column("stop_id")?, st_tbl.column("stop_sequence")?);
    let st_arr = st_tbl.columns.get("arrival_time").copied();
    let st_dep = st_tbl.columns.get("departure_time").copied();
    let st_dist = st_tbl.columns.get("shape_dist_traveled").copied();
    let st_path = st_tbl.path.clone();
    let mut stop_times: HashMap<String, Vec<StopTime>> = HashMap::new();
    for row in st_tbl.rows() {
        let (line, rec) = row?;
        let seq = field(&rec, st_seq, &st_path, line)?
            .parse::<u32>()
            .map_err(|e| IngestError::MalformedRow { file: st_path.clone(), line, reason: format!("bad stop_sequence: {e}") })?;
        let stop_id = field(&rec, st_stop, &st_path, line)?.to_string();
        if !stops.contains_key(&stop_id) {
            return Err(IngestError::MalformedRow { file: st_path.clone(), line, reason: format!("unknown stop_id {stop_id}") });
        }
        let time = |col: Option<usize>| -> Result<Option<f64>, IngestError> {
            match col.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()) {
                None => Ok(None),
                Some(s) => parse_gtfs_time(s)
                    .map(Some)
                    .ok_or_else(|| IngestError::MalformedRow { file: st_path.clone(), line, reason: format!("bad time {s:?}") }),
            }
        };
        let arrival = time(st_arr)?;
        let departure = time(st_dep)?;
        let shape_dist = match st_dist.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => Some(parse_num(s, &st_path, line, "shape_dist_traveled")?),
        };
        stop_times
            .entry(field(&rec, st_trip, &st_path, line)?.to_string())
            .or_default()
            .push(StopTime { seq, stop_id, arrival, departure, shape_dist, line });
    }

    let shapes = match shapes_tbl {
        Some(tbl) => read_shapes(tbl)?,
        None => HashMap::new(),
    };

    let mut out = Vec::with_capacity(pairs.len());
    for ((route_id, direction), trips) in pairs {
        let mut best: Option<(&Vec<StopTime>, &Option<String>)> = None;
        for (trip, shape) in &trips {
            if let Some(sts) = stop_times.get(trip) {
                if best.is_none_or(|(b, _)| sts.len() > b.len()) {
                    best = Some((sts, shape));
                }
            }
        }
        let Some((sts, shape)) = best else {
            return Err(IngestError::RouteWithoutStops(route_id));
        };
        let mut sts: Vec<&StopTime> = sts.iter().collect();
        sts.sort_by_key(|s| s.seq);
        if sts.len() < 2 {
            return Err(IngestError::RouteWithoutStops(route_id));
        }
        let positions: Vec<GeoPoint> = sts.iter().map(|s| stops[&s.stop_id]).collect();
        let distances = if sts.iter().all(|s| s.shape_dist.is_some()) {
            let d0 = sts[0].shape_dist.unwrap();
            sts.iter().map(|s| s.shape_dist.unwrap() - d0).collect()
        } else if let Some(poly) = shape.as_ref().and_then(|s| shapes.get(s)).filter(|p| p.len() >= 2) {
            distances_along_shape(poly, &positions)
        } else {
            chain_distances(&positions)
        };
        let first = sts[0];
        let last = sts[sts.len() - 1];
        let start = first.departure.or(first.arrival);
        let end = last.arrival.or(last.departure);
        let scheduled_duration = match (start, end) {
            (Some(s), Some(e)) if e > s => e - s,
            _ => {
                return Err(IngestError::MalformedRow {
                    file: st_path.clone(),
                    line: last.line,
                    reason: format!("route {route_id}: first/last stop times missing or non-increasing"),
                })
            }
        };
        let route_stops = sts
            .iter()
            .zip(positions)
            .zip(distances)
            .map(|((s, position), cumulative_distance)| RouteStop { stop_id: s.stop_id.clone(), position, cumulative_distance })
            .collect();
        out.push(RouteDefinition::new(route_id, direction, route_stops, scheduled_duration)?);
    }
    Ok(out)
}

fn read_shapes(mut tbl: Table) -> Result<HashMap<String, Vec<GeoPoint>>, IngestError> {
    let (id, lat, lon, seq) =
        (tbl.column("shape_id")?, tbl.column("shape_pt_lat")?, tbl.column("shape_pt_lon")?, tbl.column("shape_pt_sequence")?);
    let path = tbl.path.clone();
    let mut raw: HashMap<String, Vec<(u32, GeoPoint)>> = HashMap::new();
    for row in tbl.rows() {
        let (line, rec) = row?;
        let la = parse_num(field(&rec, lat, &path, line)?, &path, line, "shape_pt_lat")?;
        let lo = parse_num(field(&rec, lon, &path, line)?, &path, line, "shape_pt_lon")?;
        let p = GeoPoint::new(la, lo).map_err(|e| IngestError::MalformedRow { file: path.clone(), line, reason: e.to_string() })?;
        let s = field(&rec, seq, &path, line)?
            .parse::<u32>()
            .map_err(|e| IngestError::MalformedRow { file: path.clone(), line, reason: format!("bad shape_pt_sequence: {e}") })?;
        raw.entry(field(&rec, id, &path, line)?.to_string()).or_default().push((s, p));
    }
    Ok(raw
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(s, _)| *s);
            (k, v.into_iter().map(|(_, p)| p).collect())
        })
        .collect())
}

/// Cumulative haversine distance between consecutive stops.
pub fn chain_distances(points: &[GeoPoint]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            acc += haversine(points[i - 1], *p);
        }
        out.push(acc);
    }
    out
}

/// Distance along `shape` of each stop's closest shape position, searching
/// forward from the previous stop so the result never goes backwards.
fn distances_along_shape(shape: &[GeoPoint], stops: &[GeoPoint]) -> Vec<f64> {
    let seg_start = chain_distances(shape);
    let mut from_seg = 0usize;
    let mut from_frac = 0.0f64;
    let mut out = Vec::with_capacity(stops.len());
    for &stop in stops {
        let mut best = (f64::INFINITY, from_seg, from_frac);
        for seg in from_seg..shape.len() - 1 {
            let (Ok(a), Ok(b)) = (project(stop, shape[seg]), project(stop, shape[seg + 1])) else {
                continue;
            };
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let mut f = if len2 > 0.0 { (-(a.x * dx + a.y * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            if seg == from_seg {
                f = f.max(from_frac);
            }
            let p = PlanarPoint::new(a.x + f * dx, a.y + f * dy);
            let d = p.dist(&PlanarPoint::new(0.0, 0.0));
            if d < best.0 {
                best = (d, seg, f);
            }
        }
        from_seg = best.1;
        from_frac = best.2;
        let seg_len = seg_start.get(from_seg + 1).copied().unwrap_or(seg_start[from_seg]) - seg_start[from_seg];
        out.push(seg_start[from_seg] + from_frac * seg_len);
    }
    let d0 = out[0];
    out.iter_mut().for_each(|d| *d -= d0);
    out
}

// ---------------------------------------------------------------------------
// GPS
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GpsParse {
    pub records: Vec<GpsRecord>,
    /// Rows dropped for bad timestamps, coordinates or column counts.
    pub dropped: usize,
    /// Data rows seen, excluding a header.
    pub total_rows: usize,
}

/// Parses a GPS CSV file. Bad rows are counted, not fatal.
pub fn parse_gps(path: &Path) -> Result<GpsParse, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::UnreadableFile { path: path.to_path_buf(), source })?;
    Ok(parse_gps_str(&text))
}

pub fn parse_gps_str(text: &str) -> GpsParse {
    let mut out = GpsParse::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        out.total_rows += 1;
        match parse_gps_fields(&fields) {
            Some(r) => out.records.push(r),
            None => out.dropped += 1,
        }
    }
    out.records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    out
}

fn parse_gps_fields(f: &[&str]) -> Option<GpsRecord> {
    if f.len() < GPS_MIN_COLUMNS {
        return None;
    }
    let us: f64 = f[0].parse().ok()?;
    let timestamp = us / 1e6;
    if !timestamp.is_finite() || timestamp < MIN_VALID_EPOCH_S {
        return None;
    }
    let lon: f64 = f[8].parse().ok()?;
    let lat: f64 = f[9].parse().ok()?;
    if lat == 0.0 && lon == 0.0 {
        return None;
    }
    let position = GeoPoint::new(lat, lon).ok()?;
    Some(GpsRecord {
        timestamp,
        line_id: f[1].to_string(),
        vehicle_id: f[12].to_string(),
        vehicle_journey_id: f[5].to_string(),
        position,
    })
}

pub const GPS_HEADER: &str =
    "timestamp,line_id,direction,journey_pattern,timeframe,vehicle_journey_id,operator,congestion,lon,lat,delay,block,vehicle_id,stop_id,at_stop";

/// Writes records in the 15-column layout, header included.
/// Columns not carried by [`GpsRecord`] are written as neutral placeholders.
pub fn emit_gps<W: Write>(records: &[GpsRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{GPS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},0,,,{},,0,{},{},0,,{},,0",
            (r.timestamp * 1e6).round() as i64,
            r.line_id,
            r.vehicle_journey_id,
            r.position.lon,
            r.position.lat,
            r.vehicle_id
        )?;
    }
    Ok(())
}

/// Partitions records by (vehicle, vehicle journey); groups are ordered by
/// their first timestamp.
pub fn group_journeys(records: &[GpsRecord]) -> Vec<RawJourney> {
    let mut groups: HashMap<(&str, &str), Vec<GpsRecord>> = HashMap::new();
    for r in records {
        groups.entry((r.vehicle_id.as_str(), r.vehicle_journey_id.as_str())).or_default().push(r.clone());
    }
    let mut out: Vec<((String, String), RawJourney)> =
        groups.into_iter().map(|((v, j), recs)| ((v.to_string(), j.to_string()), RawJourney::new(recs))).collect();
    out.sort_by(|a, b| a.1.records[0].timestamp.total_cmp(&b.1.records[0].timestamp).then_with(|| a.0.cmp(&b.0)));
    out.into_iter().map(|(_, j)| j).collect()
}
