//! Deterministic synthetic route, GPS feed and ground truth.
//!
//! One straight route with evenly spaced stops is driven in both directions
//! by a fleet on a fixed headway. Speed varies with time of day, per trip,
//! along the route and through AR(1) noise; every factor can be switched off.
//! Each trip draws from its own ChaCha stream, so trips are independent of
//! one another and of the order they are generated in.

use std::f64::consts::TAU;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use thiserror::Error;

use crate::geo::GeoPoint;
use crate::ingest::{emit_gps, format_gtfs_time, Direction, GpsRecord, RouteDefinition, RoutePair, RouteStop};
use crate::segmentation::RejectReason;

/// 2012-11-06T00:00:00Z.
pub const BASE_EPOCH_S: f64 = 1_352_160_000.0;
const SERVICE_START_S: f64 = 6.0 * 3600.0;
const SERVICE_END_S: f64 = 23.0 * 3600.0;
const MIN_SPEED: f64 = 0.5;
const DT: f64 = 1.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("writing {path}: {source}")]
    Io { path: String, source: io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedModel {
    /// m/s before modulation.
    pub base: f64,
    /// Depth of the slowdown at the 08:00 and 20:00 peaks, as a fraction.
    pub tod_amplitude: f64,
    /// Log-space sigma of the per-trip speed factor.
    pub trip_sigma: f64,
    /// Relative amplitude of the along-route speed wave.
    pub spatial_amplitude: f64,
    pub spatial_wavelength: f64,
    pub ar_rho: f64,
    /// Stationary standard deviation of the AR(1) factor.
    pub ar_sigma: f64,
}

impl Default for SpeedModel {
    fn default() -> Self {
        Self { base: 5.5, tod_amplitude: 0.3, trip_sigma: 0.08, spatial_amplitude: 0.15, spatial_wavelength: 4000.0, ar_rho: 0.97, ar_sigma: 0.1 }
    }
}

impl SpeedModel {
    pub fn constant(v: f64) -> Self {
        Self { base: v, tod_amplitude: 0.0, trip_sigma: 0.0, spatial_amplitude: 0.0, spatial_wavelength: 4000.0, ar_rho: 0.0, ar_sigma: 0.0 }
    }

    pub fn tod_factor(&self, tod: f64) -> f64 {
        1.0 - self.tod_amplitude * 0.5 * (1.0 - (TAU * (tod - 2.0 * 3600.0) / (12.0 * 3600.0)).cos())
    }

    pub fn spatial_factor(&self, s: f64) -> f64 {
        1.0 + self.spatial_amplitude * (TAU * s / self.spatial_wavelength).sin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub stops: usize,
    pub route_length: f64,
    pub origin: GeoPoint,
    pub bearing_deg: f64,
    pub trips: usize,
    /// Seconds between departures, alternating direction.
    pub headway: f64,
    pub fleet: usize,
    pub speed: SpeedModel,
    pub gps_noise_sigma: f64,
    pub sample_period: f64,
    /// Offset the periodic fixes from the departure fix by a random whole
    /// number of seconds below one period.
    pub random_phase: bool,
    /// Fraction of trips that idle at the destination while reporting.
    pub stay_points: f64,
    pub stay_cluster_size: usize,
    /// Fraction of trips with one fix thrown 500 to 1500 m off route.
    pub noisy_points: f64,
    /// Fraction of trips losing more than 900 s of fixes mid-route.
    pub missing_segments: f64,
    /// Fraction of trips that must fail the completeness rules.
    pub invalid_trips: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 46,
            stops: 59,
            route_length: 19_000.0,
            origin: GeoPoint { lat: 53.3560, lon: -6.3310 },
            bearing_deg: 135.0,
            trips: 500,
            headway: 600.0,
            fleet: 20,
            speed: SpeedModel::default(),
            gps_noise_sigma: 10.0,
            sample_period: 30.0,
            random_phase: true,
            stay_points: 1.0,
            stay_cluster_size: 30,
            noisy_points: 0.0,
            missing_segments: 0.0,
            invalid_trips: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.stops < 2 {
            return bad(format!("need at least 2 stops, got {}", self.stops));
        }
        if !(self.route_length > 0.0 && self.route_length <= 60_000.0) {
            return bad(format!("route_length must be in (0, 60000] m, got {}", self.route_length));
        }
        if self.trips == 0 || self.fleet == 0 {
            return bad("trips and fleet must be positive".into());
        }
        if !(self.headway > 0.0) || !(self.sample_period >= 1.0) || self.sample_period.fract() != 0.0 {
            return bad("headway must be positive and sample_period a whole number of seconds >= 1".into());
        }
        if !(self.speed.base > 0.0) || !(0.0..1.0).contains(&self.speed.tod_amplitude) || !(self.speed.spatial_amplitude.abs() < 1.0) {
            return bad("speed model out of range".into());
        }
        if !(0.0..1.0).contains(&self.speed.ar_rho) || self.speed.ar_sigma < 0.0 || self.speed.trip_sigma < 0.0 || !(self.speed.spatial_wavelength > 0.0) {
            return bad("speed noise parameters out of range".into());
        }
        if !(self.gps_noise_sigma >= 0.0) {
            return bad("gps_noise_sigma must be non-negative".into());
        }
        for (name, r) in [
            ("stay_points", self.stay_points),
            ("noisy_points", self.noisy_points),
            ("missing_segments", self.missing_segments),
            ("invalid_trips", self.invalid_trips),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} must be in [0, 1], got {r}"));
            }
        }
        if self.invalid_trips + self.missing_segments > 1.0 {
            return bad("invalid_trips + missing_segments exceeds 1".into());
        }
        Ok(())
    }

    pub fn stop_spacing(&self) -> f64 {
        self.route_length / (self.stops - 1) as f64
    }
}

/// How a trip was made to fail the completeness rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InvalidKind {
    /// Fixes stop at 40% of the route.
    Truncated,
    /// Fixes begin this many meters past the origin stop.
    DisplacedStart(f64),
    /// Only this many fixes over the whole drive.
    Sparse(usize),
}

impl InvalidKind {
    pub fn expected_reason(self) -> RejectReason {
        match self {
            InvalidKind::Truncated => RejectReason::TooShortInTimeOrDistance,
            InvalidKind::DisplacedStart(_) => RejectReason::EndpointTooFar,
            InvalidKind::Sparse(_) => RejectReason::TooShort,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Corruption {
    /// Duplicated fixes at the destination stop.
    StayPoints { count: usize },
    /// Fix at `index` in the emitted trace displaced by `offset_m`.
    NoisyPoint { index: usize, offset_m: f64 },
    /// No fixes strictly between these trip-relative times.
    MissingSegment { from_s: f64, to_s: f64 },
    Invalid(InvalidKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripTruth {
    pub index: usize,
    pub vehicle_id: String,
    pub journey_id: String,
    pub direction: Direction,
    pub departure_epoch: f64,
    /// Seconds after departure at each stop, in travel order; first is 0.
    pub stop_arrivals: Vec<f64>,
    pub labels: Vec<Corruption>,
    /// `(timestamp, true distance along route)` of every fix before corruption.
    pub clean: Vec<(f64, f64)>,
}

impl TripTruth {
    pub fn invalid_kind(&self) -> Option<InvalidKind> {
        self.labels.iter().find_map(|l| match l {
            Corruption::Invalid(k) => Some(*k),
            _ => None,
        })
    }

    pub fn has_missing_segment(&self) -> bool {
        self.labels.iter().any(|l| matches!(l, Corruption::MissingSegment { .. }))
    }

    /// Expected to survive segmentation as one complete trip.
    pub fn is_clean(&self) -> bool {
        self.invalid_kind().is_none() && !self.has_missing_segment()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub trips: Vec<TripTruth>,
}

impl GroundTruth {
    pub fn by_journey(&self, journey_id: &str) -> Option<&TripTruth> {
        self.trips.iter().find(|t| t.journey_id == journey_id)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,vehicle_id,journey_id,direction,departure_epoch,labels")?;
        for t in &self.trips {
            let labels: Vec<String> = t
                .labels
                .iter()
                .map(|l| match l {
                    Corruption::StayPoints { count } => format!("stay_points:{count}"),
                    Corruption::NoisyPoint { index, offset_m } => format!("noisy_point:{index}:{offset_m:.1}"),
                    Corruption::MissingSegment { from_s, to_s } => format!("missing_segment:{from_s}:{to_s}"),
                    Corruption::Invalid(InvalidKind::Truncated) => "truncated".into(),
                    Corruption::Invalid(InvalidKind::DisplacedStart(m)) => format!("displaced_start:{m:.1}"),
                    Corruption::Invalid(InvalidKind::Sparse(k)) => format!("sparse:{k}"),
                })
                .collect();
            writeln!(w, "{},{},{},{},{},{}", t.index, t.vehicle_id, t.journey_id, t.direction, t.departure_epoch, labels.join(";"))?;
        }
        Ok(())
    }

    pub fn write_arrivals_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "journey_id,stop_index,arrival_s")?;
        for t in &self.trips {
            for (k, a) in t.stop_arrivals.iter().enumerate() {
                writeln!(w, "{},{k},{a}", t.journey_id)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub routes: RoutePair,
    /// Whole feed, sorted by timestamp.
    pub gps: Vec<GpsRecord>,
    pub truth: GroundTruth,
}

pub const ROUTE_ID: &str = "46A";

/// Outbound and inbound definitions of the synthetic route.
pub fn build_routes(cfg: &SynthConfig) -> Result<RoutePair, SynthError> {
    cfg.validate()?;
    let spacing = cfg.stop_spacing();
    let scheduled = cfg.route_length / cfg.speed.base;
    let stops: Vec<RouteStop> = (0..cfg.stops)
        .map(|k| {
            let d = k as f64 * spacing;
            RouteStop { stop_id: format!("S{:02}", k + 1), position: cfg.origin.destination(cfg.bearing_deg, d), cumulative_distance: d }
        })
        .collect();
    let outbound = RouteDefinition::new(ROUTE_ID, Direction::Outbound, stops, scheduled).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let inbound = outbound.reversed();
    Ok(RoutePair { outbound, inbound })
}

/// Positions along one direction at distance `s` from its first stop.
fn locate(cfg: &SynthConfig, dir: Direction, s: f64) -> GeoPoint {
    let from_origin = match dir {
        Direction::Outbound => s,
        Direction::Inbound => cfg.route_length - s,
    };
    cfg.origin.destination(cfg.bearing_deg, from_origin.clamp(0.0, cfg.route_length))
}

fn offset(p: GeoPoint, east: f64, north: f64) -> GeoPoint {
    if east == 0.0 && north == 0.0 {
        return p;
    }
    p.destination(east.atan2(north).to_degrees(), east.hypot(north))
}

/// Distance along the route at every whole second, ending with the arrival.
struct Drive {
    s: Vec<f64>,
    arrival: f64,
}

impl Drive {
    /// Distance at whole second `t`; holds at the terminal after arrival.
    fn at(&self, t: usize, length: f64) -> f64 {
        self.s.get(t).copied().unwrap_or(length)
    }

    /// Time the drive first reaches distance `d`, interpolated within a step.
    fn time_at(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        let k = self.s.partition_point(|&x| x < d);
        if k >= self.s.len() {
            return self.arrival;
        }
        let (a, b) = (self.s[k - 1], self.s[k]);
        (k - 1) as f64 + (d - a) / (b - a) * DT
    }
}

fn drive(cfg: &SynthConfig, tod: f64, rng: &mut ChaCha8Rng) -> Drive {
    let sp = &cfg.speed;
    let trip_factor = if sp.trip_sigma > 0.0 { LogNormal::new(0.0, sp.trip_sigma).unwrap().sample(rng) } else { 1.0 };
    let innov = Normal::new(0.0, sp.ar_sigma * (1.0 - sp.ar_rho * sp.ar_rho).sqrt()).unwrap();
    let mut z = if sp.ar_sigma > 0.0 { Normal::new(0.0, sp.ar_sigma).unwrap().sample(rng) } else { 0.0 };
    let mut s = vec![0.0];
    let mut cur = 0.0;
    let mut t = 0.0;
    loop {
        let v = (sp.base * sp.tod_factor(tod + t) * trip_factor * sp.spatial_factor(cur) * (1.0 + z)).max(MIN_SPEED);
        let next = cur + v * DT;
        if next >= cfg.route_length {
            let arrival = t + (cfg.route_length - cur) / v;
            s.push(cfg.route_length);
            return Drive { s, arrival };
        }
        s.push(next);
        cur = next;
        t += DT;
        if sp.ar_sigma > 0.0 {
            z = sp.ar_rho * z + innov.sample(rng);
        }
    }
}

fn departure_of(cfg: &SynthConfig, j: usize) -> f64 {
    let per_day = ((SERVICE_END_S - SERVICE_START_S) / cfg.headway).floor() as usize + 1;
    let (day, slot) = (j / per_day, j % per_day);
    BASE_EPOCH_S + day as f64 * 86_400.0 + SERVICE_START_S + slot as f64 * cfg.headway
}

fn trip(cfg: &SynthConfig, j: usize, gps: &mut Vec<GpsRecord>) -> TripTruth {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(j as u64);
    let direction = if j.is_multiple_of(2) { Direction::Outbound } else { Direction::Inbound };
    let departure_epoch = departure_of(cfg, j);
    let tod = departure_epoch.rem_euclid(86_400.0);
    let d = drive(cfg, tod, &mut rng);
    let len = cfg.route_length;
    let spacing = cfg.stop_spacing();
    let mut stop_arrivals: Vec<f64> = (0..cfg.stops).map(|k| d.time_at(k as f64 * spacing)).collect();
    stop_arrivals[cfg.stops - 1] = d.arrival;

    let mut labels = Vec::new();
    let u: f64 = rng.random();
    let invalid = if u < cfg.invalid_trips {
        Some(match rng.random_range(0..3) {
            0 => InvalidKind::Truncated,
            1 => InvalidKind::DisplacedStart(rng.random_range(400.0..800.0)),
            _ => InvalidKind::Sparse(rng.random_range(20..=25)),
        })
    } else {
        None
    };
    let missing = invalid.is_none() && u < cfg.invalid_trips + cfg.missing_segments;
    let stay = invalid.is_none() && rng.random::<f64>() < cfg.stay_points;

    let period = cfg.sample_period;
    // a fix is logged on departure; periodic fixes follow on their own phase
    let mut times: Vec<f64> = vec![0.0];
    let mut tau = if cfg.random_phase && period > 1.0 { rng.random_range(1..period as usize) as f64 } else { period };
    while tau < d.arrival {
        times.push(tau);
        tau += period;
    }
    let moving = times.len();
    if stay {
        for _ in 0..cfg.stay_cluster_size {
            times.push(tau);
            tau += period;
        }
        labels.push(Corruption::StayPoints { count: cfg.stay_cluster_size });
    }
    let clean: Vec<(f64, f64)> = times.iter().map(|&t| (departure_epoch + t, d.at(t as usize, len))).collect();

    let mut keep: Vec<usize> = (0..times.len()).collect();
    match invalid {
        Some(InvalidKind::Truncated) => keep.retain(|&i| clean[i].1 < 0.4 * len),
        Some(InvalidKind::DisplacedStart(m)) => keep.retain(|&i| clean[i].1 >= m),
        Some(InvalidKind::Sparse(k)) => keep = (0..k).map(|i| i * moving / k).collect(),
        None => {}
    }
    if let Some(k) = invalid {
        labels.push(Corruption::Invalid(k));
    }
    if missing {
        let from = d.arrival * rng.random_range(0.3..0.5);
        let to = from + rng.random_range(950.0..1100.0);
        keep.retain(|&i| times[i] <= from || times[i] >= to);
        labels.push(Corruption::MissingSegment { from_s: from, to_s: to });
    }
    let noisy = rng.random::<f64>() < cfg.noisy_points;

    let noise = Normal::new(0.0, cfg.gps_noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let vehicle_id = format!("V{:03}", j % cfg.fleet);
    let journey_id = format!("{}", 10_000 + j);
    let mut fixes: Vec<GpsRecord> = keep
        .iter()
        .map(|&i| {
            let (ts, s) = clean[i];
            let truth = locate(cfg, direction, s);
            // a parked receiver repeats its last fix exactly
            let position = if i >= moving || cfg.gps_noise_sigma == 0.0 {
                truth
            } else {
                offset(truth, noise.sample(&mut rng), noise.sample(&mut rng))
            };
            GpsRecord { timestamp: ts, line_id: ROUTE_ID.into(), vehicle_id: vehicle_id.clone(), vehicle_journey_id: journey_id.clone(), position }
        })
        .collect();
    let probe = 30;
    let interior = keep.iter().filter(|&&i| i < moving).count().saturating_sub(1);
    if noisy && interior > probe {
        let index = rng.random_range(probe..interior);
        let offset_m = rng.random_range(500.0..1500.0);
        let bearing = cfg.bearing_deg + if rng.random::<bool>() { 90.0 } else { -90.0 };
        fixes[index].position = fixes[index].position.destination(bearing, offset_m);
        labels.push(Corruption::NoisyPoint { index, offset_m });
    }
    gps.extend(fixes);
    TripTruth { index: j, vehicle_id, journey_id, direction, departure_epoch, stop_arrivals, labels, clean }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput, SynthError> {
    let routes = build_routes(cfg)?;
    let mut gps = Vec::new();
    let trips = (0..cfg.trips).map(|j| trip(cfg, j, &mut gps)).collect();
    gps.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(SynthOutput { routes, gps, truth: GroundTruth { trips } })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SynthError + '_ {
    move |source| SynthError::Io { path: path.display().to_string(), source }
}

/// GTFS tables for both directions, with `shape_dist_traveled` and shapes.
pub fn write_gtfs(routes: &RoutePair, dir: &Path) -> Result<(), SynthError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(io_err(&p))
    };
    let out = &routes.outbound;
    write("agency.txt", "agency_id,agency_name,agency_url,agency_timezone\nSYN,Synthetic Transit,http://example.invalid,Europe/Dublin\n".into())?;
    write("routes.txt", format!("route_id,agency_id,route_short_name,route_type\n{},SYN,{},3\n", out.route_id, out.route_id))?;
    let mut stops = String::from("stop_id,stop_name,stop_lat,stop_lon\n");
    for s in &out.stops {
        stops += &format!("{},Stop {},{},{}\n", s.stop_id, s.stop_id, s.position.lat, s.position.lon);
    }
    write("stops.txt", stops)?;
    let mut trips = String::from("route_id,service_id,trip_id,direction_id,shape_id\n");
    let mut times = String::from("trip_id,arrival_time,departure_time,stop_id,stop_sequence,shape_dist_traveled\n");
    let mut shapes = String::from("shape_id,shape_pt_lat,shape_pt_lon,shape_pt_sequence,shape_dist_traveled\n");
    for r in [&routes.outbound, &routes.inbound] {
        let tag = r.direction.to_string();
        let trip_id = format!("{}-{tag}", r.route_id);
        let shape_id = format!("shape-{tag}");
        trips += &format!("{},WK,{trip_id},{},{shape_id}\n", r.route_id, r.direction.gtfs_id());
        let start = SERVICE_START_S;
        for (k, s) in r.stops.iter().enumerate() {
            let t = format_gtfs_time(start + r.scheduled_duration * s.cumulative_distance / r.total_length);
            times += &format!("{trip_id},{t},{t},{},{},{:.3}\n", s.stop_id, k + 1, s.cumulative_distance);
            shapes += &format!("{shape_id},{},{},{},{:.3}\n", s.position.lat, s.position.lon, k + 1, s.cumulative_distance);
        }
    }
    write("trips.txt", trips)?;
    write("stop_times.txt", times)?;
    write("shapes.txt", shapes)?;
    Ok(())
}

/// Writes `gtfs/`, `gps.csv`, `truth.csv` and `truth_arrivals.csv` under `dir`.
pub fn write_all(out: &SynthOutput, dir: &Path) -> Result<(), SynthError> {
    write_gtfs(&out.routes, &dir.join("gtfs"))?;
    let file = |name: &str| {
        let p = dir.join(name);
        fs::File::create(&p).map(io::BufWriter::new).map_err(io_err(&p))
    };
    let p = dir.join("gps.csv");
    emit_gps(&out.gps, file("gps.csv")?).map_err(io_err(&p))?;
    let p = dir.join("truth.csv");
    out.truth.write_csv(file("truth.csv")?).map_err(io_err(&p))?;
    let p = dir.join("truth_arrivals.csv");
    out.truth.write_arrivals_csv(file("truth_arrivals.csv")?).map_err(io_err(&p))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::haversine;

    fn quiet(trips: usize) -> SynthConfig {
        SynthConfig { trips, gps_noise_sigma: 0.0, speed: SpeedModel::constant(6.0), random_phase: false, stay_points: 0.0, ..SynthConfig::default() }
    }

    #[test]
    fn constant_speed_arrivals_are_exact() {
        let out = generate(&quiet(4)).unwrap();
        let spacing = 19_000.0 / 58.0;
        for t in &out.truth.trips {
            for (k, a) in t.stop_arrivals.iter().enumerate() {
                assert!((a - k as f64 * spacing / 6.0).abs() < 1e-9, "stop {k}: {a}");
            }
        }
    }

    #[test]
    fn route_shape() {
        let r = build_routes(&SynthConfig::default()).unwrap();
        assert_eq!(r.outbound.stops.len(), 59);
        assert!((r.outbound.total_length - 19_000.0).abs() < 1e-9);
        let arc = haversine(r.outbound.first_stop().position, r.outbound.last_stop().position);
        assert!((arc - 19_000.0).abs() < 1e-3);
        assert_eq!(r.inbound.first_stop().stop_id, "S59");
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = SynthConfig { trips: 30, noisy_points: 0.3, missing_segments: 0.2, invalid_trips: 0.2, ..SynthConfig::default() };
        let (a, b) = (generate(&cfg).unwrap(), generate(&cfg).unwrap());
        assert_eq!(a.gps, b.gps);
        assert_eq!(a.truth, b.truth);
        let other = generate(&SynthConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a.gps, other.gps);
    }

    #[test]
    fn arrivals_recoverable_from_clean_trace() {
        let cfg = SynthConfig { trips: 20, ..SynthConfig::default() };
        let out = generate(&cfg).unwrap();
        let spacing = cfg.stop_spacing();
        for t in &out.truth.trips {
            let moving: Vec<_> = t.clean.iter().filter(|c| c.1 < cfg.route_length).collect();
            for k in 1..cfg.stops - 1 {
                let target = k as f64 * spacing;
                let i = moving.partition_point(|c| c.1 < target);
                if i == 0 || i >= moving.len() {
                    continue;
                }
                let (a, b) = (moving[i - 1], moving[i]);
                let est = a.0 + (target - a.1) / (b.1 - a.1) * (b.0 - a.0) - t.departure_epoch;
                assert!((est - t.stop_arrivals[k]).abs() < cfg.sample_period / 2.0);
            }
        }
    }

    #[test]
    fn stay_cluster_is_exact_duplicates() {
        let cfg = SynthConfig { trips: 2, stay_points: 1.0, ..SynthConfig::default() };
        let out = generate(&cfg).unwrap();
        let j = &out.truth.trips[0].journey_id;
        let recs: Vec<_> = out.gps.iter().filter(|r| &r.vehicle_journey_id == j).collect();
        let tail = &recs[recs.len() - 30..];
        assert!(tail.iter().all(|r| r.position == tail[0].position));
        assert_ne!(recs[recs.len() - 31].position, tail[0].position);
        assert_eq!(tail[0].position, out.routes.outbound.last_stop().position);
    }

    #[test]
    fn labels_cover_corruption() {
        let cfg = SynthConfig { trips: 200, noisy_points: 0.5, missing_segments: 0.3, invalid_trips: 0.3, ..SynthConfig::default() };
        let out = generate(&cfg).unwrap();
        let mut seen = [0usize; 4];
        for t in &out.truth.trips {
            for l in &t.labels {
                match l {
                    Corruption::NoisyPoint { .. } => seen[0] += 1,
                    Corruption::MissingSegment { from_s, to_s } => {
                        assert!(to_s - from_s > 900.0);
                        seen[1] += 1
                    }
                    Corruption::Invalid(_) => seen[2] += 1,
                    Corruption::StayPoints { .. } => seen[3] += 1,
                }
            }
        }
        assert!(seen.iter().all(|&s| s > 10), "{seen:?}");
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig { stops: 1, ..SynthConfig::default() }.validate().is_err());
        assert!(SynthConfig { noisy_points: 1.5, ..SynthConfig::default() }.validate().is_err());
        assert!(SynthConfig { sample_period: 0.5, ..SynthConfig::default() }.validate().is_err());
        assert!(SynthConfig::default().validate().is_ok());
    }
}
