//! Geographic primitives: great-circle distance, a local equirectangular
//! projection and a 2-d kd-tree whose points can be retired between queries.

use thiserror::Error;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Largest latitude/longitude offset (degrees) accepted by [`project`].
pub const PROJECTION_RANGE_DEG: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid coordinate lat={lat} lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("point ({lat}, {lon}) is more than 1 degree from the projection origin")]
    OutOfProjectionRange { lat: f64, lon: f64 },
}

/// WGS84 latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
            Ok(Self { lat, lon })
        } else {
            Err(GeoError::InvalidCoordinate { lat, lon })
        }
    }

    /// Point reached by travelling `distance_m` from `self` along the great
    /// circle with initial bearing `bearing_deg` (clockwise from north).
    pub fn destination(&self, bearing_deg: f64, distance_m: f64) -> GeoPoint {
        let delta = distance_m / EARTH_RADIUS_M;
        let theta = bearing_deg.to_radians();
        let phi1 = self.lat.to_radians();
        let lambda1 = self.lon.to_radians();
        let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).asin();
        let lambda2 = lambda1
            + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
        GeoPoint {
            lat: phi2.to_degrees(),
            lon: (lambda2.to_degrees() + 540.0) % 360.0 - 180.0,
        }
    }
}

/// Meters east (`x`) and north (`y`) of a projection origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite());
        Self { x, y }
    }

    #[inline]
    pub fn dist_sq(&self, other: &PlanarPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &PlanarPoint) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Great-circle distance in meters (haversine formula).
pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Equirectangular projection of `p` around `origin`.
pub fn project(origin: GeoPoint, p: GeoPoint) -> Result<PlanarPoint, GeoError> {
    let dlat = p.lat - origin.lat;
    let dlon = p.lon - origin.lon;
    if dlat.abs() >= PROJECTION_RANGE_DEG || dlon.abs() >= PROJECTION_RANGE_DEG {
        return Err(GeoError::OutOfProjectionRange { lat: p.lat, lon: p.lon });
    }
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    Ok(PlanarPoint::new(dlon * origin.lat.to_radians().cos() * k, dlat * k))
}

#[derive(Debug, Clone)]
struct Node {
    point: PlanarPoint,
    id: usize,
    axis: u8,
    left: Option<usize>,
    right: Option<usize>,
    // largest payload id in this subtree; lets prefix retirement prune whole branches
    max_id: usize,
}

/// Balanced 2-d tree over planar points carrying payload ids.
///
/// Points are never physically removed. Retirement marks ids as excluded,
/// either one at a time ([`KdTree::retire`]) or as a chronological prefix
/// ([`KdTree::retire_through`]).
#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    root: Option<usize>,
    retired_through: Option<usize>,
    retired: std::collections::HashSet<usize>,
}

impl KdTree {
    /// Builds the tree by median split on alternating axes.
    pub fn build(points: &[(PlanarPoint, usize)]) -> Self {
        let mut items: Vec<(PlanarPoint, usize)> = points.to_vec();
        let mut nodes = Vec::with_capacity(items.len());
        let root = Self::build_rec(&mut items, 0, &mut nodes);
        Self { nodes, root, retired_through: None, retired: Default::default() }
    }

    fn build_rec(items: &mut [(PlanarPoint, usize)], depth: usize, nodes: &mut Vec<Node>) -> Option<usize> {
        if items.is_empty() {
            return None;
        }
        let axis = (depth % 2) as u8;
        let key = |p: &PlanarPoint| if axis == 0 { p.x } else { p.y };
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| key(&a.0).total_cmp(&key(&b.0)).then(a.1.cmp(&b.1)));
        let (point, id) = items[mid];
        let idx = nodes.len();
        nodes.push(Node { point, id, axis, left: None, right: None, max_id: id });
        let (lo, rest) = items.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = Self::build_rec(lo, depth + 1, nodes);
        let right = Self::build_rec(hi, depth + 1, nodes);
        let mut max_id = id;
        for child in [left, right].into_iter().flatten() {
            max_id = max_id.max(nodes[child].max_id);
        }
        let node = &mut nodes[idx];
        node.left = left;
        node.right = right;
        node.max_id = max_id;
        Some(idx)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_retired(&self, id: usize) -> bool {
        self.retired_through.is_some_and(|r| id <= r) || self.retired.contains(&id)
    }

    /// Excludes a single id from future searches.
    pub fn retire(&mut self, id: usize) {
        self.retired.insert(id);
    }

    /// Excludes every id `<= id` from future searches. Idempotent.
    pub fn retire_through(&mut self, id: usize) {
        self.retired_through = Some(self.retired_through.map_or(id, |r| r.max(id)));
    }

    /// Number of points still eligible for search.
    pub fn live_count(&self) -> usize {
        self.nodes.iter().filter(|n| !self.is_retired(n.id)).count()
    }

    /// Nearest non-retired point: `(payload id, Euclidean distance)`.
    /// Equal distances resolve to the lowest id.
    pub fn nearest(&self, q: PlanarPoint) -> Option<(usize, f64)> {
        let mut best: Option<(f64, usize)> = None;
        if let Some(root) = self.root {
            self.search(root, &q, &mut best);
        }
        best.map(|(d2, id)| (id, d2.sqrt()))
    }

    fn search(&self, idx: usize, q: &PlanarPoint, best: &mut Option<(f64, usize)>) {
        let node = &self.nodes[idx];
        if self.retired_through.is_some_and(|r| node.max_id <= r) {
            return;
        }
        if !self.is_retired(node.id) {
            let d2 = node.point.dist_sq(q);
            let better = match *best {
                None => true,
                Some((bd, bid)) => d2 < bd || (d2 == bd && node.id < bid),
            };
            if better {
                *best = Some((d2, node.id));
            }
        }
        let diff = if node.axis == 0 { q.x - node.point.x } else { q.y - node.point.y };
        let (near, far) = if diff < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
        if let Some(n) = near {
            self.search(n, q, best);
        }
        if let Some(f) = far {
            // ties must still be explored for the lowest-id rule
            if best.is_none_or(|(bd, _)| diff * diff <= bd) {
                self.search(f, q, best);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[(PlanarPoint, usize)], q: PlanarPoint, retired: impl Fn(usize) -> bool) -> Option<(usize, f64)> {
        let mut best: Option<(f64, usize)> = None;
        for &(p, id) in points {
            if retired(id) {
                continue;
            }
            let d2 = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
            if best.is_none_or(|(bd, bid)| d2 < bd || (d2 == bd && id < bid)) {
                best = Some((d2, id));
            }
        }
        best.map(|(d2, id)| (id, d2.sqrt()))
    }

    // spherical law of cosines, independent of the haversine code path
    fn slc(a: GeoPoint, b: GeoPoint) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dl = (b.lon - a.lon).to_radians();
        let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
        EARTH_RADIUS_M * c.acos()
    }

    #[test]
    fn haversine_identity_and_oracle() {
        let a = GeoPoint::new(53.3498, -6.2603).unwrap();
        assert_eq!(haversine(a, a), 0.0);
        let b = GeoPoint::new(53.3589, -6.2603).unwrap();
        let h = haversine(a, b);
        assert!((h - slc(a, b)).abs() < 0.5, "{h} vs {}", slc(a, b));
        // 0.0091 deg of latitude
        assert!((h - 1011.87).abs() < 0.1);
    }

    #[test]
    fn haversine_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a = GeoPoint::new(rng.random_range(-80.0..80.0), rng.random_range(-179.0..179.0)).unwrap();
            let b = GeoPoint::new(rng.random_range(-80.0..80.0), rng.random_range(-179.0..179.0)).unwrap();
            assert_eq!(haversine(a, b), haversine(b, a));
            assert!(haversine(a, b) >= 0.0);
        }
    }

    #[test]
    fn invalid_coordinates_rejected() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn projection_basics() {
        let o = GeoPoint::new(53.35, -6.26).unwrap();
        assert_eq!(project(o, o).unwrap(), PlanarPoint::new(0.0, 0.0));
        let north = GeoPoint::new(53.36, -6.26).unwrap();
        assert_eq!(project(o, north).unwrap().x, 0.0);
        let far = GeoPoint::new(54.5, -6.26).unwrap();
        assert!(matches!(project(o, far), Err(GeoError::OutOfProjectionRange { .. })));
    }

    #[test]
    fn projection_matches_haversine_at_city_scale() {
        let o = GeoPoint::new(53.35, -6.26).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut n = 0;
        while n < 1000 {
            let a = GeoPoint::new(o.lat + rng.random_range(-0.03..0.03), o.lon + rng.random_range(-0.2..0.2)).unwrap();
            let b = GeoPoint::new(o.lat + rng.random_range(-0.03..0.03), o.lon + rng.random_range(-0.2..0.2)).unwrap();
            let h = haversine(a, b);
            if h < 100.0 {
                continue;
            }
            let e = project(o, a).unwrap().dist(&project(o, b).unwrap());
            assert!((e - h).abs() / h < 1e-3, "planar {e} vs haversine {h}");
            n += 1;
        }
    }

    #[test]
    fn destination_round_trip() {
        let o = GeoPoint::new(53.3560, -6.3310).unwrap();
        let p = o.destination(135.0, 19_000.0);
        assert!((haversine(o, p) - 19_000.0).abs() < 1e-6);
    }

    #[test]
    fn kdtree_exact_hit() {
        let pts: Vec<_> = (0..10).map(|i| (PlanarPoint::new(i as f64, (i * i) as f64), i)).collect();
        let t = KdTree::build(&pts);
        assert_eq!(t.nearest(PlanarPoint::new(3.0, 9.0)), Some((3, 0.0)));
    }

    #[test]
    fn kdtree_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<_> =
            (0..1000).map(|i| (PlanarPoint::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)), i)).collect();
        let t = KdTree::build(&pts);
        for _ in 0..200 {
            let q = PlanarPoint::new(rng.random_range(-50.0..1050.0), rng.random_range(-50.0..1050.0));
            assert_eq!(t.nearest(q), brute(&pts, q, |_| false));
        }
    }

    #[test]
    fn retiring_nearest_yields_second_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<_> =
            (0..500).map(|i| (PlanarPoint::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)), i)).collect();
        let mut t = KdTree::build(&pts);
        for _ in 0..50 {
            let q = PlanarPoint::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            let (first, _) = t.nearest(q).unwrap();
            t.retire(first);
            let expected = brute(&pts, q, |id| t.is_retired(id));
            assert_eq!(t.nearest(q), expected);
        }
    }

    #[test]
    fn retire_through_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<_> =
            (0..300).map(|i| (PlanarPoint::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)), i)).collect();
        let mut t = KdTree::build(&pts);
        t.retire_through(120);
        for _ in 0..100 {
            let q = PlanarPoint::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            assert_eq!(t.nearest(q), brute(&pts, q, |id| id <= 120));
        }
        // idempotent, never revives
        t.retire_through(50);
        assert_eq!(t.live_count(), 179);
        t.retire_through(299);
        assert_eq!(t.nearest(PlanarPoint::new(0.0, 0.0)), None);
        assert_eq!(t.live_count(), 0);
    }

    #[test]
    fn two_point_tree_retire_first() {
        let pts = vec![(PlanarPoint::new(0.0, 0.0), 0), (PlanarPoint::new(5.0, 0.0), 1)];
        let mut t = KdTree::build(&pts);
        t.retire_through(0);
        assert_eq!(t.live_count(), 1);
        assert_eq!(t.nearest(PlanarPoint::new(0.0, 0.0)), Some((1, 5.0)));
    }

    #[test]
    fn ties_resolve_to_lowest_id() {
        let pts = vec![
            (PlanarPoint::new(1.0, 0.0), 4),
            (PlanarPoint::new(-1.0, 0.0), 2),
            (PlanarPoint::new(0.0, 1.0), 3),
            (PlanarPoint::new(0.0, -1.0), 9),
        ];
        let t = KdTree::build(&pts);
        assert_eq!(t.nearest(PlanarPoint::new(0.0, 0.0)), Some((2, 1.0)));
    }

    #[test]
    fn empty_tree() {
        let t = KdTree::build(&[]);
        assert!(t.is_empty());
        assert_eq!(t.nearest(PlanarPoint::new(0.0, 0.0)), None);
    }

    proptest::proptest! {
        #[test]
        fn prop_tree_equals_scan(
            coords in proptest::collection::vec((-100i32..100, -100i32..100), 1..80),
            qs in proptest::collection::vec((-120i32..120, -120i32..120), 1..20),
            cut in 0usize..80,
        ) {
            // integer grid forces many exact ties
            let pts: Vec<_> = coords.iter().enumerate()
                .map(|(i, &(x, y))| (PlanarPoint::new(x as f64, y as f64), i)).collect();
            let mut t = KdTree::build(&pts);
            for &(x, y) in &qs {
                let q = PlanarPoint::new(x as f64, y as f64);
                proptest::prop_assert_eq!(t.nearest(q), brute(&pts, q, |_| false));
            }
            t.retire_through(cut);
            for &(x, y) in &qs {
                let q = PlanarPoint::new(x as f64, y as f64);
                let got = t.nearest(q);
                proptest::prop_assert_eq!(got, brute(&pts, q, |id| id <= cut));
                if let Some((id, _)) = got { proptest::prop_assert!(id > cut); }
            }
        }
    }
}
