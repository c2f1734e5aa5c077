//! Raw feed to aligned corpora in one call, as used by `bench` and the
//! examples. The CLI runs the same steps as separate stages.

use crate::alignment::{align_distance_based, align_stop_based, build_anchor_sets, AlignError, AlignedTrip, AnchorSet, Scheme};
use crate::ingest::{group_journeys, Direction, GpsRecord, RouteDefinition, RoutePair};
use crate::models::{ModelError, TrainingSet};
use crate::segmentation::{segment_all, SegmentationConfig, SegmentationOutcome, SegmentedTrip};

/// Aligned trips of one direction under one anchor scheme, in departure order.
#[derive(Debug, Clone)]
pub struct AlignedCorpus {
    pub anchors: AnchorSet,
    pub trips: Vec<AlignedTrip>,
    /// Trips that could not be aligned, with the reason.
    pub failures: Vec<AlignError>,
    /// Stop-to-point deviations of every aligned trip; empty for distance marks.
    pub deviations: Vec<f64>,
}

impl AlignedCorpus {
    pub fn scheme(&self) -> Scheme {
        self.anchors.scheme
    }

    pub fn training_set(&self, trips: &[AlignedTrip]) -> Result<TrainingSet, ModelError> {
        TrainingSet::new(self.anchors.distances(), trips.to_vec())
    }
}

/// Aligns `trips` (all of `route`'s direction) under `scheme`.
pub fn align_corpus(trips: &[SegmentedTrip], route: &RouteDefinition, scheme: Scheme) -> AlignedCorpus {
    let (stop, distance) = build_anchor_sets(route);
    let anchors = match scheme {
        Scheme::StopBased => stop,
        Scheme::DistanceBased => distance,
    };
    let mut out = AlignedCorpus { anchors, trips: Vec::new(), failures: Vec::new(), deviations: Vec::new() };
    for t in trips.iter().filter(|t| t.direction == route.direction) {
        let res = match scheme {
            Scheme::StopBased => align_stop_based(t, &out.anchors).map(|(a, dev)| {
                out.deviations.extend(dev);
                a
            }),
            Scheme::DistanceBased => align_distance_based(t, &out.anchors),
        };
        match res {
            Ok(a) => out.trips.push(a),
            Err(e) => out.failures.push(e),
        }
    }
    out.trips.sort_by(|a, b| a.departure_epoch.unwrap_or(0.0).total_cmp(&b.departure_epoch.unwrap_or(0.0)));
    out
}

#[derive(Debug, Clone)]
pub struct Corpora {
    pub segmentation: SegmentationOutcome,
    pub stop: AlignedCorpus,
    pub distance: AlignedCorpus,
}

impl Corpora {
    pub fn get(&self, scheme: Scheme) -> &AlignedCorpus {
        match scheme {
            Scheme::StopBased => &self.stop,
            Scheme::DistanceBased => &self.distance,
        }
    }
}

/// Groups, segments and aligns a feed for one direction under both schemes.
pub fn build_corpora(gps: &[GpsRecord], routes: &RoutePair, direction: Direction, cfg: &SegmentationConfig) -> Corpora {
    let journeys = group_journeys(gps);
    let segmentation = segment_all(&journeys, routes, cfg);
    let route = routes.get(direction);
    Corpora {
        stop: align_corpus(&segmentation.trips, route, Scheme::StopBased),
        distance: align_corpus(&segmentation.trips, route, Scheme::DistanceBased),
        segmentation,
    }
}
