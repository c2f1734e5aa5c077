//! Great-circle distance, the local planar projection, and nearest-point
//! search with chronological retirement.
//!
//! cargo run --example geo_kdtree

use bustime::geo::{haversine, project, GeoPoint, KdTree};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spire = GeoPoint::new(53.3498, -6.2603)?;
    let heuston = GeoPoint::new(53.3464, -6.2920)?;
    println!("haversine   {:.1} m", haversine(spire, heuston));
    let planar = project(spire, heuston)?;
    println!("projected   {:.1} m  (x {:.1}, y {:.1})", planar.dist(&project(spire, spire)?), planar.x, planar.y);

    // A bus trace heading east, one fix every 50 m, and a stop near the start.
    let trace: Vec<GeoPoint> = (0..40).map(|i| spire.destination(90.0, i as f64 * 50.0)).collect();
    let pts: Vec<_> = trace.iter().enumerate().map(|(i, p)| Ok((project(spire, *p)?, i))).collect::<Result<_, bustime::geo::GeoError>>()?;
    let mut tree = KdTree::build(&pts);
    let stop = project(spire, spire.destination(0.0, 20.0).destination(90.0, 260.0))?;
    let (id, d) = tree.nearest(stop).expect("non-empty tree");
    println!("nearest fix to the stop: #{id} at {d:.1} m");

    // Once the bus has passed fix #10, earlier fixes can no longer match.
    tree.retire_through(10);
    let (id, d) = tree.nearest(stop).expect("live points remain");
    println!("after retiring #0..=#10: #{id} at {d:.1} m, {} of {} live", tree.live_count(), tree.len());
    Ok(())
}
