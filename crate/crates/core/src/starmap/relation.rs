//! Deterministic spatial relations between a point and tagged features.

use crate::error::{Error, Result};
use crate::geo::{geometry, FeatureMap, Geometry, Point2};

/// Whether `p` lies inside or on the boundary of any polygon carrying `tag`.
/// Non-polygon features never contain a point.
pub fn eval_over(p: Point2, tag: &str, map: &FeatureMap) -> bool {
    map.features_with_tag(tag).any(|f| match &f.geometry {
        Geometry::Polygon(ring) => geometry::point_in_ring(p, ring),
        _ => false,
    })
}

/// Minimum Euclidean distance from `p` to any feature carrying `tag`;
/// zero inside tagged polygons.
pub fn eval_distance(p: Point2, tag: &str, map: &FeatureMap) -> Result<f64> {
    let mut best: Option<f64> = None;
    for f in map.features_with_tag(tag) {
        let d = f.distance_to(p);
        best = Some(best.map_or(d, |b: f64| b.min(d)));
        if d == 0.0 {
            break;
        }
    }
    best.ok_or_else(|| Error::MissingTag(tag.to_owned()))
}
