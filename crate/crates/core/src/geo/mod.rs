//! Tagged map features in a local metric frame.

mod geojson;
pub mod geometry;
mod projection;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub use geojson::{load_geojson, path_from_geojson, path_to_geojson, Loaded};
pub use projection::{project_to_local, unproject, EARTH_RADIUS_M};

/// Horizontal point in local meters: easting, northing.
pub type Point2 = [f64; 2];

/// A geographic position in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }
}

/// Closed interval on one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// Navigation bounds in local meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub easting: Range,
    pub northing: Range,
    pub altitude: Range,
}

impl Bounds {
    pub fn new(easting: Range, northing: Range, altitude: Range) -> Self {
        Bounds {
            easting,
            northing,
            altitude,
        }
    }

    pub fn contains_xy(&self, p: Point2) -> bool {
        self.easting.contains(p[0]) && self.northing.contains(p[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point2),
    Polyline(Vec<Point2>),
    /// Closed exterior ring, first vertex repeated at the end.
    Polygon(Vec<Point2>),
}

impl Geometry {
    pub fn vertices(&self) -> &[Point2] {
        match self {
            Geometry::Point(p) => std::slice::from_ref(p),
            Geometry::Polyline(v) | Geometry::Polygon(v) => v,
        }
    }

    pub fn vertices_mut(&mut self) -> &mut [Point2] {
        match self {
            Geometry::Point(p) => std::slice::from_mut(p),
            Geometry::Polyline(v) | Geometry::Polygon(v) => v,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        let finite = self
            .vertices()
            .iter()
            .all(|p| p[0].is_finite() && p[1].is_finite());
        if !finite {
            return Err("non-finite coordinate".into());
        }
        match self {
            Geometry::Point(_) => Ok(()),
            Geometry::Polyline(v) if v.len() < 2 => {
                Err("polyline needs at least 2 vertices".into())
            }
            Geometry::Polygon(v) if v.len() < 4 => {
                Err("polygon ring needs at least 4 vertices".into())
            }
            Geometry::Polygon(v) if v.first() != v.last() => {
                Err("polygon ring is not closed".into())
            }
            _ => Ok(()),
        }
    }
}

/// Returns true for a valid tag: `[a-z][a-z0-9_]*`.
pub fn is_valid_tag(tag: &str) -> bool {
    let mut chars = tag.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoFeature {
    pub id: String,
    pub geometry: Geometry,
    pub tags: BTreeSet<String>,
}

impl GeoFeature {
    pub fn new<I, S>(id: impl Into<String>, geometry: Geometry, tags: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let id = id.into();
        let mut geometry = geometry;
        // Close open rings instead of rejecting them.
        if let Geometry::Polygon(ring) = &mut geometry {
            if ring.len() >= 3 && ring.first() != ring.last() {
                let first = ring[0];
                ring.push(first);
            }
        }
        geometry
            .check()
            .map_err(|m| Error::input(format!("feature `{id}`: {m}")))?;
        let tags: BTreeSet<String> = tags.into_iter().map(Into::into).collect();
        if let Some(bad) = tags.iter().find(|t| !is_valid_tag(t)) {
            return Err(Error::input(format!("feature `{id}`: invalid tag `{bad}`")));
        }
        Ok(GeoFeature { id, geometry, tags })
    }

    pub fn point(id: impl Into<String>, p: Point2, tags: &[&str]) -> Result<Self> {
        Self::new(id, Geometry::Point(p), tags.iter().copied())
    }

    pub fn polyline(id: impl Into<String>, v: Vec<Point2>, tags: &[&str]) -> Result<Self> {
        Self::new(id, Geometry::Polyline(v), tags.iter().copied())
    }

    pub fn polygon(id: impl Into<String>, ring: Vec<Point2>, tags: &[&str]) -> Result<Self> {
        Self::new(id, Geometry::Polygon(ring), tags.iter().copied())
    }

    /// Mean of the distinct vertices (the closing vertex of a ring is skipped).
    pub fn centroid(&self) -> Point2 {
        let v = match &self.geometry {
            Geometry::Polygon(r) => &r[..r.len() - 1],
            g => g.vertices(),
        };
        let n = v.len() as f64;
        let (sx, sy) = v
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n, sy / n]
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    /// Euclidean distance from `p` to this feature; zero inside polygons.
    pub fn distance_to(&self, p: Point2) -> f64 {
        match &self.geometry {
            Geometry::Point(q) => geometry::dist(p, *q),
            Geometry::Polyline(v) => geometry::dist_to_chain(p, v),
            Geometry::Polygon(r) => {
                if geometry::point_in_ring(p, r) {
                    0.0
                } else {
                    geometry::dist_to_chain(p, r)
                }
            }
        }
    }
}

/// An immutable collection of tagged features with a tag index.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    origin: LatLon,
    bounds: Bounds,
    features: Vec<GeoFeature>,
    by_tag: BTreeMap<String, Vec<usize>>,
}

impl FeatureMap {
    /// Builds a map, clipping features to the horizontal bounds. Features
    /// entirely outside are dropped. Ids must be unique.
    pub fn new(origin: LatLon, bounds: Bounds, features: Vec<GeoFeature>) -> Result<Self> {
        let mut clipped = Vec::with_capacity(features.len());
        for f in features {
            clipped.extend(geometry::clip_feature(f, &bounds));
        }
        Self::from_parts(origin, bounds, clipped)
    }

    /// Builds a map without clipping. Used for perturbed copies whose
    /// features may drift past the bounds.
    pub(crate) fn from_parts(
        origin: LatLon,
        bounds: Bounds,
        mut features: Vec<GeoFeature>,
    ) -> Result<Self> {
        features.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = features.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::input(format!("duplicate feature id `{}`", w[0].id)));
        }
        let mut by_tag: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, f) in features.iter().enumerate() {
            for t in &f.tags {
                by_tag.entry(t.clone()).or_default().push(i);
            }
        }
        Ok(FeatureMap {
            origin,
            bounds,
            features,
            by_tag,
        })
    }

    pub fn origin(&self) -> LatLon {
        self.origin
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// All features, sorted by id.
    pub fn features(&self) -> &[GeoFeature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Union of all feature tags.
    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.by_tag.keys().map(String::as_str)
    }

    /// Features carrying `tag`, ordered by id. Unknown tags yield nothing.
    pub fn features_with_tag<'a>(&'a self, tag: &str) -> impl Iterator<Item = &'a GeoFeature> + 'a {
        self.by_tag
            .get(tag)
            .map(Vec::as_slice)
            .unwrap_or(&[])
            .iter()
            .map(move |&i| &self.features[i])
    }

    /// Same map with each feature geometry replaced via `f`.
    pub(crate) fn map_geometry<F>(&self, mut f: F) -> FeatureMap
    where
        F: FnMut(usize, &GeoFeature) -> Geometry,
    {
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(i, feat)| GeoFeature {
                id: feat.id.clone(),
                geometry: f(i, feat),
                tags: feat.tags.clone(),
            })
            .collect();
        FeatureMap {
            origin: self.origin,
            bounds: self.bounds,
            features,
            by_tag: self.by_tag.clone(),
        }
    }
}

/// Convenience re-export for callers that only need the tag query.
pub fn features_with_tag<'a>(map: &'a FeatureMap, tag: &str) -> Vec<&'a GeoFeature> {
    map.features_with_tag(tag).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> Bounds {
        Bounds::new(
            Range::new(0.0, 100.0),
            Range::new(0.0, 100.0),
            Range::new(0.0, 50.0),
        )
    }

    fn square(x: f64, y: f64, s: f64) -> Vec<Point2> {
        vec![[x, y], [x + s, y], [x + s, y + s], [x, y + s], [x, y]]
    }

    fn sample_map() -> FeatureMap {
        let features = vec![
            GeoFeature::polygon("a", square(10.0, 10.0, 10.0), &["park"]).unwrap(),
            GeoFeature::polyline("b", vec![[0.0, 50.0], [100.0, 50.0]], &["road"]).unwrap(),
            GeoFeature::polygon("c", square(60.0, 60.0, 5.0), &["park", "building"]).unwrap(),
        ];
        FeatureMap::new(LatLon::new(48.8677, 2.3391), bounds(), features).unwrap()
    }

    #[test]
    fn tag_lookup() {
        let map = sample_map();
        let parks: Vec<_> = map
            .features_with_tag("park")
            .map(|f| f.id.as_str())
            .collect();
        assert_eq!(parks, ["a", "c"]);
        assert_eq!(map.features_with_tag("road").count(), 1);
        assert_eq!(map.features_with_tag("embassy").count(), 0);
        assert_eq!(map.features_with_tag("building").next().unwrap().id, "c");
        let tags: Vec<_> = map.tags().collect();
        assert_eq!(tags, ["building", "park", "road"]);
    }

    #[test]
    fn tag_partition_count() {
        let map = sample_map();
        let total: usize = map.tags().map(|t| map.features_with_tag(t).count()).sum();
        // one feature carries two tags
        assert_eq!(total, map.len() + 1);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(GeoFeature::polygon("p", vec![[0.0, 0.0], [1.0, 0.0]], &["x"]).is_err());
        assert!(GeoFeature::polyline("l", vec![[0.0, 0.0]], &["x"]).is_err());
        assert!(GeoFeature::point("q", [0.0, 0.0], &["Bad"]).is_err());
        assert!(GeoFeature::point("q", [0.0, 0.0], &[""]).is_err());
        // open rings are closed automatically
        let f = GeoFeature::polygon("r", vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], &["x"]).unwrap();
        assert_eq!(f.geometry.vertices().len(), 4);
    }

    #[test]
    fn clipping_on_construction() {
        let features = vec![
            GeoFeature::polygon("in", square(-10.0, -10.0, 20.0), &["park"]).unwrap(),
            GeoFeature::point("out", [500.0, 500.0], &["tower"]).unwrap(),
        ];
        let map = FeatureMap::new(LatLon::new(0.0, 0.0), bounds(), features).unwrap();
        assert_eq!(map.len(), 1);
        for p in map.features()[0].geometry.vertices() {
            assert!(map.bounds().contains_xy(*p));
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let features = vec![
            GeoFeature::point("x", [1.0, 1.0], &["a"]).unwrap(),
            GeoFeature::point("x", [2.0, 2.0], &["b"]).unwrap(),
        ];
        assert!(FeatureMap::new(LatLon::new(0.0, 0.0), bounds(), features).is_err());
    }

    #[test]
    fn distances() {
        let f = GeoFeature::point("p", [0.0, 0.0], &["t"]).unwrap();
        assert_eq!(f.distance_to([100.0, 0.0]), 100.0);
        let g = GeoFeature::polygon("g", square(0.0, 0.0, 10.0), &["t"]).unwrap();
        assert_eq!(g.distance_to([5.0, 5.0]), 0.0);
        assert!((g.distance_to([13.0, 14.0]) - 5.0).abs() < 1e-12);
    }
}
