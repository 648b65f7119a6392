//! GeoJSON ingestion of tagged features and export of 3D paths.

use serde_json::{json, Map, Value};

use super::{
    project_to_local, unproject, Bounds, FeatureMap, GeoFeature, Geometry, LatLon, Point2, Range,
};
use crate::error::{Error, Result};

/// Outcome of [`load_geojson`].
#[derive(Debug, Clone)]
pub struct Loaded {
    pub map: FeatureMap,
    /// Features dropped because their `tags` array was missing or empty.
    pub untagged_dropped: usize,
    /// Features dropped because they lay entirely outside the bounds.
    pub outside_dropped: usize,
}

fn feature_err(index: usize, name: &str, msg: impl std::fmt::Display) -> Error {
    Error::input(format!("feature {index} (`{name}`): {msg}"))
}

fn read_lat_lon(v: &Value) -> Option<LatLon> {
    let a = v.as_array()?;
    if a.len() != 2 {
        return None;
    }
    Some(LatLon::new(a[0].as_f64()?, a[1].as_f64()?))
}

/// Parses a FeatureCollection whose top level carries `origin: [lat, lon]`
/// and whose features carry `properties.tags: [string]`. Positions follow
/// GeoJSON order (`[lon, lat]`) and are projected about the origin.
///
/// Polygon holes are ignored. When `bounds` is `None` the horizontal bounds
/// are the bounding box of all projected vertices and the altitude range is
/// `[0, 0]`.
pub fn load_geojson(text: &str, bounds: Option<Bounds>) -> Result<Loaded> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::input(format!("malformed GeoJSON: {e}")))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::input("document is not a FeatureCollection"));
    }
    let origin = doc
        .get("origin")
        .and_then(read_lat_lon)
        .ok_or_else(|| Error::input("missing or malformed top-level `origin: [lat, lon]`"))?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::input("FeatureCollection has no `features` array"))?;

    let mut parsed = Vec::new();
    let mut untagged = 0;
    for (index, feat) in features.iter().enumerate() {
        let name = feat
            .get("id")
            .map(|v| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .unwrap_or_else(|| format!("f{index}"));
        let tags: Vec<String> = match feat.pointer("/properties/tags") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|t| {
                    t.as_str()
                        .map(str::to_owned)
                        .ok_or_else(|| feature_err(index, &name, "tags must be strings"))
                })
                .collect::<Result<_>>()?,
            Some(_) => return Err(feature_err(index, &name, "`tags` must be an array")),
        };
        let geometry = parse_geometry(feat.get("geometry"), origin)
            .map_err(|m| feature_err(index, &name, m))?;
        if tags.is_empty() {
            untagged += 1;
            continue;
        }
        let f = GeoFeature::new(name.clone(), geometry, tags)
            .map_err(|e| feature_err(index, &name, e))?;
        parsed.push(f);
    }
    if untagged > 0 {
        log::warn!("dropped {untagged} untagged feature(s)");
    }

    let bounds = bounds.unwrap_or_else(|| bbox(&parsed));
    let before = parsed.len();
    let map = FeatureMap::new(origin, bounds, parsed)?;
    let kept_sources = {
        let mut ids: Vec<&str> = map
            .features()
            .iter()
            .map(|f| f.id.split('#').next().unwrap_or(&f.id))
            .collect();
        ids.dedup();
        ids.len()
    };
    Ok(Loaded {
        outside_dropped: before.saturating_sub(kept_sources),
        map,
        untagged_dropped: untagged,
    })
}

fn bbox(features: &[GeoFeature]) -> Bounds {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in features.iter().flat_map(|f| f.geometry.vertices()) {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if features.is_empty() {
        lo = [0.0; 2];
        hi = [0.0; 2];
    }
    Bounds::new(
        Range::new(lo[0], hi[0]),
        Range::new(lo[1], hi[1]),
        Range::new(0.0, 0.0),
    )
}

fn position(v: &Value, origin: LatLon) -> std::result::Result<Point2, String> {
    let a = v.as_array().ok_or("position is not an array")?;
    if a.len() < 2 {
        return Err("position needs [lon, lat]".into());
    }
    let lon = a[0].as_f64().ok_or("non-numeric longitude")?;
    let lat = a[1].as_f64().ok_or("non-numeric latitude")?;
    project_to_local(lat, lon, origin).map_err(|e| e.to_string())
}

fn positions(v: &Value, origin: LatLon) -> std::result::Result<Vec<Point2>, String> {
    v.as_array()
        .ok_or("coordinates are not an array")?
        .iter()
        .map(|p| position(p, origin))
        .collect()
}

fn parse_geometry(g: Option<&Value>, origin: LatLon) -> std::result::Result<Geometry, String> {
    let g = g.filter(|g| !g.is_null()).ok_or("missing geometry")?;
    let kind = g
        .get("type")
        .and_then(Value::as_str)
        .ok_or("geometry without type")?;
    let coords = g.get("coordinates").ok_or("geometry without coordinates")?;
    match kind {
        "Point" => Ok(Geometry::Point(position(coords, origin)?)),
        "LineString" => Ok(Geometry::Polyline(positions(coords, origin)?)),
        "Polygon" => {
            let rings = coords
                .as_array()
                .ok_or("polygon coordinates are not an array")?;
            let outer = rings.first().ok_or("polygon without rings")?;
            Ok(Geometry::Polygon(positions(outer, origin)?))
        }
        other => Err(format!("unsupported geometry type `{other}`")),
    }
}

/// Serializes a 3D path as a GeoJSON FeatureCollection holding one
/// LineString. Positions are `[lon, lat, altitude]`; the feature properties
/// carry the altitude list and, when given, per-waypoint satisfaction
/// probabilities under `clearance`.
pub fn path_to_geojson(
    waypoints: &[[f64; 3]],
    origin: LatLon,
    clearance: Option<&[f64]>,
    extra: &[(&str, Value)],
) -> String {
    let coords: Vec<Value> = waypoints
        .iter()
        .map(|p| {
            let g = unproject([p[0], p[1]], origin);
            json!([g.lon, g.lat, p[2]])
        })
        .collect();
    let mut props = Map::new();
    props.insert(
        "altitude".into(),
        Value::Array(waypoints.iter().map(|p| json!(p[2])).collect()),
    );
    if let Some(c) = clearance {
        props.insert("clearance".into(), json!(c));
    }
    for (k, v) in extra {
        props.insert((*k).to_owned(), v.clone());
    }
    let doc = json!({
        "type": "FeatureCollection",
        "origin": [origin.lat, origin.lon],
        "features": [{
            "type": "Feature",
            "properties": Value::Object(props),
            "geometry": { "type": "LineString", "coordinates": coords },
        }],
    });
    serde_json::to_string_pretty(&doc).expect("JSON values always serialize")
}

/// Reads a path written by [`path_to_geojson`] back into local meters.
/// The origin comes from the document unless `origin` overrides it.
pub fn path_from_geojson(text: &str, origin: Option<LatLon>) -> Result<Vec<[f64; 3]>> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::input(format!("malformed GeoJSON: {e}")))?;
    let origin = origin
        .or_else(|| doc.get("origin").and_then(read_lat_lon))
        .ok_or_else(|| Error::input("path file has no `origin`"))?;
    let geom = match doc.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => doc.pointer("/features/0/geometry"),
        Some("Feature") => doc.get("geometry"),
        _ => Some(&doc),
    }
    .ok_or_else(|| Error::input("path file has no geometry"))?;
    if geom.get("type").and_then(Value::as_str) != Some("LineString") {
        return Err(Error::input("path geometry must be a LineString"));
    }
    let coords = geom
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::input("LineString without coordinates"))?;
    coords
        .iter()
        .map(|c| {
            let xy = position(c, origin).map_err(Error::Input)?;
            let z = c.get(2).and_then(Value::as_f64).unwrap_or(0.0);
            Ok([xy[0], xy[1], z])
        })
        .collect()
}
