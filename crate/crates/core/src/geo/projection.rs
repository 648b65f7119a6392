//! Equirectangular projection about a local origin.

use super::{LatLon, Point2};
use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Projects a geographic position into local easting/northing meters.
pub fn project_to_local(lat: f64, lon: f64, origin: LatLon) -> Result<Point2> {
    if !(lat.abs() <= 90.0 && lon.abs() <= 180.0) {
        return Err(Error::input(format!(
            "coordinate ({lat}, {lon}) out of range"
        )));
    }
    if !(origin.lat.abs() < 90.0 && origin.lon.abs() <= 180.0) {
        return Err(Error::input(format!(
            "origin ({}, {}) out of range",
            origin.lat, origin.lon
        )));
    }
    let x = EARTH_RADIUS_M * origin.lat.to_radians().cos() * (lon - origin.lon).to_radians();
    let y = EARTH_RADIUS_M * (lat - origin.lat).to_radians();
    Ok([x, y])
}

/// Inverse of [`project_to_local`].
pub fn unproject(p: Point2, origin: LatLon) -> LatLon {
    let lat = origin.lat + (p[1] / EARTH_RADIUS_M).to_degrees();
    let lon = origin.lon + (p[0] / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    LatLon { lat, lon }
}
