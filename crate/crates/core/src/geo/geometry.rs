//! Planar primitives: distances, point-in-polygon and clipping.

use super::{Bounds, GeoFeature, Geometry, Point2};

/// Boundary tolerance for the inclusive point-in-polygon test.
const ON_EDGE_EPS: f64 = 1e-9;

pub fn dist(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn dist_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Minimum distance from `p` to a chain of segments.
pub fn dist_to_chain(p: Point2, v: &[Point2]) -> f64 {
    if v.len() == 1 {
        return dist(p, v[0]);
    }
    v.windows(2)
        .map(|w| dist_to_segment(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Even-odd containment test on a closed ring; points on the boundary count
/// as inside.
pub fn point_in_ring(p: Point2, ring: &[Point2]) -> bool {
    if dist_to_chain(p, ring) <= ON_EDGE_EPS {
        return true;
    }
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Clips one feature to the horizontal bounds. Polylines may split into
/// several parts, which get `#k` id suffixes.
pub(crate) fn clip_feature(f: GeoFeature, bounds: &Bounds) -> Vec<GeoFeature> {
    let rect = [
        bounds.easting.min,
        bounds.northing.min,
        bounds.easting.max,
        bounds.northing.max,
    ];
    if f.geometry.vertices().iter().all(|p| bounds.contains_xy(*p)) {
        return vec![f];
    }
    match &f.geometry {
        Geometry::Point(_) => Vec::new(),
        Geometry::Polygon(ring) => {
            let mut clipped = clip_ring(&ring[..ring.len() - 1], rect);
            if clipped.len() < 3 {
                return Vec::new();
            }
            clipped.push(clipped[0]);
            vec![GeoFeature {
                geometry: Geometry::Polygon(clipped),
                ..f
            }]
        }
        Geometry::Polyline(v) => {
            let parts = clip_chain(v, rect);
            let single = parts.len() == 1;
            parts
                .into_iter()
                .enumerate()
                .map(|(k, part)| GeoFeature {
                    id: if single {
                        f.id.clone()
                    } else {
                        format!("{}#{k}", f.id)
                    },
                    geometry: Geometry::Polyline(part),
                    tags: f.tags.clone(),
                })
                .collect()
        }
    }
}

/// Sutherland-Hodgman clipping of an open vertex loop against an
/// axis-aligned rectangle `[xmin, ymin, xmax, ymax]`.
fn clip_ring(ring: &[Point2], rect: [f64; 4]) -> Vec<Point2> {
    let mut out: Vec<Point2> = ring.to_vec();
    // (axis, bound, keep_greater)
    let edges = [
        (0, rect[0], true),
        (0, rect[2], false),
        (1, rect[1], true),
        (1, rect[3], false),
    ];
    for (axis, bound, keep_ge) in edges {
        if out.is_empty() {
            break;
        }
        let inside = |p: &Point2| {
            if keep_ge {
                p[axis] >= bound
            } else {
                p[axis] <= bound
            }
        };
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci {
                if !pi {
                    out.push(intersect_axis(prev, cur, axis, bound));
                }
                out.push(cur);
            } else if pi {
                out.push(intersect_axis(prev, cur, axis, bound));
            }
        }
    }
    out.dedup();
    out
}

fn intersect_axis(a: Point2, b: Point2, axis: usize, bound: f64) -> Point2 {
    let t = (bound - a[axis]) / (b[axis] - a[axis]);
    let mut p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    p[axis] = bound;
    p
}

/// Liang-Barsky clip of every segment; consecutive visible pieces are
/// merged into chains.
fn clip_chain(v: &[Point2], rect: [f64; 4]) -> Vec<Vec<Point2>> {
    let mut parts: Vec<Vec<Point2>> = Vec::new();
    let mut current: Vec<Point2> = Vec::new();
    for w in v.windows(2) {
        match clip_segment(w[0], w[1], rect) {
            Some((a, b)) => {
                if current.last() != Some(&a) {
                    if current.len() >= 2 {
                        parts.push(std::mem::take(&mut current));
                    }
                    current.clear();
                    current.push(a);
                }
                if a != b {
                    current.push(b);
                }
            }
            None => {
                if current.len() >= 2 {
                    parts.push(std::mem::take(&mut current));
                }
                current.clear();
            }
        }
    }
    if current.len() >= 2 {
        parts.push(current);
    }
    parts
}

fn clip_segment(a: Point2, b: Point2, rect: [f64; 4]) -> Option<(Point2, Point2)> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [
        (-dx, a[0] - rect[0]),
        (dx, rect[2] - a[0]),
        (-dy, a[1] - rect[1]),
        (dy, rect[3] - a[1]),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    let at = |t: f64| {
        if t == 0.0 {
            a
        } else if t == 1.0 {
            b
        } else {
            [
                (a[0] + t * dx).clamp(rect[0], rect[2]),
                (a[1] + t * dy).clamp(rect[1], rect[3]),
            ]
        }
    };
    Some((at(t0), at(t1)))
}
