use std::ops::Deref;

use super::ScalarGrid3D;
use crate::error::{Error, Result};
use crate::router::NurbsCurve;

/// An ordered path of at least two 3D points, no two consecutive equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoints(Vec<[f64; 3]>);

impl Waypoints {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::input(format!(
                "a path needs at least 2 waypoints, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::input(format!(
                "waypoints {i} and {} coincide",
                i + 1
            )));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::input(format!(
                "waypoint {i} has a non-finite coordinate"
            )));
        }
        Ok(Waypoints(points))
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<[f64; 3]> {
        self.0
    }

    /// Total 3D length.
    pub fn length(&self) -> f64 {
        self.0.windows(2).map(|w| dist3(w[0], w[1])).sum()
    }
}

impl Deref for Waypoints {
    type Target = [[f64; 3]];

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

pub(crate) fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Trapezoidal line integral of `grid` along the polyline `path`.
pub fn line_integral(grid: &ScalarGrid3D, path: &[[f64; 3]]) -> Result<f64> {
    let values = path
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            grid.trilinear(p).map_err(|e| Error::Waypoint {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(path
        .windows(2)
        .zip(values.windows(2))
        .map(|(p, v)| 0.5 * (v[0] + v[1]) * dist3(p[0], p[1]))
        .sum())
}

/// Vehicle parameters of the energy model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavParams {
    /// Take-off mass in kg.
    pub mass: f64,
    /// Horizontal cruise speed in m/s.
    pub speed: f64,
    /// Energy per metre of horizontal flight, J/m.
    pub energy_coefficient: f64,
}

impl Default for UavParams {
    fn default() -> Self {
        UavParams {
            mass: 1.2,
            speed: 14.0,
            energy_coefficient: 9.12,
        }
    }
}

/// Kinetic energy at cruise speed plus distance-proportional flight energy,
/// with climbing weighted 10x and descending 15x.
pub fn energy_cost(path: &[[f64; 3]], uav: UavParams) -> Result<f64> {
    if !(uav.mass > 0.0 && uav.speed > 0.0 && uav.energy_coefficient > 0.0) {
        return Err(Error::input(
            "mass, speed and energy coefficient must be positive",
        ));
    }
    let (mut horizontal, mut up, mut down) = (0.0, 0.0, 0.0);
    for w in path.windows(2) {
        horizontal += ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        let dz = w[1][2] - w[0][2];
        if dz > 0.0 {
            up += dz;
        } else {
            down -= dz;
        }
    }
    Ok(0.5 * uav.mass * uav.speed * uav.speed
        + uav.energy_coefficient * (horizontal + 10.0 * up + 15.0 * down))
}

/// Resamples `curve` at uniform arc-length spacing no larger than `delta`.
/// The first and last waypoints are the curve's endpoints, bit for bit.
pub fn resample_path(curve: &NurbsCurve, delta: f64) -> Result<Waypoints> {
    if !(delta > 0.0) {
        return Err(Error::input(format!(
            "waypoint spacing must be positive, got {delta}"
        )));
    }
    let samples = 64 * curve.control_points().len().max(4);
    let table: Vec<[f64; 3]> = (0..=samples)
        .map(|i| curve.point(i as f64 / samples as f64))
        .collect();
    let mut cumulative = Vec::with_capacity(table.len());
    let mut s = 0.0;
    cumulative.push(0.0);
    for w in table.windows(2) {
        s += dist3(w[0], w[1]);
        cumulative.push(s);
    }
    let total = s;
    if !(total > 0.0) {
        return Err(Error::input("cannot resample a zero-length curve"));
    }
    let n = ((total / delta - 1e-9).ceil() as usize).max(1) + 1;
    let mut out = Vec::with_capacity(n);
    out.push(curve.start());
    let mut seg = 0;
    for i in 1..n - 1 {
        let target = total * i as f64 / (n - 1) as f64;
        while cumulative[seg + 1] < target {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let t = if span > 0.0 {
            (target - cumulative[seg]) / span
        } else {
            0.0
        };
        let u = (seg as f64 + t) / samples as f64;
        out.push(curve.point(u));
    }
    out.push(curve.end());
    // A curve that doubles back onto itself could in principle yield equal
    // neighbours; drop them rather than fail.
    out.dedup();
    Waypoints::new(out)
}

/// Uniform arc-length resampling of a polyline at spacing at most `delta`,
/// keeping both endpoints exactly.
pub fn resample_polyline(points: &[[f64; 3]], delta: f64) -> Result<Waypoints> {
    if !(delta > 0.0) {
        return Err(Error::input(format!(
            "waypoint spacing must be positive, got {delta}"
        )));
    }
    let path = Waypoints::new(points.to_vec())?;
    let total = path.length();
    let n = ((total / delta - 1e-9).ceil() as usize).max(1) + 1;
    let mut out = Vec::with_capacity(n);
    out.push(points[0]);
    let (mut seg, mut walked) = (0, 0.0);
    for i in 1..n - 1 {
        let target = total * i as f64 / (n - 1) as f64;
        while seg + 2 < points.len() && walked + dist3(points[seg], points[seg + 1]) < target {
            walked += dist3(points[seg], points[seg + 1]);
            seg += 1;
        }
        let t = (target - walked) / dist3(points[seg], points[seg + 1]);
        out.push(std::array::from_fn(|a| {
            points[seg][a] + t * (points[seg + 1][a] - points[seg][a])
        }));
    }
    out.push(points[points.len() - 1]);
    out.dedup();
    Waypoints::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::GridSpec3D;

    fn grid(f: impl Fn([f64; 3]) -> f64 + Sync + Send) -> ScalarGrid3D {
        ScalarGrid3D::from_fn(
            GridSpec3D::new([0.0; 3], [10.0; 3], [11, 11, 3]).unwrap(),
            f,
        )
        .unwrap()
    }

    #[test]
    fn waypoint_validation() {
        assert!(Waypoints::new(vec![[0.0; 3]]).is_err());
        assert!(Waypoints::new(vec![[0.0; 3], [0.0; 3]]).is_err());
        assert!(Waypoints::new(vec![[0.0; 3], [1.0, 0.0, 0.0]]).is_ok());
    }

    #[test]
    fn integral_constant_field() {
        let g = grid(|_| 2.5);
        let path = [[0.0, 0.0, 0.0], [30.0, 40.0, 0.0], [30.0, 40.0, 20.0]];
        assert!((line_integral(&g, &path).unwrap() - 2.5 * 70.0).abs() < 1e-12);
        assert_eq!(line_integral(&grid(|_| 0.0), &path).unwrap(), 0.0);
    }

    #[test]
    fn integral_trapezoid_by_hand() {
        let g = grid(|p| 1.0 + p[0] / 5.0);
        let path = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]];
        assert!((line_integral(&g, &path).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn integral_names_bad_waypoint() {
        let g = grid(|_| 1.0);
        let err = line_integral(&g, &[[0.0; 3], [10.0, 0.0, 0.0], [500.0, 0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::Waypoint { index: 2, .. }), "{err}");
    }

    #[test]
    fn energy_examples() {
        let uav = UavParams::default();
        let level = [[0.0, 0.0, 50.0], [1000.0, 0.0, 50.0]];
        assert!((energy_cost(&level, uav).unwrap() - 9237.6).abs() < 1e-9);
        let hop = [
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 100.0],
            [1000.0, 0.0, 100.0],
            [1000.0, 0.0, 0.0],
        ];
        assert!((energy_cost(&hop, uav).unwrap() - 32_037.6).abs() < 1e-9);
        let still = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!((energy_cost(&still, uav).unwrap() - 117.6).abs() < 1e-12);
    }

    #[test]
    fn energy_reversal_symmetry() {
        let uav = UavParams::default();
        let p = vec![[0.0, 0.0, 0.0], [40.0, 10.0, 30.0], [90.0, -20.0, 10.0]];
        let mut r = p.clone();
        r.reverse();
        let (a, b) = (energy_cost(&p, uav).unwrap(), energy_cost(&r, uav).unwrap());
        // climb 30, descend 20 forwards; climb 20, descend 30 backwards
        assert!((b - a - 9.12 * (10.0 * -10.0 + 15.0 * 10.0)).abs() < 1e-9);
    }

    #[test]
    fn resample_straight_line() {
        let c = NurbsCurve::uniform(vec![[0.0, 0.0, 0.0], [50.0, 0.0, 0.0], [100.0, 0.0, 0.0]])
            .unwrap();
        let w = resample_path(&c, 5.0).unwrap();
        assert_eq!(w.len(), 21);
        assert_eq!(w[0], c.start());
        assert_eq!(w[20], c.end());
        for pair in w.windows(2) {
            assert!(dist3(pair[0], pair[1]) <= 5.0 + 1e-6);
        }
        let coarse = resample_path(&c, 500.0).unwrap();
        assert_eq!(coarse.points(), &[c.start(), c.end()]);
    }

    #[test]
    fn resample_curved_spacing() {
        let c = NurbsCurve::uniform(vec![
            [0.0, 0.0, 0.0],
            [40.0, 80.0, 10.0],
            [120.0, -30.0, 40.0],
            [200.0, 10.0, 0.0],
        ])
        .unwrap();
        let w = resample_path(&c, 5.0).unwrap();
        let gaps: Vec<f64> = w.windows(2).map(|p| dist3(p[0], p[1])).collect();
        assert!(gaps.iter().all(|g| *g <= 5.0 + 1e-6));
        let (lo, hi) = gaps
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), g| (a.min(*g), b.max(*g)));
        assert!(hi - lo < 0.05, "uneven spacing {lo}..{hi}");
        assert_eq!(w[w.len() - 1], c.end());
    }

    #[test]
    fn resample_rejects_degenerate() {
        let c = NurbsCurve::uniform(vec![[1.0; 3]; 3]).unwrap();
        assert!(resample_path(&c, 5.0).is_err());
        let line = NurbsCurve::uniform(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        assert!(resample_path(&line, 0.0).is_err());
    }

    #[test]
    fn integral_is_additive() {
        let g = grid(|p| 1.0 + p[0] * 0.01 + (p[1] * 0.1).sin() + p[2] * 0.02);
        let a = [[0.0, 0.0, 0.0], [33.0, 12.0, 5.0], [60.0, 70.0, 10.0]];
        let b = [[60.0, 70.0, 10.0], [99.0, 3.0, 20.0]];
        let whole = [a[0], a[1], a[2], b[1]];
        let sum = line_integral(&g, &a).unwrap() + line_integral(&g, &b).unwrap();
        assert!((line_integral(&g, &whole).unwrap() - sum).abs() < 1e-9);
        let twice =
            ScalarGrid3D::new(*g.spec(), g.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert!((line_integral(&twice, &whole).unwrap() - 2.0 * sum).abs() < 1e-9);
    }

    #[test]
    fn polyline_resampling() {
        let w = resample_polyline(&[[0.0; 3], [10.0, 0.0, 0.0], [10.0, 10.0, 0.0]], 5.0).unwrap();
        assert_eq!(
            w.points(),
            &[
                [0.0; 3],
                [5.0, 0.0, 0.0],
                [10.0, 0.0, 0.0],
                [10.0, 5.0, 0.0],
                [10.0, 10.0, 0.0]
            ]
        );
        assert_eq!(
            resample_polyline(&[[0.0; 3], [3.0, 0.0, 0.0]], 5.0)
                .unwrap()
                .len(),
            2
        );
    }
}
