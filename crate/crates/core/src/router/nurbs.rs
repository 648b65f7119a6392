//! Degree-2 B-spline curves with unit weights, fitted by least squares.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::objectives::Waypoints;

pub const DEGREE: usize = 2;

/// A clamped NURBS curve of degree 2 with uniform weights on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsCurve {
    control: Vec<[f64; 3]>,
    knots: Vec<f64>,
}

impl NurbsCurve {
    /// Builds a curve from control points and a full clamped knot vector
    /// of length `control.len() + 3`.
    pub fn new(control: Vec<[f64; 3]>, knots: Vec<f64>) -> Result<Self> {
        let n = control.len();
        if n < DEGREE + 1 {
            return Err(Error::input(format!(
                "a degree-2 curve needs at least 3 control points, got {n}"
            )));
        }
        if knots.len() != n + DEGREE + 1 {
            return Err(Error::input(format!(
                "expected {} knots, got {}",
                n + DEGREE + 1,
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::input("knot vector must be non-decreasing"));
        }
        let clamped =
            knots[..=DEGREE].iter().all(|&k| k == 0.0) && knots[n..].iter().all(|&k| k == 1.0);
        if !clamped {
            return Err(Error::input("knot vector must be clamped to [0, 1]"));
        }
        Ok(NurbsCurve { control, knots })
    }

    /// A curve with uniformly spaced interior knots.
    pub fn uniform(control: Vec<[f64; 3]>) -> Result<Self> {
        let n = control.len();
        let knots = clamped_knots(n, |j| j as f64 / (n - DEGREE) as f64);
        Self::new(control, knots)
    }

    pub fn control_points(&self) -> &[[f64; 3]] {
        &self.control
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn start(&self) -> [f64; 3] {
        self.control[0]
    }

    pub fn end(&self) -> [f64; 3] {
        self.control[self.control.len() - 1]
    }

    /// Same knots, new control points (the count must match).
    pub fn with_control_points(&self, control: Vec<[f64; 3]>) -> Result<Self> {
        Self::new(control, self.knots.clone())
    }

    /// Curve point at parameter `u`, clamped to `[0, 1]`. The ends return
    /// the first and last control points exactly.
    pub fn point(&self, u: f64) -> [f64; 3] {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return self.start();
        }
        if u == 1.0 {
            return self.end();
        }
        let span = find_span(self.control.len(), &self.knots, u);
        let basis = basis_funs(span, u, &self.knots);
        let mut p = [0.0; 3];
        for (r, b) in basis.iter().enumerate() {
            let c = self.control[span - DEGREE + r];
            for a in 0..3 {
                p[a] += b * c[a];
            }
        }
        p
    }
}

/// Knot vector with `n - 3` interior knots given by `interior(j)`, j = 1..
fn clamped_knots(n: usize, interior: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut knots = vec![0.0; DEGREE + 1];
    knots.extend((1..n - DEGREE).map(interior));
    knots.extend([1.0; DEGREE + 1]);
    knots
}

fn find_span(n: usize, knots: &[f64], u: f64) -> usize {
    if u >= knots[n] {
        return n - 1;
    }
    let (mut lo, mut hi) = (DEGREE, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if u < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Non-vanishing basis functions N_{span-2..=span, 2}(u).
fn basis_funs(span: usize, u: f64, knots: &[f64]) -> [f64; DEGREE + 1] {
    let mut n = [0.0; DEGREE + 1];
    let mut left = [0.0; DEGREE + 1];
    let mut right = [0.0; DEGREE + 1];
    n[0] = 1.0;
    for j in 1..=DEGREE {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Full row of basis values over all `n` control points.
fn basis_row(n: usize, knots: &[f64], u: f64) -> Vec<f64> {
    let mut row = vec![0.0; n];
    if u <= 0.0 {
        row[0] = 1.0;
    } else if u >= 1.0 {
        row[n - 1] = 1.0;
    } else {
        let span = find_span(n, knots, u);
        for (r, b) in basis_funs(span, u, knots).iter().enumerate() {
            row[span - DEGREE + r] = *b;
        }
    }
    row
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Normalized cumulative chord lengths of `points`.
pub fn chordal_parameters(points: &[[f64; 3]]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for w in points.windows(2) {
        let last = acc[acc.len() - 1];
        acc.push(last + dist(w[0], w[1]));
    }
    let total = acc[acc.len() - 1];
    let last = acc.len() - 1;
    acc.iter_mut()
        .enumerate()
        .for_each(|(i, v)| *v = if i == last { 1.0 } else { *v / total });
    acc
}

/// Result of an adaptive fit.
#[derive(Debug, Clone)]
pub struct NurbsFit {
    pub curve: NurbsCurve,
    /// Largest distance from an input point to the curve at its parameter.
    pub deviation: f64,
}

/// Least-squares fit with `n` control points and fixed endpoints.
/// With `n == points.len()` the fit interpolates.
pub fn fit_nurbs(points: &[[f64; 3]], params: &[f64], n: usize) -> Option<NurbsCurve> {
    let m = points.len();
    if n < DEGREE + 1 || n > m {
        return None;
    }
    let q0 = points[0];
    let qm = points[m - 1];
    let knots = if n == m {
        clamped_knots(n, |j| {
            (j..j + DEGREE).map(|i| params[i]).sum::<f64>() / DEGREE as f64
        })
    } else {
        let d = m as f64 / (n - DEGREE) as f64;
        clamped_knots(n, |j| {
            let jd = j as f64 * d;
            let i = jd.floor() as usize;
            let alpha = jd - i as f64;
            (1.0 - alpha) * params[i - 1] + alpha * params[i.min(m - 1)]
        })
    };
    let inner = n - 2;
    let mut control = vec![q0; n];
    control[n - 1] = qm;
    if inner > 0 {
        let rows = m - 2;
        let mut a = DMatrix::<f64>::zeros(rows, inner);
        let mut rhs = DMatrix::<f64>::zeros(rows, 3);
        for k in 1..m - 1 {
            let row = basis_row(n, &knots, params[k]);
            for j in 0..inner {
                a[(k - 1, j)] = row[j + 1];
            }
            for c in 0..3 {
                rhs[(k - 1, c)] = points[k][c] - row[0] * q0[c] - row[n - 1] * qm[c];
            }
        }
        let solved = if rows == inner {
            a.lu().solve(&rhs)?
        } else {
            let ata = a.transpose() * &a;
            let atb = a.transpose() * rhs;
            ata.cholesky().map(|ch| ch.solve(&atb)).or_else(|| {
                let svd = (a.transpose() * &a).svd(true, true);
                svd.solve(&atb, 1e-12).ok()
            })?
        };
        for j in 0..inner {
            control[j + 1] = [solved[(j, 0)], solved[(j, 1)], solved[(j, 2)]];
        }
        if control.iter().flatten().any(|c| !c.is_finite()) {
            return None;
        }
    }
    NurbsCurve::new(control, knots).ok()
}

fn max_deviation(curve: &NurbsCurve, points: &[[f64; 3]], params: &[f64]) -> f64 {
    points
        .iter()
        .zip(params)
        .map(|(p, &u)| dist(*p, curve.point(u)))
        .fold(0.0, f64::max)
}

/// Adaptive approximation: grows the control point count from 4 until every
/// input point lies within `epsilon` of the curve at its chordal parameter.
pub fn approximate_nurbs(points: &Waypoints, epsilon: f64) -> Result<NurbsFit> {
    if !(epsilon > 0.0) {
        return Err(Error::input(format!(
            "approximation tolerance must be positive, got {epsilon}"
        )));
    }
    let pts = points.points();
    if pts.len() == 2 {
        let mid = std::array::from_fn(|a| 0.5 * (pts[0][a] + pts[1][a]));
        let curve = NurbsCurve::uniform(vec![pts[0], mid, pts[1]])?;
        return Ok(NurbsFit {
            curve,
            deviation: 0.0,
        });
    }
    let params = chordal_parameters(pts);
    let mut best: Option<NurbsFit> = None;
    for n in (DEGREE + 2).min(pts.len())..=pts.len() {
        let Some(curve) = fit_nurbs(pts, &params, n) else {
            continue;
        };
        let deviation = max_deviation(&curve, pts, &params);
        let fit = NurbsFit { curve, deviation };
        if deviation <= epsilon {
            return Ok(fit);
        }
        best = Some(fit);
    }
    best.ok_or_else(|| Error::input("could not fit a curve to the path"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wp(v: Vec<[f64; 3]>) -> Waypoints {
        Waypoints::new(v).unwrap()
    }

    #[test]
    fn partition_of_unity() {
        let c = NurbsCurve::uniform(vec![[0.0; 3]; 6]).unwrap();
        for i in 0..=50 {
            let row = basis_row(6, c.knots(), i as f64 / 50.0);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoints_are_exact() {
        let c = NurbsCurve::uniform(vec![
            [0.1, 0.2, 0.3],
            [5.0, 1.0, 0.0],
            [7.0, 3.0, 1.0],
            [9.7, 8.1, 2.2],
        ])
        .unwrap();
        assert_eq!(c.point(0.0), [0.1, 0.2, 0.3]);
        assert_eq!(c.point(1.0), [9.7, 8.1, 2.2]);
    }

    #[test]
    fn rejects_bad_knots() {
        let ctrl = vec![[0.0; 3]; 4];
        assert!(NurbsCurve::new(ctrl.clone(), vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0]).is_err());
        assert!(NurbsCurve::new(ctrl.clone(), vec![0.0, 0.0, 0.0, 0.7, 0.5, 1.0, 1.0]).is_err());
        assert!(NurbsCurve::new(ctrl, vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]).is_ok());
    }

    #[test]
    fn collinear_points_need_four_controls() {
        let pts: Vec<[f64; 3]> = (0..12)
            .map(|i| [i as f64 * 10.0, i as f64 * 5.0, 20.0])
            .collect();
        let fit = approximate_nurbs(&wp(pts), 0.01).unwrap();
        assert_eq!(fit.curve.control_points().len(), 4);
        assert!(fit.deviation < 1e-9);
    }

    #[test]
    fn interpolates_when_forced() {
        let pts = vec![
            [0.0, 0.0, 0.0],
            [10.0, 30.0, 0.0],
            [20.0, -5.0, 10.0],
            [40.0, 40.0, 0.0],
            [50.0, 0.0, 5.0],
        ];
        let params = chordal_parameters(&pts);
        let c = fit_nurbs(&pts, &params, pts.len()).unwrap();
        assert!(max_deviation(&c, &pts, &params) < 1e-9);
    }

    fn zigzag(seed: u64, n: usize) -> Vec<[f64; 3]> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = [0.0, 0.0, 0.0];
        let mut out = vec![p];
        for _ in 1..n {
            p = [
                p[0] + rng.random_range(5.0..15.0),
                p[1] + rng.random_range(-10.0..10.0),
                rng.random_range(0.0..50.0),
            ];
            out.push(p);
        }
        out
    }

    #[test]
    fn control_count_monotone_in_epsilon() {
        for seed in 0..5 {
            let pts = wp(zigzag(seed, 30));
            let mut last = 0;
            for eps in [40.0, 20.0, 10.0, 5.0, 1.0] {
                let n = approximate_nurbs(&pts, eps)
                    .unwrap()
                    .curve
                    .control_points()
                    .len();
                assert!(n >= last, "seed {seed}: {n} < {last} at eps {eps}");
                last = n;
            }
        }
    }

    proptest! {
        #[test]
        fn fit_meets_tolerance(seed in 0u64..1000, n in 3usize..40, eps in 1.0f64..30.0) {
            let pts = wp(zigzag(seed, n));
            let fit = approximate_nurbs(&pts, eps).unwrap();
            prop_assert!(fit.deviation <= eps + 1e-9, "deviation {}", fit.deviation);
            prop_assert_eq!(fit.curve.start(), pts[0]);
            prop_assert_eq!(fit.curve.end(), pts[pts.len() - 1]);
        }
    }
}
