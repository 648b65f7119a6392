//! Analysis of Pareto fronts: knee and extreme members, hypervolume, export.

use std::fmt::Write as _;

use super::nsga::dominates;
use crate::objectives::format_number;

/// Member closest to the ideal point after per-objective min-max
/// normalization over the front; ties go to the lowest index.
pub fn knee_point(front: &[Vec<f64>]) -> Option<usize> {
    let e = front.first()?.len();
    let ranges: Vec<(f64, f64)> = (0..e)
        .map(|m| {
            front
                .iter()
                .map(|v| v[m])
                .filter(|x| x.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                })
        })
        .collect();
    let score = |v: &Vec<f64>| -> f64 {
        v.iter()
            .zip(&ranges)
            .map(|(x, (lo, hi))| {
                let span = hi - lo;
                let t = if !x.is_finite() {
                    f64::INFINITY
                } else if span > 0.0 {
                    (x - lo) / span
                } else {
                    0.0
                };
                t * t
            })
            .sum::<f64>()
    };
    let mut best = 0;
    let mut best_score = score(&front[0]);
    for (i, v) in front.iter().enumerate().skip(1) {
        let s = score(v);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }
    Some(best)
}

/// Per objective, the member with the lowest value (lowest index on ties).
pub fn extreme_points(front: &[Vec<f64>]) -> Vec<usize> {
    let Some(first) = front.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|m| {
            let mut best = 0;
            for (i, v) in front.iter().enumerate() {
                if v[m] < front[best][m] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Exact hypervolume dominated by `points` and bounded by `reference`
/// (minimization). Points not strictly better than the reference in every
/// objective contribute nothing.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let pts: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x < r))
        .cloned()
        .collect();
    wfg(nondominated(pts), reference)
}

fn nondominated(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pts.dedup();
    let keep: Vec<bool> = (0..pts.len())
        .map(|i| !pts.iter().any(|q| dominates(q, &pts[i])))
        .collect();
    pts.into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

fn box_volume(p: &[f64], r: &[f64]) -> f64 {
    p.iter().zip(r).map(|(x, y)| y - x).product()
}

/// The WFG algorithm: sum of exclusive contributions, each computed as the
/// point's box minus the hypervolume of the later points limited to it.
fn wfg(pts: Vec<Vec<f64>>, r: &[f64]) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    if r.len() == 1 {
        return pts.iter().map(|p| r[0] - p[0]).fold(0.0, f64::max);
    }
    if r.len() == 2 {
        let mut sorted = pts;
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut area = 0.0;
        let mut y = r[1];
        for p in sorted {
            if p[1] < y {
                area += (r[0] - p[0]) * (y - p[1]);
                y = p[1];
            }
        }
        return area;
    }
    let mut total = 0.0;
    for i in 0..pts.len() {
        let limited: Vec<Vec<f64>> = pts[i + 1..]
            .iter()
            .map(|q| q.iter().zip(&pts[i]).map(|(a, b)| a.max(*b)).collect())
            .collect();
        total += box_volume(&pts[i], r) - wfg(nondominated(limited), r);
    }
    total
}

/// External archive of every non-dominated objective vector seen so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Archive {
    points: Vec<Vec<f64>>,
}

impl Archive {
    /// Adds finite vectors, dropping anything dominated.
    pub fn extend<'a>(&mut self, vectors: impl IntoIterator<Item = &'a [f64]>) {
        for v in vectors {
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            if self
                .points
                .iter()
                .any(|p| dominates(p, v) || p.as_slice() == v)
            {
                continue;
            }
            self.points.retain(|p| !dominates(v, p));
            self.points.push(v.to_vec());
        }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn hypervolume(&self, reference: &[f64]) -> f64 {
        hypervolume(&self.points, reference)
    }
}

/// One row of the Pareto export.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoRow {
    pub id: usize,
    pub objectives: Vec<f64>,
    pub n_p: usize,
    pub path_file: String,
}

/// CSV with columns `id`, one per objective, `n_p` and `path`.
pub fn pareto_csv(names: &[String], rows: &[ParetoRow]) -> String {
    let mut out = String::from("id");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",n_p,path\n");
    for r in rows {
        let _ = write!(out, "{}", r.id);
        for v in &r.objectives {
            let _ = write!(out, ",{}", format_number(*v));
        }
        let _ = writeln!(out, ",{},{}", r.n_p, r.path_file);
    }
    out
}
