//! Objective evaluation of candidate curves.

use std::sync::Arc;

use super::NurbsCurve;
use crate::objectives::{energy_cost, line_integral, resample_path, ScalarGrid3D, UavParams};

/// How one objective scores a resampled path.
#[derive(Debug, Clone)]
pub enum Evaluator {
    /// Line integral over a cost grid.
    Grid(Arc<ScalarGrid3D>),
    /// Flight energy of the path.
    Energy(UavParams),
}

/// A named objective, minimized.
#[derive(Debug, Clone)]
pub struct RouteObjective {
    pub name: String,
    pub evaluator: Evaluator,
}

impl RouteObjective {
    pub fn grid(name: impl Into<String>, grid: Arc<ScalarGrid3D>) -> Self {
        RouteObjective {
            name: name.into(),
            evaluator: Evaluator::Grid(grid),
        }
    }

    pub fn energy(name: impl Into<String>, uav: UavParams) -> Self {
        RouteObjective {
            name: name.into(),
            evaluator: Evaluator::Energy(uav),
        }
    }

    /// Cost of `path`; `+inf` when the path leaves the grid.
    pub fn evaluate(&self, path: &[[f64; 3]]) -> f64 {
        let v = match &self.evaluator {
            Evaluator::Grid(g) => line_integral(g, path),
            Evaluator::Energy(uav) => energy_cost(path, *uav),
        };
        v.unwrap_or(f64::INFINITY)
    }
}

/// Objective vector of a path in objective order.
pub fn evaluate_path(objectives: &[RouteObjective], path: &[[f64; 3]]) -> Vec<f64> {
    objectives.iter().map(|o| o.evaluate(path)).collect()
}

/// Resamples `curve` at spacing `delta` and evaluates it. A curve that
/// cannot be resampled scores `+inf` everywhere.
pub fn evaluate_curve(curve: &NurbsCurve, objectives: &[RouteObjective], delta: f64) -> Vec<f64> {
    match resample_path(curve, delta) {
        Ok(w) => evaluate_path(objectives, &w),
        Err(_) => vec![f64::INFINITY; objectives.len()],
    }
}
