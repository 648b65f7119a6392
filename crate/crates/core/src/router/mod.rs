//! Two-stage path planning: Dijkstra seeds over weighted grid aggregations,
//! smoothed and fitted with NURBS curves, then refined by NSGA-II.

mod evaluate;
mod graph;
mod nsga;
mod nurbs;
mod pareto;

pub use evaluate::{evaluate_curve, evaluate_path, Evaluator, RouteObjective};
pub use graph::{
    aggregate_grids, dijkstra_grid, dijkstra_grid_masked, generate_weight_vectors, smooth_polypath,
    PolyPath,
};
pub use nsga::{
    crowding_distance, dominates, evolve, evolve_with_observer, non_dominated_sort, EvolveConfig,
    Individual, ParetoSet,
};
pub use nurbs::{approximate_nurbs, chordal_parameters, fit_nurbs, NurbsCurve, NurbsFit, DEGREE};
pub use pareto::{extreme_points, hypervolume, knee_point, pareto_csv, Archive, ParetoRow};

/// Evaluates a member of a Pareto set or population: builds its curve,
/// resamples at `delta` and scores every objective.
pub fn evaluate_individual(
    ind: &Individual,
    start: [f64; 3],
    end: [f64; 3],
    objectives: &[RouteObjective],
    delta: f64,
) -> Vec<f64> {
    evaluate_curve(&ind.curve(start, end), objectives, delta)
}

use crate::error::{Error, Result};
use crate::objectives::{ScalarGrid3D, Waypoints};

/// Stage one: for each of `n_s` weightings, the Dijkstra path over the
/// aggregated grids, smoothed and fitted within `epsilon`. The requested
/// terminals replace the nearest grid nodes at both ends. Duplicate curves
/// are dropped.
pub fn seed_curves(
    grids: &[&ScalarGrid3D],
    n_s: usize,
    start: [f64; 3],
    goal: [f64; 3],
    epsilon: f64,
) -> Result<Vec<NurbsCurve>> {
    seed_curves_masked(grids, n_s, start, goal, epsilon, &[])
}

/// [`seed_curves`] whose Dijkstra searches avoid `blocked` nodes. Fails with
/// [`Error::Unreachable`] when the mask separates the terminals.
pub fn seed_curves_masked(
    grids: &[&ScalarGrid3D],
    n_s: usize,
    start: [f64; 3],
    goal: [f64; 3],
    epsilon: f64,
    blocked: &[bool],
) -> Result<Vec<NurbsCurve>> {
    let first = grids
        .first()
        .ok_or_else(|| Error::input("stage one needs at least one grid objective"))?;
    let spec = first.spec();
    if start == goal {
        return Err(Error::input("start and goal coincide"));
    }
    let s = spec
        .nearest_node(start)
        .ok_or_else(|| Error::out_of_bounds(start))?;
    let g = spec
        .nearest_node(goal)
        .ok_or_else(|| Error::out_of_bounds(goal))?;
    let mut curves: Vec<NurbsCurve> = Vec::new();
    for w in generate_weight_vectors(n_s, grids.len())? {
        let cost = aggregate_grids(grids, &w)?;
        let mut points = if s == g {
            vec![start, goal]
        } else {
            dijkstra_grid_masked(&cost, s, g, blocked)?.points
        };
        let last = points.len() - 1;
        points[0] = start;
        points[last] = goal;
        points.dedup();
        let smooth = smooth_polypath(&points)?;
        let curve = approximate_nurbs(&Waypoints::new(smooth.into_inner())?, epsilon)?.curve;
        if !curves.contains(&curve) {
            curves.push(curve);
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::GridSpec3D;

    fn flat() -> ScalarGrid3D {
        let spec = GridSpec3D::new([0.0; 3], [10.0; 3], [8, 8, 3]).unwrap();
        ScalarGrid3D::constant(spec, 1.0)
    }

    #[test]
    fn seeds_share_exact_terminals() {
        let g = flat();
        let (s, e) = ([1.0, 2.0, 3.0], [66.0, 61.0, 17.0]);
        let curves = seed_curves(&[&g, &g], 3, s, e, 20.0).unwrap();
        assert!(!curves.is_empty());
        for c in &curves {
            assert_eq!((c.start(), c.end()), (s, e));
        }
    }

    #[test]
    fn wall_makes_seeding_infeasible() {
        let g = flat();
        let spec = *g.spec();
        let blocked: Vec<bool> = (0..spec.len()).map(|i| spec.ijk(i)[0] == 4).collect();
        let err = seed_curves_masked(&[&g], 2, [0.0; 3], [70.0, 70.0, 0.0], 20.0, &blocked);
        assert!(matches!(err, Err(Error::Unreachable)), "{err:?}");
        let open = seed_curves_masked(&[&g], 2, [0.0; 3], [30.0, 70.0, 0.0], 20.0, &blocked);
        assert!(open.is_ok());
    }
}
