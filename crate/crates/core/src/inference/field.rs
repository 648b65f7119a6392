use super::ground::{Grounder, Query};
use super::{count, MissionSetting};
use crate::cola::Constitution;
use crate::error::{Error, Result};
use crate::objectives::{GridSpec3D, ScalarGrid3D};
use crate::par;
use crate::starmap::StarMap;

/// P(SAT) of the conjunction of all logic field objectives at every node.
pub fn probability_field(
    c: &Constitution,
    sm: &StarMap,
    grid: &GridSpec3D,
    setting: &MissionSetting,
) -> Result<ScalarGrid3D> {
    probability_field_for(
        c,
        sm,
        grid,
        setting,
        &Query::AllLogicObjectives,
        count::DEFAULT_BIT_LIMIT,
    )
}

/// Like [`probability_field`] with an explicit query and enumeration limit.
pub fn probability_field_for(
    c: &Constitution,
    sm: &StarMap,
    grid: &GridSpec3D,
    setting: &MissionSetting,
    query: &Query,
    bits: f64,
) -> Result<ScalarGrid3D> {
    let grounder = Grounder::new(c, setting, query)?;
    let values = par::try_map_indexed(grid.len(), |idx| {
        let p = grid.position(idx);
        grounder
            .ground(sm, p)
            .and_then(|gp| count::probability(&gp, bits))
            .map_err(|e| Error::AtNode {
                x: p[0],
                y: p[1],
                z: p[2],
                source: Box::new(e),
            })
    })?;
    ScalarGrid3D::new(*grid, values)
}
