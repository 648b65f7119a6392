//! Cost grids and path objectives.

mod grid;
mod models;
mod path;

pub use grid::{format_number, GridSpec2D, GridSpec3D, ScalarGrid2D, ScalarGrid3D};
pub use models::{
    build_noise_grid, build_radio_grid, build_risk_grid, compliance_cost_grid, RadioParams,
    ROAD_BUFFER_M, ROAD_TAGS,
};
pub use path::{
    energy_cost, line_integral, resample_path, resample_polyline, UavParams, Waypoints,
};
