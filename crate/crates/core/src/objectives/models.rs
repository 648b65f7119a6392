use super::{GridSpec3D, ScalarGrid3D};
use crate::error::{Error, Result};
use crate::geo::{FeatureMap, Point2};
use crate::par;
use crate::starmap::eval_over;

/// Tags treated as roads by the noise surrogate.
pub const ROAD_TAGS: [&str; 2] = ["primary", "secondary"];
/// Horizontal distance within which a node counts as over a road.
pub const ROAD_BUFFER_M: f64 = 15.0;

const LOW_BASE: f64 = 0.2;
const RISK_TAGS: [&str; 2] = ["building", "water"];

/// Signal disturbance model around radio towers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Disturbance at the tower itself, negative.
    pub d0: f64,
    /// Decay rate in 1/m.
    pub mu: f64,
    /// Tower antenna height in meters.
    pub z_r: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            d0: -200.0,
            mu: 1.0,
            z_r: 75.0,
        }
    }
}

/// `D0 / (mu r + 1)^2` with `r` the 3D distance to the nearest tower.
pub fn build_radio_grid(
    towers: &[Point2],
    spec: &GridSpec3D,
    params: RadioParams,
) -> Result<ScalarGrid3D> {
    if towers.is_empty() {
        return Err(Error::input("radio model needs at least one tower"));
    }
    if !(params.d0 < 0.0) || !(params.mu > 0.0) {
        return Err(Error::input(format!(
            "radio parameters need D0 < 0 and mu > 0, got D0 = {} and mu = {}",
            params.d0, params.mu
        )));
    }
    ScalarGrid3D::from_fn(*spec, |p| {
        let r = towers
            .iter()
            .map(|t| {
                ((p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2) + (p[2] - params.z_r).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let s = params.mu * r + 1.0;
        params.d0 / (s * s)
    })
}

/// Noise surrogate: lower over roads, fading linearly to zero at the top
/// of the grid.
pub fn build_noise_grid(map: &FeatureMap, spec: &GridSpec3D) -> Result<ScalarGrid3D> {
    let plane = spec.horizontal();
    let base = par::map_indexed(plane.len(), |idx| {
        let p = plane.position(idx);
        let near_road = ROAD_TAGS.iter().any(|tag| {
            map.features_with_tag(tag)
                .any(|f| f.distance_to(p) <= ROAD_BUFFER_M)
        });
        if near_road {
            LOW_BASE
        } else {
            1.0
        }
    });
    let z_max = spec.max_corner()[2];
    let mut values = Vec::with_capacity(spec.len());
    for k in 0..spec.counts[2] {
        let factor = (1.0 - spec.altitude(k) / z_max).max(0.0);
        values.extend(base.iter().map(|b| b * factor));
    }
    ScalarGrid3D::new(*spec, values)
}

/// Risk surrogate: lower over buildings and water, blurred with a Gaussian
/// whose width grows as `z / 4`, scaled by `1 + z / z_max`.
///
/// Slices are blurred incrementally (each from the one below with the
/// variance difference), so the horizontal total variation of the blurred
/// base never increases with altitude.
pub fn build_risk_grid(map: &FeatureMap, spec: &GridSpec3D) -> Result<ScalarGrid3D> {
    let plane = spec.horizontal();
    let base = par::map_indexed(plane.len(), |idx| {
        let p = plane.position(idx);
        if RISK_TAGS.iter().any(|tag| eval_over(p, tag, map)) {
            LOW_BASE
        } else {
            1.0
        }
    });
    let z_max = spec.max_corner()[2];
    let [nx, ny, nz] = spec.counts;
    let mut values = Vec::with_capacity(spec.len());
    let mut layer = base;
    let mut prev_var = 0.0;
    for k in 0..nz {
        let z = spec.altitude(k);
        let sigma = z.max(0.0) / 4.0;
        let step = (sigma * sigma - prev_var).max(0.0).sqrt();
        if step > 0.0 {
            layer = blur_axis(&layer, nx, ny, step / spec.resolution[0], true);
            layer = blur_axis(&layer, nx, ny, step / spec.resolution[1], false);
        }
        prev_var = sigma * sigma;
        let factor = 1.0 + z / z_max;
        values.extend(layer.iter().map(|v| v * factor));
    }
    ScalarGrid3D::new(*spec, values)
}

fn gaussian_kernel(sigma_cells: f64) -> Vec<f64> {
    let radius = (3.0 * sigma_cells).ceil().max(1.0) as isize;
    let w: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma_cells).powi(2)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// 1D Gaussian convolution along x (`along_x`) or y with replicated edges.
fn blur_axis(v: &[f64], nx: usize, ny: usize, sigma_cells: f64, along_x: bool) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma_cells);
    let r = (kernel.len() / 2) as isize;
    par::map_indexed(v.len(), |idx| {
        let (i, j) = ((idx % nx) as isize, (idx / nx) as isize);
        kernel
            .iter()
            .enumerate()
            .map(|(o, w)| {
                let d = o as isize - r;
                let (ii, jj) = if along_x {
                    ((i + d).clamp(0, nx as isize - 1), j)
                } else {
                    (i, (j + d).clamp(0, ny as isize - 1))
                };
                w * v[jj as usize * nx + ii as usize]
            })
            .sum()
    })
}

/// Maps a satisfaction-probability field to the cost `1 - P`.
pub fn compliance_cost_grid(prob: &ScalarGrid3D) -> Result<ScalarGrid3D> {
    if let Some(bad) = prob.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::input(format!("probability {bad} outside [0, 1]")));
    }
    prob.map(|p| 1.0 - p)
}
