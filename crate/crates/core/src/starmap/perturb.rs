use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geo::FeatureMap;

/// Per-feature rotation/translation noise used to sample perturbed maps.
///
/// Each feature of each sampled map is rotated about its centroid by an
/// angle drawn from `N(0, rotation_sigma^2)` and shifted by an offset whose
/// axes are drawn independently from `N(0, translation_sigma^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationModel {
    /// Radians.
    pub rotation_sigma: f64,
    /// Meters, per axis.
    pub translation_sigma: f64,
    pub sample_count: usize,
    /// Feature id -> (rotation sigma, translation sigma).
    pub overrides: BTreeMap<String, (f64, f64)>,
}

impl PerturbationModel {
    pub fn new(rotation_sigma: f64, translation_sigma: f64, sample_count: usize) -> Result<Self> {
        let m = PerturbationModel {
            rotation_sigma,
            translation_sigma,
            sample_count,
            overrides: BTreeMap::new(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Translation-only noise with per-axis standard deviation `sigma`.
    pub fn translation(sigma: f64, sample_count: usize) -> Result<Self> {
        Self::new(0.0, sigma, sample_count)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |s: f64| s >= 0.0 && s.is_finite();
        if !ok(self.rotation_sigma) || !ok(self.translation_sigma) {
            return Err(Error::input("perturbation sigmas must be finite and >= 0"));
        }
        if let Some((id, _)) = self.overrides.iter().find(|(_, (r, t))| !ok(*r) || !ok(*t)) {
            return Err(Error::input(format!(
                "invalid perturbation override for `{id}`"
            )));
        }
        if self.sample_count < 2 {
            return Err(Error::input("sample_count must be at least 2"));
        }
        Ok(())
    }

    fn sigmas_for(&self, id: &str) -> (f64, f64) {
        self.overrides
            .get(id)
            .copied()
            .unwrap_or((self.rotation_sigma, self.translation_sigma))
    }
}

/// Draws one perturbed copy of `map`. Deterministic in `seed`.
pub fn sample_perturbed_map(map: &FeatureMap, model: &PerturbationModel, seed: u64) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perturb_with(map, model, &mut rng)
}

/// Sample `index` of the map ensemble drawn from `seed`.
pub(crate) fn ensemble_member(
    map: &FeatureMap,
    model: &PerturbationModel,
    seed: u64,
    index: usize,
) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    perturb_with(map, model, &mut rng)
}

fn perturb_with(map: &FeatureMap, model: &PerturbationModel, rng: &mut ChaCha8Rng) -> FeatureMap {
    map.map_geometry(|_, feat| {
        // always draw three normals so streams do not depend on the sigmas
        let z_rot: f64 = rng.sample(StandardNormal);
        let z_x: f64 = rng.sample(StandardNormal);
        let z_y: f64 = rng.sample(StandardNormal);
        let (rot_sigma, trans_sigma) = model.sigmas_for(&feat.id);
        let mut geometry = feat.geometry.clone();
        if rot_sigma == 0.0 && trans_sigma == 0.0 {
            return geometry;
        }
        let c = feat.centroid();
        let (sin, cos) = (z_rot * rot_sigma).sin_cos();
        let offset = [z_x * trans_sigma, z_y * trans_sigma];
        for v in geometry.vertices_mut() {
            let (dx, dy) = (v[0] - c[0], v[1] - c[1]);
            *v = [
                c[0] + cos * dx - sin * dy + offset[0],
                c[1] + sin * dx + cos * dy + offset[1],
            ];
        }
        geometry
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Bounds, GeoFeature, LatLon, Range};

    fn single_point() -> FeatureMap {
        let b = Bounds::new(
            Range::new(-100.0, 100.0),
            Range::new(-100.0, 100.0),
            Range::new(0.0, 1.0),
        );
        FeatureMap::new(
            LatLon::new(0.0, 0.0),
            b,
            vec![GeoFeature::point("p", [10.0, -5.0], &["pilot"]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let map = single_point();
        let model = PerturbationModel::new(0.0, 0.0, 2).unwrap();
        let out = sample_perturbed_map(&map, &model, 11);
        assert_eq!(out.features(), map.features());
    }

    #[test]
    fn same_seed_same_map() {
        let map = single_point();
        let model = PerturbationModel::new(0.1, 3.0, 2).unwrap();
        let a = sample_perturbed_map(&map, &model, 5);
        let b = sample_perturbed_map(&map, &model, 5);
        let c = sample_perturbed_map(&map, &model, 6);
        assert_eq!(a.features(), b.features());
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn translation_moments() {
        let map = single_point();
        let model = PerturbationModel::translation(3.0, 2).unwrap();
        let n = 10_000;
        let xs: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                ensemble_member(&map, &model, 99, i).features()[0]
                    .geometry
                    .vertices()[0]
            })
            .collect();
        for axis in 0..2 {
            let mean = xs.iter().map(|p| p[axis]).sum::<f64>() / n as f64;
            let var = xs.iter().map(|p| (p[axis] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let orig = [10.0, -5.0][axis];
            assert!((mean - orig).abs() < 0.1, "mean {mean}");
            assert!((var.sqrt() - 3.0).abs() < 0.15, "std {}", var.sqrt());
        }
    }

    #[test]
    fn rotation_keeps_centroid() {
        let b = Bounds::new(
            Range::new(-100.0, 100.0),
            Range::new(-100.0, 100.0),
            Range::new(0.0, 1.0),
        );
        let square = vec![
            [0.0, 0.0],
            [10.0, 0.0],
            [10.0, 10.0],
            [0.0, 10.0],
            [0.0, 0.0],
        ];
        let map = FeatureMap::new(
            LatLon::new(0.0, 0.0),
            b,
            vec![GeoFeature::polygon("sq", square, &["building"]).unwrap()],
        )
        .unwrap();
        let model = PerturbationModel::new(0.5, 0.0, 2).unwrap();
        let out = sample_perturbed_map(&map, &model, 1);
        let c = out.features()[0].centroid();
        assert!((c[0] - 5.0).abs() < 1e-12 && (c[1] - 5.0).abs() < 1e-12);
        assert_ne!(out.features()[0].geometry, map.features()[0].geometry);
    }

    #[test]
    fn invalid_models() {
        assert!(PerturbationModel::new(-1.0, 0.0, 10).is_err());
        assert!(PerturbationModel::new(0.0, 1.0, 1).is_err());
    }
}
