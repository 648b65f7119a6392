//! Flat TOML mission configuration.
//!
//! Every key is optional and missing keys take the defaults below.
//! Unknown keys are rejected so typos surface as input errors.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use skylaw::geo::{Bounds, LatLon, Range};
use skylaw::objectives::{GridSpec3D, RadioParams, UavParams};
use skylaw::router::EvolveConfig;
use skylaw::starmap::PerturbationModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    /// Master seed for map sampling and evolution.
    pub seed: u64,

    /// Navigation-frame origin, degrees.
    pub origin_lat: f64,
    pub origin_lon: f64,
    /// Navigation bounds in meters relative to the origin.
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Grid resolution per axis, meters.
    pub x_res: f64,
    pub y_res: f64,
    pub z_res: f64,

    /// Per-axis standard deviation of feature translation, meters.
    pub translation_sigma: f64,
    /// Standard deviation of feature rotation, radians.
    pub rotation_sigma: f64,
    /// Number of perturbed maps per relational map.
    pub map_samples: usize,

    /// UAV take-off mass (kg), cruise speed (m/s) and energy coefficient (J/m).
    pub mass: f64,
    pub speed: f64,
    pub energy_coefficient: f64,

    /// Radio disturbance at a tower, decay rate (1/m) and antenna height (m).
    pub radio_d0: f64,
    pub radio_mu: f64,
    pub radio_z: f64,
    /// Map tag whose feature centroids are radio towers.
    pub radio_tag: String,

    /// Number of weighted Dijkstra seedings.
    pub n_s: usize,
    /// Population size.
    pub n_i: usize,
    pub generations: usize,
    /// Gaussian mutation step per coordinate, meters.
    pub mutation_sigma: f64,
    /// Probability that an offspring is mutated.
    pub mutation_prob: f64,
    /// Per-gene mutation probability; absent means 1/D.
    pub gene_prob: Option<f64>,
    pub crossover_prob: f64,
    /// Waypoint spacing for resampling, meters.
    pub waypoint_resolution: f64,
    /// NURBS approximation tolerance; absent means twice the coarsest
    /// grid resolution.
    pub epsilon: Option<f64>,
    /// Seed paths avoid nodes whose satisfaction probability is below this.
    /// Absent means no node is avoided.
    pub seed_min_probability: Option<f64>,

    /// Clearance is granted when the score is strictly above this.
    pub clearance_threshold: f64,
    /// Active mission setting: one option per parameter group. Empty means
    /// the first option of every group.
    pub setting: Vec<String>,
    /// Maximum number of settings `explain` and `optimize` will enumerate.
    pub explain_limit: usize,
    /// Maximum enumeration size per grounded point, in bits.
    pub bit_limit: f64,
    /// Objective name -> built-in model (`radio`, `noise`, `risk`,
    /// `energy`). Objectives named after a built-in need no entry.
    pub model_bindings: BTreeMap<String, String>,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            seed: 0,
            origin_lat: 48.8677,
            origin_lon: 2.3391,
            x_min: 0.0,
            x_max: 13_000.0,
            y_min: 0.0,
            y_max: 13_000.0,
            z_min: 0.0,
            z_max: 300.0,
            x_res: 10.0,
            y_res: 10.0,
            z_res: 10.0,
            translation_sigma: 3.0,
            rotation_sigma: 0.0,
            map_samples: 50,
            mass: 1.2,
            speed: 14.0,
            energy_coefficient: 9.12,
            radio_d0: -200.0,
            radio_mu: 1.0,
            radio_z: 75.0,
            radio_tag: "tower".into(),
            n_s: 70,
            n_i: 700,
            generations: 100,
            mutation_sigma: 10.0,
            mutation_prob: 1.0,
            gene_prob: None,
            crossover_prob: 0.9,
            waypoint_resolution: 5.0,
            epsilon: None,
            seed_min_probability: None,
            clearance_threshold: 0.5,
            setting: Vec::new(),
            explain_limit: 64,
            bit_limit: 24.0,
            model_bindings: BTreeMap::new(),
        }
    }
}

impl MissionConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: MissionConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn check(&self) -> Result<()> {
        let positive = [
            ("x_res", self.x_res),
            ("y_res", self.y_res),
            ("z_res", self.z_res),
            ("mass", self.mass),
            ("speed", self.speed),
            ("energy_coefficient", self.energy_coefficient),
            ("radio_mu", self.radio_mu),
            ("waypoint_resolution", self.waypoint_resolution),
            ("bit_limit", self.bit_limit),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("`{k}` must be positive, got {v}");
            }
        }
        for (k, lo, hi) in [
            ("x", self.x_min, self.x_max),
            ("y", self.y_min, self.y_max),
            ("z", self.z_min, self.z_max),
        ] {
            if !(lo < hi) {
                bail!("`{k}_min` ({lo}) must be below `{k}_max` ({hi})");
            }
        }
        if !(self.radio_d0 < 0.0) {
            bail!("`radio_d0` must be negative, got {}", self.radio_d0);
        }
        for (k, v) in [
            ("mutation_prob", self.mutation_prob),
            ("crossover_prob", self.crossover_prob),
            ("clearance_threshold", self.clearance_threshold),
        ]
        .into_iter()
        .chain(self.gene_prob.map(|p| ("gene_prob", p)))
        .chain(
            self.seed_min_probability
                .map(|p| ("seed_min_probability", p)),
        ) {
            if !(0.0..=1.0).contains(&v) {
                bail!("`{k}` must lie in [0, 1], got {v}");
            }
        }
        if self.epsilon.is_some_and(|e| !(e > 0.0)) {
            bail!("`epsilon` must be positive");
        }
        if self.n_i < 2 {
            bail!("`n_i` must be at least 2");
        }
        if self.n_s < 1 {
            bail!("`n_s` must be at least 1");
        }
        PerturbationModel::new(
            self.rotation_sigma,
            self.translation_sigma,
            self.map_samples,
        )?;
        for (name, model) in &self.model_bindings {
            if !["radio", "noise", "risk", "energy"].contains(&model.as_str()) {
                bail!("objective `{name}` is bound to unknown model `{model}`");
            }
        }
        Ok(())
    }

    pub fn origin(&self) -> LatLon {
        LatLon::new(self.origin_lat, self.origin_lon)
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(
            Range::new(self.x_min, self.x_max),
            Range::new(self.y_min, self.y_max),
            Range::new(self.z_min, self.z_max),
        )
    }

    pub fn grid(&self) -> Result<GridSpec3D> {
        Ok(GridSpec3D::covering(
            &self.bounds(),
            [self.x_res, self.y_res, self.z_res],
        )?)
    }

    pub fn perturbation(&self) -> Result<PerturbationModel> {
        Ok(PerturbationModel::new(
            self.rotation_sigma,
            self.translation_sigma,
            self.map_samples,
        )?)
    }

    pub fn uav(&self) -> UavParams {
        UavParams {
            mass: self.mass,
            speed: self.speed,
            energy_coefficient: self.energy_coefficient,
        }
    }

    pub fn radio(&self) -> RadioParams {
        RadioParams {
            d0: self.radio_d0,
            mu: self.radio_mu,
            z_r: self.radio_z,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
            .unwrap_or(2.0 * self.x_res.max(self.y_res).max(self.z_res))
    }

    pub fn evolve(&self) -> EvolveConfig {
        let mut e = EvolveConfig::new(
            [
                [self.x_min, self.x_max],
                [self.y_min, self.y_max],
                [self.z_min, self.z_max],
            ],
            self.seed,
        );
        e.population = self.n_i;
        e.generations = self.generations;
        e.mutation_sigma = [self.mutation_sigma; 3];
        e.mutation_prob = self.mutation_prob;
        e.gene_prob = self.gene_prob;
        e.crossover_prob = self.crossover_prob;
        e.delta = self.waypoint_resolution;
        e
    }

    /// Built-in model an objective resolves to.
    pub fn model_for<'a>(&'a self, objective: &'a str) -> &'a str {
        self.model_bindings
            .get(objective)
            .map(String::as_str)
            .unwrap_or(objective)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_parameter_table() {
        let c = MissionConfig::parse("").unwrap();
        assert_eq!(c, MissionConfig::default());
        assert_eq!((c.origin_lat, c.origin_lon), (48.8677, 2.3391));
        assert_eq!(
            (c.x_min, c.x_max, c.y_min, c.y_max),
            (0.0, 13_000.0, 0.0, 13_000.0)
        );
        assert_eq!((c.z_min, c.z_max), (0.0, 300.0));
        assert_eq!((c.x_res, c.y_res, c.z_res), (10.0, 10.0, 10.0));
        // N(0 m, 9 m^2) translation error
        assert_eq!(c.translation_sigma * c.translation_sigma, 9.0);
        assert_eq!(c.map_samples, 50);
        assert_eq!((c.mass, c.speed, c.energy_coefficient), (1.2, 14.0, 9.12));
        assert_eq!((c.radio_z, c.radio_d0, c.radio_mu), (75.0, -200.0, 1.0));
        assert_eq!(c.waypoint_resolution, 5.0);
        assert_eq!(c.mutation_sigma, 10.0);
        assert_eq!(c.mutation_prob, 1.0);
        assert_eq!(c.gene_prob, None);
        assert_eq!(c.crossover_prob, 0.9);
        assert_eq!((c.n_i, c.n_s), (700, 70));
        assert_eq!(c.epsilon(), 20.0);
        let e = c.evolve();
        assert_eq!(e.mutation_sigma, [10.0; 3]);
        assert_eq!(e.generations, 100);
    }

    #[test]
    fn rejects_unknown_and_invalid_keys() {
        assert!(MissionConfig::parse("n_q = 3").is_err());
        assert!(MissionConfig::parse("x_res = 0").is_err());
        assert!(MissionConfig::parse("x_min = 5\nx_max = 1").is_err());
        assert!(MissionConfig::parse("clearance_threshold = 1.5").is_err());
        assert!(MissionConfig::parse("model_bindings = { radio = \"sonar\" }").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = MissionConfig {
            setting: vec!["expanded_license".into(), "daytime".into()],
            gene_prob: Some(0.25),
            ..MissionConfig::default()
        };
        c.model_bindings.insert("signal".into(), "radio".into());
        assert_eq!(MissionConfig::parse(&c.to_toml()).unwrap(), c);
    }
}
