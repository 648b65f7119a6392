//! Statistical relational maps: per-node distributions of spatial relations
//! fitted over an ensemble of perturbed maps.

mod perturb;
mod relation;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geo::{FeatureMap, LatLon, Point2};
use crate::objectives::{GridSpec2D, ScalarGrid2D};
use crate::par;

pub use perturb::{sample_perturbed_map, PerturbationModel};
pub use relation::{eval_distance, eval_over};

/// Which spatial relation a layer describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    /// Categorical: is the point over a tagged polygon? Fitted as Bernoulli.
    Over,
    /// Quantitative: distance to the closest tagged feature. Fitted as Gaussian.
    Distance,
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelationKind::Over => "over",
            RelationKind::Distance => "distance",
        })
    }
}

impl FromStr for RelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "over" => Ok(RelationKind::Over),
            "distance" => Ok(RelationKind::Distance),
            other => Err(Error::input(format!("unknown relation kind `{other}`"))),
        }
    }
}

/// Distribution parameters at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelationParams {
    Bernoulli { p: f64 },
    Gaussian { mean: f64, std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerValues {
    Bernoulli {
        p: ScalarGrid2D,
    },
    Gaussian {
        mean: ScalarGrid2D,
        std: ScalarGrid2D,
    },
}

/// Fitted parameters of one relation for one tag on a horizontal grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationLayer {
    pub tag: String,
    pub values: LayerValues,
}

impl RelationLayer {
    pub fn bernoulli(tag: impl Into<String>, p: ScalarGrid2D) -> Result<Self> {
        if p.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::input("Bernoulli parameters must lie in [0, 1]"));
        }
        Ok(RelationLayer {
            tag: tag.into(),
            values: LayerValues::Bernoulli { p },
        })
    }

    pub fn gaussian(tag: impl Into<String>, mean: ScalarGrid2D, std: ScalarGrid2D) -> Result<Self> {
        if mean.spec() != std.spec() {
            return Err(Error::input("mean and std grids differ"));
        }
        if mean.values().iter().any(|v| *v < 0.0) || std.values().iter().any(|v| *v < 0.0) {
            return Err(Error::input("distance mean and std must be non-negative"));
        }
        Ok(RelationLayer {
            tag: tag.into(),
            values: LayerValues::Gaussian { mean, std },
        })
    }

    pub fn kind(&self) -> RelationKind {
        match self.values {
            LayerValues::Bernoulli { .. } => RelationKind::Over,
            LayerValues::Gaussian { .. } => RelationKind::Distance,
        }
    }

    pub fn grid(&self) -> &GridSpec2D {
        match &self.values {
            LayerValues::Bernoulli { p } => p.spec(),
            LayerValues::Gaussian { mean, .. } => mean.spec(),
        }
    }

    /// Parameters at the given node index.
    pub fn at_node(&self, idx: usize) -> RelationParams {
        match &self.values {
            LayerValues::Bernoulli { p } => RelationParams::Bernoulli { p: p.values()[idx] },
            LayerValues::Gaussian { mean, std } => RelationParams::Gaussian {
                mean: mean.values()[idx],
                std: std.values()[idx],
            },
        }
    }
}

/// Bilinear interpolation of each parameter independently.
pub fn interpolate_layer(layer: &RelationLayer, p: Point2) -> Result<RelationParams> {
    Ok(match &layer.values {
        LayerValues::Bernoulli { p: g } => RelationParams::Bernoulli {
            p: g.bilinear(p)?.clamp(0.0, 1.0),
        },
        LayerValues::Gaussian { mean, std } => RelationParams::Gaussian {
            mean: mean.bilinear(p)?.max(0.0),
            std: std.bilinear(p)?.max(0.0),
        },
    })
}

/// Fits one layer over `model.sample_count` perturbed copies of `map`.
pub fn fit_relation_layer(
    map: &FeatureMap,
    model: &PerturbationModel,
    kind: RelationKind,
    tag: &str,
    grid: GridSpec2D,
    seed: u64,
) -> Result<RelationLayer> {
    let mut layers = fit_layers(map, model, &[(kind, tag.to_owned())], grid, seed)?;
    Ok(layers.remove(0))
}

/// Fits several layers against one shared map ensemble.
pub fn fit_layers(
    map: &FeatureMap,
    model: &PerturbationModel,
    relations: &[(RelationKind, String)],
    grid: GridSpec2D,
    seed: u64,
) -> Result<Vec<RelationLayer>> {
    model.validate()?;
    if grid.is_empty() {
        return Err(Error::input("grid is empty"));
    }
    for (kind, tag) in relations {
        if *kind == RelationKind::Distance && map.features_with_tag(tag).next().is_none() {
            return Err(Error::MissingTag(tag.clone()));
        }
    }
    let ensemble: Vec<FeatureMap> = par::map_indexed(model.sample_count, |s| {
        perturb::ensemble_member(map, model, seed, s)
    });
    relations
        .iter()
        .map(|(kind, tag)| fit_one(&ensemble, *kind, tag, grid))
        .collect()
}

fn fit_one(
    ensemble: &[FeatureMap],
    kind: RelationKind,
    tag: &str,
    grid: GridSpec2D,
) -> Result<RelationLayer> {
    let n = ensemble.len() as f64;
    match kind {
        RelationKind::Over => {
            let p = par::map_indexed(grid.len(), |idx| {
                let x = grid.position(idx);
                let hits = ensemble.iter().filter(|m| eval_over(x, tag, m)).count();
                hits as f64 / n
            });
            RelationLayer::bernoulli(tag, ScalarGrid2D::new(grid, p)?)
        }
        RelationKind::Distance => {
            let moments = par::try_map_indexed(grid.len(), |idx| {
                let x = grid.position(idx);
                let samples = ensemble
                    .iter()
                    .map(|m| eval_distance(x, tag, m))
                    .collect::<Result<Vec<f64>>>()?;
                Ok::<_, Error>(mean_std(&samples))
            })?;
            let (mean, std): (Vec<f64>, Vec<f64>) = moments.into_iter().unzip();
            RelationLayer::gaussian(
                tag,
                ScalarGrid2D::new(grid, mean)?,
                ScalarGrid2D::new(grid, std)?,
            )
        }
    }
}

/// Sample mean and unbiased standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    // identical samples give exactly zero spread
    if xs.iter().all(|x| *x == xs[0]) {
        return (xs[0], 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// A collection of relation layers sharing one horizontal grid.
#[derive(Debug, Clone)]
pub struct StarMap {
    grid: GridSpec2D,
    layers: BTreeMap<(RelationKind, String), RelationLayer>,
    pub origin: LatLon,
    pub model: Option<PerturbationModel>,
    pub seed: u64,
}

impl StarMap {
    pub fn new(grid: GridSpec2D, origin: LatLon) -> Self {
        StarMap {
            grid,
            layers: BTreeMap::new(),
            origin,
            model: None,
            seed: 0,
        }
    }

    /// Fits every requested relation from one ensemble.
    pub fn build(
        map: &FeatureMap,
        model: &PerturbationModel,
        relations: &[(RelationKind, String)],
        grid: GridSpec2D,
        seed: u64,
    ) -> Result<Self> {
        let layers = fit_layers(map, model, relations, grid, seed)?;
        let mut sm = StarMap::new(grid, map.origin());
        sm.model = Some(model.clone());
        sm.seed = seed;
        for layer in layers {
            sm.insert(layer)?;
        }
        Ok(sm)
    }

    pub fn insert(&mut self, layer: RelationLayer) -> Result<()> {
        if *layer.grid() != self.grid {
            return Err(Error::input(format!(
                "layer {}({}) uses a different grid",
                layer.kind(),
                layer.tag
            )));
        }
        self.layers.insert((layer.kind(), layer.tag.clone()), layer);
        Ok(())
    }

    pub fn grid(&self) -> &GridSpec2D {
        &self.grid
    }

    pub fn layer(&self, kind: RelationKind, tag: &str) -> Option<&RelationLayer> {
        self.layers.get(&(kind, tag.to_owned()))
    }

    pub fn has_layer(&self, kind: RelationKind, tag: &str) -> bool {
        self.layer(kind, tag).is_some()
    }

    pub fn layers(&self) -> impl Iterator<Item = &RelationLayer> {
        self.layers.values()
    }

    /// Interpolated parameters of a relation at `p`.
    pub fn params(&self, kind: RelationKind, tag: &str, p: Point2) -> Result<RelationParams> {
        let layer = self
            .layer(kind, tag)
            .ok_or_else(|| Error::input(format!("no {kind}({tag}) layer in the relational map")))?;
        interpolate_layer(layer, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Bounds, GeoFeature, Range};

    fn bounds() -> Bounds {
        Bounds::new(
            Range::new(-500.0, 500.0),
            Range::new(-500.0, 500.0),
            Range::new(0.0, 100.0),
        )
    }

    fn park_map() -> FeatureMap {
        let ring = vec![
            [-20.0, -20.0],
            [20.0, -20.0],
            [20.0, 20.0],
            [-20.0, 20.0],
            [-20.0, -20.0],
        ];
        FeatureMap::new(
            LatLon::new(48.0, 2.0),
            bounds(),
            vec![
                GeoFeature::polygon("park", ring, &["park"]).unwrap(),
                GeoFeature::point("tower", [100.0, 0.0], &["tower"]).unwrap(),
            ],
        )
        .unwrap()
    }

    fn grid() -> GridSpec2D {
        GridSpec2D::new([-100.0, -100.0], [50.0, 50.0], [5, 5]).unwrap()
    }

    #[test]
    fn zero_noise_fits_are_exact() {
        let map = park_map();
        let model = PerturbationModel::new(0.0, 0.0, 5).unwrap();
        let over = fit_relation_layer(&map, &model, RelationKind::Over, "park", grid(), 1).unwrap();
        // node (2, 2) is the origin, inside the park
        assert_eq!(
            over.at_node(grid().index(2, 2)),
            RelationParams::Bernoulli { p: 1.0 }
        );
        assert_eq!(
            over.at_node(grid().index(0, 0)),
            RelationParams::Bernoulli { p: 0.0 }
        );
        let dist =
            fit_relation_layer(&map, &model, RelationKind::Distance, "tower", grid(), 1).unwrap();
        // node (0, 2) is (-100, 0): 200 m from the tower; (4, 2) is on it.
        assert_eq!(
            dist.at_node(grid().index(0, 2)),
            RelationParams::Gaussian {
                mean: 200.0,
                std: 0.0
            }
        );
    }

    #[test]
    fn missing_tag_propagates() {
        let model = PerturbationModel::new(0.0, 1.0, 3).unwrap();
        let err = fit_relation_layer(
            &park_map(),
            &model,
            RelationKind::Distance,
            "embassy",
            grid(),
            1,
        );
        assert!(matches!(err, Err(Error::MissingTag(t)) if t == "embassy"));
    }

    #[test]
    fn fits_are_deterministic_and_in_domain() {
        let map = park_map();
        let model = PerturbationModel::new(0.05, 10.0, 20).unwrap();
        let rel = [
            (RelationKind::Over, "park".to_owned()),
            (RelationKind::Distance, "park".to_owned()),
        ];
        let a = fit_layers(&map, &model, &rel, grid(), 3).unwrap();
        let b = fit_layers(&map, &model, &rel, grid(), 3).unwrap();
        assert_eq!(a, b);
        for layer in &a {
            for idx in 0..grid().len() {
                match layer.at_node(idx) {
                    RelationParams::Bernoulli { p } => assert!((0.0..=1.0).contains(&p)),
                    RelationParams::Gaussian { mean, std } => assert!(mean >= 0.0 && std >= 0.0),
                }
            }
        }
    }

    #[test]
    fn interpolation_linear() {
        let s = GridSpec2D::new([0.0, 0.0], [10.0, 10.0], [2, 2]).unwrap();
        let layer = RelationLayer::bernoulli(
            "park",
            ScalarGrid2D::new(s, vec![0.0, 1.0, 0.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            interpolate_layer(&layer, [0.0, 0.0]).unwrap(),
            RelationParams::Bernoulli { p: 0.0 }
        );
        assert_eq!(
            interpolate_layer(&layer, [5.0, 0.0]).unwrap(),
            RelationParams::Bernoulli { p: 0.5 }
        );
        let layer2 = RelationLayer::bernoulli(
            "park",
            ScalarGrid2D::new(s, vec![0.0, 0.0, 1.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            interpolate_layer(&layer2, [5.0, 5.0]).unwrap(),
            RelationParams::Bernoulli { p: 0.5 }
        );
        assert!(interpolate_layer(&layer, [11.0, 0.0]).is_err());
    }

    #[test]
    fn rejects_out_of_domain_layers() {
        let s = GridSpec2D::new([0.0, 0.0], [10.0, 10.0], [2, 2]).unwrap();
        assert!(RelationLayer::bernoulli("x", ScalarGrid2D::constant(s, 1.5)).is_err());
        assert!(RelationLayer::gaussian(
            "x",
            ScalarGrid2D::constant(s, 1.0),
            ScalarGrid2D::constant(s, -1.0)
        )
        .is_err());
    }
}
