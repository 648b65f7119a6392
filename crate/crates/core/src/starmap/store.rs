//! Directory persistence: `manifest.toml` plus one grid file per layer.
//!
//! `over` layers hold one GRID2 block (the Bernoulli parameter); `distance`
//! layers hold two consecutive GRID2 blocks, mean first, then std.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LayerValues, PerturbationModel, RelationKind, RelationLayer, StarMap};
use crate::error::{Error, Result};
use crate::geo::LatLon;
use crate::objectives::{GridSpec2D, ScalarGrid2D};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Serialize, Deserialize)]
struct Manifest {
    origin: [f64; 2],
    seed: u64,
    grid: GridEntry,
    model: Option<ModelEntry>,
    #[serde(default)]
    layer: Vec<LayerEntry>,
}

#[derive(Serialize, Deserialize)]
struct GridEntry {
    origin: [f64; 2],
    resolution: [f64; 2],
    counts: [usize; 2],
}

#[derive(Serialize, Deserialize)]
struct ModelEntry {
    rotation_sigma: f64,
    translation_sigma: f64,
    sample_count: usize,
    #[serde(default)]
    overrides: BTreeMap<String, [f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct LayerEntry {
    kind: String,
    tag: String,
    file: String,
}

fn layer_file(kind: RelationKind, tag: &str) -> String {
    format!("{kind}_{tag}.grid2")
}

impl StarMap {
    /// Writes the manifest and layer files into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut entries = Vec::new();
        for layer in self.layers() {
            let file = layer_file(layer.kind(), &layer.tag);
            let text = match &layer.values {
                LayerValues::Bernoulli { p } => p.to_text(),
                LayerValues::Gaussian { mean, std } => {
                    format!("{}{}", mean.to_text(), std.to_text())
                }
            };
            fs::write(dir.join(&file), text)?;
            entries.push(LayerEntry {
                kind: layer.kind().to_string(),
                tag: layer.tag.clone(),
                file,
            });
        }
        let g = self.grid();
        let manifest = Manifest {
            origin: [self.origin.lat, self.origin.lon],
            seed: self.seed,
            grid: GridEntry {
                origin: g.origin,
                resolution: g.resolution,
                counts: g.counts,
            },
            model: self.model.as_ref().map(|m| ModelEntry {
                rotation_sigma: m.rotation_sigma,
                translation_sigma: m.translation_sigma,
                sample_count: m.sample_count,
                overrides: m
                    .overrides
                    .iter()
                    .map(|(k, (r, t))| (k.clone(), [*r, *t]))
                    .collect(),
            }),
            layer: entries,
        };
        let text =
            toml::to_string(&manifest).map_err(|e| Error::input(format!("manifest: {e}")))?;
        fs::write(dir.join(MANIFEST), text)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))
            .map_err(|e| Error::input(format!("{}: {e}", dir.join(MANIFEST).display())))?;
        let m: Manifest =
            toml::from_str(&text).map_err(|e| Error::input(format!("malformed manifest: {e}")))?;
        let grid = GridSpec2D::new(m.grid.origin, m.grid.resolution, m.grid.counts)?;
        let mut sm = StarMap::new(grid, LatLon::new(m.origin[0], m.origin[1]));
        sm.seed = m.seed;
        if let Some(me) = m.model {
            let mut model =
                PerturbationModel::new(me.rotation_sigma, me.translation_sigma, me.sample_count)?;
            model.overrides = me
                .overrides
                .into_iter()
                .map(|(k, [r, t])| (k, (r, t)))
                .collect();
            sm.model = Some(model);
        }
        for entry in m.layer {
            let kind: RelationKind = entry.kind.parse()?;
            let path = dir.join(&entry.file);
            let text = fs::read_to_string(&path)
                .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
            let mut tokens = text.split_whitespace();
            let layer = match kind {
                RelationKind::Over => {
                    RelationLayer::bernoulli(entry.tag, ScalarGrid2D::parse_block(&mut tokens)?)?
                }
                RelationKind::Distance => {
                    let mean = ScalarGrid2D::parse_block(&mut tokens)?;
                    let std = ScalarGrid2D::parse_block(&mut tokens)?;
                    RelationLayer::gaussian(entry.tag, mean, std)?
                }
            };
            if tokens.next().is_some() {
                return Err(Error::input(format!("{}: trailing data", path.display())));
            }
            sm.insert(layer)?;
        }
        Ok(sm)
    }
}
