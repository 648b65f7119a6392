//! Regular lattices, scalar fields on them, and their text file format.
//!
//! File format: a header line `GRID3 nx ny nz ox oy oz rx ry rz` (or
//! `GRID2 nx ny ox oy rx ry`) followed by whitespace-separated values in
//! x-fastest, then y, then z order. Numbers use the shortest decimal
//! representation that round-trips, so writing and re-reading is lossless.

use crate::error::{Error, Result};
use crate::geo::{Bounds, Range};
use crate::par;

/// Slack allowed when testing a coordinate against the grid extent.
const BOUNDS_EPS: f64 = 1e-9;

fn node_count(range: Range, res: f64) -> usize {
    ((range.max - range.min) / res + BOUNDS_EPS).floor() as usize + 1
}

/// Fractional lattice coordinate of `v` on one axis, or `None` outside.
fn axis_coord(v: f64, origin: f64, res: f64, n: usize) -> Option<(usize, f64)> {
    let f = (v - origin) / res;
    let last = (n - 1) as f64;
    if !(f >= -BOUNDS_EPS && f <= last + BOUNDS_EPS) {
        return None;
    }
    let f = f.clamp(0.0, last);
    let i = (f.floor() as usize).min(n - 2);
    Some((i, f - i as f64))
}

/// Horizontal lattice: origin, spacing and node counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec2D {
    pub origin: [f64; 2],
    pub resolution: [f64; 2],
    pub counts: [usize; 2],
}

impl GridSpec2D {
    pub fn new(origin: [f64; 2], resolution: [f64; 2], counts: [usize; 2]) -> Result<Self> {
        if resolution.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::input("grid resolutions must be positive"));
        }
        if counts.iter().any(|&n| n < 2) {
            return Err(Error::input("grid needs at least 2 nodes per axis"));
        }
        Ok(GridSpec2D {
            origin,
            resolution,
            counts,
        })
    }

    /// Node lattice spanning both ends of the ranges.
    pub fn covering(x: Range, y: Range, resolution: [f64; 2]) -> Result<Self> {
        if resolution.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::input("grid resolutions must be positive"));
        }
        Self::new(
            [x.min, y.min],
            resolution,
            [node_count(x, resolution[0]), node_count(y, resolution[1])],
        )
    }

    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.counts[0] * j
    }

    /// Inverse of [`GridSpec2D::index`].
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.counts[0], idx / self.counts[0])
    }

    pub fn position(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        [
            self.origin[0] + i as f64 * self.resolution[0],
            self.origin[1] + j as f64 * self.resolution[1],
        ]
    }

    pub fn max_corner(&self) -> [f64; 2] {
        [
            self.origin[0] + (self.counts[0] - 1) as f64 * self.resolution[0],
            self.origin[1] + (self.counts[1] - 1) as f64 * self.resolution[1],
        ]
    }

    /// Lower-left cell index and offsets in `[0, 1]`, or `None` outside.
    pub fn locate(&self, p: [f64; 2]) -> Option<([usize; 2], [f64; 2])> {
        let (i, tx) = axis_coord(p[0], self.origin[0], self.resolution[0], self.counts[0])?;
        let (j, ty) = axis_coord(p[1], self.origin[1], self.resolution[1], self.counts[1])?;
        Some(([i, j], [tx, ty]))
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.locate(p).is_some()
    }
}

/// Scalar values on a [`GridSpec2D`], x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid2D {
    spec: GridSpec2D,
    values: Vec<f64>,
}

impl ScalarGrid2D {
    pub fn new(spec: GridSpec2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::input(format!(
                "grid expects {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid values must be finite"));
        }
        Ok(ScalarGrid2D { spec, values })
    }

    pub fn constant(spec: GridSpec2D, v: f64) -> Self {
        ScalarGrid2D {
            spec,
            values: vec![v; spec.len()],
        }
    }

    pub fn spec(&self) -> &GridSpec2D {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    /// Bilinear interpolation; exact at nodes.
    pub fn bilinear(&self, p: [f64; 2]) -> Result<f64> {
        let ([i, j], [tx, ty]) = self
            .spec
            .locate(p)
            .ok_or_else(|| Error::out_of_bounds([p[0], p[1], 0.0]))?;
        Ok(bilerp(
            [
                self.get(i, j),
                self.get(i + 1, j),
                self.get(i, j + 1),
                self.get(i + 1, j + 1),
            ],
            tx,
            ty,
        ))
    }

    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "GRID2 {} {} {} {} {} {}\n",
            s.counts[0], s.counts[1], s.origin[0], s.origin[1], s.resolution[0], s.resolution[1]
        );
        write_rows(&mut out, &self.values, s.counts[0]);
        out
    }

    /// Parses one GRID2 block and returns it with the unconsumed tokens.
    pub fn parse_block<'a, I>(tokens: &mut I) -> Result<Self>
    where
        I: Iterator<Item = &'a str>,
    {
        expect_magic(tokens, "GRID2")?;
        let nx = parse_usize(tokens)?;
        let ny = parse_usize(tokens)?;
        let o = [parse_f64(tokens)?, parse_f64(tokens)?];
        let r = [parse_f64(tokens)?, parse_f64(tokens)?];
        let spec = GridSpec2D::new(o, r, [nx, ny])?;
        let values = (0..spec.len())
            .map(|_| parse_f64(tokens))
            .collect::<Result<_>>()?;
        Self::new(spec, values)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let g = Self::parse_block(&mut tokens)?;
        if tokens.next().is_some() {
            return Err(Error::input("trailing data after GRID2 values"));
        }
        Ok(g)
    }
}

fn bilerp(c: [f64; 4], tx: f64, ty: f64) -> f64 {
    let a = c[0] + (c[1] - c[0]) * tx;
    let b = c[2] + (c[3] - c[2]) * tx;
    a + (b - a) * ty
}

/// The 3D navigation lattice. Node `(i, j, k)` sits at
/// `origin + (i, j, k) * resolution`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec3D {
    pub origin: [f64; 3],
    pub resolution: [f64; 3],
    pub counts: [usize; 3],
}

impl GridSpec3D {
    pub fn new(origin: [f64; 3], resolution: [f64; 3], counts: [usize; 3]) -> Result<Self> {
        if resolution.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::input("grid resolutions must be positive"));
        }
        if counts.iter().any(|&n| n < 2) {
            return Err(Error::input("grid needs at least 2 nodes per axis"));
        }
        Ok(GridSpec3D {
            origin,
            resolution,
            counts,
        })
    }

    /// Node lattice covering `bounds` inclusively at the given spacing.
    pub fn covering(bounds: &Bounds, resolution: [f64; 3]) -> Result<Self> {
        if resolution.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::input("grid resolutions must be positive"));
        }
        Self::new(
            [bounds.easting.min, bounds.northing.min, bounds.altitude.min],
            resolution,
            [
                node_count(bounds.easting, resolution[0]),
                node_count(bounds.northing, resolution[1]),
                node_count(bounds.altitude, resolution[2]),
            ],
        )
    }

    pub fn horizontal(&self) -> GridSpec2D {
        GridSpec2D {
            origin: [self.origin[0], self.origin[1]],
            resolution: [self.resolution[0], self.resolution[1]],
            counts: [self.counts[0], self.counts[1]],
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.counts[0] * (j + self.counts[1] * k)
    }

    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let nx = self.counts[0];
        let ny = self.counts[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn position_of(&self, ijk: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + ijk[a] as f64 * self.resolution[a])
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        self.position_of(self.ijk(idx))
    }

    pub fn altitude(&self, k: usize) -> f64 {
        self.origin[2] + k as f64 * self.resolution[2]
    }

    pub fn max_corner(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + (self.counts[a] - 1) as f64 * self.resolution[a])
    }

    pub fn locate(&self, p: [f64; 3]) -> Option<([usize; 3], [f64; 3])> {
        let mut cell = [0; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let (i, f) = axis_coord(p[a], self.origin[a], self.resolution[a], self.counts[a])?;
            cell[a] = i;
            t[a] = f;
        }
        Some((cell, t))
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.locate(p).is_some()
    }

    /// Nearest lattice node to an in-bounds point.
    pub fn nearest_node(&self, p: [f64; 3]) -> Option<[usize; 3]> {
        let (cell, t) = self.locate(p)?;
        Some(std::array::from_fn(|a| cell[a] + usize::from(t[a] >= 0.5)))
    }

    /// Clamps a point into the grid box.
    pub fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        let hi = self.max_corner();
        std::array::from_fn(|a| p[a].clamp(self.origin[a], hi[a]))
    }
}

/// Scalar field on a [`GridSpec3D`], stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid3D {
    spec: GridSpec3D,
    values: Vec<f64>,
}

impl ScalarGrid3D {
    pub fn new(spec: GridSpec3D, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::input(format!(
                "grid expects {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid values must be finite"));
        }
        Ok(ScalarGrid3D { spec, values })
    }

    pub fn constant(spec: GridSpec3D, v: f64) -> Self {
        ScalarGrid3D {
            spec,
            values: vec![v; spec.len()],
        }
    }

    /// Evaluates `f` at every node position, in parallel when enabled.
    pub fn from_fn<F>(spec: GridSpec3D, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        let values = par::map_indexed(spec.len(), |idx| f(spec.position(idx)));
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec3D {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ijk: [usize; 3]) -> f64 {
        self.values[self.spec.index(ijk[0], ijk[1], ijk[2])]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Values of horizontal slice `k`, x-fastest.
    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.spec.counts[0] * self.spec.counts[1];
        &self.values[k * n..(k + 1) * n]
    }

    /// Trilinear interpolation; exact at nodes.
    pub fn trilinear(&self, p: [f64; 3]) -> Result<f64> {
        let ([i, j, k], [tx, ty, tz]) =
            self.spec.locate(p).ok_or_else(|| Error::out_of_bounds(p))?;
        let lower = bilerp(
            [
                self.get([i, j, k]),
                self.get([i + 1, j, k]),
                self.get([i, j + 1, k]),
                self.get([i + 1, j + 1, k]),
            ],
            tx,
            ty,
        );
        let upper = bilerp(
            [
                self.get([i, j, k + 1]),
                self.get([i + 1, j, k + 1]),
                self.get([i, j + 1, k + 1]),
                self.get([i + 1, j + 1, k + 1]),
            ],
            tx,
            ty,
        );
        Ok(lower + (upper - lower) * tz)
    }

    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "GRID3 {} {} {} {} {} {} {} {} {}\n",
            s.counts[0],
            s.counts[1],
            s.counts[2],
            s.origin[0],
            s.origin[1],
            s.origin[2],
            s.resolution[0],
            s.resolution[1],
            s.resolution[2]
        );
        write_rows(&mut out, &self.values, s.counts[0]);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        expect_magic(&mut tokens, "GRID3")?;
        let n = [
            parse_usize(&mut tokens)?,
            parse_usize(&mut tokens)?,
            parse_usize(&mut tokens)?,
        ];
        let mut nums = [0.0; 6];
        for v in &mut nums {
            *v = parse_f64(&mut tokens)?;
        }
        let spec = GridSpec3D::new([nums[0], nums[1], nums[2]], [nums[3], nums[4], nums[5]], n)?;
        let values: Vec<f64> = (0..spec.len())
            .map(|_| parse_f64(&mut tokens))
            .collect::<Result<_>>()?;
        if tokens.next().is_some() {
            return Err(Error::input("trailing data after GRID3 values"));
        }
        Self::new(spec, values)
    }
}

/// Shortest round-tripping text for `v`, switching to exponent notation
/// for very small or very large magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-6..1e16).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_rows(out: &mut String, values: &[f64], row: usize) {
    for chunk in values.chunks(row) {
        let mut first = true;
        for v in chunk {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(&format_number(*v));
        }
        out.push('\n');
    }
}

fn expect_magic<'a>(tokens: &mut impl Iterator<Item = &'a str>, magic: &str) -> Result<()> {
    match tokens.next() {
        Some(t) if t == magic => Ok(()),
        Some(t) => Err(Error::input(format!(
            "expected `{magic}` header, found `{t}`"
        ))),
        None => Err(Error::input(format!(
            "empty input, expected `{magic}` header"
        ))),
    }
}

fn parse_usize<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Result<usize> {
    let t = tokens
        .next()
        .ok_or_else(|| Error::input("unexpected end of grid data"))?;
    t.parse()
        .map_err(|_| Error::input(format!("bad grid count `{t}`")))
}

fn parse_f64<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Result<f64> {
    let t = tokens
        .next()
        .ok_or_else(|| Error::input("unexpected end of grid data"))?;
    t.parse()
        .map_err(|_| Error::input(format!("bad grid value `{t}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> GridSpec3D {
        GridSpec3D::new([0.0, 0.0, 0.0], [10.0, 10.0, 10.0], [3, 3, 2]).unwrap()
    }

    #[test]
    fn covering_counts() {
        let b = Bounds::new(
            Range::new(0.0, 1000.0),
            Range::new(0.0, 1000.0),
            Range::new(0.0, 200.0),
        );
        let s = GridSpec3D::covering(&b, [20.0; 3]).unwrap();
        assert_eq!(s.counts, [51, 51, 11]);
        assert_eq!(s.max_corner(), [1000.0, 1000.0, 200.0]);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(GridSpec3D::new([0.0; 3], [0.0, 1.0, 1.0], [2, 2, 2]).is_err());
        assert!(GridSpec3D::new([0.0; 3], [1.0; 3], [1, 2, 2]).is_err());
        assert!(ScalarGrid3D::new(spec(), vec![0.0; 3]).is_err());
        assert!(ScalarGrid3D::new(spec(), vec![f64::NAN; 18]).is_err());
    }

    #[test]
    fn trilinear_nodes_and_midpoints() {
        let g = ScalarGrid3D::from_fn(spec(), |p| p[0] * 0.2 + p[1] * 0.01 + p[2]).unwrap();
        for idx in 0..g.spec().len() {
            let p = g.spec().position(idx);
            assert_eq!(g.trilinear(p).unwrap(), g.values()[idx]);
        }
        let mut values = vec![0.0; 18];
        values[1] = 4.0;
        let h = ScalarGrid3D::new(spec(), values).unwrap();
        assert_eq!(h.trilinear([5.0, 0.0, 0.0]).unwrap(), 2.0);
        let c = ScalarGrid3D::constant(spec(), 7.5);
        assert_eq!(c.trilinear([3.3, 14.2, 9.9]).unwrap(), 7.5);
    }

    #[test]
    fn trilinear_out_of_bounds_names_point() {
        let g = ScalarGrid3D::constant(spec(), 1.0);
        let err = g.trilinear([25.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { x, .. } if x == 25.0));
        assert!(g.trilinear([20.0, 20.0, 10.0]).is_ok());
    }

    #[test]
    fn bilinear_cell_center() {
        let s = GridSpec2D::new([0.0, 0.0], [1.0, 1.0], [2, 2]).unwrap();
        let g = ScalarGrid2D::new(s, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.bilinear([0.5, 0.5]).unwrap(), 0.5);
        assert!(g.bilinear([1.5, 0.5]).is_err());
    }

    #[test]
    fn text_header_layout() {
        let g = ScalarGrid3D::from_fn(spec(), |p| p[0] + p[2] / 10.0).unwrap();
        let text = g.to_text();
        assert!(text.starts_with("GRID3 3 3 2 0 0 0 10 10 10\n0 10 20\n"));
        let s2 = GridSpec2D::new([1.5, -2.0], [0.5, 0.25], [2, 2]).unwrap();
        let g2 = ScalarGrid2D::new(s2, vec![0.1, 0.2, 0.3, 1e-300]).unwrap();
        assert_eq!(
            g2.to_text(),
            "GRID2 2 2 1.5 -2 0.5 0.25\n0.1 0.2\n0.3 1e-300\n"
        );
        assert!(ScalarGrid3D::from_text("GRID2 2 2 0 0 1 1 0 0 0 0").is_err());
        assert!(ScalarGrid3D::from_text("GRID3 2 2 2 0 0 0 1 1 1 0 0").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_lossless(values in proptest::collection::vec(-1e6f64..1e6, 18)) {
            let g = ScalarGrid3D::new(spec(), values).unwrap();
            prop_assert_eq!(ScalarGrid3D::from_text(&g.to_text()).unwrap(), g);
        }
    }
}
