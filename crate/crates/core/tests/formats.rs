use proptest::prelude::*;
use skylaw::geo::{path_from_geojson, path_to_geojson, LatLon};
use skylaw::objectives::{GridSpec2D, GridSpec3D, ScalarGrid2D, ScalarGrid3D};
use skylaw::starmap::{RelationKind, RelationLayer, RelationParams, StarMap};

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3..1e3f64,
        Just(0.0),
        Just(-0.0),
        (-300i32..300).prop_map(|e| 1.5f64.powi(e)),
        Just(f64::MIN_POSITIVE),
        Just(1e300),
    ]
}

proptest! {
    #[test]
    fn grid3_round_trips_bit_exactly(
        counts in (2usize..5, 2usize..5, 2usize..4),
        origin in prop::array::uniform3(-1e4..1e4f64),
        res in prop::array::uniform3(0.1..50.0f64),
        seed in prop::collection::vec(value(), 64),
    ) {
        let spec = GridSpec3D::new(origin, res, [counts.0, counts.1, counts.2]).unwrap();
        let values: Vec<f64> = (0..spec.len()).map(|i| seed[i % seed.len()]).collect();
        let g = ScalarGrid3D::new(spec, values).unwrap();
        let text = g.to_text();
        let back = ScalarGrid3D::from_text(&text).unwrap();
        prop_assert_eq!(back.spec(), g.spec());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.values()), bits(g.values()));
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn grid2_round_trips_bit_exactly(
        counts in (2usize..6, 2usize..6),
        res in prop::array::uniform2(0.5..100.0f64),
        seed in prop::collection::vec(value(), 36),
    ) {
        let spec = GridSpec2D::new([12.5, -3.25], res, [counts.0, counts.1]).unwrap();
        let values: Vec<f64> = (0..spec.len()).map(|i| seed[i % seed.len()]).collect();
        let g = ScalarGrid2D::new(spec, values).unwrap();
        let back = ScalarGrid2D::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn path_geojson_round_trip(points in prop::collection::vec(prop::array::uniform3(0.0..5000.0f64), 2..30)) {
        let origin = LatLon::new(48.8677, 2.3391);
        let text = path_to_geojson(&points, origin, None, &[]);
        let back = path_from_geojson(&text, None).unwrap();
        prop_assert_eq!(back.len(), points.len());
        for (a, b) in back.iter().zip(&points) {
            for k in 0..3 {
                prop_assert!((a[k] - b[k]).abs() < 1e-6, "{:?} vs {:?}", a, b);
            }
        }
    }
}

#[test]
fn grid3_text_layout() {
    let spec = GridSpec3D::new([0.0, 10.0, 0.0], [5.0, 5.0, 20.0], [2, 3, 2]).unwrap();
    let g = ScalarGrid3D::from_fn(spec, |p| p[0] + p[1] / 10.0 + p[2] / 100.0).unwrap();
    let text = g.to_text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "GRID3 2 3 2 0 10 0 5 5 20");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert_eq!(lines[1], "1 6");
    assert_eq!(lines[4], "1.2 6.2");
}

#[test]
fn starmap_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec2D::new([0.0, 0.0], [25.0, 25.0], [4, 3]).unwrap();
    let mut sm = StarMap::new(grid, LatLon::new(48.8677, 2.3391));
    let p: Vec<f64> = (0..grid.len()).map(|i| i as f64 / 11.0).collect();
    let mean: Vec<f64> = (0..grid.len()).map(|i| 10.0 + i as f64 * 7.3).collect();
    let std: Vec<f64> = (0..grid.len()).map(|i| 0.1 + i as f64 / 3.0).collect();
    sm.insert(RelationLayer::bernoulli("park", ScalarGrid2D::new(grid, p).unwrap()).unwrap())
        .unwrap();
    sm.insert(
        RelationLayer::gaussian(
            "building",
            ScalarGrid2D::new(grid, mean).unwrap(),
            ScalarGrid2D::new(grid, std).unwrap(),
        )
        .unwrap(),
    )
    .unwrap();
    sm.save(dir.path()).unwrap();
    assert!(dir.path().join("manifest.toml").exists());

    let back = StarMap::load(dir.path()).unwrap();
    assert_eq!(back.grid(), sm.grid());
    assert_eq!(back.origin, sm.origin);
    for (kind, tag) in [
        (RelationKind::Over, "park"),
        (RelationKind::Distance, "building"),
    ] {
        assert_eq!(back.layer(kind, tag), sm.layer(kind, tag), "{tag}");
    }
    let q = back
        .params(RelationKind::Distance, "building", [30.0, 20.0])
        .unwrap();
    assert!(matches!(q, RelationParams::Gaussian { .. }), "{q:?}");
}

#[test]
fn starmap_load_reports_missing_layer_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec2D::new([0.0, 0.0], [25.0, 25.0], [2, 2]).unwrap();
    let mut sm = StarMap::new(grid, LatLon::new(0.0, 0.0));
    sm.insert(RelationLayer::bernoulli("park", ScalarGrid2D::constant(grid, 0.5)).unwrap())
        .unwrap();
    sm.save(dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("over_park.grid2")).unwrap();
    let err = StarMap::load(dir.path()).unwrap_err().to_string();
    assert!(err.contains("over_park.grid2"), "{err}");
}
