//! Fixtures shared by the criterion benchmarks in `benches/`.

use alphasurvey_core::{GridSpec, PointCloud, Primitive, SceneSpec, DEFAULT_Z_FLOOR};

/// Square room `cells` × `cells` at 0.3 m with a regular pattern of pillars,
/// crates and tables.
pub fn furnished_room(cells: usize) -> (GridSpec, PointCloud) {
    let side = cells as f64 * 0.3;
    let mut scene = SceneSpec::new([0.0, 0.0, side, side]);
    let blocks = (cells / 8).max(1);
    for i in 0..blocks {
        for j in 0..blocks {
            let (x, y) = (i as f64 * 2.4, j as f64 * 2.4);
            let p = match (i + j) % 3 {
                0 => Primitive::Pillar {
                    name: None,
                    center: [x + 1.2, y + 1.2],
                    radius: 0.12,
                    height: 1.0,
                    base: alphasurvey_core::scene::DEFAULT_BASE,
                },
                1 => Primitive::Box { name: None, min: [x + 0.9, y + 0.9, 0.03], max: [x + 1.5, y + 1.3, 0.6] },
                _ => Primitive::Table {
                    name: None,
                    min: [x + 0.6, y + 0.6],
                    max: [x + 1.8, y + 1.5],
                    height: 0.75,
                    top_thickness: 0.04,
                    leg_size: 0.05,
                    base: alphasurvey_core::scene::DEFAULT_BASE,
                },
            };
            scene = scene.with(p);
        }
    }
    let cloud = scene.rasterize().expect("fixture scene is valid").without_floor(DEFAULT_Z_FLOOR);
    (GridSpec::new((0.0, 0.0), 0.3, cells, cells).expect("fixture grid is valid"), cloud)
}
