//! Built-in test curves.

use crate::geom::Vec2;
use crate::nurbs::NurbsCurve;

pub const NAMES: [&str; 3] = ["trident", "line50", "butterfly_partial"];

/// Trident toolpath: seven control points, unit weights.
///
/// The ten-entry knot vector is exactly a clamped quadratic
/// vector for seven control points, so the curve is built as degree 2.
pub fn trident() -> NurbsCurve {
    let points = [(60.0, 0.0), (120.0, 120.0), (72.0, 48.0), (60.0, 120.0), (48.0, 48.0), (0.0, 120.0), (60.0, 0.0)];
    NurbsCurve::new(
        2,
        points.iter().map(|&(x, y)| Vec2::new(x, y)).collect(),
        vec![1.0; 7],
        vec![0.0, 0.0, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0, 1.0],
    )
    .expect("trident fixture is valid")
}

/// Straight 50 mm segment along x.
pub fn line50() -> NurbsCurve {
    NurbsCurve::new(1, vec![Vec2::new(0.0, 0.0), Vec2::new(50.0, 0.0)], vec![1.0, 1.0], vec![0.0, 0.0, 1.0, 1.0])
        .expect("line fixture is valid")
}

/// Leading, untruncated part of the butterfly control polygon with a
/// clamped uniform cubic knot vector. Smoke testing only: the full
/// curve's data is not available.
pub fn butterfly_partial() -> NurbsCurve {
    let points = [
        (54.493, 52.139),
        (55.507, 52.139),
        (56.082, 49.615),
        (56.780, 44.971),
        (69.575, 51.358),
        (77.786, 58.573),
        (90.526, 67.081),
        (105.973, 63.801),
        (100.400, 47.326),
        (94.567, 39.913),
        (92.369, 30.485),
    ];
    NurbsCurve::clamped_uniform(3, points.iter().map(|&(x, y)| Vec2::new(x, y)).collect())
        .expect("butterfly fixture is valid")
}

pub fn load_fixture(name: &str) -> Option<NurbsCurve> {
    match name {
        "trident" => Some(trident()),
        "line50" => Some(line50()),
        "butterfly_partial" => Some(butterfly_partial()),
        _ => None,
    }
}
