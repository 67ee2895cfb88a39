use super::{Point, TriMesh};

/// Minimum radius ratio over a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub min_quality: f64,
    pub worst_triangle: usize,
    pub per_triangle: Option<Vec<f64>>,
}

/// Normalized radius ratio `2 * inradius / circumradius`.
///
/// Equals 1 for an equilateral triangle and 0 for a degenerate one. The
/// orientation is ignored; inverted elements are reported by validation.
pub fn triangle_quality([p0, p1, p2]: [Point; 3]) -> f64 {
    let a = dist(p1, p2);
    let b = dist(p2, p0);
    let c = dist(p0, p1);
    let area = super::signed_area([p0, p1, p2]);
    let product = a * b * c;
    if area == 0.0 || product == 0.0 {
        return 0.0;
    }
    // 2 r / R = 16 A^2 / (P abc), with Heron's formula for 16 A^2 / P
    let q = (b + c - a) * (c + a - b) * (a + b - c) / product;
    q.clamp(0.0, 1.0)
}

/// Scans every triangle of both regions. An empty mesh reports quality 0.
pub fn mesh_quality(mesh: &TriMesh) -> QualityReport {
    let per: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| triangle_quality(mesh.triangle_points(t)))
        .collect();
    let (worst, min) = per
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, q)| if q < acc.1 { (i, q) } else { acc });
    QualityReport {
        min_quality: if per.is_empty() { 0.0 } else { min },
        worst_triangle: worst,
        per_triangle: Some(per),
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryEdge, Marker, Region, Triangle};
    use proptest::prelude::*;

    #[test]
    fn equilateral_is_one() {
        let h = 3f64.sqrt() / 2.0;
        assert_eq!(triangle_quality([[0.0, 0.0], [1.0, 0.0], [0.5, h]]), 1.0);
    }

    #[test]
    fn collinear_is_zero() {
        assert_eq!(triangle_quality([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), 0.0);
        assert_eq!(triangle_quality([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]), 0.0);
    }

    #[test]
    fn right_isosceles() {
        let q = triangle_quality([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let exact = 2.0 * 2f64.sqrt() - 2.0;
        assert!((q - exact).abs() < 1e-12, "{q} vs {exact}");
    }

    #[test]
    fn congruent_equilateral_mesh() {
        let h = 3f64.sqrt() / 2.0;
        let mesh = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, h], [1.5, h]],
            vec![
                Triangle { vertices: [0, 1, 2], region: Region::In },
                Triangle { vertices: [1, 3, 2], region: Region::Out },
            ],
            vec![BoundaryEdge { vertices: [1, 2], marker: Marker::Inner }],
        );
        let report = mesh_quality(&mesh);
        assert_eq!(report.min_quality, 1.0);
        let per = report.per_triangle.unwrap();
        assert_eq!(per.iter().copied().fold(f64::INFINITY, f64::min), report.min_quality);
    }

    fn transform(p: Point, angle: f64, scale: f64, shift: Point) -> Point {
        let (s, c) = angle.sin_cos();
        [scale * (c * p[0] - s * p[1]) + shift[0], scale * (s * p[0] + c * p[1]) + shift[1]]
    }

    proptest! {
        #[test]
        fn similarity_invariant(
            pts in prop::array::uniform3(prop::array::uniform2(-5.0f64..5.0)),
            angle in 0.0f64..6.3,
            scale in 0.1f64..10.0,
            shift in prop::array::uniform2(-10.0f64..10.0),
        ) {
            let q0 = triangle_quality(pts);
            prop_assume!(q0 > 1e-3);
            let moved = pts.map(|p| transform(p, angle, scale, shift));
            let q1 = triangle_quality(moved);
            prop_assert!((q0 - q1).abs() < 1e-12, "{} vs {}", q0, q1);
            prop_assert!((0.0..=1.0).contains(&q0));
        }
    }
}
