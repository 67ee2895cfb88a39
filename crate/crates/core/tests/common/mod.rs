#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapegrad_core::fem::VectorField;
use shapegrad_core::mesh::{generate_circle_in_box, CircleInBox, Marker, TriMesh};

pub fn reference_mesh() -> TriMesh {
    generate_circle_in_box(&CircleInBox::default()).unwrap()
}

pub fn mesh_at(resolution: usize) -> TriMesh {
    generate_circle_in_box(&CircleInBox { resolution, ..Default::default() }).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Low-frequency trigonometric field times a bump that vanishes on the box
/// `[-3, 3]^2`; OUTER vertices are set to exactly zero.
pub fn smooth_field(mesh: &TriMesh, rng: &mut impl Rng) -> VectorField {
    let coeffs: Vec<[f64; 4]> = (0..6).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    let outer = mesh.marked_vertices(Marker::Outer);
    VectorField::from_fn(mesh.num_vertices(), |i| {
        if outer.binary_search(&i).is_ok() {
            return [0.0, 0.0];
        }
        let [x, y] = mesh.vertices()[i];
        let bump = (9.0 - x * x) * (9.0 - y * y) / 81.0;
        let mut w = [0.0, 0.0];
        for (k, c) in coeffs.iter().enumerate() {
            let (fx, fy) = ((k % 3) as f64 * 0.7, (k / 3) as f64 * 0.9);
            let s = (fx * x + fy * y + c[2]).sin();
            w[0] += c[0] * s;
            w[1] += c[1] * (fy * x - fx * y + c[3]).cos();
        }
        [bump * w[0], bump * w[1]]
    })
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
