//! P1 element kernels and their global assembly.
//!
//! Scalar operators use one DOF per vertex. Vector operators use the
//! interleaved layout of [`VectorField`]: DOF `2 * v + d`.

use super::field::{ScalarField, VectorField};
use super::sparse::{SparseSystem, TripletBuilder};
use crate::mesh::{signed_area, Point, RegionFilter, TriMesh};

/// Gradients of the three barycentric basis functions and the signed area.
pub fn p1_basis_gradients([p0, p1, p2]: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let area = signed_area([p0, p1, p2]);
    let s = 0.5 / area;
    let g = [
        [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
        [(p2[1] - p0[1]) * s, (p0[0] - p2[0]) * s],
        [(p0[1] - p1[1]) * s, (p1[0] - p0[0]) * s],
    ];
    (g, area)
}

/// Scalar coefficient: one value everywhere, or nodal values evaluated at
/// element centroids.
#[derive(Clone, Copy, Debug)]
pub enum Coefficient<'a> {
    Constant(f64),
    Nodal(&'a ScalarField),
}

impl Coefficient<'_> {
    fn at_centroid(&self, v: [usize; 3]) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Nodal(f) => (f[v[0]] + f[v[1]] + f[v[2]]) / 3.0,
        }
    }
}

pub fn element_laplace(points: [Point; 3], coefficient: f64) -> [[f64; 3]; 3] {
    let (g, area) = p1_basis_gradients(points);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = coefficient * area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    k
}

pub fn element_mass(points: [Point; 3]) -> [[f64; 3]; 3] {
    let area = signed_area(points);
    let mut m = [[area / 12.0; 3]; 3];
    for (a, row) in m.iter_mut().enumerate() {
        row[a] = area / 6.0;
    }
    m
}

/// Row-sum lumped mass, `area / 3` per vertex.
pub fn element_lumped_mass(points: [Point; 3]) -> [f64; 3] {
    [signed_area(points) / 3.0; 3]
}

/// Componentwise `mass + a * stiffness` on the 6 interleaved local DOFs.
pub fn element_vector_helmholtz(points: [Point; 3], a: f64) -> [[f64; 6]; 6] {
    let m = element_mass(points);
    let k = element_laplace(points, 1.0);
    let mut out = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            for d in 0..2 {
                out[2 * i + d][2 * j + d] = m[i][j] + a * k[i][j];
            }
        }
    }
    out
}

/// `int 2 mu eps(U):eps(V) + lambda div U div V` on the 6 local DOFs, with
/// `mu` the element value.
pub fn element_elasticity(points: [Point; 3], mu: f64, lambda: f64) -> [[f64; 6]; 6] {
    let (g, area) = p1_basis_gradients(points);
    let mut out = [[0.0; 6]; 6];
    for a in 0..3 {
        for b in 0..3 {
            let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1];
            for d in 0..2 {
                for e in 0..2 {
                    let delta = if d == e { gg } else { 0.0 };
                    out[2 * a + d][2 * b + e] =
                        area * (mu * (delta + g[a][e] * g[b][d]) + lambda * g[a][d] * g[b][e]);
                }
            }
        }
    }
    out
}

fn selected(mesh: &TriMesh, region: RegionFilter) -> impl Iterator<Item = (usize, [usize; 3])> + '_ {
    mesh.triangles()
        .iter()
        .enumerate()
        .filter(move |(_, t)| region.contains(t.region))
        .map(|(i, t)| (i, t.vertices))
}

/// `int_region c grad(phi_i) . grad(phi_j)`.
pub fn assemble_scalar_laplace(mesh: &TriMesh, region: RegionFilter, coefficient: Coefficient<'_>) -> SparseSystem {
    let mut b = TripletBuilder::with_capacity(mesh.num_vertices(), 9 * mesh.num_triangles());
    for (t, v) in selected(mesh, region) {
        let k = element_laplace(mesh.triangle_points(t), coefficient.at_centroid(v));
        scatter3(&mut b, v, &k);
    }
    SparseSystem::new(b.build())
}

/// `int_region phi_i phi_j`.
pub fn assemble_scalar_mass(mesh: &TriMesh, region: RegionFilter) -> SparseSystem {
    let mut b = TripletBuilder::with_capacity(mesh.num_vertices(), 9 * mesh.num_triangles());
    for (t, v) in selected(mesh, region) {
        scatter3(&mut b, v, &element_mass(mesh.triangle_points(t)));
    }
    SparseSystem::new(b.build())
}

/// Diagonal of the row-sum lumped scalar mass.
pub fn lumped_mass_diagonal(mesh: &TriMesh, region: RegionFilter) -> Vec<f64> {
    let mut d = vec![0.0; mesh.num_vertices()];
    for (t, v) in selected(mesh, region) {
        let m = element_lumped_mass(mesh.triangle_points(t));
        for k in 0..3 {
            d[v[k]] += m[k];
        }
    }
    d
}

pub fn assemble_vector_mass(mesh: &TriMesh, region: RegionFilter) -> SparseSystem {
    assemble_vector_helmholtz(mesh, region, 0.0)
}

/// Componentwise `int grad(U) : grad(V)`.
pub fn assemble_vector_stiffness(mesh: &TriMesh, region: RegionFilter) -> SparseSystem {
    let mut b = TripletBuilder::with_capacity(2 * mesh.num_vertices(), 12 * mesh.num_triangles());
    for (t, v) in selected(mesh, region) {
        let k = element_laplace(mesh.triangle_points(t), 1.0);
        for i in 0..3 {
            for j in 0..3 {
                for d in 0..2 {
                    b.add(2 * v[i] + d, 2 * v[j] + d, k[i][j]);
                }
            }
        }
    }
    SparseSystem::new(b.build())
}

/// One factor `id - a * Laplacian` of the Sobolev-type metric:
/// `int <U, V> + a <DU, DV>`, block diagonal in components.
pub fn assemble_vector_helmholtz(mesh: &TriMesh, region: RegionFilter, a: f64) -> SparseSystem {
    let mut b = TripletBuilder::with_capacity(2 * mesh.num_vertices(), 18 * mesh.num_triangles());
    for (t, v) in selected(mesh, region) {
        let k = element_vector_helmholtz(mesh.triangle_points(t), a);
        scatter6(&mut b, v, &k, true);
    }
    SparseSystem::new(b.build())
}

/// Linear elasticity with nodal shear modulus `mu` (centroid rule) and constant `lambda`.
pub fn assemble_elasticity(mesh: &TriMesh, region: RegionFilter, mu: &ScalarField, lambda: f64) -> SparseSystem {
    let mut b = TripletBuilder::with_capacity(2 * mesh.num_vertices(), 36 * mesh.num_triangles());
    for (t, v) in selected(mesh, region) {
        let mu_t = Coefficient::Nodal(mu).at_centroid(v);
        let k = element_elasticity(mesh.triangle_points(t), mu_t, lambda);
        scatter6(&mut b, v, &k, false);
    }
    SparseSystem::new(b.build())
}

/// Element-constant gradient of a P1 field, one entry per triangle.
pub fn p1_gradient(mesh: &TriMesh, field: &ScalarField) -> Vec<[f64; 2]> {
    (0..mesh.num_triangles())
        .map(|t| {
            let v = mesh.triangles()[t].vertices;
            let (g, _) = p1_basis_gradients(mesh.triangle_points(t));
            let mut out = [0.0; 2];
            for k in 0..3 {
                out[0] += field[v[k]] * g[k][0];
                out[1] += field[v[k]] * g[k][1];
            }
            out
        })
        .collect()
}

/// Exact integral of a P1 field over the selected triangles.
pub fn integrate_p1(mesh: &TriMesh, region: RegionFilter, field: &ScalarField) -> f64 {
    selected(mesh, region)
        .map(|(t, v)| signed_area(mesh.triangle_points(t)) * (field[v[0]] + field[v[1]] + field[v[2]]) / 3.0)
        .sum()
}

/// Value of a P1 field at `point`, or `None` outside the mesh. Points on a
/// shared edge take the first containing triangle.
pub fn interpolate_p1(mesh: &TriMesh, field: &ScalarField, point: Point) -> Option<f64> {
    let tol = -1e-12;
    (0..mesh.num_triangles()).find_map(|t| {
        let [a, b, c] = mesh.triangle_points(t);
        let area = signed_area([a, b, c]);
        let l0 = signed_area([point, b, c]) / area;
        let l1 = signed_area([a, point, c]) / area;
        let l2 = 1.0 - l0 - l1;
        let v = mesh.triangles()[t].vertices;
        (l0 >= tol && l1 >= tol && l2 >= tol).then(|| l0 * field[v[0]] + l1 * field[v[1]] + l2 * field[v[2]])
    })
}

/// `sqrt(V^T M V)` with the consistent vector mass over the whole mesh.
pub fn l2_norm_vector(mesh: &TriMesh, field: &VectorField) -> f64 {
    let m = assemble_vector_mass(mesh, RegionFilter::All);
    m.matrix().bilinear(field.dofs(), field.dofs()).max(0.0).sqrt()
}

fn scatter3(b: &mut TripletBuilder, v: [usize; 3], k: &[[f64; 3]; 3]) {
    for i in 0..3 {
        for j in 0..3 {
            b.add(v[i], v[j], k[i][j]);
        }
    }
}

fn scatter6(b: &mut TripletBuilder, v: [usize; 3], k: &[[f64; 6]; 6], block_diagonal: bool) {
    for i in 0..6 {
        for j in 0..6 {
            if block_diagonal && i % 2 != j % 2 {
                continue;
            }
            b.add(2 * v[i / 2] + i % 2, 2 * v[j / 2] + j % 2, k[i][j]);
        }
    }
}
