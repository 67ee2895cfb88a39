//! The benchmark: minimize `int_{inside} y` subject to `-Laplace(y) = r` on
//! the IN region with `y = 0` on its boundary.
//!
//! State and adjoint live on the IN submesh. The shape derivative is the
//! volume form, assembled against the hold-all vector basis `phi_i e_d`:
//!
//! ```text
//! dJ[W] = int y div W - int div(r W) p + int grad(y)^T (div W - DW - DW^T) grad(p)
//! ```
//!
//! With P1 fields on a mesh whose vertices move along P1 fields, and the same
//! quadrature for `r` on the load vector and in `div(r W)`, this is the exact
//! derivative of the discrete reduced objective.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_scalar_laplace, dot, integrate_p1, p1_basis_gradients, p1_gradient, solve_spd, Coefficient, ScalarField,
    VectorField,
};
use crate::mesh::{Point, Region, RegionFilter, TriMesh};

/// Relative residual for state and adjoint solves. Tight enough that central
/// differences at `t = 1e-5` are not polluted by solver noise.
pub const STATE_TOL: f64 = 1e-13;

/// `r(x, y) = 2.5 (x + 0.4 - y^2)^2 + x^2 + y^2 - 1`.
pub fn eval_r(x: f64, y: f64) -> f64 {
    let s = x + 0.4 - y * y;
    2.5 * s * s + x * x + y * y - 1.0
}

pub fn grad_r(x: f64, y: f64) -> [f64; 2] {
    let s = x + 0.4 - y * y;
    [5.0 * s + 2.0 * x, -10.0 * y * s + 2.0 * y]
}

/// Right-hand side of the state equation, with its gradient for `div(r W)`.
pub trait SourceTerm: Send + Sync {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> [f64; 2];
}

/// The benchmark source `r`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BenchmarkSource;

impl SourceTerm for BenchmarkSource {
    fn value(&self, p: Point) -> f64 {
        eval_r(p[0], p[1])
    }
    fn gradient(&self, p: Point) -> [f64; 2] {
        grad_r(p[0], p[1])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantSource(pub f64);

impl SourceTerm for ConstantSource {
    fn value(&self, _: Point) -> f64 {
        self.0
    }
    fn gradient(&self, _: Point) -> [f64; 2] {
        [0.0, 0.0]
    }
}

/// Element quadrature for the non-polynomial source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Three edge midpoints, weight 1/3 each; exact for quadratics.
    #[default]
    EdgeMidpoint,
    /// One point at the centroid.
    Centroid,
}

impl Quadrature {
    /// `(barycentric coordinates, weight)` pairs, weights summing to one.
    fn rule(self) -> &'static [([f64; 3], f64)] {
        match self {
            Quadrature::EdgeMidpoint => &[
                ([0.5, 0.5, 0.0], 1.0 / 3.0),
                ([0.0, 0.5, 0.5], 1.0 / 3.0),
                ([0.5, 0.0, 0.5], 1.0 / 3.0),
            ],
            Quadrature::Centroid => &[([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)],
        }
    }
}

fn at(points: &[Point; 3], bary: &[f64; 3]) -> Point {
    let mut x = [0.0; 2];
    for k in 0..3 {
        x[0] += bary[k] * points[k][0];
        x[1] += bary[k] * points[k][1];
    }
    x
}

/// Shape derivative as a covector on hold-all vector fields, interleaved like
/// [`VectorField`].
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeDerivative(pub Vec<f64>);

impl ShapeDerivative {
    pub fn zeros(num_vertices: usize) -> Self {
        Self(vec![0.0; 2 * num_vertices])
    }

    pub fn dofs(&self) -> &[f64] {
        &self.0
    }

    /// `dJ[W]`.
    pub fn pair(&self, w: &VectorField) -> f64 {
        dot(&self.0, w.dofs())
    }

    pub fn num_vertices(&self) -> usize {
        self.0.len() / 2
    }
}

/// State, adjoint and objective on one mesh.
#[derive(Clone, Debug)]
pub struct ProblemState {
    pub submesh: TriMesh,
    /// Submesh vertex to parent vertex.
    pub vertex_map: Vec<usize>,
    pub y: ScalarField,
    pub p: ScalarField,
    pub objective: f64,
}

/// Benchmark problem with a configurable source and quadrature.
#[derive(Clone, Debug)]
pub struct Problem<S = BenchmarkSource> {
    pub source: S,
    /// Rule for the load vector `int r phi_i`, and hence for `J`.
    pub load_rule: Quadrature,
    /// Rule for `div(r W) p` in the shape derivative. Must equal `load_rule`
    /// for the derivative to be exact.
    pub derivative_rule: Quadrature,
    pub tol: f64,
}

impl Default for Problem<BenchmarkSource> {
    fn default() -> Self {
        Problem::with_source(BenchmarkSource)
    }
}

impl<S: SourceTerm> Problem<S> {
    pub fn with_source(source: S) -> Self {
        Problem { source, load_rule: Quadrature::EdgeMidpoint, derivative_rule: Quadrature::EdgeMidpoint, tol: STATE_TOL }
    }

    fn in_submesh(&self, mesh: &TriMesh) -> Result<(TriMesh, Vec<usize>)> {
        if mesh.count_region(Region::In) == 0 {
            return Err(Error::EmptyRegion(Region::In));
        }
        Ok(mesh.extract_region(Region::In))
    }

    /// Homogeneous Dirichlet Poisson solve on `submesh` with load `b`.
    fn solve_poisson(&self, submesh: &TriMesh, load: &[f64], what: &str) -> Result<ScalarField> {
        let k = assemble_scalar_laplace(submesh, RegionFilter::All, Coefficient::Constant(1.0));
        let mut bnd: Vec<usize> = submesh.boundary_edges().iter().flat_map(|e| e.vertices).collect();
        bnd.sort_unstable();
        bnd.dedup();
        let zeros = vec![0.0; bnd.len()];
        let system = k.apply_dirichlet(&bnd, &zeros);
        let x = solve_spd(&system, load, self.tol).map_err(|e| Error::solve(what, e))?;
        Ok(ScalarField(x))
    }

    fn load_vector(&self, submesh: &TriMesh) -> Vec<f64> {
        let mut b = vec![0.0; submesh.num_vertices()];
        for (t, tri) in submesh.triangles().iter().enumerate() {
            let pts = submesh.triangle_points(t);
            let area = crate::mesh::signed_area(pts);
            for (bary, w) in self.load_rule.rule() {
                let r = self.source.value(at(&pts, bary));
                for k in 0..3 {
                    b[tri.vertices[k]] += area * w * r * bary[k];
                }
            }
        }
        b
    }

    /// State `y` on the IN submesh.
    pub fn solve_state(&self, mesh: &TriMesh) -> Result<ScalarField> {
        let (sub, _) = self.in_submesh(mesh)?;
        self.state_on(&sub)
    }

    fn state_on(&self, sub: &TriMesh) -> Result<ScalarField> {
        self.solve_poisson(sub, &self.load_vector(sub), "state solve")
    }

    /// Adjoint `p`: `-Laplace(p) = -1` on the IN region, zero on its boundary.
    pub fn solve_adjoint(&self, mesh: &TriMesh) -> Result<ScalarField> {
        let (sub, _) = self.in_submesh(mesh)?;
        self.adjoint_on(&sub)
    }

    fn adjoint_on(&self, sub: &TriMesh) -> Result<ScalarField> {
        let mut b = vec![0.0; sub.num_vertices()];
        for t in 0..sub.num_triangles() {
            let area = crate::mesh::signed_area(sub.triangle_points(t));
            for &v in &sub.triangles()[t].vertices {
                b[v] -= area / 3.0;
            }
        }
        self.solve_poisson(sub, &b, "adjoint solve")
    }

    /// State, adjoint and objective in one pass.
    pub fn reduced_objective(&self, mesh: &TriMesh) -> Result<ProblemState> {
        let (submesh, vertex_map) = self.in_submesh(mesh)?;
        let y = self.state_on(&submesh)?;
        let p = self.adjoint_on(&submesh)?;
        let objective = objective(&submesh, &y);
        Ok(ProblemState { submesh, vertex_map, y, p, objective })
    }

    /// Assembles `f_{2i+d} = dJ[phi_i e_d]` over the IN triangles of `mesh`.
    /// `y` and `p` live on the IN submesh of `mesh`.
    pub fn assemble_shape_derivative(&self, mesh: &TriMesh, y: &ScalarField, p: &ScalarField) -> Result<ShapeDerivative> {
        let (sub, map) = self.in_submesh(mesh)?;
        for (what, field) in [("state", y), ("adjoint", p)] {
            if field.len() != sub.num_vertices() {
                return Err(Error::SizeMismatch { what, got: field.len(), expected: sub.num_vertices() });
            }
        }
        let grad_y = p1_gradient(&sub, y);
        let grad_p = p1_gradient(&sub, p);
        let mut f = vec![0.0; 2 * mesh.num_vertices()];
        for (t, tri) in sub.triangles().iter().enumerate() {
            let pts = sub.triangle_points(t);
            let (g, area) = p1_basis_gradients(pts);
            let v = tri.vertices;
            let y_mean = (y[v[0]] + y[v[1]] + y[v[2]]) / 3.0;
            let gy = grad_y[t];
            let gp = grad_p[t];
            let gy_gp = gy[0] * gp[0] + gy[1] * gp[1];

            // quadrature of r p and (grad r) p phi_j
            let mut rp = 0.0;
            let mut grad_rp_phi = [[0.0; 2]; 3];
            for (bary, w) in self.derivative_rule.rule() {
                let x = at(&pts, bary);
                let p_q = bary[0] * p[v[0]] + bary[1] * p[v[1]] + bary[2] * p[v[2]];
                let r = self.source.value(x);
                let dr = self.source.gradient(x);
                rp += w * r * p_q;
                for j in 0..3 {
                    for d in 0..2 {
                        grad_rp_phi[j][d] += w * dr[d] * bary[j] * p_q;
                    }
                }
            }

            for j in 0..3 {
                let gj = g[j];
                let gj_gp = gj[0] * gp[0] + gj[1] * gp[1];
                let gj_gy = gj[0] * gy[0] + gj[1] * gy[1];
                for d in 0..2 {
                    let div_w = gj[d];
                    let term_y = y_mean * div_w;
                    let term_r = grad_rp_phi[j][d] + rp * div_w;
                    let term_grad = div_w * gy_gp - gy[d] * gj_gp - gp[d] * gj_gy;
                    f[2 * map[v[j]] + d] += area * (term_y - term_r + term_grad);
                }
            }
        }
        Ok(ShapeDerivative(f))
    }

    /// Shape derivative from a previously computed state.
    pub fn shape_derivative(&self, mesh: &TriMesh, state: &ProblemState) -> Result<ShapeDerivative> {
        self.assemble_shape_derivative(mesh, &state.y, &state.p)
    }
}

/// `J = int_{IN} y` for `y` on the IN submesh (exact for P1).
pub fn objective(submesh: &TriMesh, y: &ScalarField) -> f64 {
    integrate_p1(submesh, RegionFilter::All, y)
}

/// Benchmark state on the IN region of `mesh`.
pub fn solve_state(mesh: &TriMesh) -> Result<ScalarField> {
    Problem::default().solve_state(mesh)
}

pub fn solve_adjoint(mesh: &TriMesh) -> Result<ScalarField> {
    Problem::default().solve_adjoint(mesh)
}

pub fn reduced_objective(mesh: &TriMesh) -> Result<ProblemState> {
    Problem::default().reduced_objective(mesh)
}

pub fn assemble_shape_derivative(mesh: &TriMesh, y: &ScalarField, p: &ScalarField) -> Result<ShapeDerivative> {
    Problem::default().assemble_shape_derivative(mesh, y, p)
}
