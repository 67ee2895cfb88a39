//! Geodesic shooting on the mesh-vertex configuration space.
//!
//! The metric `G(q)` is reassembled at the current vertex positions `q`, and
//! geodesics follow the kinetic-energy Hamiltonian
//!
//! ```text
//! H(q, p) = 1/2 p^T G(q)^{-1} p
//! ```
//!
//! integrated with the implicit (generalized) Stormer-Verlet scheme. OUTER
//! vertices stay fixed and carry zero momentum. Sobolev metrics use a lumped
//! mass between factors so that `G(q)` is sparse and its derivative with
//! respect to one vertex only involves the incident elements. For the
//! elasticity metric the shear modulus is computed once on the starting mesh
//! and then carried with the vertices.

use crate::error::{Error, Result};
use crate::fem::{
    dot, p1_basis_gradients, ScalarField, SparseSystem, VectorField,
};
use crate::mesh::{mesh_quality, signed_area, Marker, TriMesh};
use crate::metrics::{mu_field, MassKind, MetricOperator, MetricSpec};

/// Relative residual target of the metric solves along a trajectory.
pub const SOLVE_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicOptions {
    pub n_steps: usize,
    /// Convergence threshold of the implicit half-step iterations, relative to
    /// the size of the iterate.
    pub fixed_point_tol: f64,
    pub max_fixed_point: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self { n_steps: 10, fixed_point_tol: 1e-14, max_fixed_point: 100 }
    }
}

/// Positions and conjugate momenta, both interleaved per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// The metric as a function of vertex positions on fixed connectivity.
#[derive(Clone, Debug)]
pub struct ConfigurationMetric {
    template: TriMesh,
    spec: MetricSpec,
    mu: Option<ScalarField>,
    free: Vec<bool>,
}

impl ConfigurationMetric {
    pub fn new(template: &TriMesh, spec: &MetricSpec) -> Result<Self> {
        spec.validate()?;
        let mu = match *spec {
            MetricSpec::SteklovPoincare { mu_min, mu_max, .. } => Some(mu_field(template, mu_min, mu_max)?),
            MetricSpec::Sobolev { .. } => None,
        };
        let mut free = vec![true; 2 * template.num_vertices()];
        for v in template.marked_vertices(Marker::Outer) {
            free[2 * v] = false;
            free[2 * v + 1] = false;
        }
        Ok(Self { template: template.clone(), spec: *spec, mu, free })
    }

    pub fn template(&self) -> &TriMesh {
        &self.template
    }

    pub fn free_mask(&self) -> &[bool] {
        &self.free
    }

    fn mesh_at(&self, q: &[f64]) -> TriMesh {
        self.template.with_coordinates(q)
    }

    pub fn operator_at(&self, q: &[f64]) -> Result<MetricOperator> {
        MetricOperator::assemble_with_mu(&self.mesh_at(q), &self.spec, MassKind::Lumped, self.mu.as_ref())
            .map(|op| op.with_tol(SOLVE_TOL))
    }

    /// Explicit sparse `G(q)`; OUTER DOFs are decoupled.
    pub fn metric_matrix_at(&self, q: &[f64]) -> Result<SparseSystem> {
        self.operator_at(q)?.to_matrix()
    }

    /// `G(q)^{-1} p`, i.e. `dH/dp`.
    pub fn velocity(&self, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.operator_at(q)?.solve(p)
    }

    /// `G(q) v`.
    pub fn momentum(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.operator_at(q)?.apply(v)
    }

    pub fn hamiltonian(&self, state: &PhaseState) -> Result<f64> {
        let v = self.velocity(&state.q, &state.p)?;
        Ok(0.5 * dot(&state.p, &v))
    }

    /// `dH/dq_i = -1/2 v^T (dG/dq_i) v` with `v = G^{-1} p`, for every vertex
    /// coordinate including the fixed OUTER ones.
    pub fn dh_dq(&self, state: &PhaseState) -> Result<Vec<f64>> {
        let op = self.operator_at(&state.q)?;
        let v = op.solve(&state.p)?;
        self.dh_dq_with(&state.q, &op, &v)
    }

    fn dh_dq_with(&self, q: &[f64], op: &MetricOperator, v: &[f64]) -> Result<Vec<f64>> {
        let mesh = self.mesh_at(q);
        let mut out = vec![0.0; q.len()];
        if v.iter().all(|&x| x == 0.0) {
            return Ok(out);
        }
        match self.spec {
            MetricSpec::SteklovPoincare { lambda, .. } => {
                let mu = self.mu.as_ref().expect("elasticity metric carries mu");
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    let ids = tri.vertices;
                    let mu_t = (mu[ids[0]] + mu[ids[1]] + mu[ids[2]]) / 3.0;
                    let (g, area) = p1_basis_gradients(mesh.triangle_points(t));
                    let du = local_gradient(&gather(v, ids), &g);
                    let form = |x: &Mat2, y: &Mat2| {
                        mu_t * (frobenius(x, y) + frobenius_transposed(x, y)) + lambda * trace(x) * trace(y)
                    };
                    let value = form(&du, &du);
                    for b in 0..3 {
                        for c in 0..2 {
                            let div = g[b][c];
                            let d = area * (div * value + 2.0 * form(&perturb(&du, &g[b], c), &du));
                            out[2 * ids[b] + c] -= 0.5 * d;
                        }
                    }
                }
            }
            MetricSpec::Sobolev { order, a } => {
                // r_0 = v, r_k = M^{-1} B r_{k-1}
                let s = order as usize;
                let lumped = lumped_per_dof(&mesh, &self.free);
                let mut r = vec![v.to_vec()];
                for k in 1..s {
                    let bw = op.main_system().apply_free(&r[k - 1]);
                    r.push(bw.iter().zip(&lumped).map(|(x, m)| if *m > 0.0 { x / m } else { 0.0 }).collect());
                }
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    let ids = tri.vertices;
                    let (g, area) = p1_basis_gradients(mesh.triangle_points(t));
                    let local: Vec<[f64; 6]> = r.iter().map(|rk| gather(rk, ids)).collect();
                    let grads: Vec<Mat2> = local.iter().map(|x| local_gradient(x, &g)).collect();
                    // both mass forms scale with the area only
                    let mut mass_part = 0.0;
                    for j in 0..s {
                        mass_part += consistent_mass(&local[j], &local[s - 1 - j], area);
                    }
                    for j in 0..s.saturating_sub(1) {
                        mass_part -= lumped_mass(&local[j + 1], &local[s - 1 - j], area);
                    }
                    for b in 0..3 {
                        for c in 0..2 {
                            let div = g[b][c];
                            let mut d = div * mass_part;
                            for j in 0..s {
                                let (x, y) = (&grads[j], &grads[s - 1 - j]);
                                let dx = perturb(x, &g[b], c);
                                let dy = perturb(y, &g[b], c);
                                d += a * area * (div * frobenius(x, y) + frobenius(&dx, y) + frobenius(x, &dy));
                            }
                            out[2 * ids[b] + c] -= 0.5 * d;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn mask(&self, mut x: Vec<f64>) -> Vec<f64> {
        for (xi, &f) in x.iter_mut().zip(&self.free) {
            if !f {
                *xi = 0.0;
            }
        }
        x
    }

    /// One Stormer-Verlet step of size `h`:
    ///
    /// ```text
    /// p_half = p - h/2 dH/dq(q, p_half)
    /// q_next = q + h/2 (dH/dp(q, p_half) + dH/dp(q_next, p_half))
    /// p_next = p_half - h/2 dH/dq(q_next, p_half)
    /// ```
    ///
    /// The two implicit stages are solved by fixed-point iteration.
    pub fn verlet_step(&self, state: &PhaseState, h: f64, options: &GeodesicOptions) -> Result<PhaseState> {
        let PhaseState { q, p } = state;
        let mut p_half = p.clone();
        let mut converged = false;
        let mut test = FixedPoint::new(options.fixed_point_tol);
        for _ in 0..options.max_fixed_point {
            let force = self.dh_dq(&PhaseState { q: q.clone(), p: p_half.clone() })?;
            let next = self.mask(p.iter().zip(&force).map(|(pi, fi)| pi - 0.5 * h * fi).collect());
            let done = test.done(&next, &p_half);
            p_half = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::StepNotConverged { stage: "momentum", step: 0 });
        }

        let v0 = self.velocity(q, &p_half)?;
        let mut q_next: Vec<f64> = q.iter().zip(&v0).map(|(qi, vi)| qi + h * vi).collect();
        converged = false;
        let mut test = FixedPoint::new(options.fixed_point_tol);
        for _ in 0..options.max_fixed_point {
            let v1 = self.velocity(&q_next, &p_half)?;
            let next: Vec<f64> = (0..q.len()).map(|i| q[i] + 0.5 * h * (v0[i] + v1[i])).collect();
            let done = test.done(&next, &q_next);
            q_next = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::StepNotConverged { stage: "position", step: 0 });
        }

        let force = self.dh_dq(&PhaseState { q: q_next.clone(), p: p_half.clone() })?;
        let p_next = self.mask(p_half.iter().zip(&force).map(|(pi, fi)| pi - 0.5 * h * fi).collect());
        Ok(PhaseState { q: q_next, p: p_next })
    }
}

/// Stopping test for the implicit stages. Besides the plain tolerance, an
/// update that is already below `STAGNATION_TOL` and no longer shrinks counts
/// as converged: the linear solves and element differences leave a noise
/// floor the iteration cannot get under.
struct FixedPoint {
    tol: f64,
    previous: f64,
}

const STAGNATION_TOL: f64 = 1e-9;

impl FixedPoint {
    fn new(tol: f64) -> Self {
        Self { tol, previous: f64::INFINITY }
    }

    fn done(&mut self, next: &[f64], current: &[f64]) -> bool {
        let scale = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = next.iter().zip(current).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let rel = if scale > 0.0 { diff / scale } else { diff };
        let stalled = rel <= STAGNATION_TOL && rel >= self.previous;
        self.previous = rel;
        rel <= self.tol || stalled
    }
}

fn gather(v: &[f64], ids: [usize; 3]) -> [f64; 6] {
    let mut out = [0.0; 6];
    for a in 0..3 {
        out[2 * a] = v[2 * ids[a]];
        out[2 * a + 1] = v[2 * ids[a] + 1];
    }
    out
}

fn lumped_per_dof(mesh: &TriMesh, free: &[bool]) -> Vec<f64> {
    let d = crate::fem::lumped_mass_diagonal(mesh, crate::mesh::RegionFilter::All);
    d.iter()
        .flat_map(|&m| [m, m])
        .zip(free)
        .map(|(m, &f)| if f { m } else { 0.0 })
        .collect()
}

type Mat2 = [[f64; 2]; 2];

/// `Du[d][k] = sum_i u_{i,d} g_i[k]` for a local P1 vector field.
fn local_gradient(u: &[f64; 6], g: &[[f64; 2]; 3]) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..3 {
        for d in 0..2 {
            for k in 0..2 {
                out[d][k] += u[2 * i + d] * g[i][k];
            }
        }
    }
    out
}

/// Change of `Du` when vertex `b` moves along `e_c`: `-Du DW` with
/// `DW = e_c g_b^T`.
fn perturb(du: &Mat2, g_b: &[f64; 2], c: usize) -> Mat2 {
    [[-du[0][c] * g_b[0], -du[0][c] * g_b[1]], [-du[1][c] * g_b[0], -du[1][c] * g_b[1]]]
}

fn frobenius(x: &Mat2, y: &Mat2) -> f64 {
    x[0][0] * y[0][0] + x[0][1] * y[0][1] + x[1][0] * y[1][0] + x[1][1] * y[1][1]
}

fn frobenius_transposed(x: &Mat2, y: &Mat2) -> f64 {
    x[0][0] * y[0][0] + x[0][1] * y[1][0] + x[1][0] * y[0][1] + x[1][1] * y[1][1]
}

fn trace(x: &Mat2) -> f64 {
    x[0][0] + x[1][1]
}

fn consistent_mass(x: &[f64; 6], y: &[f64; 6], area: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let w = if i == j { area / 6.0 } else { area / 12.0 };
            s += w * (x[2 * i] * y[2 * j] + x[2 * i + 1] * y[2 * j + 1]);
        }
    }
    s
}

fn lumped_mass(x: &[f64; 6], y: &[f64; 6], area: f64) -> f64 {
    (0..6).map(|k| x[k] * y[k]).sum::<f64>() * area / 3.0
}

/// Free-function form of [`ConfigurationMetric::metric_matrix_at`].
pub fn metric_matrix_at(q: &[f64], template: &TriMesh, spec: &MetricSpec) -> Result<SparseSystem> {
    ConfigurationMetric::new(template, spec)?.metric_matrix_at(q)
}

pub fn hamiltonian(template: &TriMesh, state: &PhaseState, spec: &MetricSpec) -> Result<f64> {
    ConfigurationMetric::new(template, spec)?.hamiltonian(state)
}

pub fn dh_dq(template: &TriMesh, state: &PhaseState, spec: &MetricSpec) -> Result<Vec<f64>> {
    ConfigurationMetric::new(template, spec)?.dh_dq(state)
}

/// Per-step record of a shooting run.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootDiagnostics {
    /// `H` at the start and after each step.
    pub hamiltonian: Vec<f64>,
    /// Minimum mesh quality at the start and after each step.
    pub min_quality: Vec<f64>,
    pub final_state: PhaseState,
    /// `dH/dp` at the end of the trajectory.
    pub final_velocity: VectorField,
}

#[derive(Clone, Debug)]
pub struct ShotResult {
    pub mesh: TriMesh,
    pub diagnostics: ShootDiagnostics,
}

/// Follows the geodesic from `mesh` with initial velocity `v0` for time
/// `t_final` in `options.n_steps` steps.
pub fn shoot(mesh: &TriMesh, v0: &VectorField, t_final: f64, spec: &MetricSpec, options: &GeodesicOptions) -> Result<ShotResult> {
    if v0.len() != mesh.num_vertices() {
        return Err(Error::SizeMismatch { what: "initial velocity", got: v0.len(), expected: mesh.num_vertices() });
    }
    if options.n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    let metric = ConfigurationMetric::new(mesh, spec)?;
    if v0.dofs().iter().zip(metric.free_mask()).any(|(&x, &f)| !f && x != 0.0) {
        return Err(Error::invalid("v0", "must vanish on the OUTER boundary"));
    }
    let q0 = mesh.coordinates();
    let p0 = metric.momentum(&q0, v0.dofs())?;
    let mut state = PhaseState { q: q0, p: p0 };
    let h = t_final / options.n_steps as f64;
    let mut hamiltonian = vec![metric.hamiltonian(&state)?];
    let mut min_quality = vec![mesh_quality(mesh).min_quality];
    for step in 1..=options.n_steps {
        state = metric.verlet_step(&state, h, options).map_err(|e| match e {
            Error::StepNotConverged { stage, .. } => Error::StepNotConverged { stage, step },
            other => other,
        })?;
        let current = metric.mesh_at(&state.q);
        if (0..current.num_triangles()).any(|t| !(signed_area(current.triangle_points(t)) > 0.0)) {
            return Err(Error::TrajectoryInverted { step });
        }
        hamiltonian.push(metric.hamiltonian(&state)?);
        min_quality.push(mesh_quality(&current).min_quality);
    }
    let final_velocity = VectorField::from_dofs(metric.velocity(&state.q, &state.p)?);
    let mesh_out = metric.mesh_at(&state.q);
    Ok(ShotResult {
        mesh: mesh_out,
        diagnostics: ShootDiagnostics { hamiltonian, min_quality, final_state: state, final_velocity },
    })
}
