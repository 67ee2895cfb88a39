//! Property checks run by `shapegrad verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use shapegrad_core::fem::{interpolate_p1, VectorField};
use shapegrad_core::geodesic::{shoot, ConfigurationMetric, GeodesicOptions, PhaseState};
use shapegrad_core::mesh::{
    generate_circle_in_box, triangle_quality, BoundaryEdge, CircleInBox, Marker, Region, TriMesh, Triangle,
};
use shapegrad_core::metrics::{riemannian_gradient, MassKind, MetricOperator, MetricSpec};
use shapegrad_core::problem::{ConstantSource, Problem, Quadrature};
use shapegrad_core::Result;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    /// Pass bound; `measured` must not exceed it unless stated in `rule`.
    pub threshold: f64,
    pub rule: &'static str,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Uses a one-point rule in the shape derivative only, so that the
    /// finite-difference check must fail.
    pub corrupt_quadrature: bool,
    /// Resolution of the disk oracle mesh.
    pub oracle_resolution: usize,
}

fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Check {
    Check { name: name.into(), passed: measured <= threshold, measured, threshold, rule: "measured <= threshold" }
}

fn above(name: impl Into<String>, measured: f64, threshold: f64) -> Check {
    Check { name: name.into(), passed: measured > threshold, measured, threshold, rule: "measured > threshold" }
}

fn exactly(name: impl Into<String>, measured: f64, expected: f64) -> Check {
    Check { name: name.into(), passed: measured == expected, measured, threshold: expected, rule: "measured == threshold" }
}

/// Smooth random field vanishing on the box boundary and exactly zero at
/// OUTER vertices. Assumes a box centered at the origin.
pub fn random_smooth_field(mesh: &TriMesh, rng: &mut impl Rng) -> VectorField {
    let h = mesh.vertices().iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let coeffs: Vec<[f64; 4]> = (0..6).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    let outer = mesh.marked_vertices(Marker::Outer);
    VectorField::from_fn(mesh.num_vertices(), |i| {
        if outer.binary_search(&i).is_ok() {
            return [0.0, 0.0];
        }
        let [x, y] = mesh.vertices()[i];
        let bump = (h * h - x * x) * (h * h - y * y) / h.powi(4);
        let mut w = [0.0, 0.0];
        for (k, c) in coeffs.iter().enumerate() {
            let (fx, fy) = ((k % 3) as f64 * 0.7, (k / 3) as f64 * 0.9);
            w[0] += c[0] * (fx * x + fy * y + c[2]).sin();
            w[1] += c[1] * (fy * x - fx * y + c[3]).cos();
        }
        [bump * w[0], bump * w[1]]
    })
}

pub fn run_all(mesh: &TriMesh, sp: &MetricSpec, seed: u64, options: &VerifyOptions) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![shape_derivative(mesh, &mut rng, options.corrupt_quadrature)?];
    checks.extend(disk_oracles(options.oracle_resolution)?);
    let mut specs = vec![*sp];
    specs.extend([MetricSpec::sobolev(1, 0.09), MetricSpec::sobolev(2, 0.09), MetricSpec::sobolev(3, 0.04), MetricSpec::sobolev(4, 0.02)]);
    for spec in &specs {
        checks.extend(metric_algebra(mesh, spec, &mut rng)?);
    }
    checks.extend(quality_values());
    checks.extend(geodesic()?);
    Ok(Report { passed: checks.iter().all(|c| c.passed), checks })
}

/// Worst relative error of central differences at `t = 1e-5` against the
/// shape derivative, over 10 random fields.
pub fn shape_derivative(mesh: &TriMesh, rng: &mut impl Rng, corrupt: bool) -> Result<Check> {
    let mut problem = Problem::default();
    if corrupt {
        problem.derivative_rule = Quadrature::Centroid;
    }
    let state = problem.reduced_objective(mesh)?;
    let dj = problem.shape_derivative(mesh, &state)?;
    let t = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let w = random_smooth_field(mesh, rng);
        let plus = problem.reduced_objective(&mesh.displace(&w, t))?.objective;
        let minus = problem.reduced_objective(&mesh.displace(&w, -t))?.objective;
        let exact = dj.pair(&w);
        worst = worst.max(((plus - minus) / (2.0 * t) - exact).abs() / exact.abs());
    }
    Ok(at_most("shape_derivative.finite_difference", worst, 1e-4))
}

fn disk_center_errors(resolution: usize) -> Result<(f64, f64)> {
    let mesh = generate_circle_in_box(&CircleInBox { resolution, ..Default::default() })?;
    let problem = Problem::with_source(ConstantSource(1.0));
    let (sub, _) = mesh.extract_region(Region::In);
    let y = problem.solve_state(&mesh)?;
    let p = problem.solve_adjoint(&mesh)?;
    let y0 = interpolate_p1(&sub, &y, [0.0, 0.0]).unwrap_or(f64::NAN);
    let p0 = interpolate_p1(&sub, &p, [0.0, 0.0]).unwrap_or(f64::NAN);
    Ok(((y0 - 0.25).abs(), (p0 + 0.25).abs()))
}

/// Unit source on the unit disk: `y(0) = 1/4`, `p(0) = -1/4`, and the errors
/// shrink when the resolution doubles.
pub fn disk_oracles(resolution: usize) -> Result<Vec<Check>> {
    let (ey, ep) = disk_center_errors(resolution)?;
    let (ey2, ep2) = disk_center_errors(2 * resolution)?;
    Ok(vec![
        at_most("disk.state_center_error", ey, 5e-3),
        at_most("disk.adjoint_center_error", ep, 5e-3),
        at_most("disk.state_refined_error", ey2, ey),
        at_most("disk.adjoint_refined_error", ep2, ep),
    ])
}

/// Symmetry, positivity and the Galerkin identity of one metric.
pub fn metric_algebra(mesh: &TriMesh, spec: &MetricSpec, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let op = MetricOperator::assemble(mesh, spec, MassKind::Consistent)?;
    let fields: Vec<VectorField> = (0..50).map(|_| random_smooth_field(mesh, rng)).collect();
    let mut min_rayleigh = f64::INFINITY;
    let mut norms = Vec::with_capacity(fields.len());
    for f in &fields {
        let ff = op.pairing(f.dofs(), f.dofs())?;
        norms.push(ff);
        min_rayleigh = min_rayleigh.min(ff / f.dofs().iter().map(|x| x * x).sum::<f64>());
    }
    let mut asymmetry = 0.0f64;
    for k in 0..5 {
        let (u, v) = (&fields[2 * k], &fields[2 * k + 1]);
        let uv = op.pairing(u.dofs(), v.dofs())?;
        let vu = op.pairing(v.dofs(), u.dofs())?;
        asymmetry = asymmetry.max((uv - vu).abs() / (norms[2 * k] * norms[2 * k + 1]).sqrt());
    }

    let problem = Problem::default();
    let state = problem.reduced_objective(mesh)?;
    let f = problem.shape_derivative(mesh, &state)?;
    let g = riemannian_gradient(mesh, &f, spec)?;
    let vv = op.pairing(g.v.dofs(), g.v.dofs())?;
    let galerkin = (vv - g.pairing).abs() / g.pairing.abs();

    let label = spec.label();
    Ok(vec![
        at_most(format!("metric.{label}.symmetry"), asymmetry, 1e-10),
        above(format!("metric.{label}.min_rayleigh_quotient"), min_rayleigh, 0.0),
        at_most(format!("metric.{label}.galerkin"), galerkin, 1e-8),
        above(format!("metric.{label}.descent"), g.pairing, 0.0),
    ])
}

pub fn quality_values() -> Vec<Check> {
    let h = 3f64.sqrt() / 2.0;
    let right = triangle_quality([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
    vec![
        exactly("quality.equilateral", triangle_quality([[0.0, 0.0], [1.0, 0.0], [0.5, h]]), 1.0),
        at_most("quality.right_isosceles_error", (right - (2.0 * 2f64.sqrt() - 2.0)).abs(), 1e-12),
        exactly("quality.degenerate", triangle_quality([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), 0.0),
    ]
}

/// Square with a triangular inclusion: 7 vertices, 8 triangles.
pub fn small_mesh() -> TriMesh {
    let vertices = vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0], [0.0, 1.0], [-0.9, -0.6], [0.9, -0.6]];
    let tri = |v, region| Triangle { vertices: v, region };
    let triangles = vec![
        tri([4, 5, 6], Region::In),
        tri([0, 1, 5], Region::Out),
        tri([1, 6, 5], Region::Out),
        tri([1, 2, 6], Region::Out),
        tri([2, 4, 6], Region::Out),
        tri([2, 3, 4], Region::Out),
        tri([3, 5, 4], Region::Out),
        tri([3, 0, 5], Region::Out),
    ];
    let edge = |a, b, marker| BoundaryEdge { vertices: [a, b], marker };
    let boundary = vec![
        edge(0, 1, Marker::Outer),
        edge(1, 2, Marker::Outer),
        edge(2, 3, Marker::Outer),
        edge(3, 0, Marker::Outer),
        edge(4, 5, Marker::Inner),
        edge(5, 6, Marker::Inner),
        edge(6, 4, Marker::Inner),
    ];
    TriMesh::new(vertices, triangles, boundary)
}

fn bump_field(mesh: &TriMesh, amplitude: f64) -> VectorField {
    let outer = mesh.marked_vertices(Marker::Outer);
    VectorField::from_fn(mesh.num_vertices(), |i| {
        if outer.binary_search(&i).is_ok() {
            return [0.0, 0.0];
        }
        let [x, y] = mesh.vertices()[i];
        let b = (9.0 - x * x) * (9.0 - y * y) / 81.0;
        [amplitude * b * (1.0 + 0.3 * y), amplitude * b * (0.5 - 0.2 * x)]
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn geodesic() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // dH/dq against central differences of H on the small mesh
    let mesh = small_mesh();
    let q0 = mesh.coordinates();
    for spec in [MetricSpec::steklov_poincare(), MetricSpec::sobolev(1, 0.3), MetricSpec::sobolev(2, 0.09)] {
        let metric = ConfigurationMetric::new(&mesh, &spec)?;
        let p: Vec<f64> = metric
            .free_mask()
            .iter()
            .enumerate()
            .map(|(i, &f)| if f { 0.3 * ((i as f64) * 1.7).sin() + 0.1 } else { 0.0 })
            .collect();
        let grad = metric.dh_dq(&PhaseState { q: q0.clone(), p: p.clone() })?;
        let scale = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let step = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..q0.len() {
            let h = |d: f64| {
                let mut q = q0.clone();
                q[i] += d;
                metric.hamiltonian(&PhaseState { q, p: p.clone() })
            };
            let fd = (h(step)? - h(-step)?) / (2.0 * step);
            worst = worst.max((fd - grad[i]).abs() / scale);
        }
        checks.push(at_most(format!("geodesic.{}.dh_dq_finite_difference", spec.label()), worst, 1e-5));
    }

    let mesh = generate_circle_in_box(&CircleInBox { resolution: 4, ..Default::default() })?;
    let spec = MetricSpec::sobolev(1, 0.3);
    let metric = ConfigurationMetric::new(&mesh, &spec)?;
    let q = mesh.coordinates();
    let p = metric.momentum(&q, bump_field(&mesh, 0.3).dofs())?;
    let mut state = PhaseState { q, p };
    let h0 = metric.hamiltonian(&state)?;
    let options = GeodesicOptions::default();
    let mut drift = 0.0f64;
    for _ in 0..100 {
        state = metric.verlet_step(&state, 1e-2, &options)?;
        drift = drift.max((metric.hamiltonian(&state)? - h0).abs() / h0);
    }
    checks.push(at_most("geodesic.H1.energy_drift", drift, 1e-3));

    let out = shoot(&mesh, &bump_field(&mesh, 0.3), 1.0, &spec, &options)?;
    let back = shoot(&out.mesh, &out.diagnostics.final_velocity.scaled(-1.0), 1.0, &spec, &options)?;
    let q0 = mesh.coordinates();
    let scale = q0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    checks.push(at_most("geodesic.H1.round_trip", max_diff(&back.mesh.coordinates(), &q0) / scale, 1e-6));
    Ok(checks)
}
