#![allow(clippy::needless_range_loop)]

use shapegrad_core::fem::VectorField;
use shapegrad_core::geodesic::{metric_matrix_at, shoot, ConfigurationMetric, GeodesicOptions, PhaseState};
use shapegrad_core::mesh::{
    generate_circle_in_box, validate_mesh, BoundaryEdge, CircleInBox, Marker, Region, TriMesh, Triangle,
};
use shapegrad_core::metrics::MetricSpec;

/// Unit-free 4x4 box with a triangular inclusion: 7 vertices, 8 triangles.
fn small_mesh() -> TriMesh {
    let vertices = vec![
        [-2.0, -2.0],
        [2.0, -2.0],
        [2.0, 2.0],
        [-2.0, 2.0],
        [0.0, 1.0],
        [-0.9, -0.6],
        [0.9, -0.6],
    ];
    let out = |v: [usize; 3]| Triangle { vertices: v, region: Region::Out };
    let triangles = vec![
        Triangle { vertices: [4, 5, 6], region: Region::In },
        out([0, 1, 5]),
        out([1, 6, 5]),
        out([1, 2, 6]),
        out([2, 4, 6]),
        out([2, 3, 4]),
        out([3, 5, 4]),
        out([3, 0, 5]),
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

fn specs() -> Vec<MetricSpec> {
    vec![
        MetricSpec::steklov_poincare(),
        MetricSpec::sobolev(1, 0.3),
        MetricSpec::sobolev(2, 0.09),
        MetricSpec::sobolev(3, 0.04),
        MetricSpec::sobolev(4, 0.02),
    ]
}

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// `1/2 p^T G(q)^{-1} p` from the explicit matrix restricted to free DOFs.
fn dense_hamiltonian(template: &TriMesh, spec: &MetricSpec, q: &[f64], p: &[f64], free: &[usize]) -> f64 {
    let g = metric_matrix_at(q, template, spec).unwrap().matrix().to_dense();
    let a: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| g[i][j]).collect()).collect();
    let rhs: Vec<f64> = free.iter().map(|&i| p[i]).collect();
    let v = dense_solve(a, rhs.clone());
    0.5 * rhs.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>()
}

fn sample_momentum(free: &[bool]) -> Vec<f64> {
    free.iter()
        .enumerate()
        .map(|(i, &f)| if f { 0.3 * ((i as f64) * 1.7).sin() + 0.1 } else { 0.0 })
        .collect()
}

#[test]
fn small_mesh_is_valid() {
    assert!(validate_mesh(&small_mesh()).is_empty());
}

#[test]
fn dh_dq_matches_dense_finite_differences() {
    let mesh = small_mesh();
    let q0 = mesh.coordinates();
    for spec in specs() {
        let metric = ConfigurationMetric::new(&mesh, &spec).unwrap();
        let free: Vec<usize> = (0..q0.len()).filter(|&i| metric.free_mask()[i]).collect();
        let p = sample_momentum(metric.free_mask());
        let state = PhaseState { q: q0.clone(), p: p.clone() };

        let h_dense = dense_hamiltonian(&mesh, &spec, &q0, &p, &free);
        let h_op = metric.hamiltonian(&state).unwrap();
        assert!((h_dense - h_op).abs() <= 1e-10 * h_dense, "{spec}: {h_dense} vs {h_op}");

        let grad = metric.dh_dq(&state).unwrap();
        let scale = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(scale > 0.0);
        let step = 1e-5;
        for i in 0..q0.len() {
            let mut qp = q0.clone();
            let mut qm = q0.clone();
            qp[i] += step;
            qm[i] -= step;
            let fd = (dense_hamiltonian(&mesh, &spec, &qp, &p, &free) - dense_hamiltonian(&mesh, &spec, &qm, &p, &free))
                / (2.0 * step);
            assert!((fd - grad[i]).abs() <= 1e-5 * scale, "{spec} coordinate {i}: fd {fd} vs {}", grad[i]);
        }
    }
}

#[test]
fn dh_dq_is_translation_invariant() {
    let mesh = generate_circle_in_box(&CircleInBox { resolution: 4, ..Default::default() }).unwrap();
    for spec in specs() {
        let metric = ConfigurationMetric::new(&mesh, &spec).unwrap();
        let p = sample_momentum(metric.free_mask());
        let grad = metric.dh_dq(&PhaseState { q: mesh.coordinates(), p }).unwrap();
        let scale = grad.iter().map(|x| x.abs()).sum::<f64>();
        let sx: f64 = grad.iter().step_by(2).sum();
        let sy: f64 = grad.iter().skip(1).step_by(2).sum();
        assert!(sx.abs() <= 1e-8 * scale && sy.abs() <= 1e-8 * scale, "{spec}: {sx} {sy}");
    }
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

fn smooth_state(mesh: &TriMesh, metric: &ConfigurationMetric, amplitude: f64) -> PhaseState {
    let q = mesh.coordinates();
    let p = metric.momentum(&q, bump_field(mesh, amplitude).dofs()).unwrap();
    PhaseState { q, p }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn energy_drift_is_small() {
    let mesh = generate_circle_in_box(&CircleInBox { resolution: 4, ..Default::default() }).unwrap();
    assert!(mesh.num_vertices() <= 500);
    let spec = MetricSpec::sobolev(1, 0.3);
    let metric = ConfigurationMetric::new(&mesh, &spec).unwrap();
    let mut state = smooth_state(&mesh, &metric, 0.3);
    let h0 = metric.hamiltonian(&state).unwrap();
    let options = GeodesicOptions::default();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        state = metric.verlet_step(&state, 1e-2, &options).unwrap();
        let h = metric.hamiltonian(&state).unwrap();
        worst = worst.max((h - h0).abs() / h0);
    }
    assert!(worst <= 1e-3, "relative drift {worst}");
}

#[test]
fn forward_backward_round_trip() {
    let mesh = generate_circle_in_box(&CircleInBox { resolution: 4, ..Default::default() }).unwrap();
    for spec in [MetricSpec::steklov_poincare(), MetricSpec::sobolev(2, 0.09)] {
        let metric = ConfigurationMetric::new(&mesh, &spec).unwrap();
        let start = smooth_state(&mesh, &metric, 0.3);
        let options = GeodesicOptions::default();

        let one = metric.verlet_step(&start, 0.1, &options).unwrap();
        let flipped = PhaseState { q: one.q.clone(), p: one.p.iter().map(|x| -x).collect() };
        let back = metric.verlet_step(&flipped, 0.1, &options).unwrap();
        let dq = max_diff(&back.q, &start.q);
        assert!(dq <= 1e-10, "{spec}: {dq}");
        let p_back: Vec<f64> = back.p.iter().map(|x| -x).collect();
        let p_scale = start.p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let dp = max_diff(&p_back, &start.p);
        assert!(dp <= 1e-10 * p_scale.max(1.0), "{spec}: {dp} scale {p_scale}");

        let mut state = start.clone();
        for _ in 0..10 {
            state = metric.verlet_step(&state, 0.1, &options).unwrap();
        }
        state.p.iter_mut().for_each(|x| *x = -*x);
        for _ in 0..10 {
            state = metric.verlet_step(&state, 0.1, &options).unwrap();
        }
        assert!(max_diff(&state.q, &start.q) <= 1e-6, "{spec}");
    }
}

#[test]
fn single_step_shot_agrees_with_retraction_to_second_order() {
    let mesh = generate_circle_in_box(&CircleInBox { resolution: 4, ..Default::default() }).unwrap();
    let spec = MetricSpec::sobolev(2, 0.09);
    let v0 = bump_field(&mesh, 1.0);
    let gap = |t: f64| {
        let shot = shoot(&mesh, &v0, t, &spec, &GeodesicOptions { n_steps: 1, ..Default::default() }).unwrap();
        max_diff(&shot.mesh.coordinates(), &mesh.displace(&v0, t).coordinates())
    };
    let (g1, g2) = (gap(1e-2), gap(5e-3));
    let ratio = g1 / g2;
    assert!((3.5..4.5).contains(&ratio), "gaps {g1} {g2} ratio {ratio}");
}

#[test]
fn shooting_back_with_negated_velocity_returns() {
    let mesh = generate_circle_in_box(&CircleInBox { resolution: 4, ..Default::default() }).unwrap();
    // Sobolev only: a new shot with the elasticity metric recomputes the shear
    // modulus on its starting mesh, so it is not the exact reverse trajectory
    let spec = MetricSpec::sobolev(1, 0.3);
    let options = GeodesicOptions::default();
    let out = shoot(&mesh, &bump_field(&mesh, 0.3), 1.0, &spec, &options).unwrap();
    let back = shoot(&out.mesh, &out.diagnostics.final_velocity.scaled(-1.0), 1.0, &spec, &options).unwrap();
    let q0 = mesh.coordinates();
    let scale = q0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let err = max_diff(&back.mesh.coordinates(), &q0) / scale;
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn metric_is_translation_invariant() {
    let mesh = small_mesh();
    for spec in specs() {
        let q = mesh.coordinates();
        let moved: Vec<f64> = q.iter().enumerate().map(|(i, x)| x + if i % 2 == 0 { 0.37 } else { -1.1 }).collect();
        let g0 = metric_matrix_at(&q, &mesh, &spec).unwrap().matrix().to_dense();
        let g1 = metric_matrix_at(&moved, &mesh, &spec).unwrap().matrix().to_dense();
        let scale = g0.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = g0.iter().flatten().zip(g1.iter().flatten()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= 1e-12 * scale, "{spec}: {diff}");
    }
}

#[test]
fn shot_diagnostics_have_one_entry_per_step() {
    let mesh = generate_circle_in_box(&CircleInBox { resolution: 4, ..Default::default() }).unwrap();
    let shot = shoot(&mesh, &bump_field(&mesh, 0.2), 1.0, &MetricSpec::steklov_poincare(), &GeodesicOptions::default())
        .unwrap();
    assert_eq!(shot.diagnostics.hamiltonian.len(), 11);
    assert_eq!(shot.diagnostics.min_quality.len(), 11);
    let h0 = shot.diagnostics.hamiltonian[0];
    assert!(shot.diagnostics.hamiltonian.iter().all(|h| (h - h0).abs() <= 1e-2 * h0));
}
