//! Riemannian shape gradients on the hold-all mesh.
//!
//! Two metrics are available. `SteklovPoincare` is linear elasticity with a
//! shear modulus interpolated harmonically between the interface and the box.
//! `Sobolev` realizes `(id - A Laplacian)^s` as `s` chained Helmholtz solves:
//! with `B = mass + A * stiffness` and `M` the vector mass,
//! `B v_1 = f`, `B v_i = M v_{i-1}`, so the discrete metric is
//! `G = B (M^{-1} B)^{s-1}`. Every factor carries a zero Dirichlet condition on
//! the OUTER boundary; the interface is left free so the field moves the shape.

use std::fmt;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_elasticity, assemble_scalar_laplace, assemble_vector_helmholtz, assemble_vector_mass, dot,
    lumped_mass_diagonal, solve_spd, Coefficient, CsrMatrix, ScalarField, SparseSystem, VectorField,
};
use crate::mesh::{Marker, RegionFilter, TriMesh};
use crate::problem::ShapeDerivative;

/// Relative residual for metric solves; the Galerkin identity is checked at 1e-8.
pub const METRIC_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricSpec {
    /// Volume elasticity with `mu` harmonic between `mu_min` (box) and `mu_max` (interface).
    SteklovPoincare { mu_min: f64, mu_max: f64, lambda: f64 },
    /// `H^s` with `L = (id - A Laplacian)^s`.
    Sobolev { order: u32, a: f64 },
}

impl MetricSpec {
    pub fn steklov_poincare() -> Self {
        MetricSpec::SteklovPoincare { mu_min: 1.0, mu_max: 5.0, lambda: 0.0 }
    }

    pub fn sobolev(order: u32, a: f64) -> Self {
        MetricSpec::Sobolev { order, a }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricSpec::SteklovPoincare { mu_min, mu_max, lambda } => {
                if !(mu_min > 0.0) || !mu_min.is_finite() {
                    return Err(Error::invalid("metric.mu_min", "must be positive"));
                }
                if !(mu_max >= mu_min) || !mu_max.is_finite() {
                    return Err(Error::invalid("metric.mu_max", "must be at least mu_min"));
                }
                if !lambda.is_finite() || lambda < -mu_min {
                    return Err(Error::invalid("metric.lambda", "must keep the operator positive definite"));
                }
            }
            MetricSpec::Sobolev { order, a } => {
                if !(1..=4).contains(&order) {
                    return Err(Error::invalid("metric.s", "supported orders are 1 to 4"));
                }
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::invalid("metric.A", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            MetricSpec::SteklovPoincare { .. } => "SP".into(),
            MetricSpec::Sobolev { order, .. } => format!("H{order}"),
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::SteklovPoincare { mu_min, mu_max, lambda } => {
                write!(f, "SP(mu_min={mu_min}, mu_max={mu_max}, lambda={lambda})")
            }
            MetricSpec::Sobolev { order, a } => write!(f, "H^{order}(A={a})"),
        }
    }
}

/// Mass matrix used between Sobolev factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MassKind {
    #[default]
    Consistent,
    Lumped,
}

#[derive(Clone, Debug)]
enum MassOperator {
    Consistent(SparseSystem),
    /// Per-DOF lumped mass, zero on constrained DOFs.
    Lumped(Vec<f64>),
}

impl MassOperator {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            MassOperator::Consistent(m) => m.apply_free(v),
            MassOperator::Lumped(d) => v.iter().zip(d).map(|(x, m)| x * m).collect(),
        }
    }

    fn solve(&self, w: &[f64], tol: f64) -> Result<Vec<f64>> {
        match self {
            MassOperator::Consistent(m) => solve_spd(m, w, tol).map_err(|e| Error::solve("mass solve", e)),
            MassOperator::Lumped(d) => Ok(w.iter().zip(d).map(|(x, m)| if *m > 0.0 { x / m } else { 0.0 }).collect()),
        }
    }
}

/// The discrete metric assembled on one mesh, restricted to free DOFs.
#[derive(Clone, Debug)]
pub struct MetricOperator {
    spec: MetricSpec,
    /// Elasticity matrix or the Helmholtz factor `B`, OUTER DOFs eliminated.
    main: SparseSystem,
    mass: Option<MassOperator>,
    tol: f64,
}

/// DOFs of the OUTER boundary vertices (both components).
pub fn outer_dofs(mesh: &TriMesh) -> Vec<usize> {
    mesh.marked_vertices(Marker::Outer).into_iter().flat_map(|v| [2 * v, 2 * v + 1]).collect()
}

impl MetricOperator {
    /// Assembles the metric with an explicit shear modulus field for the
    /// elasticity case (ignored for Sobolev metrics).
    pub fn assemble_with_mu(mesh: &TriMesh, spec: &MetricSpec, mass_kind: MassKind, mu: Option<&ScalarField>) -> Result<Self> {
        spec.validate()?;
        let fixed = outer_dofs(mesh);
        let zeros = vec![0.0; fixed.len()];
        match *spec {
            MetricSpec::SteklovPoincare { mu_min, mu_max, lambda } => {
                let computed;
                let mu = match mu {
                    Some(m) => m,
                    None => {
                        computed = mu_field(mesh, mu_min, mu_max)?;
                        &computed
                    }
                };
                let k = assemble_elasticity(mesh, RegionFilter::All, mu, lambda);
                Ok(Self { spec: *spec, main: k.apply_dirichlet(&fixed, &zeros), mass: None, tol: METRIC_TOL })
            }
            MetricSpec::Sobolev { a, .. } => {
                let b = assemble_vector_helmholtz(mesh, RegionFilter::All, a).apply_dirichlet(&fixed, &zeros);
                let mass = match mass_kind {
                    MassKind::Consistent => MassOperator::Consistent(
                        assemble_vector_mass(mesh, RegionFilter::All).apply_dirichlet(&fixed, &zeros),
                    ),
                    MassKind::Lumped => {
                        let d = lumped_mass_diagonal(mesh, RegionFilter::All);
                        let mut per_dof: Vec<f64> = d.iter().flat_map(|&m| [m, m]).collect();
                        for &k in &fixed {
                            per_dof[k] = 0.0;
                        }
                        MassOperator::Lumped(per_dof)
                    }
                };
                Ok(Self { spec: *spec, main: b, mass: Some(mass), tol: METRIC_TOL })
            }
        }
    }

    pub fn assemble(mesh: &TriMesh, spec: &MetricSpec, mass_kind: MassKind) -> Result<Self> {
        Self::assemble_with_mu(mesh, spec, mass_kind, None)
    }

    /// Relative residual target of the inner CG solves.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    /// Elasticity matrix or Helmholtz factor, with OUTER DOFs eliminated.
    pub fn main_system(&self) -> &SparseSystem {
        &self.main
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.main.is_free(dof)
    }

    fn order(&self) -> u32 {
        match self.spec {
            MetricSpec::Sobolev { order, .. } => order,
            MetricSpec::SteklovPoincare { .. } => 1,
        }
    }

    fn mask(&self, mut v: Vec<f64>) -> Vec<f64> {
        for (i, x) in v.iter_mut().enumerate() {
            if !self.main.is_free(i) {
                *x = 0.0;
            }
        }
        v
    }

    fn solve_main(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_spd(&self.main, rhs, self.tol).map_err(|e| Error::solve(format!("{} metric solve", self.spec.label()), e))
    }

    /// `G^{-1} f` on the free DOFs; zero on OUTER DOFs.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut v = self.solve_main(f)?;
        if let Some(mass) = &self.mass {
            for _ in 1..self.order() {
                v = self.solve_main(&mass.apply(&v))?;
            }
        }
        Ok(v)
    }

    /// `G v` restricted to the free DOFs (OUTER components of `v` are ignored).
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let v = self.mask(v.to_vec());
        let mut w = self.main.apply_free(&v);
        if let Some(mass) = &self.mass {
            for _ in 1..self.order() {
                let z = mass.solve(&w, self.tol)?;
                w = self.main.apply_free(&z);
            }
        }
        Ok(w)
    }

    /// `U^T G V`.
    pub fn pairing(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let gv = self.apply(v)?;
        Ok(dot(&self.mask(u.to_vec()), &gv))
    }

    /// Explicit sparse `G`, available for elasticity and lumped Sobolev
    /// metrics. Constrained DOFs keep a positive diagonal and no couplings.
    pub fn to_matrix(&self) -> Result<SparseSystem> {
        let b = self.main.matrix();
        let matrix = match &self.mass {
            None => b.clone(),
            Some(MassOperator::Lumped(d)) => {
                let inv: Vec<f64> = d
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| if self.main.is_free(i) { 1.0 / m } else { 1.0 })
                    .collect();
                let step = b.scale_columns(&inv);
                let mut g: CsrMatrix = b.clone();
                for _ in 1..self.order() {
                    g = step.matmul(&g);
                }
                g
            }
            Some(MassOperator::Consistent(_)) => {
                return Err(Error::invalid("mass", "explicit metric matrix needs a lumped mass"));
            }
        };
        let constrained: Vec<usize> = (0..self.main.size()).filter(|&i| !self.main.is_free(i)).collect();
        let zeros = vec![0.0; constrained.len()];
        Ok(SparseSystem::new(matrix).apply_dirichlet(&constrained, &zeros))
    }

    pub fn num_dofs(&self) -> usize {
        self.main.size()
    }
}

/// Shear modulus for the elasticity metric: harmonic on the whole mesh, equal
/// to `mu_max` on the interface and `mu_min` on the box.
pub fn mu_field(mesh: &TriMesh, mu_min: f64, mu_max: f64) -> Result<ScalarField> {
    if !(mu_min > 0.0) || !(mu_max >= mu_min) {
        return Err(Error::invalid("mu", "need 0 < mu_min <= mu_max"));
    }
    let k = assemble_scalar_laplace(mesh, RegionFilter::All, Coefficient::Constant(1.0));
    let inner = mesh.marked_vertices(Marker::Inner);
    let outer = mesh.marked_vertices(Marker::Outer);
    let mut dofs = inner.clone();
    dofs.extend(&outer);
    let mut values = vec![mu_max; inner.len()];
    values.extend(std::iter::repeat_n(mu_min, outer.len()));
    let system = k.apply_dirichlet(&dofs, &values);
    let mu = solve_spd(&system, &vec![0.0; mesh.num_vertices()], METRIC_TOL).map_err(|e| Error::solve("mu solve", e))?;
    Ok(ScalarField(mu))
}

/// Riesz representative of the shape derivative and its norms.
#[derive(Clone, Debug)]
pub struct GradientResult {
    pub v: VectorField,
    /// `sqrt(V^T M V)` with the consistent vector mass of the whole mesh.
    pub l2_norm: f64,
    /// `dJ[V] = f . V`, non-negative.
    pub pairing: f64,
}

/// Solves `G V = f` for the Riemannian gradient.
pub fn riemannian_gradient(mesh: &TriMesh, f: &ShapeDerivative, spec: &MetricSpec) -> Result<GradientResult> {
    let op = MetricOperator::assemble(mesh, spec, MassKind::Consistent)?;
    gradient_with(mesh, &op, f)
}

pub(crate) fn gradient_with(mesh: &TriMesh, op: &MetricOperator, f: &ShapeDerivative) -> Result<GradientResult> {
    if f.dofs().len() != op.num_dofs() {
        return Err(Error::SizeMismatch { what: "shape derivative", got: f.dofs().len(), expected: op.num_dofs() });
    }
    let v = op.solve(f.dofs())?;
    let mass = assemble_vector_mass(mesh, RegionFilter::All);
    let l2_norm = mass.matrix().bilinear(&v, &v).max(0.0).sqrt();
    let pairing = dot(f.dofs(), &v);
    Ok(GradientResult { v: VectorField::from_dofs(v), l2_norm, pairing })
}

/// `U^T G V` under the consistent-mass metric on `mesh`.
pub fn metric_pairing(mesh: &TriMesh, spec: &MetricSpec, u: &VectorField, v: &VectorField) -> Result<f64> {
    MetricOperator::assemble(mesh, spec, MassKind::Consistent)?.pairing(u.dofs(), v.dofs())
}
