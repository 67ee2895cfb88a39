//! Riemannian steepest descent with a fixed step.
//!
//! Each iteration evaluates state, adjoint, objective and shape derivative on
//! the current mesh, computes the gradient `V` under the configured metric and
//! moves the mesh along `-step * V`, either by a straight vertex update or by
//! geodesic shooting. The loop stops when the objective has stalled over the
//! last `stop_window` iterations, at `max_iterations`, or when no step of at
//! most 30 halvings keeps the mesh valid.

use std::fmt;

use crate::error::{Error, Result};
use crate::fem::VectorField;
use crate::geodesic::{self, GeodesicOptions, ShootDiagnostics};
use crate::mesh::{mesh_quality, validate_mesh, TriMesh};
use crate::metrics::{gradient_with, GradientResult, MassKind, MetricOperator, MetricSpec};
use crate::problem::{Problem, ProblemState, ShapeDerivative};

/// Step halvings tried before giving up on an iteration.
pub const MAX_HALVINGS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UpdateRule {
    /// Euclidean vertex update `x <- x - step * V`.
    #[default]
    Retraction,
    /// Geodesic shooting with initial velocity `-step * V` over unit time.
    Geodesic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptConfig {
    pub step_size: f64,
    pub max_iterations: usize,
    pub stop_window: usize,
    pub stop_tol: f64,
    pub metric: MetricSpec,
    pub update: UpdateRule,
    pub geodesic_substeps: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            max_iterations: 500,
            stop_window: 10,
            stop_tol: 1e-4,
            metric: MetricSpec::sobolev(2, 0.09),
            update: UpdateRule::Retraction,
            geodesic_substeps: 10,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::invalid("opt.step", "must be positive"));
        }
        if self.stop_window == 0 {
            return Err(Error::invalid("opt.window", "must be at least 1"));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::invalid("opt.tol", "must be positive"));
        }
        if self.update == UpdateRule::Geodesic && self.geodesic_substeps == 0 {
            return Err(Error::invalid("opt.geodesic_steps", "must be at least 1"));
        }
        self.metric.validate()
    }
}

/// One line of the optimization trace, describing iterate `iter`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRecord {
    pub iter: usize,
    pub objective: f64,
    /// `L2` norm of the gradient field.
    pub norm_felas: f64,
    pub msh_quality: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    MeshInvalidated,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max iterations",
            Termination::MeshInvalidated => "mesh invalidated",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub mesh: TriMesh,
    pub history: Vec<HistoryRecord>,
    pub termination: Termination,
    /// Shooting diagnostics per iteration when the update is geodesic.
    pub shots: Vec<(usize, ShootDiagnostics)>,
}

impl OptimizationResult {
    pub fn last(&self) -> &HistoryRecord {
        self.history.last().expect("history has at least one record")
    }
}

/// `max_{j=1..m} J_{k-j} - J_k < tol` at the last record. False while fewer
/// than `m + 1` records exist.
pub fn stopping_criterion(history: &[HistoryRecord], m: usize, tol: f64) -> bool {
    let objectives: Vec<f64> = history.iter().map(|r| r.objective).collect();
    window_stalled(&objectives, m, tol)
}

pub(crate) fn window_stalled(objectives: &[f64], m: usize, tol: f64) -> bool {
    let n = objectives.len();
    if m == 0 || n < m + 1 {
        return false;
    }
    let current = objectives[n - 1];
    let decrease = (1..=m).map(|j| objectives[n - 1 - j] - current).fold(f64::NEG_INFINITY, f64::max);
    decrease < tol
}

/// Everything computed on one iterate before it is moved.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub state: ProblemState,
    pub derivative: ShapeDerivative,
    pub gradient: GradientResult,
    pub quality: f64,
}

impl Evaluation {
    pub fn record(&self, iter: usize) -> HistoryRecord {
        HistoryRecord {
            iter,
            objective: self.state.objective,
            norm_felas: self.gradient.l2_norm,
            msh_quality: self.quality,
        }
    }
}

pub fn evaluate(mesh: &TriMesh, config: &OptConfig, problem: &Problem) -> Result<Evaluation> {
    let state = problem.reduced_objective(mesh)?;
    let derivative = problem.shape_derivative(mesh, &state)?;
    let op = MetricOperator::assemble(mesh, &config.metric, MassKind::Consistent)?;
    let gradient = gradient_with(mesh, &op, &derivative)?;
    let quality = mesh_quality(mesh).min_quality;
    Ok(Evaluation { state, derivative, gradient, quality })
}

/// Result of moving one iterate.
#[derive(Clone, Debug)]
pub enum UpdateOutcome {
    Moved { mesh: TriMesh, step: f64, shot: Option<ShootDiagnostics> },
    Invalidated,
}

/// Moves `mesh` along `-step * gradient`, halving the step while the result
/// is not a valid mesh.
pub fn update(mesh: &TriMesh, gradient: &VectorField, config: &OptConfig) -> Result<UpdateOutcome> {
    let mut step = config.step_size;
    for _ in 0..=MAX_HALVINGS {
        let candidate = match config.update {
            UpdateRule::Retraction => Some((mesh.displace(gradient, -step), None)),
            UpdateRule::Geodesic => {
                let options = GeodesicOptions { n_steps: config.geodesic_substeps, ..GeodesicOptions::default() };
                match geodesic::shoot(mesh, &gradient.scaled(-step), 1.0, &config.metric, &options) {
                    Ok(shot) => Some((shot.mesh, Some(shot.diagnostics))),
                    Err(Error::TrajectoryInverted { .. } | Error::StepNotConverged { .. }) => None,
                    Err(e) => return Err(e),
                }
            }
        };
        if let Some((candidate, shot)) = candidate {
            if validate_mesh(&candidate).is_empty() {
                return Ok(UpdateOutcome::Moved { mesh: candidate, step, shot });
            }
        }
        step *= 0.5;
    }
    Ok(UpdateOutcome::Invalidated)
}

/// One loop body: evaluate, then move. Returns `None` as the mesh when every
/// halved step invalidated it.
pub fn iteration_step(
    mesh: &TriMesh,
    iter: usize,
    config: &OptConfig,
    problem: &Problem,
) -> Result<(Option<TriMesh>, HistoryRecord)> {
    let eval = evaluate(mesh, config, problem)?;
    let record = eval.record(iter);
    let moved = match update(mesh, &eval.gradient.v, config)? {
        UpdateOutcome::Moved { mesh, .. } => Some(mesh),
        UpdateOutcome::Invalidated => None,
    };
    Ok((moved, record))
}

pub fn steepest_descent(mesh0: &TriMesh, config: &OptConfig) -> Result<OptimizationResult> {
    steepest_descent_with(mesh0, config, &Problem::default(), |_| {})
}

/// Runs the descent loop; `observe` sees each record as soon as it exists.
pub fn steepest_descent_with(
    mesh0: &TriMesh,
    config: &OptConfig,
    problem: &Problem,
    mut observe: impl FnMut(&HistoryRecord),
) -> Result<OptimizationResult> {
    config.validate()?;
    let violations = validate_mesh(mesh0);
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
        return Err(Error::InvalidMesh(listed.join("; ")));
    }
    let at = |iteration: usize| move |e: Error| Error::AtIteration { iteration, source: Box::new(e) };

    let mut mesh = mesh0.clone();
    let mut history = Vec::new();
    let mut shots = Vec::new();
    let mut k = 0;
    loop {
        let eval = evaluate(&mesh, config, problem).map_err(at(k))?;
        let record = eval.record(k);
        observe(&record);
        history.push(record);

        if stopping_criterion(&history, config.stop_window, config.stop_tol) {
            return Ok(OptimizationResult { mesh, history, termination: Termination::Converged, shots });
        }
        if k >= config.max_iterations {
            return Ok(OptimizationResult { mesh, history, termination: Termination::MaxIterations, shots });
        }
        match update(&mesh, &eval.gradient.v, config).map_err(at(k))? {
            UpdateOutcome::Moved { mesh: next, shot, .. } => {
                if let Some(shot) = shot {
                    shots.push((k, shot));
                }
                mesh = next;
            }
            UpdateOutcome::Invalidated => {
                return Ok(OptimizationResult { mesh, history, termination: Termination::MeshInvalidated, shots });
            }
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_circle_in_box, CircleInBox};
    use crate::metrics::riemannian_gradient;

    fn records(objectives: &[f64]) -> Vec<HistoryRecord> {
        objectives
            .iter()
            .enumerate()
            .map(|(iter, &objective)| HistoryRecord { iter, objective, norm_felas: 0.0, msh_quality: 1.0 })
            .collect()
    }

    #[test]
    fn strictly_decreasing_not_stalled() {
        let j: Vec<f64> = (0..20).map(|k| -(k as f64)).collect();
        assert!(!stopping_criterion(&records(&j), 10, 1e-4));
    }

    #[test]
    fn constant_is_stalled() {
        assert!(stopping_criterion(&records(&[0.3; 11]), 10, 1e-4));
        assert!(!stopping_criterion(&records(&[0.3; 10]), 10, 1e-4));
    }

    #[test]
    fn plateau_after_drop() {
        let mut j = vec![0.0];
        j.extend([-0.5; 10]);
        // lag 10 still reaches the first record: 0 - (-0.5) = 0.5
        assert!(!stopping_criterion(&records(&j), 10, 1e-4));
        j.push(-0.5);
        assert!(stopping_criterion(&records(&j), 10, 1e-4));
    }

    fn small_mesh() -> TriMesh {
        generate_circle_in_box(&CircleInBox { resolution: 5, ..Default::default() }).unwrap()
    }

    #[test]
    fn zero_iterations() {
        let mesh = small_mesh();
        let config = OptConfig { max_iterations: 0, ..Default::default() };
        let out = steepest_descent(&mesh, &config).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.termination, Termination::MaxIterations);
        assert_eq!(out.mesh, mesh);
    }

    #[test]
    fn infinite_tolerance_stops_when_window_fills() {
        let config = OptConfig { stop_tol: f64::INFINITY, stop_window: 3, ..Default::default() };
        let out = steepest_descent(&small_mesh(), &config).unwrap();
        assert_eq!(out.termination, Termination::Converged);
        assert_eq!(out.last().iter, 3);
    }

    #[test]
    fn zero_gradient_leaves_mesh() {
        let mesh = small_mesh();
        let config = OptConfig::default();
        let g = riemannian_gradient(&mesh, &ShapeDerivative::zeros(mesh.num_vertices()), &config.metric).unwrap();
        match update(&mesh, &g.v, &config).unwrap() {
            UpdateOutcome::Moved { mesh: moved, step, .. } => {
                assert_eq!(moved, mesh);
                assert_eq!(step, 1.0);
            }
            UpdateOutcome::Invalidated => panic!("zero step cannot invalidate"),
        }
    }

    #[test]
    fn retraction_moves_by_minus_step_times_gradient() {
        let mesh = small_mesh();
        let config = OptConfig { step_size: 0.5, ..Default::default() };
        let eval = evaluate(&mesh, &config, &Problem::default()).unwrap();
        let (moved, record) = iteration_step(&mesh, 0, &config, &Problem::default()).unwrap();
        let moved = moved.unwrap();
        for i in 0..mesh.num_vertices() {
            let v = eval.gradient.v.get(i);
            let p = mesh.vertices()[i];
            assert_eq!(moved.vertices()[i], [p[0] - 0.5 * v[0], p[1] - 0.5 * v[1]]);
        }
        assert!(record.objective.is_finite() && record.norm_felas.is_finite() && record.msh_quality > 0.0);
    }

    #[test]
    fn huge_step_is_halved_or_rejected() {
        let mesh = small_mesh();
        let config = OptConfig { step_size: 1e6, ..Default::default() };
        let eval = evaluate(&mesh, &config, &Problem::default()).unwrap();
        match update(&mesh, &eval.gradient.v, &config).unwrap() {
            UpdateOutcome::Moved { step, mesh: moved, .. } => {
                assert!(step < 1e6);
                assert!(validate_mesh(&moved).is_empty());
            }
            UpdateOutcome::Invalidated => {}
        }
    }

    #[test]
    fn config_validation() {
        assert!(OptConfig { step_size: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptConfig { stop_window: 0, ..Default::default() }.validate().is_err());
        assert!(OptConfig { stop_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptConfig::default().validate().is_ok());
    }
}
