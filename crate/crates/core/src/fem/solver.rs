//! Jacobi-preconditioned conjugate gradients on the free DOFs of a
//! [`SparseSystem`].

use thiserror::Error;

use super::sparse::{dot, norm2, SparseSystem};

/// Relative residual used when callers have no stronger requirement.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("conjugate gradients stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("operator is not positive definite on the free DOFs (curvature {curvature:e} at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },
    #[error("right-hand side has length {got}, system has {expected} DOFs")]
    SizeMismatch { got: usize, expected: usize },
}

/// Iteration cap: `20 * sqrt(free DOFs) + 1000`.
pub fn iteration_cap(free: usize) -> usize {
    20 * (free as f64).sqrt().ceil() as usize + 1000
}

/// Solves `A x = rhs` with the constrained DOFs set to their prescribed values.
///
/// Convergence is declared when the free-DOF residual drops below
/// `tol * |rhs_free|`, where `rhs_free` already includes the Dirichlet lift.
pub fn solve_spd(system: &SparseSystem, rhs: &[f64], tol: f64) -> Result<Vec<f64>, SolveError> {
    let n = system.size();
    if rhs.len() != n {
        return Err(SolveError::SizeMismatch { got: rhs.len(), expected: n });
    }
    let free = system.free_mask();
    let a = system.matrix();
    let lift = system.lift();

    let mut x = vec![0.0; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        match system.constraint(i) {
            Some(g) => x[i] = g,
            None => b[i] = rhs[i] - lift[i],
        }
    }
    let b_norm = norm2(&b);
    if b_norm == 0.0 {
        return Ok(x);
    }

    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .zip(&free)
        .map(|(&d, &f)| if f && d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    if let Some(i) = (0..n).find(|&i| free[i] && inv_diag[i] == 0.0) {
        return Err(SolveError::NotPositiveDefinite { iteration: 0, curvature: a.get(i, i) });
    }

    // x_free starts at zero; eliminated couplings make A x vanish on free rows.
    let mut r = b;
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = iteration_cap(system.num_free());
    let mut residual = 1.0;
    for it in 0..cap {
        a.matvec_into(&p, &mut ap);
        for (v, &f) in ap.iter_mut().zip(&free) {
            if !f {
                *v = 0.0;
            }
        }
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(SolveError::NotPositiveDefinite { iteration: it, curvature });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = norm2(&r) / b_norm;
        if residual <= tol {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NotConverged { iterations: cap, residual })
}
