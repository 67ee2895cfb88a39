//! P1 finite elements on [`TriMesh`](crate::mesh::TriMesh) regions and a
//! symmetric positive-definite sparse solver.

mod assembly;
mod field;
mod solver;
mod sparse;

pub use assembly::{
    assemble_elasticity, assemble_scalar_laplace, assemble_scalar_mass, assemble_vector_helmholtz,
    assemble_vector_mass, assemble_vector_stiffness, element_elasticity, element_laplace, element_lumped_mass,
    element_mass, element_vector_helmholtz, integrate_p1, l2_norm_vector, lumped_mass_diagonal, p1_basis_gradients,
    interpolate_p1, p1_gradient, Coefficient,
};
pub use field::{ScalarField, VectorField};
pub use solver::{iteration_cap, solve_spd, SolveError, DEFAULT_TOL};
pub use sparse::{apply_dirichlet, dot, norm2, CsrMatrix, SparseSystem, TripletBuilder};
