//! Mixed finite element discretization of a Dirichlet boundary control
//! problem: lowest-order Raviart-Thomas fluxes, piecewise constant state and
//! adjoint, continuous piecewise linear control.
//!
//! The typical flow is [`problems::by_name`] for the data,
//! [`solver::solve_optimality`] on a [`mesh::Mesh`], then
//! [`estimator::compute_indicators`] and [`estimator::dorfler_mark`] to drive
//! [`mesh::Mesh::nvb_refine`].

pub mod assembly;
pub mod config;
pub mod error;
pub mod estimator;
pub mod femspaces;
pub mod linsolve;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod verify;
pub mod vtk;

pub use error::{Error, Result};
pub use mesh::{Mesh, Point};
pub use problems::ControlProblem;
pub use solver::{solve_optimality, DiscreteSolution};
