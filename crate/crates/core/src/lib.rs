//! Finite-difference solver for the nonlinear Poisson equation
//! −∇·(ε(|∇φ|²)∇φ) = ρ on structured 3D grids, where the permittivity
//! responds to the local field strength.
//!
//! The steady state is reached by pseudo-transient continuation with a
//! Douglas–Rachford alternating-direction-implicit (ADI) scheme, so each
//! implicit step costs three batches of tridiagonal solves. A classic
//! alternating iteration over frozen-ε boundary-value problems serves as a
//! cross-validation oracle, a manufactured-solution benchmark measures
//! discretization orders, and post-processing turns converged potentials
//! into solvation free energies for biomolecular systems read from PQR
//! files.

pub mod adi;
pub mod bvp;
pub mod charge;
pub mod cli;
pub mod dielectric;
pub mod energy;
pub mod error;
pub mod grid;
pub mod mms;
pub mod tridiag;

pub use adi::{solve_steady, SolverConfig, SteadyStateResult};
pub use charge::{parse_pqr, Atom, ChargeSystem, PhysicalConstants};
pub use dielectric::{DielectricModel, DielectricVariant, HalfNodeScheme};
pub use energy::EnergyReport;
pub use error::{Error, Result};
pub use grid::{Grid, ScalarField};
