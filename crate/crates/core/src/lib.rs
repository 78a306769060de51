//! Discontinuous Galerkin discretization of the unsteady p-Navier-Stokes
//! equations on triangulations of the square (-1,1)^2.
//!
//! The crate is organized bottom-up:
//!
//! - [`mesh`]: conforming triangulations, red refinement, face connectivity
//! - [`elements`]: reference basis functions and quadrature
//! - [`spaces`]: broken polynomial spaces, local L2 projection, continuous pressure
//! - [`dgcalc`]: jumps, averages, liftings and the DG gradient/divergence
//! - [`constitutive`]: the (p, delta) stress law, shifted N-functions, F and F*
//! - [`forms`]: residual and Jacobian assembly of the saddle-point system
//! - [`solver`]: sparse direct linear solves and Newton's method
//! - [`rothe`]: implicit Euler time stepping and time interpolants
//! - [`bench`]: manufactured solutions, error quantities, EOC tables

pub mod bench;
pub mod constitutive;
mod dense;
pub mod dgcalc;
pub mod elements;
pub mod error;
pub mod forms;
pub mod mesh;
pub mod rothe;
pub mod solver;
pub mod spaces;
pub mod tensor;

pub use error::{Error, Result};
