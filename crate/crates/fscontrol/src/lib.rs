//! Open-loop final-state control of parabolic equations on boxes with
//! homogeneous Dirichlet conditions.
//!
//! The state is truncated to a tensor-product sine eigenbasis
//! ([`spectral_basis`]), giving a linear system ([`galerkin_system`]) whose
//! finite-horizon Gram matrix comes from a Lyapunov equation
//! ([`gram_operator`]). The quadratic tracking problem has a closed-form
//! minimizer ([`unconstrained_solver`]); the peak-bounded problem is handled
//! by maximizing a dual over piecewise-linear multipliers and rounding the
//! recovered control into the feasible box ([`constrained_dual`]).
//! [`cli_io`] binds everything to a text configuration format, CSV/JSON
//! outputs and the reference 2D comparison.

pub mod cli_io;
pub mod constrained_dual;
pub mod error;
pub mod galerkin_system;
pub mod gram_operator;
pub mod quadrature;
pub mod spectral_basis;
pub mod unconstrained_solver;

pub use error::{Error, Result};
