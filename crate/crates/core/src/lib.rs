//! Copositive and completely positive computations for stability numbers.
//!
//! The crate covers four layers:
//!
//! - [`linalg`] and [`lp`]: dense symmetric eigen-decomposition and a small
//!   two-phase simplex solver that everything else builds on;
//! - [`kernels`] and [`copositivity`]: zonal polynomial kernels on the sphere,
//!   normalized Jacobi polynomials, exact copositivity of finite matrices and a
//!   separation oracle that searches point configurations with negative kernel
//!   energy;
//! - [`graphs`] and [`cpdual`]: stability numbers (weighted and unweighted),
//!   the de Klerk–Pasechnik copositive matrices and their threshold, and the
//!   completely positive dual evaluated on finitely supported measures;
//! - [`kissing`]: the linear program for kissing-number bounds in a rigorous
//!   positive-definite (Delsarte) mode and a copositive cutting-plane mode.

pub mod copositivity;
pub mod cpdual;
pub mod error;
pub mod graphs;
pub mod kernels;
pub mod kissing;
pub mod linalg;
pub mod lp;
mod seed;

pub use error::{Error, Result};
pub use linalg::{eig_sym, SpectralDecomp, SymmatN};
pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus, Sense};
