//! Least-energy solutions of `−Δu = g(u)` on `ℝᴺ` by minimization over the
//! Pohozaev manifold, with closed-form checks for the logarithmic case.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod nonlin;
pub mod pohozaev;
pub mod solver;

pub use error::{Error, Result};
