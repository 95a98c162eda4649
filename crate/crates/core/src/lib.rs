//! Quantum dynamical semigroups on finite-dimensional Hilbert spaces.
//!
//! The crate builds completely positive trace-preserving Markovian generators
//! (GKLS form), propagates density matrices with several independent methods,
//! unravels the dynamics into stochastic pure-state trajectories, derives
//! weak-coupling (Davies) generators from bath spectral data, and checks the
//! structural and thermodynamic properties such dynamics must satisfy.
//!
//! Conventions: `ħ = k_B = 1`; operators are column-stacked when vectorized.

pub mod cli;
pub mod davies;
pub mod error;
pub mod gkls;
pub mod linalg;
pub mod models;
pub mod operators;
pub mod propagation;
pub mod quadrature;
pub mod random;
pub mod thermo;
pub mod unraveling;

pub use error::{Error, Result};
pub use gkls::{GklsGenerator, WhiteNoiseGenerator};
pub use operators::{ChoiMatrix, DensityMatrix, HilbertDim, KrausSet, Operator, Superoperator};
