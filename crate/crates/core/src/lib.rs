//! Diffeomorphic image registration with linear and nonlinear Stokes
//! regularization, solved by a reduced-space inexact Gauss–Newton–Krylov
//! method on a periodic pseudospectral grid.

pub mod field;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod optimizer;
pub mod problems;
pub mod projection;
pub mod regularization;
pub mod spectral;
pub mod transport;

pub use field::{ScalarField, TensorField2x2, VectorField};
pub use grid::{Grid2D, GridError};
pub use optimizer::{register, RegistrationResult, SolverConfig, SolverReport, SolverStatus};
pub use problems::RegistrationProblem;
pub use projection::{Elimination, EliminationMode};
pub use regularization::{RegConfig, RegError, RegModel};
pub use transport::{TimeSeriesField, TransportError};
