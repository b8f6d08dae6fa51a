//! Radial p-Laplacian bifurcation toolkit.
//!
//! Principal eigenvalues of the indefinite-weight p-Laplacian on balls and
//! annuli, branches of positive solutions of
//! `-Δ_p u = λ V |u|^{p-2} u + m f(u)` traced from the two principal
//! eigenvalues, Orlicz-space checks, and verifiers for the structural claims.

pub mod asymptotics;
pub mod cli;
pub mod continuation;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod nonlinearity;
pub mod operator;
pub mod orlicz;
pub mod quadrature;
pub mod tridiag;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
