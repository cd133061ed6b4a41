//! Numerics for holomorphic and pseudo-holomorphic Hamiltonian systems on a
//! single coordinate patch.
//!
//! Points of `C^m` are real vectors ordered `(x_1..x_m, y_1..y_m)` with
//! `z_j = x_j + i y_j`. See [`tensor`] for the matrix conventions.

pub mod action;
pub mod connection;
pub mod error;
pub mod expr;
pub mod flow;
pub mod hamiltonian;
pub mod models;
pub mod morse;
pub mod par;
pub mod quad;
pub mod tensor;

pub use error::{PhhsError, Result};
pub use num_complex::Complex64;
