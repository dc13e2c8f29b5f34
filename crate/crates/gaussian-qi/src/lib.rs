//! Gaussian quantum information in phase space.
//!
//! States are carried as first and second moments in units where the vacuum
//! covariance is the identity (ħ = 2). Quadratures are interleaved,
//! `(q1, p1, q2, p2, ...)`.

pub mod channels;
pub mod cluster;
pub mod config;
pub mod discrimination;
pub mod entanglement;
pub mod error;
pub mod fock_oracle;
pub mod io;
pub mod linalg;
pub mod measurements;
pub mod phase_space;
pub mod protocols;
pub mod qkd;
pub mod unitaries;

pub use config::LogBase;
pub use error::{Error, Result};
pub use phase_space::{GaussianState, StateKind, SymplecticTransform};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
