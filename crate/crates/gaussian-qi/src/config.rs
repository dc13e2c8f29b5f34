use serde::{Deserialize, Serialize};

/// Logarithm base for every entropy, capacity and key rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    Two,
    E,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }

    /// Converts a value in nats into this base.
    pub fn from_nats(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x / std::f64::consts::LN_2,
            LogBase::E => x,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "2" => Some(LogBase::Two),
            "e" | "E" => Some(LogBase::E),
            _ => None,
        }
    }
}

/// Absolute tolerance on eigenvalues when testing physical validity.
pub const VALIDITY_TOL: f64 = 1e-10;
/// Relative residual accepted for decompositions.
pub const DECOMP_TOL: f64 = 1e-9;
