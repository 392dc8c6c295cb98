use std::fmt;
use std::str::FromStr;

use crate::error::Error;

use super::coef::CoefficientSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gresh,
    Shim,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gresh => "gresh",
            Method::Shim => "shim",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "gresh" => Ok(Method::Gresh),
            "shim" => Ok(Method::Shim),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

/// Penalty levels and stopping rules for one fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub method: Method,
    /// Interaction ℓ1 weight (GRESH) or `|γ_jk|` weight (SHIM).
    pub lambda1: f64,
    /// Group weight (GRESH) or main-effect ℓ1 weight (SHIM).
    pub lambda2: f64,
    /// Stop when no coefficient moves by more than this in a full sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl PenaltyConfig {
    /// Exponent of the GRESH group norm; only the Euclidean case is supported.
    pub const GROUP_EXPONENT: u32 = 2;
    pub const DEFAULT_TOL: f64 = 1e-6;
    pub const DEFAULT_MAX_SWEEPS: usize = 1000;

    /// GRESH with `lambda2 = lambda1 / 2`.
    pub fn gresh(lambda1: f64) -> Self {
        Self {
            method: Method::Gresh,
            lambda1,
            lambda2: 0.5 * lambda1,
            tol: Self::DEFAULT_TOL,
            max_sweeps: Self::DEFAULT_MAX_SWEEPS,
        }
    }

    /// SHIM with equal main and interaction penalties.
    pub fn shim(lambda: f64) -> Self {
        Self {
            method: Method::Shim,
            lambda1: lambda,
            lambda2: lambda,
            tol: Self::DEFAULT_TOL,
            max_sweeps: Self::DEFAULT_MAX_SWEEPS,
        }
    }

    pub fn for_method(method: Method, lambda1: f64) -> Self {
        match method {
            Method::Gresh => Self::gresh(lambda1),
            Method::Shim => Self::shim(lambda1),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lambda1 >= 0.0 && self.lambda2 >= 0.0 && self.tol > 0.0 && self.max_sweeps > 0
    }
}

/// Result of one penalised fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    /// Coefficients with magnitudes below [`super::ZERO_SNAP`] set to 0.
    pub coefs: CoefficientSet,
    pub objective: f64,
    pub sweeps: usize,
    /// False when `max_sweeps` ran out; `coefs` is then the last iterate.
    pub converged: bool,
    /// Coordinate updates that needed the bisection fallback.
    pub newton_fallbacks: usize,
}
