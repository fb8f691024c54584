use thiserror::Error;

/// Which end of a validity interval was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Lower => write!(f, "lower"),
            Bound::Upper => write!(f, "upper"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SpdcError {
    #[error("wavelength {wavelength_um:.6} um violates the {bound} validity bound {limit_um:.4} um of the dispersion model")]
    OutOfRange {
        wavelength_um: f64,
        bound: Bound,
        limit_um: f64,
    },

    #[error("dispersion parameter is singular: |k'_p - k'_i| = {denominator:e} s/m")]
    Singular { denominator: f64 },

    #[error("no first-order quasi-phase-matching solution: required 2pi/Lambda = {grating_wavenumber:e} 1/m is not positive")]
    NoQpm { grating_wavenumber: f64 },

    #[error("no group-velocity-matching point: D does not change sign between {lower_nm:.1} nm ({d_lower:.4}) and {upper_nm:.1} nm ({d_upper:.4})")]
    NoGvmPoint {
        lower_nm: f64,
        upper_nm: f64,
        d_lower: f64,
        d_upper: f64,
    },

    #[error("quadrature did not converge: relative change {relative_change:e} at {nodes} nodes per axis exceeds {tolerance:e}")]
    NotConverged {
        nodes: usize,
        relative_change: f64,
        tolerance: f64,
    },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid dispersion model: {0}")]
    InvalidModel(String),
}

impl SpdcError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SpdcError::InvalidInput(msg.into())
    }

    /// Errors that mean the requested physics has no solution (as opposed to
    /// bad input or numerical trouble).
    pub fn is_physics_domain(&self) -> bool {
        matches!(
            self,
            SpdcError::OutOfRange { .. }
                | SpdcError::Singular { .. }
                | SpdcError::NoQpm { .. }
                | SpdcError::NoGvmPoint { .. }
        )
    }

    pub fn is_convergence(&self) -> bool {
        matches!(self, SpdcError::NotConverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, SpdcError>;
