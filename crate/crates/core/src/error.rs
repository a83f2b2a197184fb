use alloc::string::String;

use crate::statekit::Basis;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("state is expressed in the {found:?} basis, expected {expected:?}")]
    WrongBasis { expected: Basis, found: Basis },

    #[error("no positive signal wavelength for pump {pump_nm} nm and idler {idler_nm} nm")]
    InfeasibleWavelength { pump_nm: f64, idler_nm: f64 },

    #[error("CAR is undefined for a zero accidental rate")]
    UndefinedCar,

    #[error("degenerate fit: normal equations are singular")]
    DegenerateFit,

    #[error("ill-conditioned design matrix")]
    IllConditioned,
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }
}

/// Fails with a validation error unless `value` is finite.
pub(crate) fn ensure_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            alloc::format!("{value} is not finite"),
        ))
    }
}
