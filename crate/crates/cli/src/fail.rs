use std::fmt;

use stilde_core::Error;

/// Exit code 2: bad input or geometry.
pub const VALIDATION: i32 = 2;
/// Exit code 3: the input is outside what the pipeline handles.
pub const SCOPE: i32 = 3;
/// Exit code 4: a checked property does not hold.
pub const VIOLATION: i32 = 4;

#[derive(Debug)]
pub struct Fail {
    pub code: i32,
    pub message: String,
}

impl Fail {
    pub fn validation(message: String) -> Self {
        Self { code: VALIDATION, message }
    }

    pub fn violation(message: String) -> Self {
        Self { code: VIOLATION, message }
    }
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonCommutativeQuotient(_)
            | Error::PhaseIncoherence(_)
            | Error::NonGroupLikeFusion(_)
            | Error::NonClifford(_)
            | Error::CapExceeded { .. }
            | Error::Certificate(_) => SCOPE,
            Error::Frustrated(_) | Error::NoVacuum | Error::MultipleVacua(_) => VIOLATION,
            _ => VALIDATION,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<csv::Error> for Fail {
    fn from(e: csv::Error) -> Self {
        Self::validation(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(Fail::from(Error::Geometry("x".into())).code, 2);
        assert_eq!(Fail::from(Error::CapExceeded { dim: 4, cap: 2 }).code, 3);
        assert_eq!(Fail::from(Error::NonGroupLikeFusion("x".into())).code, 3);
        assert_eq!(Fail::from(Error::Frustrated("x".into())).code, 4);
        assert_eq!(Fail::from(Error::NoVacuum).code, 4);
    }
}
