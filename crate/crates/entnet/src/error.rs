use thiserror::Error;

/// Error taxonomy shared by every module. Variants map onto the process exit
/// codes used by the binary: validation failures → 2, physics/configuration
/// failures → 3, analysis/IO failures → 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    /// 10 dB bands overlap; carries the (negative) raw gap in GHz.
    #[error("spectral overlap: gap is {gap_ghz} GHz")]
    Overlap { gap_ghz: f64 },

    /// Requested Δλ lies outside the tabulated cross-section range.
    #[error("cross-section extrapolation: {0}")]
    Extrapolation(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// Malformed analysis input (unsorted streams, bad records).
    #[error("data error: {0}")]
    Data(String),

    /// No correlation peak rises above the accidental floor; carries the
    /// flat-floor estimate so callers can still report it.
    #[error("analysis error: peak SNR {snr:.2} below 3; accidental floor ≈ {floor_per_bin:.4} counts/bin")]
    NoPeak { snr: f64, floor_per_bin: f64 },

    /// Channel-plan validation produced spectral-gap violations.
    #[error("validation failed: {count} spectral-gap violation(s)")]
    Validation { count: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable exit code contract: 0 ok, 2 plan/validation, 3 simulation or
    /// scenario physics, 4 analysis/IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } => 2,
            Error::Domain(_)
            | Error::Capacity(_)
            | Error::Lookup(_)
            | Error::Overlap { .. }
            | Error::Extrapolation(_)
            | Error::Configuration(_) => 3,
            Error::Data(_) | Error::NoPeak { .. } | Error::Parse(_) | Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
