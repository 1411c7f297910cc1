use std::path::PathBuf;

/// Error type shared across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A microphone or channel index is out of range.
    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    /// Two points that must be separated coincide (zero distance).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of bounds or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Reflection-coefficient bisection could not reach the target.
    #[error(
        "calibration failed: target DRR {target_db:.2} dB not reachable; \
         achievable range [{drr_at_beta_hi:.2}, {drr_at_beta_lo:.2}] dB \
         for beta in [{beta_lo}, {beta_hi}]"
    )]
    Calibration {
        target_db: f64,
        beta_lo: f64,
        beta_hi: f64,
        drr_at_beta_lo: f64,
        drr_at_beta_hi: f64,
    },

    /// Channel count of an input file does not match the configured geometry.
    #[error("channel count mismatch: expected {expected}, file has {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    /// File-system failure, annotated with the path involved.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// WAV encode/decode failure.
    #[error("WAV error on {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn wav(path: impl Into<PathBuf>, source: hound::Error) -> Self {
        Error::Wav {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 config/usage, 3 calibration, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Calibration { .. } => 3,
            Error::Io { .. } | Error::Wav { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
