use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration invariant does not hold; the message names it.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid Zadoff-Chu root {root} for length {len}")]
    InvalidRoot { root: u32, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("codebook has {got} beams, expected {expected}")]
    CodebookSize { expected: usize, got: usize },

    #[error("capture too short: need {need} samples, have {have}")]
    CaptureTooShort { need: usize, have: usize },

    #[error("tone has zero energy; frequency is undefined")]
    ZeroTone,

    #[error("Fisher information matrix is singular (degenerate geometry)")]
    SingularFim,

    #[error("access latency diverges: miss-detection probability is 1")]
    LatencyDiverges,

    #[error("no CSI-RS slots fit in one SS period")]
    NoCsiRs,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    TomlDe(#[from] toml::de::Error),

    #[error("config write error: {0}")]
    TomlSer(#[from] toml::ser::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
