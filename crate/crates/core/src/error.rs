use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector too close to zero to define a projector")]
    ZeroVector,
    #[error("matrix is not a hermitian projector (defect {defect:.3e})")]
    NotAProjector { defect: f64 },
    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    SingularMatrix { condition: f64 },
    #[error("degenerate spectral parameters: tau_a = {tau_a}, tau_b = {tau_b}")]
    DegenerateSpectralParams { tau_a: f64, tau_b: f64 },
    #[error("invalid soliton: {0}")]
    InvalidSoliton(String),
    #[error("invalid system parameters: {0}")]
    InvalidSystem(String),
    #[error("asymptotic regime {regime} does not apply to {kind}")]
    RegimeMismatch { regime: String, kind: String },
    #[error("grid too narrow: edge magnitude {edge:.3e} exceeds {limit:.3e}")]
    GridTooNarrow { edge: f64, limit: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no imprint found above threshold")]
    NoImprintFound,
    #[error("overlapping imprints: {0}")]
    OverlappingImprints(String),
    #[error("unsupported sequence: {0}")]
    UnsupportedSequence(String),
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
