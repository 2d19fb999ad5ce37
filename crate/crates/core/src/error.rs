use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),

    #[error("no feasible design for r = {r}, m = {m} within |fx - r| <= 0.5")]
    NoFeasibleDesign { r: f64, m: u32 },

    #[error("degenerate pattern: zero extent on the {axis} axis")]
    DegeneratePattern { axis: &'static str },

    #[error("invalid modulated parameters: {0}")]
    InvalidParams(String),

    #[error("optimization failed at iteration {iteration}: loss became non-finite")]
    OptimizationFailed { iteration: usize, trace: Vec<f64> },

    #[error("undefined phase: quadrature pair is (0, 0)")]
    UndefinedPhase,

    #[error("ill-conditioned multitone system (condition number {condition:.3e}): {detail}")]
    IllConditioned { condition: f64, detail: String },

    #[error("weight map is not square: {rows} rows x {cols} columns")]
    NonSquare { rows: usize, cols: usize },

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used as the prefix of CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NoFeasibleDesign { .. } => "no_feasible_design",
            Error::DegeneratePattern { .. } => "degenerate_pattern",
            Error::InvalidParams(_) => "invalid_params",
            Error::OptimizationFailed { .. } => "optimization_failed",
            Error::UndefinedPhase => "undefined_phase",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::NonSquare { .. } => "non_square",
            Error::Ingest(_) => "ingest",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
