use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tolerances must be finite and strictly positive (got {eps_structural}, {eps_rank})")]
    InvalidTolerance { eps_structural: f64, eps_rank: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate metric: smallest singular value {smallest:.3e} vs largest {largest:.3e}")]
    Degenerate { smallest: f64, largest: f64 },

    #[error("algebra is not semisimple after {attempts} attempts: {reason}")]
    NotSemisimple { attempts: usize, reason: String },

    #[error("degenerate trace: weight {index} is zero")]
    DegenerateTrace { index: usize },

    #[error("root {index} does not square to its weight (residual {residual:.3e})")]
    InvalidRoot { index: usize, residual: f64 },

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("morphism is not an endomorphism")]
    NotEndomorphism,

    #[error("pairing between hom spaces is degenerate (smallest singular value {0:.3e})")]
    DegeneratePairing(f64),

    #[error("morphism is not idempotent (residual {0:.3e})")]
    NotIdempotent(f64),

    #[error("invalid nerve: {0}")]
    InvalidNerve(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("WDVV violation at {} sample point(s), first at {}, max residual {residual:.3e}", points.len(), points.first().map(String::as_str).unwrap_or("?"))]
    WdvvViolation { points: Vec<String>, residual: f64 },

    #[error("unit direction is not a unit at {} sample point(s), first at {}", points.len(), points.first().map(String::as_str).unwrap_or("?"))]
    NonUnit { points: Vec<String> },

    #[error("not semisimple at chart {chart} sample {sample}: {reason}")]
    NotSemisimpleAtPoint {
        chart: String,
        sample: usize,
        reason: String,
    },

    #[error("ambiguous idempotent tracking in chart {chart} between samples {sample} and {}", sample + 1)]
    AmbiguousTracking { chart: String, sample: usize },

    #[error("ambiguous sheet matching on edge {from} -> {to}")]
    AmbiguousMatching { from: String, to: String },

    #[error("missing line class for edge {edge} sheet {sheet}")]
    MissingLine { edge: String, sheet: usize },

    #[error("missing edge data for {0}")]
    MissingEdge(String),

    #[error("edge map {edge} is not an algebra automorphism (residual {residual:.3e})")]
    NotAutomorphism { edge: String, residual: f64 },

    #[error("no isomorphism witness found: {0}")]
    NoWitnessFound(String),

    #[error("no representative line bundle for the required twist class")]
    MissingRepresentative,

    #[error("inconsistent sheet dimensions on edge {from} -> {to}: sheet {sheet} has {left}, image sheet {image} has {right}")]
    InconsistentDims {
        from: String,
        to: String,
        sheet: usize,
        image: usize,
        left: usize,
        right: usize,
    },

    #[error("spectral cover has {0} connected components, expected 1")]
    Disconnected(usize),
}
