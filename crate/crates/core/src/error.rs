use thiserror::Error;

/// Errors raised by surface construction, tracing and the derived statistics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("face {face} edge {edge} is not paired")]
    UnpairedEdge { face: usize, edge: usize },
    #[error("face {face} edge {edge} is paired more than once")]
    EdgePairedTwice { face: usize, edge: usize },
    #[error("edge reference ({face}, {edge}) is out of range")]
    BadEdgeRef { face: usize, edge: usize },
    #[error("paired edges ({0}, {1}) and ({2}, {3}) differ in length by {4:e}")]
    LengthMismatch(usize, usize, usize, usize, f64),
    #[error("paired edges ({0}, {1}) and ({2}, {3}) are not opposite translates")]
    NotAntiparallel(usize, usize, usize, usize),
    #[error("surface is not connected ({0} components)")]
    Disconnected(usize),
    #[error("singularity {class} has cone angle {angle} which is not a positive multiple of 2π")]
    BadConeAngle { class: usize, angle: f64 },
    #[error("Gauss–Bonnet check failed: total excess {0} gives no integer genus")]
    GaussBonnet(f64),
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("angle at vertex {vertex} is not a rational multiple of π with denominator ≤ {cap}")]
    IrrationalAngle { vertex: usize, cap: i64 },
    #[error("declared angle at vertex {vertex} disagrees with the geometry by {error:e}")]
    AngleMismatch { vertex: usize, error: f64 },
    #[error("geodesic hits singularity {singularity} at time {t}")]
    VertexHit { t: f64, singularity: usize },
    #[error("direction {theta} is within the margin of edge ({}, {})", edge.0, edge.1)]
    DegenerateDirection { theta: f64, edge: (usize, usize) },
    #[error("search budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("input {name} must be positive, got {value}")]
    NonpositiveInput { name: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation requires the unit square torus")]
    NotATorus,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed input data rather than runtime conditions.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnpairedEdge { .. }
                | Error::EdgePairedTwice { .. }
                | Error::BadEdgeRef { .. }
                | Error::LengthMismatch(..)
                | Error::NotAntiparallel(..)
                | Error::Disconnected(_)
                | Error::BadConeAngle { .. }
                | Error::GaussBonnet(_)
                | Error::DegeneratePolygon(_)
                | Error::IrrationalAngle { .. }
                | Error::AngleMismatch { .. }
                | Error::NonpositiveInput { .. }
                | Error::InvalidParameter(_)
                | Error::NotATorus
                | Error::DegenerateDirection { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
