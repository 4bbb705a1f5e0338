use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must have at least {min} subintervals, got m = {m}")]
    InvalidGrid { m: usize, min: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{path}: parse error at line {line}, column {column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("{path}: field {field}: {msg}")]
    Field { path: String, field: String, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("phi(1, lambda) is numerically singular at lambda = {lambda} (smallest singular value {sigma_min:e})")]
    PoleProximity { lambda: Complex64, sigma_min: f64 },

    #[error("contour of radius {radius:e} around lambda = {center} passes too close to a pole; try a smaller radius ({cause})")]
    Contour {
        center: f64,
        radius: f64,
        cause: Box<Error>,
    },

    #[error("norming-constant extraction failed at lambda = {lambda}: eigenvalue {min_eig:e} is below -1e-6")]
    Extraction { lambda: f64, min_eig: f64 },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("not an accelerant: row system at x = {x} (row {row}) is singular or indefinite (pivot {pivot:e})")]
    NotAnAccelerant { x: f64, row: usize, pivot: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}
