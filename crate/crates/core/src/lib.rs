//! Direct and inverse spectral problems for matrix Sturm–Liouville operators on [0, 1]
//! with potentials written through a quasi-derivative `f' − τf`.

pub mod accelerant;
pub mod direct;
pub mod error;
pub mod grid;
pub mod io;
pub mod krein;
pub mod linalg;
pub mod miura;
pub mod pipeline;
pub mod spectral;
pub mod synth;
pub mod validation;

pub use error::{Error, Result};
pub use grid::{GridSpec, MatrixGrid, SquareKernel, TriangularKernel};
pub use spectral::{BoundaryValues, SpectralData, SpectralEntry};
