//! JSON file formats for grid functions and spectral data.
//!
//! Complex numbers are always written as two-element arrays `[re, im]`; matrices are
//! arrays of rows. Floats go through `serde_json`'s shortest round-trip formatting, so
//! a save/load cycle reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MatrixGrid};
use crate::linalg::{CMat, C64};
use crate::spectral::{SpectralData, SpectralEntry};

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
struct RawGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    r: usize,
    m: usize,
    hermitian: bool,
    values: Vec<RawMatrix>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEntry {
    lambda: f64,
    alpha: RawMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSpectral {
    r: usize,
    includes_zero: bool,
    entries: Vec<RawEntry>,
}

pub fn matrix_to_raw(a: &CMat) -> RawMatrixOut {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

/// Row-major `[[[re, im], ...], ...]` form of a matrix.
pub type RawMatrixOut = Vec<Vec<[f64; 2]>>;

fn raw_to_matrix(raw: &RawMatrix, r: usize, origin: &str, field: &str) -> Result<CMat> {
    let err = |msg: String| Error::Field {
        path: origin.to_string(),
        field: field.to_string(),
        msg,
    };
    if raw.len() != r {
        return Err(err(format!("expected {r} rows, found {}", raw.len())));
    }
    let mut a = CMat::zeros(r, r);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != r {
            return Err(err(format!("row {i} has {} entries, expected {r}", row.len())));
        }
        for (j, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(err(format!("entry [{i}][{j}] is not finite")));
            }
            a[(i, j)] = C64::new(z[0], z[1]);
        }
    }
    Ok(a)
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn grid_to_raw(g: &MatrixGrid, kind: Option<&str>) -> RawGrid {
    RawGrid {
        kind: kind.map(str::to_string),
        r: g.r(),
        m: g.spec().m(),
        hermitian: g.is_hermitian(),
        values: g.values().iter().map(matrix_to_raw).collect(),
    }
}

/// Serialize a grid function; `kind` adds a metadata tag (e.g. `potential_primitive`).
pub fn matrix_grid_to_string(g: &MatrixGrid, kind: Option<&str>) -> String {
    serde_json::to_string(&grid_to_raw(g, kind)).expect("grid serialization cannot fail")
}

/// Parse a grid function and return it with its optional `kind` tag.
pub fn matrix_grid_from_str(text: &str, origin: &str) -> Result<(MatrixGrid, Option<String>)> {
    let raw: RawGrid = parse_json(text, origin)?;
    let spec = GridSpec::new(raw.m).map_err(|e| Error::Field {
        path: origin.to_string(),
        field: "m".into(),
        msg: e.to_string(),
    })?;
    if raw.values.len() != spec.len() {
        return Err(Error::Field {
            path: origin.to_string(),
            field: "values".into(),
            msg: format!("expected m + 1 = {} matrices, found {}", spec.len(), raw.values.len()),
        });
    }
    let values = raw
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| raw_to_matrix(v, raw.r, origin, &format!("values[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let grid = if raw.hermitian {
        MatrixGrid::hermitian(spec, values)?
    } else {
        MatrixGrid::new(spec, values)?
    };
    Ok((grid, raw.kind))
}

pub fn save_matrix_grid(path: &Path, g: &MatrixGrid) -> Result<()> {
    write(path, &matrix_grid_to_string(g, None))
}

pub fn save_tagged_matrix_grid(path: &Path, g: &MatrixGrid, kind: &str) -> Result<()> {
    write(path, &matrix_grid_to_string(g, Some(kind)))
}

pub fn load_matrix_grid(path: &Path) -> Result<MatrixGrid> {
    Ok(load_tagged_matrix_grid(path)?.0)
}

pub fn load_tagged_matrix_grid(path: &Path) -> Result<(MatrixGrid, Option<String>)> {
    let text = read(path)?;
    matrix_grid_from_str(&text, &path.display().to_string())
}

pub fn spectral_data_to_string(d: &SpectralData) -> String {
    let raw = RawSpectral {
        r: d.r(),
        includes_zero: d.includes_zero(),
        entries: d
            .entries()
            .iter()
            .map(|e| RawEntry {
                lambda: e.lambda,
                alpha: matrix_to_raw(&e.alpha),
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("spectral data serialization cannot fail")
}

pub fn spectral_data_from_str(text: &str, origin: &str) -> Result<SpectralData> {
    let raw: RawSpectral = parse_json(text, origin)?;
    let entries = raw
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            Ok(SpectralEntry::new(
                e.lambda,
                raw_to_matrix(&e.alpha, raw.r, origin, &format!("entries[{i}].alpha"))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralData::new(raw.r, raw.includes_zero, entries)
}

pub fn save_spectral_data(path: &Path, d: &SpectralData) -> Result<()> {
    write(path, &spectral_data_to_string(d))
}

pub fn load_spectral_data(path: &Path) -> Result<SpectralData> {
    let text = read(path)?;
    spectral_data_from_str(&text, &path.display().to_string())
}
