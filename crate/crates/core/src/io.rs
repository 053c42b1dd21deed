//! JSON forms of dense matrices, vectors and model-space summaries.
//!
//! Matrices are arrays of rows, entries are `[re, im]` pairs. `f64` values
//! round-trip exactly through `serde_json`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{AnalyticPoly, ContractivityReport};
use crate::linalg::{CMat, CVec};
use crate::modelspace::{ModelSpace, SpaceDiagnostics};

pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_rows(m: &CMat) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &MatrixRows) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::Dimension { expected: ncols, got: bad.len() });
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn vector_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_pairs(p: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(p.len(), p.iter().map(|z| Complex64::new(z[0], z[1])))
}

/// Serializable description of a built model space.
#[derive(Clone, Debug, Serialize)]
pub struct SpaceSummary {
    pub u: AnalyticPoly,
    pub order: usize,
    pub deg_u: usize,
    pub dim: usize,
    pub interior_dim: usize,
    pub k_norm_sqr: f64,
    pub contractivity: ContractivityReport,
    pub diagnostics: SpaceDiagnostics,
}

pub fn space_summary(space: &ModelSpace) -> SpaceSummary {
    SpaceSummary {
        u: space.u().clone(),
        order: space.order(),
        deg_u: space.deg_u(),
        dim: space.dim(),
        interior_dim: space.interior().ncols(),
        k_norm_sqr: space.k_norm_sqr(),
        contractivity: space.contractivity().clone(),
        diagnostics: space.diagnostics().clone(),
    }
}

/// Writes pretty-printed JSON.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
