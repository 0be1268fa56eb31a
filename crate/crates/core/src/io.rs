//! Lattice files: `{ "n": 3, "columns": [[...], [...], [...]] }`, one entry
//! per basis vector.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::lattice::GeneratorBasis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub n: usize,
    pub columns: Vec<Vec<f64>>,
}

impl LatticeSpec {
    pub fn from_basis(basis: &GeneratorBasis) -> Self {
        Self {
            n: basis.dim(),
            columns: basis.columns(),
        }
    }

    pub fn to_basis(&self) -> Result<GeneratorBasis> {
        if self.columns.len() != self.n {
            return Err(LatticeError::DimensionMismatch {
                expected: self.n,
                got: self.columns.len(),
            });
        }
        if let Some(c) = self.columns.iter().find(|c| c.len() != self.n) {
            return Err(LatticeError::DimensionMismatch {
                expected: self.n,
                got: c.len(),
            });
        }
        GeneratorBasis::from_columns(&self.columns)
    }
}

pub fn parse_lattice(text: &str) -> Result<GeneratorBasis> {
    let spec: LatticeSpec = serde_json::from_str(text)
        .map_err(|e| LatticeError::InvalidArgument(format!("malformed lattice JSON: {e}")))?;
    spec.to_basis()
}

pub fn read_lattice(path: &Path) -> Result<GeneratorBasis> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LatticeError::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_lattice(&text)
}
