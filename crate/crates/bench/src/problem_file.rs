//! JSON problem files.
//!
//! ```json
//! {"n": 2, "m": 3,
//!  "P": {"rowptr": [0, 1, 2], "colidx": [0, 1], "values": [1.0, 1.0]},
//!  "A": {...}, "q": [...], "b": [...],
//!  "cones": [{"type": "zero", "dim": 1}, {"type": "pow", "dim": 3, "alpha": 0.3}],
//!  "meta": {"name": "demo", "seed": 7}}
//! ```
//!
//! `dim` is always the number of rows a cone occupies, so for `psd` it is
//! n(n+1)/2. Floats are written in shortest round-trip form.

use conic_core::sparse::SparseError;
use conic_core::{ConeSpec, CsrMatrix, ProblemData, ValidationError};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Warn above this many stored nonzeros; JSON gets unwieldy.
pub const NNZ_WARNING: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("{field}: {source}")]
    Matrix { field: &'static str, source: SparseError },
    #[error("cones[{index}]: {reason}")]
    Cone { index: usize, reason: String },
    #[error("{0}")]
    Invalid(#[from] ValidationError),
    #[error("declared {field} = {declared} but data has {actual}")]
    SizeMismatch { field: &'static str, declared: usize, actual: usize },
}

impl From<serde_json::Error> for ProblemFileError {
    fn from(e: serde_json::Error) -> Self {
        ProblemFileError::Json { line: e.line(), column: e.column(), msg: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsrJson {
    pub rowptr: Vec<usize>,
    pub colidx: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeType {
    Zero,
    Nonneg,
    Soc,
    Exp,
    Pow,
    Psd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeJson {
    #[serde(rename = "type")]
    pub kind: ConeType,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "P")]
    pub p: CsrJson,
    #[serde(rename = "A")]
    pub a: CsrJson,
    pub q: Vec<f64>,
    pub b: Vec<f64>,
    pub cones: Vec<ConeJson>,
    #[serde(default)]
    pub meta: Meta,
}

fn csr_json(m: &CsrMatrix) -> CsrJson {
    CsrJson { rowptr: m.rowptr().to_vec(), colidx: m.colidx().to_vec(), values: m.values().to_vec() }
}

fn cone_json(c: &ConeSpec) -> ConeJson {
    let (kind, alpha) = match *c {
        ConeSpec::Zero(_) => (ConeType::Zero, None),
        ConeSpec::Nonneg(_) => (ConeType::Nonneg, None),
        ConeSpec::SecondOrder(_) => (ConeType::Soc, None),
        ConeSpec::Exponential => (ConeType::Exp, None),
        ConeSpec::Power(a) => (ConeType::Pow, Some(a)),
        ConeSpec::PsdTriangle(_) => (ConeType::Psd, None),
    };
    ConeJson { kind, dim: c.dim(), alpha }
}

/// Side n with n(n+1)/2 = dim.
fn psd_side(dim: usize) -> Option<usize> {
    let n = (((8 * dim + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (n..=n + 1).find(|k| k * (k + 1) / 2 == dim && *k > 0)
}

fn cone_spec(index: usize, c: &ConeJson) -> Result<ConeSpec, ProblemFileError> {
    let bad = |reason: String| ProblemFileError::Cone { index, reason };
    if c.alpha.is_some() && c.kind != ConeType::Pow {
        return Err(bad("alpha is only allowed on pow cones".into()));
    }
    let fixed3 = |spec: ConeSpec| {
        if c.dim == 3 {
            Ok(spec)
        } else {
            Err(bad(format!("dim must be 3, got {}", c.dim)))
        }
    };
    match c.kind {
        ConeType::Zero => Ok(ConeSpec::Zero(c.dim)),
        ConeType::Nonneg => Ok(ConeSpec::Nonneg(c.dim)),
        ConeType::Soc => Ok(ConeSpec::SecondOrder(c.dim)),
        ConeType::Exp => fixed3(ConeSpec::Exponential),
        ConeType::Pow => {
            let a = c.alpha.ok_or_else(|| bad("pow cone needs alpha".into()))?;
            fixed3(ConeSpec::Power(a))
        }
        ConeType::Psd => psd_side(c.dim)
            .map(ConeSpec::PsdTriangle)
            .ok_or_else(|| bad(format!("dim {} is not a triangular number", c.dim))),
    }
}

impl ProblemFile {
    pub fn from_problem(p: &ProblemData, meta: Meta) -> Self {
        Self {
            n: p.n(),
            m: p.m(),
            p: csr_json(&p.p),
            a: csr_json(&p.a),
            q: p.q.clone(),
            b: p.b.clone(),
            cones: p.cones.iter().map(cone_json).collect(),
            meta,
        }
    }

    /// Builds and validates the problem.
    pub fn to_problem(&self) -> Result<ProblemData, ProblemFileError> {
        let size = |field, declared, actual| {
            if declared == actual {
                Ok(())
            } else {
                Err(ProblemFileError::SizeMismatch { field, declared, actual })
            }
        };
        size("n", self.n, self.q.len())?;
        size("m", self.m, self.b.len())?;
        let mat = |field, rows, cols, c: &CsrJson| {
            CsrMatrix::new(rows, cols, c.rowptr.clone(), c.colidx.clone(), c.values.clone())
                .map_err(|source| ProblemFileError::Matrix { field, source })
        };
        let p = mat("P", self.n, self.n, &self.p)?;
        let a = mat("A", self.m, self.n, &self.a)?;
        let cones = self.cones.iter().enumerate().map(|(i, c)| cone_spec(i, c)).collect::<Result<Vec<_>, _>>()?;
        Ok(ProblemData::new(p, a, self.q.clone(), self.b.clone(), cones)?)
    }

    pub fn nnz(&self) -> usize {
        self.p.values.len() + self.a.values.len()
    }

    pub fn parse(text: &str) -> Result<Self, ProblemFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("problem files always serialize")
    }

    pub fn read(path: &Path) -> Result<Self, ProblemFileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ProblemFileError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), ProblemFileError> {
        std::fs::write(path, self.to_json())
            .map_err(|source| ProblemFileError::Io { path: path.display().to_string(), source })
    }
}

/// Reads and validates a problem file in one go.
pub fn load_problem(path: &Path) -> Result<(ProblemData, Meta), ProblemFileError> {
    let f = ProblemFile::read(path)?;
    if f.nnz() > NNZ_WARNING {
        eprintln!("warning: {} has {} nonzeros; JSON input will be slow", path.display(), f.nnz());
    }
    Ok((f.to_problem()?, f.meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_sides() {
        assert_eq!(psd_side(1), Some(1));
        assert_eq!(psd_side(6), Some(3));
        assert_eq!(psd_side(528), Some(32));
        assert_eq!(psd_side(5), None);
        assert_eq!(psd_side(0), None);
    }

    #[test]
    fn pow_requires_alpha() {
        let c = ConeJson { kind: ConeType::Pow, dim: 3, alpha: None };
        assert!(matches!(cone_spec(4, &c), Err(ProblemFileError::Cone { index: 4, .. })));
    }

    #[test]
    fn json_errors_carry_position() {
        let e = ProblemFile::parse("{\n  \"n\": 1,\n  \"m\": oops }").unwrap_err();
        assert!(matches!(e, ProblemFileError::Json { line: 3, .. }), "{e}");
    }
}
