//! Canonical problem representation:
//!
//! ```text
//! minimize    ½ xᵀPx + qᵀx
//! subject to  Ax + s = b,  s ∈ K
//! ```
//!
//! where K is a product of the atomic cones in [`ConeSpec`].

use crate::sparse::CsrMatrix;
use thiserror::Error;

/// Largest supported PSD side length.
pub const MAX_PSD_SIDE: usize = 32;

/// One atomic cone in the product K.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeSpec {
    Zero(usize),
    Nonneg(usize),
    SecondOrder(usize),
    Exponential,
    /// Power cone with exponent α ∈ (0, 1).
    Power(f64),
    /// PSD cone of side n in scaled lower-triangle storage, dim n(n+1)/2.
    PsdTriangle(usize),
}

/// Cone families in the order the solver groups them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConeFamily {
    Zero,
    Nonneg,
    SecondOrder,
    Exponential,
    Power,
    Psd,
}

impl ConeSpec {
    pub fn dim(&self) -> usize {
        match *self {
            ConeSpec::Zero(d) | ConeSpec::Nonneg(d) | ConeSpec::SecondOrder(d) => d,
            ConeSpec::Exponential | ConeSpec::Power(_) => 3,
            ConeSpec::PsdTriangle(n) => n * (n + 1) / 2,
        }
    }

    pub fn family(&self) -> ConeFamily {
        match self {
            ConeSpec::Zero(_) => ConeFamily::Zero,
            ConeSpec::Nonneg(_) => ConeFamily::Nonneg,
            ConeSpec::SecondOrder(_) => ConeFamily::SecondOrder,
            ConeSpec::Exponential => ConeFamily::Exponential,
            ConeSpec::Power(_) => ConeFamily::Power,
            ConeSpec::PsdTriangle(_) => ConeFamily::Psd,
        }
    }

    /// Barrier degree of the cone.
    pub fn degree(&self) -> usize {
        match *self {
            ConeSpec::Zero(_) => 0,
            ConeSpec::Nonneg(d) => d,
            ConeSpec::SecondOrder(_) => 1,
            ConeSpec::Exponential | ConeSpec::Power(_) => 3,
            ConeSpec::PsdTriangle(n) => n,
        }
    }

    fn check(&self) -> Result<(), String> {
        match *self {
            ConeSpec::Zero(0) | ConeSpec::Nonneg(0) => Err("dimension must be positive".into()),
            ConeSpec::SecondOrder(d) if d < 2 => Err(format!("second-order cone needs dim >= 2, got {d}")),
            ConeSpec::Power(a) if !(a > 0.0 && a < 1.0) => {
                Err(format!("power cone exponent must lie in (0, 1), got {a}"))
            }
            ConeSpec::PsdTriangle(n) if n == 0 || n > MAX_PSD_SIDE => {
                Err(format!("PSD side must be in 1..={MAX_PSD_SIDE}, got {n}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("P is not symmetric at ({row}, {col})")]
    NonSymmetricP { row: usize, col: usize },
    #[error("cone {index}: {reason}")]
    BadConeSpec { index: usize, reason: String },
    #[error("non-finite value in {0}")]
    NonFiniteData(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    /// Symmetric n×n, both triangles stored.
    pub p: CsrMatrix,
    pub a: CsrMatrix,
    pub q: Vec<f64>,
    pub b: Vec<f64>,
    pub cones: Vec<ConeSpec>,
}

impl ProblemData {
    /// Builds and validates a problem.
    pub fn new(
        p: CsrMatrix,
        a: CsrMatrix,
        q: Vec<f64>,
        b: Vec<f64>,
        cones: Vec<ConeSpec>,
    ) -> Result<Self, ValidationError> {
        let problem = Self { p, a, q, b, cones };
        problem.validate()?;
        Ok(problem)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Checks every invariant, reporting the first violation found.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let n = self.q.len();
        let m = self.b.len();
        if self.p.nrows() != n || self.p.ncols() != n {
            return Err(ValidationError::DimensionMismatch(format!(
                "P is {}x{} but q has length {n}",
                self.p.nrows(),
                self.p.ncols()
            )));
        }
        if self.a.nrows() != m || self.a.ncols() != n {
            return Err(ValidationError::DimensionMismatch(format!(
                "A is {}x{} but expected {m}x{n}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if m == 0 {
            return Err(ValidationError::DimensionMismatch(
                "problem needs at least one constraint row".into(),
            ));
        }
        for (index, cone) in self.cones.iter().enumerate() {
            cone.check()
                .map_err(|reason| ValidationError::BadConeSpec { index, reason })?;
        }
        let total: usize = self.cones.iter().map(ConeSpec::dim).sum();
        if total != m {
            return Err(ValidationError::DimensionMismatch(format!(
                "cones have total dimension {total} but A has {m} rows"
            )));
        }
        if !self.p.all_finite() {
            return Err(ValidationError::NonFiniteData("P"));
        }
        if !self.a.all_finite() {
            return Err(ValidationError::NonFiniteData("A"));
        }
        if !self.q.iter().all(|v| v.is_finite()) {
            return Err(ValidationError::NonFiniteData("q"));
        }
        if !self.b.iter().all(|v| v.is_finite()) {
            return Err(ValidationError::NonFiniteData("b"));
        }
        if let Some((row, col)) = self.p.first_asymmetry() {
            return Err(ValidationError::NonSymmetricP { row, col });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ProblemData {
        ProblemData {
            p: CsrMatrix::zeros(1, 1),
            a: CsrMatrix::identity(1),
            q: vec![0.0],
            b: vec![0.0],
            cones: vec![ConeSpec::Zero(1)],
        }
    }

    #[test]
    fn minimal_problem_is_valid() {
        assert_eq!(minimal().validate(), Ok(()));
    }

    #[test]
    fn power_exponent_boundary_rejected() {
        let mut p = minimal();
        p.a = CsrMatrix::zeros(3, 1);
        p.b = vec![0.0; 3];
        p.cones = vec![ConeSpec::Power(1.0)];
        assert!(matches!(p.validate(), Err(ValidationError::BadConeSpec { index: 0, .. })));
    }

    #[test]
    fn cone_dimension_mismatch() {
        let mut p = minimal();
        p.a = CsrMatrix::from_dense(&[vec![1.0], vec![1.0]]);
        p.b = vec![0.0; 2];
        p.cones = vec![ConeSpec::Nonneg(3)];
        assert!(matches!(p.validate(), Err(ValidationError::DimensionMismatch(_))));
    }

    #[test]
    fn psd_side_limit() {
        let mut p = minimal();
        let dim = 33 * 34 / 2;
        p.a = CsrMatrix::zeros(dim, 1);
        p.b = vec![0.0; dim];
        p.cones = vec![ConeSpec::PsdTriangle(33)];
        assert!(matches!(p.validate(), Err(ValidationError::BadConeSpec { .. })));
    }

    #[test]
    fn asymmetric_p_rejected() {
        let mut p = minimal();
        p.p = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        p.q = vec![0.0; 2];
        p.a = CsrMatrix::from_dense(&[vec![1.0, 0.0]]);
        assert_eq!(p.validate(), Err(ValidationError::NonSymmetricP { row: 0, col: 1 }));
    }

    #[test]
    fn nonfinite_rejected() {
        let mut p = minimal();
        p.q = vec![f64::NAN];
        assert_eq!(p.validate(), Err(ValidationError::NonFiniteData("q")));
    }

    #[test]
    fn degrees() {
        assert_eq!(ConeSpec::Zero(4).degree(), 0);
        assert_eq!(ConeSpec::PsdTriangle(3).dim(), 6);
        assert_eq!(ConeSpec::PsdTriangle(3).degree(), 3);
    }
}
