//! max μᵀx − γxᵀΣx  s.t. 1ᵀx = 1, x ≥ 0,  Σ = FFᵀ + D.
//!
//! Lifted with y = Fᵀx so that P stays diagonal:
//! min γxᵀDx + γyᵀy − μᵀx over (x, y).

use super::{round_count, GenRng, GeneratorError};
use crate::problem::{ConeSpec, ProblemData};
use crate::sparse::CsrMatrix;
use nalgebra::DMatrix;

pub fn portfolio(n: usize, gamma: f64, seed: u64) -> Result<ProblemData, GeneratorError> {
    if n < 2 {
        return Err(GeneratorError::InvalidSize(format!("portfolio needs n >= 2, got {n}")));
    }
    let p = round_count(0.1 * n as f64).max(1);
    let mut rng = GenRng::new(seed);
    let mu = rng.normals(n);
    let f = DMatrix::from_fn(n, p, |_, _| rng.normal());
    let d: Vec<f64> = (0..n).map(|_| rng.uniform_open0() + 1e-3).collect();
    portfolio_from_factors(&mu, &f, &d, gamma)
}

/// Builds the lifted problem from explicit data; `f` is n×p and may have
/// zero columns.
pub fn portfolio_from_factors(
    mu: &[f64],
    f: &DMatrix<f64>,
    d: &[f64],
    gamma: f64,
) -> Result<ProblemData, GeneratorError> {
    let n = mu.len();
    let p = f.ncols();
    if f.nrows() != n || d.len() != n {
        return Err(GeneratorError::InvalidSize("factor data does not match μ".into()));
    }
    if !(gamma > 0.0) {
        return Err(GeneratorError::InvalidSize(format!("γ must be positive, got {gamma}")));
    }
    let diag: Vec<f64> = d.iter().map(|v| 2.0 * gamma * v).chain(std::iter::repeat_n(2.0 * gamma, p)).collect();

    let mut t = Vec::with_capacity(n * (p + 2) + p);
    // 1ᵀx = 1
    for j in 0..n {
        t.push((0, j, 1.0));
    }
    // Fᵀx − y = 0
    for i in 0..p {
        for j in 0..n {
            t.push((1 + i, j, f[(j, i)]));
        }
        t.push((1 + i, n + i, -1.0));
    }
    // x ≥ 0
    for j in 0..n {
        t.push((1 + p + j, j, -1.0));
    }
    let mut b = vec![0.0; 1 + p + n];
    b[0] = 1.0;
    let mut q: Vec<f64> = mu.iter().map(|v| -v).collect();
    q.resize(n + p, 0.0);

    let mut cones = vec![ConeSpec::Zero(1 + p)];
    cones.push(ConeSpec::Nonneg(n));
    let a = CsrMatrix::from_triplets(1 + p + n, n + p, &t).expect("indices in range");
    Ok(ProblemData::new(CsrMatrix::from_diagonal(&diag), a, q, b, cones).expect("valid by construction"))
}
