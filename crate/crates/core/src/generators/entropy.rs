//! max −Σ xᵢ log xᵢ  s.t. 1ᵀx = 1, Ax ≤ b,
//! as min −1ᵀt over (t, x) with (tᵢ, xᵢ, 1) ∈ K_exp.

use super::{round_count, GenRng, GeneratorError};
use crate::problem::{ConeSpec, ProblemData};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyOptions {
    /// Include the random `Ax ≤ b` rows.
    pub inequalities: bool,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { inequalities: true }
    }
}

pub fn entropy(n: usize, seed: u64) -> Result<ProblemData, GeneratorError> {
    entropy_with(n, seed, &EntropyOptions::default()).map(|(p, _)| p)
}

/// Also returns the feasible distribution v/1ᵀv used to build b.
pub fn entropy_with(n: usize, seed: u64, opts: &EntropyOptions) -> Result<(ProblemData, Vec<f64>), GeneratorError> {
    if n < 2 {
        return Err(GeneratorError::InvalidSize(format!("entropy needs n >= 2, got {n}")));
    }
    let m = if opts.inequalities { round_count(0.5 * n as f64) } else { 0 };
    let mut rng = GenRng::new(seed);
    let sd = (n as f64).sqrt();
    let a: Vec<Vec<f64>> = (0..m).map(|_| rng.normals(n).into_iter().map(|v| v * sd).collect()).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let total: f64 = v.iter().sum();
    let feasible: Vec<f64> = v.iter().map(|x| x / total).collect();
    let b_ineq: Vec<f64> = a.iter().map(|row| row.iter().zip(&feasible).map(|(a, x)| a * x).sum()).collect();

    // variables: t (n) | x (n); rows: simplex, Ax ≤ b, then n exp cones
    let mut t = Vec::new();
    for j in 0..n {
        t.push((0, n + j, 1.0));
    }
    for (i, row) in a.iter().enumerate() {
        for (j, &val) in row.iter().enumerate() {
            t.push((1 + i, n + j, val));
        }
    }
    let mut b = vec![1.0];
    b.extend(&b_ineq);
    for j in 0..n {
        let r = 1 + m + 3 * j;
        t.push((r, j, -1.0));
        t.push((r + 1, n + j, -1.0));
        b.extend([0.0, 0.0, 1.0]);
    }
    let mut cones = vec![ConeSpec::Zero(1)];
    if m > 0 {
        cones.push(ConeSpec::Nonneg(m));
    }
    cones.extend(std::iter::repeat_n(ConeSpec::Exponential, n));
    let mut q = vec![-1.0; n];
    q.resize(2 * n, 0.0);

    let problem = ProblemData::new(
        CsrMatrix::zeros(2 * n, 2 * n),
        CsrMatrix::from_triplets(1 + m + 3 * n, 2 * n, &t).expect("indices in range"),
        q,
        b,
        cones,
    )
    .expect("valid by construction");
    Ok((problem, feasible))
}
