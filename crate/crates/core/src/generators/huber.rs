//! Huber fitting: min Σ φ(aᵢᵀx − bᵢ), φ(t) = t² for |t| ≤ T, else T(2|t| − T).
//!
//! Split as Ax − b = u + r − w with r, w ≥ 0, giving
//! min uᵀu + 2T·1ᵀ(r + w) over (x, u, r, w).

use super::{round_count, GenRng, GeneratorError};
use crate::problem::{ConeSpec, ProblemData};
use crate::sparse::CsrMatrix;

pub const HUBER_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberOptions {
    /// Standard deviation of the Gaussian noise added to every observation.
    pub noise: f64,
    /// Probability of an observation being an outlier.
    pub outlier_fraction: f64,
    /// Outliers get an extra uniform perturbation in ±`outlier_scale`.
    pub outlier_scale: f64,
}

impl Default for HuberOptions {
    fn default() -> Self {
        Self { noise: 0.1, outlier_fraction: 0.1, outlier_scale: 10.0 }
    }
}

pub fn huber(n: usize, seed: u64) -> Result<ProblemData, GeneratorError> {
    huber_with(n, seed, &HuberOptions::default()).map(|(p, _)| p)
}

/// Also returns the x used to synthesize the observations.
pub fn huber_with(n: usize, seed: u64, opts: &HuberOptions) -> Result<(ProblemData, Vec<f64>), GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::InvalidSize("huber needs n >= 1".into()));
    }
    let m = round_count(1.5 * n as f64);
    let mut rng = GenRng::new(seed);
    let a: Vec<Vec<f64>> = (0..m).map(|_| rng.normals(n)).collect();
    let scale = 1.0 / (n as f64).sqrt();
    let x_true: Vec<f64> = (0..n).map(|_| rng.normal() * scale).collect();
    let b: Vec<f64> = a
        .iter()
        .map(|row| {
            let clean: f64 = row.iter().zip(&x_true).map(|(a, x)| a * x).sum();
            let noise = rng.normal() * opts.noise;
            let outlier = if rng.uniform() < opts.outlier_fraction {
                (2.0 * rng.uniform() - 1.0) * opts.outlier_scale
            } else {
                0.0
            };
            clean + noise + outlier
        })
        .collect();

    // variables: x (n) | u (m) | r (m) | w (m)
    let nv = n + 3 * m;
    let (u0, r0, w0) = (n, n + m, n + 2 * m);
    let mut t = Vec::with_capacity(m * (n + 3) + 2 * m);
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t.push((i, j, v));
        }
        t.push((i, u0 + i, -1.0));
        t.push((i, r0 + i, -1.0));
        t.push((i, w0 + i, 1.0));
    }
    for i in 0..m {
        t.push((m + i, r0 + i, -1.0));
        t.push((2 * m + i, w0 + i, -1.0));
    }
    let mut rhs = b;
    rhs.resize(3 * m, 0.0);

    let mut diag = vec![0.0; nv];
    diag[u0..r0].iter_mut().for_each(|v| *v = 2.0);
    let mut q = vec![0.0; nv];
    q[r0..].iter_mut().for_each(|v| *v = 2.0 * HUBER_THRESHOLD);

    let problem = ProblemData::new(
        CsrMatrix::from_diagonal(&diag),
        CsrMatrix::from_triplets(3 * m, nv, &t).expect("indices in range"),
        q,
        rhs,
        vec![ConeSpec::Zero(m), ConeSpec::Nonneg(2 * m)],
    )
    .expect("valid by construction");
    Ok((problem, x_true))
}
