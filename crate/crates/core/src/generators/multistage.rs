//! Multistage portfolio SOCP over T periods with n assets and k factors:
//!
//! ```text
//! min  Σₜ −μₜᵀxₜ + c·1ᵀzₜ + γ·rₜ
//! s.t. zₜ ≥ ±(xₜ − xₜ₋₁)
//!      1ᵀx₁ = d + 1ᵀx₀,   1ᵀxₜ = 1ᵀxₜ₋₁
//!      yₜ = Fₜxₜ
//!      (rₜ, Uyₜ, D_sqrt ⊙ xₜ) ∈ K_q^{n+k+1}
//!      xₜ ∈ [0, 0.1]ⁿ, yₜ ∈ [0, 0.1]ᵏ, rₜ ≥ 0
//! ```
//!
//! Fixed constants: c = 1e-3, γ = 1, d = 1; x₀ is uniform on the simplex.
//! Fₜ is Gaussian with each row shifted so that the uniform allocation
//! gives yₜ = 0.05, which keeps every instance with n > 20 strictly
//! feasible.

use super::{GenRng, GeneratorError};
use crate::problem::{ConeSpec, ProblemData};
use crate::sparse::CsrMatrix;
use nalgebra::DMatrix;
use std::ops::Range;

/// Upper bound of the x and y boxes.
pub const MULTISTAGE_BOX: f64 = 0.1;
const COST: f64 = 1e-3;
const GAMMA: f64 = 1.0;
const INFLOW: f64 = 1.0;

/// Variable layout: each period stores x (n), y (k), z (n), r (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultistageLayout {
    pub n: usize,
    pub k: usize,
    pub t: usize,
}

impl MultistageLayout {
    fn stride(&self) -> usize {
        2 * self.n + self.k + 1
    }

    pub fn num_vars(&self) -> usize {
        self.t * self.stride()
    }

    /// Period index `p` is zero-based.
    pub fn x(&self, p: usize) -> Range<usize> {
        let o = p * self.stride();
        o..o + self.n
    }

    pub fn y(&self, p: usize) -> Range<usize> {
        let o = p * self.stride() + self.n;
        o..o + self.k
    }

    pub fn z(&self, p: usize) -> Range<usize> {
        let o = p * self.stride() + self.n + self.k;
        o..o + self.n
    }

    pub fn r(&self, p: usize) -> usize {
        p * self.stride() + 2 * self.n + self.k
    }
}

/// Constraint rows of the instance: per period 2n (trades) + 1 (budget)
/// + k (factors) + (n + k + 1) (risk cone) + 2n + 2k + 1 (boxes).
pub fn multistage_row_count(n: usize, k: usize, t: usize) -> usize {
    t * (2 * n + 1 + k + (n + k + 1) + (2 * n + 2 * k + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistageInstance {
    pub problem: ProblemData,
    pub layout: MultistageLayout,
    pub x0: Vec<f64>,
}

pub fn multistage_portfolio(n: usize, k: usize, t: usize, seed: u64) -> Result<ProblemData, GeneratorError> {
    multistage_instance(n, k, t, seed).map(|i| i.problem)
}

pub fn multistage_instance(n: usize, k: usize, t: usize, seed: u64) -> Result<MultistageInstance, GeneratorError> {
    if k == 0 || n < k || t == 0 {
        return Err(GeneratorError::InvalidSize(format!("need n >= k >= 1 and T >= 1, got n={n}, k={k}, T={t}")));
    }
    let required = INFLOW + 1.0;
    let capacity = MULTISTAGE_BOX * n as f64;
    if capacity < required {
        return Err(GeneratorError::InfeasibleBoxBudget { required, capacity });
    }

    let mut rng = GenRng::new(seed);
    let e: Vec<f64> = (0..n).map(|_| -rng.uniform_open0().ln()).collect();
    let total: f64 = e.iter().sum();
    let x0: Vec<f64> = e.iter().map(|v| v / total).collect();

    let g = DMatrix::from_fn(k, k, |_, _| rng.normal());
    let cov = &g * g.transpose() / k as f64 + DMatrix::identity(k, k) * 0.1;
    let u = cov.cholesky().expect("shifted Gram matrix is positive definite").l().transpose();
    let d_sqrt: Vec<f64> = (0..n).map(|_| (0.01 * rng.uniform_open0() + 1e-4).sqrt()).collect();

    let sigma = 1.0 / (n as f64).sqrt();
    let mut factors = Vec::with_capacity(t);
    let mut mus = Vec::with_capacity(t);
    for _ in 0..t {
        let mut f = DMatrix::from_fn(k, n, |_, _| sigma * rng.normal());
        for mut row in f.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(0.025 - mean);
        }
        factors.push(f);
        mus.push(rng.normals(n).into_iter().map(|v| 0.05 * v).collect::<Vec<_>>());
    }

    let lay = MultistageLayout { n, k, t };
    let nv = lay.num_vars();
    let mut q = vec![0.0; nv];
    for p in 0..t {
        for (j, i) in lay.x(p).enumerate() {
            q[i] = -mus[p][j];
        }
        lay.z(p).for_each(|i| q[i] = COST);
        q[lay.r(p)] = GAMMA;
    }

    let mut trip = Vec::new();
    let mut b = Vec::new();
    let mut row = 0;

    // zero cone: budgets, then factor rows
    for p in 0..t {
        for i in lay.x(p) {
            trip.push((row, i, 1.0));
        }
        if p == 0 {
            b.push(INFLOW + x0.iter().sum::<f64>());
        } else {
            for i in lay.x(p - 1) {
                trip.push((row, i, -1.0));
            }
            b.push(0.0);
        }
        row += 1;
    }
    for (p, f) in factors.iter().enumerate() {
        for (r, yi) in lay.y(p).enumerate() {
            for (j, xi) in lay.x(p).enumerate() {
                trip.push((row, xi, -f[(r, j)]));
            }
            trip.push((row, yi, 1.0));
            b.push(0.0);
            row += 1;
        }
    }
    let zero_rows = row;

    // nonnegative: trade bounds z ∓ (xₜ − xₜ₋₁) ≥ 0, then boxes
    for p in 0..t {
        for sign in [1.0, -1.0] {
            for j in 0..n {
                let (xi, zi) = (lay.x(p).start + j, lay.z(p).start + j);
                // s = z − sign·(xₜ − xₜ₋₁)
                trip.push((row, zi, -1.0));
                trip.push((row, xi, sign));
                if p == 0 {
                    b.push(sign * x0[j]);
                } else {
                    trip.push((row, lay.x(p - 1).start + j, -sign));
                    b.push(0.0);
                }
                row += 1;
            }
        }
    }
    for p in 0..t {
        for i in lay.x(p).chain(lay.y(p)) {
            trip.push((row, i, -1.0));
            b.push(0.0);
            trip.push((row + 1, i, 1.0));
            b.push(MULTISTAGE_BOX);
            row += 2;
        }
        trip.push((row, lay.r(p), -1.0));
        b.push(0.0);
        row += 1;
    }
    let nonneg_rows = row - zero_rows;

    // risk cones
    for p in 0..t {
        trip.push((row, lay.r(p), -1.0));
        b.push(0.0);
        row += 1;
        for r in 0..k {
            for (c, yi) in lay.y(p).enumerate() {
                if c >= r {
                    trip.push((row, yi, -u[(r, c)]));
                }
            }
            b.push(0.0);
            row += 1;
        }
        for (j, xi) in lay.x(p).enumerate() {
            trip.push((row, xi, -d_sqrt[j]));
            b.push(0.0);
            row += 1;
        }
    }

    let mut cones = vec![ConeSpec::Zero(zero_rows), ConeSpec::Nonneg(nonneg_rows)];
    cones.extend(std::iter::repeat_n(ConeSpec::SecondOrder(n + k + 1), t));
    debug_assert_eq!(row, multistage_row_count(n, k, t));

    let problem = ProblemData::new(
        CsrMatrix::zeros(nv, nv),
        CsrMatrix::from_triplets(row, nv, &trip).expect("indices in range"),
        q,
        b,
        cones,
    )
    .expect("valid by construction");
    Ok(MultistageInstance { problem, layout: lay, x0 })
}
