//! Random interior points shared by the property suites.
#![allow(dead_code)]

use conic_core::cones::psd_svec;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Strictly positive vector.
pub fn nonneg_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2..3.0f64, d)
}

/// (t, u) with t > ‖u‖.
pub fn soc_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-2.0..2.0f64, d - 1), 0.1..2.0f64).prop_map(|(u, margin)| {
        let t = u.iter().map(|v| v * v).sum::<f64>().sqrt() + margin;
        std::iter::once(t).chain(u).collect()
    })
}

/// svec of BBᵀ + 0.2I.
pub fn psd_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |b| {
        let b = DMatrix::from_vec(n, n, b);
        psd_svec(&(&b * b.transpose() + DMatrix::identity(n, n) * 0.2))
    })
}

/// Interior of the dual exponential cone: u < 0, w > 0, v − u + u ln(−u/w) > 0.
pub fn exp_dual_point() -> impl Strategy<Value = Vec<f64>> {
    (-3.0..-0.2f64, 0.2..3.0f64, 0.1..2.0f64).prop_map(|(u, w, margin)| {
        let v = u - u * (-u / w).ln() + margin;
        vec![u, v, w]
    })
}

/// Interior of the primal exponential cone: y e^{x/y} < z, y > 0.
pub fn exp_primal_point() -> impl Strategy<Value = Vec<f64>> {
    (-2.0..2.0f64, 0.3..3.0f64, 0.1..2.0f64).prop_map(|(x, y, margin)| vec![x, y, y * (x / y).exp() * (1.0 + margin)])
}

/// Interior of the primal power cone x^α y^{1−α} > |z|.
pub fn pow_primal_point(alpha: f64) -> impl Strategy<Value = Vec<f64>> {
    (0.2..3.0f64, 0.2..3.0f64, -0.9..0.9f64)
        .prop_map(move |(x, y, r)| vec![x, y, r * x.powf(alpha) * y.powf(1.0 - alpha)])
}

/// Interior of the dual power cone (u/α)^α (v/(1−α))^{1−α} > |w|.
pub fn pow_dual_point(alpha: f64) -> impl Strategy<Value = Vec<f64>> {
    (0.2..3.0f64, 0.2..3.0f64, -0.9..0.9f64).prop_map(move |(u, v, r)| {
        let g = (u / alpha).powf(alpha) * (v / (1.0 - alpha)).powf(1.0 - alpha);
        vec![u, v, r * g]
    })
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
