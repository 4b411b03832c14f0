//! Second-order cone `{(t, u) : t ≥ ‖u‖}` with barrier −½·log(t² − ‖u‖²).

use crate::sparse::dot;
use nalgebra::DMatrix;

/// xᵀJy with J = diag(1, −1, …, −1).
pub(crate) fn jdot(x: &[f64], y: &[f64]) -> f64 {
    x[0] * y[0] - dot(&x[1..], &y[1..])
}

fn jvec(x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().map(|v| -v).collect();
    out[0] = x[0];
    out
}

pub(crate) fn barrier(z: &[f64]) -> f64 {
    -0.5 * jdot(z, z).ln()
}

pub(crate) fn gradient(z: &[f64], out: &mut [f64]) {
    let d = jdot(z, z);
    out[0] = -z[0] / d;
    for i in 1..z.len() {
        out[i] = z[i] / d;
    }
}

pub(crate) fn hessian(z: &[f64]) -> DMatrix<f64> {
    let d = jdot(z, z);
    let g = jvec(z);
    let k = z.len();
    DMatrix::from_fn(k, k, |i, j| {
        let jij = match (i, j) {
            (0, 0) => 1.0,
            _ if i == j => -1.0,
            _ => 0.0,
        };
        2.0 * g[i] * g[j] / (d * d) - jij / d
    })
}

/// ∇³f(z)[u, v].
pub(crate) fn third_order(z: &[f64], u: &[f64], v: &[f64], out: &mut [f64]) {
    let d = jdot(z, z);
    let g = jvec(z);
    let ju = jvec(u);
    let jv = jvec(v);
    let gu = dot(&g, u);
    let gv = dot(&g, v);
    let ujv = jdot(u, v);
    let d2 = d * d;
    for i in 0..z.len() {
        out[i] = 2.0 * (jv[i] * gu + ju[i] * gv + g[i] * ujv) / d2 - 8.0 * g[i] * gu * gv / (d2 * d);
    }
}

pub(crate) fn in_cone(v: &[f64], strict: bool) -> bool {
    let norm = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if strict {
        v[0] > norm && jdot(v, v) > 0.0
    } else {
        v[0] >= norm
    }
}

/// Smallest positive α where `z + α·dz` reaches the boundary.
pub(crate) fn step_bound(z: &[f64], dz: &[f64]) -> f64 {
    let a = jdot(dz, dz);
    let b = 2.0 * jdot(z, dz);
    let c = jdot(z, z).max(0.0);
    let mut alpha = f64::INFINITY;
    // The leading coordinate must stay positive too.
    if dz[0] < 0.0 {
        alpha = -z[0] / dz[0];
    }
    if a == 0.0 {
        if b < 0.0 {
            alpha = alpha.min(-c / b);
        }
        return alpha;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || (a > 0.0 && b > 0.0) {
        return alpha;
    }
    let t = -0.5 * (b + b.signum() * disc.sqrt());
    for r in [c / t, t / a] {
        if r > 0.0 && r.is_finite() {
            alpha = alpha.min(r);
        }
    }
    alpha
}

/// ν / ⟨∇f*(s), ∇f(z)⟩.
pub(crate) fn centrality(s: &[f64], z: &[f64]) -> f64 {
    jdot(s, s) * jdot(z, z) / dot(s, z)
}

/// Jordan product x∘y.
pub(crate) fn jordan_prod(x: &[f64], y: &[f64], out: &mut [f64]) {
    out[0] = dot(x, y);
    for i in 1..x.len() {
        out[i] = x[0] * y[i] + y[0] * x[i];
    }
}

/// Solves λ∘u = v for u.
pub(crate) fn jordan_div(lambda: &[f64], v: &[f64], out: &mut [f64]) {
    let l0 = lambda[0];
    let det = jdot(lambda, lambda);
    let u0 = (l0 * v[0] - dot(&lambda[1..], &v[1..])) / det;
    out[0] = u0;
    for i in 1..v.len() {
        out[i] = (v[i] - u0 * lambda[i]) / l0;
    }
}

/// Nesterov–Todd scaling W = η·W̄ with H = WᵀW, Hz = s.
#[derive(Debug, Clone)]
pub(crate) struct SocScaling {
    pub eta: f64,
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl SocScaling {
    pub fn new(s: &[f64], z: &[f64]) -> Option<Self> {
        let ss = jdot(s, s);
        let zz = jdot(z, z);
        if !(ss > 0.0 && zz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
            return None;
        }
        let sn = ss.sqrt();
        let zn = zz.sqrt();
        let sbar: Vec<f64> = s.iter().map(|v| v / sn).collect();
        let zbar: Vec<f64> = z.iter().map(|v| v / zn).collect();
        let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
        // w̄ = (s̄ + J z̄) / 2γ
        let mut w: Vec<f64> = sbar.iter().zip(&zbar).map(|(a, b)| a - b).collect();
        w[0] = sbar[0] + zbar[0];
        w.iter_mut().for_each(|v| *v /= 2.0 * gamma);
        // Restore the hyperbolic normalisation lost to rounding.
        let wn = jdot(&w, &w);
        if !(wn > 0.0) || !gamma.is_finite() {
            return None;
        }
        let wn = wn.sqrt();
        w.iter_mut().for_each(|v| *v /= wn);
        let mut out = Self { eta: (ss / zz).powf(0.25), w, lambda: vec![0.0; s.len()] };
        let mut lambda = vec![0.0; s.len()];
        out.apply_w(z, &mut lambda);
        out.lambda = lambda;
        Some(out)
    }

    fn apply_wbar(&self, x: &[f64], out: &mut [f64]) {
        let w = &self.w;
        let w1x1 = dot(&w[1..], &x[1..]);
        out[0] = w[0] * x[0] + w1x1;
        let c = x[0] + w1x1 / (1.0 + w[0]);
        for i in 1..x.len() {
            out[i] = x[i] + c * w[i];
        }
    }

    pub fn apply_w(&self, x: &[f64], out: &mut [f64]) {
        self.apply_wbar(x, out);
        out.iter_mut().for_each(|v| *v *= self.eta);
    }

    pub fn apply_w_inv(&self, x: &[f64], out: &mut [f64]) {
        let jx = jvec(x);
        self.apply_wbar(&jx, out);
        out[1..].iter_mut().for_each(|v| *v = -*v);
        out.iter_mut().for_each(|v| *v /= self.eta);
    }

    pub fn h_dense(&self) -> DMatrix<f64> {
        let k = self.w.len();
        let e2 = self.eta * self.eta;
        DMatrix::from_fn(k, k, |i, j| {
            let jij = match (i, j) {
                (0, 0) => 1.0,
                _ if i == j => -1.0,
                _ => 0.0,
            };
            e2 * (2.0 * self.w[i] * self.w[j] - jij)
        })
    }

    pub fn apply_h(&self, x: &[f64], out: &mut [f64]) {
        let e2 = self.eta * self.eta;
        let c = 2.0 * dot(&self.w, x);
        out[0] = e2 * (c * self.w[0] - x[0]);
        for i in 1..x.len() {
            out[i] = e2 * (c * self.w[i] + x[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_boundary() {
        assert!(in_cone(&[5.0, 3.0, 4.0], false));
        assert!(!in_cone(&[5.0, 3.0, 4.0], true));
    }

    #[test]
    fn barrier_at_axis() {
        assert_eq!(barrier(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn step_bound_matches_quadratic_root() {
        // 1 − α² > 0 ⇒ boundary at α = 1
        assert!((step_bound(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(step_bound(&[1.0, 0.0], &[1.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn identity_scaling_at_axis() {
        let e = [1.0, 0.0, 0.0];
        let sc = SocScaling::new(&e, &e).unwrap();
        let h = sc.h_dense();
        assert!((h - DMatrix::identity(3, 3)).abs().max() < 1e-15);
    }

    #[test]
    fn nt_maps_z_to_s() {
        let s = [3.0, 1.0, -0.5, 0.2];
        let z = [2.0, -0.3, 0.8, 1.1];
        let sc = SocScaling::new(&s, &z).unwrap();
        let mut hz = [0.0; 4];
        sc.apply_h(&z, &mut hz);
        for i in 0..4 {
            assert!((hz[i] - s[i]).abs() < 1e-12, "{hz:?}");
        }
        // λ = Wz = W⁻ᵀs
        let mut l2 = [0.0; 4];
        sc.apply_w_inv(&s, &mut l2);
        for i in 0..4 {
            assert!((l2[i] - sc.lambda[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let l = [2.0, 0.5, -0.7];
        let u = [0.3, -1.0, 2.0];
        let mut v = [0.0; 3];
        jordan_prod(&l, &u, &mut v);
        let mut back = [0.0; 3];
        jordan_div(&l, &v, &mut back);
        for i in 0..3 {
            assert!((back[i] - u[i]).abs() < 1e-14);
        }
    }
}
