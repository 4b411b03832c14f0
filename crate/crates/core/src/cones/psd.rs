//! PSD cone in scaled lower-triangle storage. Off-diagonals carry a
//! factor √2 so that ⟨X, Y⟩ = svec(X)ᵀsvec(Y).

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use std::f64::consts::SQRT_2;

pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

pub(crate) fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            out[k] = if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) * SQRT_2 };
            k += 1;
        }
    }
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n * (n + 1) / 2];
    svec_into(m, &mut out);
    out
}

fn chol(m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m)
}

fn inverse(z: &[f64], n: usize) -> Option<DMatrix<f64>> {
    chol(smat(z, n)).map(|c| c.inverse())
}

pub(crate) fn barrier(z: &[f64], n: usize) -> Option<f64> {
    let c = chol(smat(z, n))?;
    let l = c.l_dirty();
    Some(-2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>())
}

pub(crate) fn gradient(z: &[f64], n: usize, out: &mut [f64]) -> Option<()> {
    let zi = inverse(z, n)?;
    svec_into(&(-zi), out);
    Some(())
}

pub(crate) fn hessian(z: &[f64], n: usize) -> Option<DMatrix<f64>> {
    let zi = inverse(z, n)?;
    let d = z.len();
    let mut h = DMatrix::zeros(d, d);
    let mut e = vec![0.0; d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        e[j] = 1.0;
        svec_into(&(&zi * smat(&e, n) * &zi), &mut col);
        h.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    Some(h)
}

pub(crate) fn third_order(z: &[f64], n: usize, u: &[f64], v: &[f64], out: &mut [f64]) -> Option<()> {
    let zi = inverse(z, n)?;
    let a = &zi * smat(u, n) * &zi;
    let b = &zi * smat(v, n) * &zi;
    let t = &a * smat(v, n) * &zi + &b * smat(u, n) * &zi;
    svec_into(&(-t), out);
    Some(())
}

pub(crate) fn in_cone(v: &[f64], n: usize, strict: bool) -> bool {
    let m = smat(v, n);
    if strict {
        return chol(m).is_some();
    }
    let scale = m.abs().max().max(1.0);
    let eig = SymmetricEigen::new(m).eigenvalues;
    eig.min() >= -1e-13 * scale
}

/// Largest α keeping Z + α·ΔZ positive definite.
pub(crate) fn step_bound(z: &[f64], dz: &[f64], n: usize) -> f64 {
    let Some(c) = chol(smat(z, n)) else {
        return 0.0;
    };
    let l = c.l();
    let linv = match l.clone().try_inverse() {
        Some(li) => li,
        None => return 0.0,
    };
    let m = &linv * smat(dz, n) * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let lmin = SymmetricEigen::new(m).eigenvalues.min();
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

/// n / tr(S⁻¹Z⁻¹).
pub(crate) fn centrality(s: &[f64], z: &[f64], n: usize) -> Option<f64> {
    let si = inverse(s, n)?;
    let zi = inverse(z, n)?;
    Some(n as f64 / si.component_mul(&zi).sum())
}

/// NT scaling: W(X) = RᵀXR, with λ = W(Z) = W⁻ᵀ(S) diagonal.
#[derive(Debug, Clone)]
pub(crate) struct PsdScaling {
    pub n: usize,
    pub r: DMatrix<f64>,
    pub rinv: DMatrix<f64>,
    pub lambda: DVector<f64>,
}

impl PsdScaling {
    pub fn new(s: &[f64], z: &[f64], n: usize) -> Option<Self> {
        let ls = chol(smat(s, n))?.l();
        let lz = chol(smat(z, n))?.l();
        let svd = (lz.transpose() * &ls).svd(true, true);
        let u = svd.u?;
        let v = svd.v_t?.transpose();
        let sig = svd.singular_values;
        if sig.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let isq = DMatrix::from_diagonal(&sig.map(|x| 1.0 / x.sqrt()));
        let r = &ls * v * &isq;
        let rinv = &isq * u.transpose() * lz.transpose();
        Some(Self { n, r, rinv, lambda: sig })
    }

    #[cfg(test)]
    pub fn lambda_svec(&self) -> Vec<f64> {
        svec(&DMatrix::from_diagonal(&self.lambda))
    }

    /// W(X) = RᵀXR
    pub fn apply_w(&self, x: &[f64], out: &mut [f64]) {
        svec_into(&(self.r.transpose() * smat(x, self.n) * &self.r), out);
    }

    /// Wᵀ(Y) = RYRᵀ
    pub fn apply_wt(&self, y: &[f64], out: &mut [f64]) {
        svec_into(&(&self.r * smat(y, self.n) * self.r.transpose()), out);
    }

    /// W⁻ᵀ(X) = R⁻¹XR⁻ᵀ
    pub fn apply_w_inv_t(&self, x: &[f64], out: &mut [f64]) {
        svec_into(&(&self.rinv * smat(x, self.n) * self.rinv.transpose()), out);
    }

    pub fn apply_h(&self, x: &[f64], out: &mut [f64]) {
        let rrt = &self.r * self.r.transpose();
        svec_into(&(&rrt * smat(x, self.n) * &rrt), out);
    }

    pub fn h_dense(&self) -> DMatrix<f64> {
        let d = self.n * (self.n + 1) / 2;
        let rrt = &self.r * self.r.transpose();
        let mut h = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        let mut col = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            svec_into(&(&rrt * smat(&e, self.n) * &rrt), &mut col);
            h.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        // Symmetrise away rounding noise.
        (&h + h.transpose()) * 0.5
    }
}

/// Jordan product (XY + YX)/2.
pub(crate) fn jordan_prod(x: &[f64], y: &[f64], n: usize, out: &mut [f64]) {
    let xm = smat(x, n);
    let ym = smat(y, n);
    svec_into(&((&xm * &ym + &ym * &xm) * 0.5), out);
}

/// Solves Λ∘U = V for diagonal Λ.
pub(crate) fn jordan_div_diag(lambda: &DVector<f64>, v: &[f64], n: usize, out: &mut [f64]) {
    let vm = smat(v, n);
    let um = DMatrix::from_fn(n, n, |i, j| 2.0 * vm[(i, j)] / (lambda[i] + lambda[j]));
    svec_into(&um, out);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, seed: f64) -> Vec<f64> {
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) as f64 * seed).sin());
        svec(&(&b * b.transpose() + DMatrix::identity(n, n)))
    }

    #[test]
    fn svec_is_isometric() {
        let x = spd(3, 0.7);
        let y = spd(3, 1.3);
        let xm = smat(&x, 3);
        let ym = smat(&y, 3);
        let inner: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((inner - xm.component_mul(&ym).sum()).abs() < 1e-12);
        assert_eq!(svec(&xm).len(), 6);
    }

    #[test]
    fn nt_identity() {
        let s = spd(3, 0.4);
        let z = spd(3, 1.9);
        let sc = PsdScaling::new(&s, &z, 3).unwrap();
        let mut hz = vec![0.0; 6];
        sc.apply_h(&z, &mut hz);
        for i in 0..6 {
            assert!((hz[i] - s[i]).abs() < 1e-10 * (1.0 + s[i].abs()));
        }
        let mut wz = vec![0.0; 6];
        sc.apply_w(&z, &mut wz);
        let lam = sc.lambda_svec();
        for i in 0..6 {
            assert!((wz[i] - lam[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn step_to_boundary() {
        let z = svec(&DMatrix::identity(2, 2));
        let dz = svec(&DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 1.0])));
        assert!((step_bound(&z, &dz, 2) - 0.5).abs() < 1e-14);
    }
}
