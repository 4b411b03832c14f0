//! Scaling matrices H with H z = s, and the corrector right-hand side.

use super::nonsym::{self, Kind, NonsymScaling};
use super::psd::{self, PsdScaling};
use super::soc::{self, SocScaling};
use super::{ConeError, ConeSet};
use crate::problem::ConeSpec;
use nalgebra::{DMatrix, Vector3};

#[derive(Debug, Clone)]
enum BlockScaling {
    Zero(usize),
    /// w = √(s/z), λ = √(sz)
    Nonneg { w: Vec<f64>, lambda: Vec<f64> },
    Soc(SocScaling),
    Psd(PsdScaling),
    Nonsym(NonsymScaling),
}

/// Values of one H block in the layout the KKT assembly expects.
#[derive(Debug, Clone, PartialEq)]
pub enum HBlock {
    Diagonal(Vec<f64>),
    /// Column-major dense block.
    Dense(DMatrix<f64>),
}

/// Scaling state for one iteration.
#[derive(Debug, Clone)]
pub struct ScalingState {
    pub mu: f64,
    blocks: Vec<BlockScaling>,
}

impl ConeSet {
    /// Builds H blockwise. Exponential and power blocks use the rank-4
    /// quasi-Newton update, whose anchor Hessian is scaled by the block's
    /// own complementarity ⟨sᵢ, zᵢ⟩/3.
    pub fn update_scaling(&self, s: &[f64], z: &[f64], mu: f64) -> Result<ScalingState, ConeError> {
        let blocks = self.try_map_blocks(|k, b| {
            let r = b.range.clone();
            let (s, z) = (&s[r.clone()], &z[r]);
            let fail = ConeError::ScalingFailure { block: k };
            let sc = match b.spec {
                ConeSpec::Zero(d) => BlockScaling::Zero(d),
                ConeSpec::Nonneg(_) => {
                    if !s.iter().chain(z).all(|&v| v > 0.0) {
                        return Err(fail);
                    }
                    BlockScaling::Nonneg {
                        w: s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect(),
                        lambda: s.iter().zip(z).map(|(a, b)| (a * b).sqrt()).collect(),
                    }
                }
                ConeSpec::SecondOrder(_) => BlockScaling::Soc(SocScaling::new(s, z).ok_or(fail)?),
                ConeSpec::PsdTriangle(n) => BlockScaling::Psd(PsdScaling::new(s, z, n).ok_or(fail)?),
                ConeSpec::Exponential => BlockScaling::Nonsym(nonsym::bfgs_scaling(Kind::Exp, s, z, mu).ok_or(fail)?),
                ConeSpec::Power(a) => BlockScaling::Nonsym(nonsym::bfgs_scaling(Kind::Pow(a), s, z, mu).ok_or(fail)?),
            };
            Ok(sc)
        })?;
        Ok(ScalingState { mu, blocks })
    }

    /// d_s for the combined step:
    /// symmetric blocks Wᵀ(λ \ (λ∘λ + η − σμe)), η = (W⁻ᵀΔs)∘(WΔz);
    /// nonsymmetric blocks s + σμ∇f(z) − ½∇³f(z)[Δz, ∇²f(z)⁻¹Δs].
    #[allow(clippy::too_many_arguments)]
    pub fn combined_ds(
        &self,
        state: &ScalingState,
        s: &[f64],
        z: &[f64],
        dz_a: &[f64],
        ds_a: &[f64],
        sigma: f64,
        mu: f64,
    ) -> Result<Vec<f64>, ConeError> {
        let sm = sigma * mu;
        let parts = self.try_map_blocks(|k, b| {
            let r = b.range.clone();
            let d = r.len();
            let (s, z, dz, ds) = (&s[r.clone()], &z[r.clone()], &dz_a[r.clone()], &ds_a[r]);
            let mut out = vec![0.0; d];
            match (&state.blocks[k], b.spec) {
                (BlockScaling::Zero(_), _) => {}
                (BlockScaling::Nonneg { w, lambda }, _) => {
                    for i in 0..d {
                        let l = lambda[i];
                        out[i] = w[i] * (l * l + ds[i] * dz[i] - sm) / l;
                    }
                }
                (BlockScaling::Soc(sc), _) => {
                    let mut a = vec![0.0; d];
                    let mut c = vec![0.0; d];
                    sc.apply_w_inv(ds, &mut a);
                    sc.apply_w(dz, &mut c);
                    let mut eta = vec![0.0; d];
                    soc::jordan_prod(&a, &c, &mut eta);
                    let mut v = vec![0.0; d];
                    soc::jordan_prod(&sc.lambda, &sc.lambda, &mut v);
                    for i in 0..d {
                        v[i] += eta[i];
                    }
                    v[0] -= sm;
                    let mut u = vec![0.0; d];
                    soc::jordan_div(&sc.lambda, &v, &mut u);
                    sc.apply_w(&u, &mut out);
                }
                (BlockScaling::Psd(sc), ConeSpec::PsdTriangle(n)) => {
                    let mut a = vec![0.0; d];
                    let mut c = vec![0.0; d];
                    sc.apply_w_inv_t(ds, &mut a);
                    sc.apply_w(dz, &mut c);
                    let mut eta = vec![0.0; d];
                    psd::jordan_prod(&a, &c, n, &mut eta);
                    let l2 = sc.lambda.map(|x| x * x);
                    let mut v = psd::svec(&DMatrix::from_diagonal(&l2.map(|x| x - sm)));
                    for i in 0..d {
                        v[i] += eta[i];
                    }
                    let mut u = vec![0.0; d];
                    psd::jordan_div_diag(&sc.lambda, &v, n, &mut u);
                    sc.apply_wt(&u, &mut out);
                }
                (BlockScaling::Nonsym(_), spec) => {
                    let kind = match spec {
                        ConeSpec::Exponential => Kind::Exp,
                        ConeSpec::Power(a) => Kind::Pow(a),
                        _ => unreachable!(),
                    };
                    let fail = ConeError::ScalingFailure { block: k };
                    let g = nonsym::gradient(kind, z).ok_or(fail.clone())?;
                    let h = nonsym::hessian(kind, z).ok_or(fail.clone())?;
                    let dsv = Vector3::from_column_slice(ds);
                    // The Hessian is badly conditioned close to the boundary;
                    // without a usable solve the correction term is dropped.
                    let hinv_ds = match h.cholesky() {
                        Some(c) => Some(c.solve(&dsv)),
                        None => h.lu().solve(&dsv),
                    };
                    let t = match hinv_ds.filter(|v| v.iter().all(|x| x.is_finite())) {
                        Some(v) => nonsym::third_order(kind, z, &Vector3::from_column_slice(dz), &v).ok_or(fail)?,
                        None => Vector3::zeros(),
                    };
                    for i in 0..3 {
                        out[i] = s[i] + sm * g[i] - 0.5 * t[i];
                    }
                }
                _ => unreachable!("scaling does not match cone layout"),
            }
            Ok(out)
        })?;
        Ok(self.gather(parts))
    }
}

impl ScalingState {
    /// Blockwise H·v; the zero block maps to 0.
    pub fn apply_h(&self, cones: &ConeSet, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (sc, b) in self.blocks.iter().zip(cones.blocks()) {
            let r = b.range.clone();
            let (x, y) = (&v[r.clone()], &mut out[r]);
            match sc {
                BlockScaling::Zero(_) => {}
                BlockScaling::Nonneg { w, .. } => {
                    for i in 0..x.len() {
                        y[i] = w[i] * w[i] * x[i];
                    }
                }
                BlockScaling::Soc(s) => s.apply_h(x, y),
                BlockScaling::Psd(s) => s.apply_h(x, y),
                BlockScaling::Nonsym(s) => {
                    let r = s.h * Vector3::from_column_slice(x);
                    y.copy_from_slice(r.as_slice());
                }
            }
        }
        out
    }

    /// H values per block, in block order.
    pub fn h_blocks(&self) -> Vec<HBlock> {
        self.blocks
            .iter()
            .map(|sc| match sc {
                BlockScaling::Zero(d) => HBlock::Diagonal(vec![0.0; *d]),
                BlockScaling::Nonneg { w, .. } => HBlock::Diagonal(w.iter().map(|v| v * v).collect()),
                BlockScaling::Soc(s) => HBlock::Dense(s.h_dense()),
                BlockScaling::Psd(s) => HBlock::Dense(s.h_dense()),
                BlockScaling::Nonsym(s) => HBlock::Dense(DMatrix::from_fn(3, 3, |i, j| s.h[(i, j)])),
            })
            .collect()
    }

    /// Dense m×m H, for tests and diagnostics.
    pub fn dense_h(&self, cones: &ConeSet) -> DMatrix<f64> {
        let m = cones.m();
        let mut h = DMatrix::zeros(m, m);
        for (blk, b) in self.h_blocks().into_iter().zip(cones.blocks()) {
            let o = b.range.start;
            match blk {
                HBlock::Diagonal(d) => {
                    for (i, v) in d.into_iter().enumerate() {
                        h[(o + i, o + i)] = v;
                    }
                }
                HBlock::Dense(dm) => {
                    let d = dm.nrows();
                    h.view_mut((o, o), (d, d)).copy_from(&dm);
                }
            }
        }
        h
    }

    /// Shadow iterates (s̃, z̃) stored for nonsymmetric block `k`.
    pub fn nonsym_shadow(&self, k: usize) -> Option<([f64; 3], [f64; 3])> {
        match &self.blocks[k] {
            BlockScaling::Nonsym(s) => Some((s.s_tilde.into(), s.z_tilde.into())),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonneg_identity_when_s_equals_z() {
        let c = ConeSet::new(&[ConeSpec::Nonneg(3)]);
        let v = [0.3, 2.0, 5.0];
        let st = c.update_scaling(&v, &v, 1.0).unwrap();
        assert_eq!(st.apply_h(&c, &[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn nonneg_apply_h() {
        let c = ConeSet::new(&[ConeSpec::Nonneg(2)]);
        let st = c.update_scaling(&[2.0, 3.0], &[1.0, 1.0], 1.0).unwrap();
        let h = st.apply_h(&c, &[1.0, 1.0]);
        assert!((h[0] - 2.0).abs() < 1e-15 && (h[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn soc_identity_at_axis() {
        let c = ConeSet::new(&[ConeSpec::SecondOrder(3)]);
        let e = [1.0, 0.0, 0.0];
        let st = c.update_scaling(&e, &e, 1.0).unwrap();
        assert!((st.dense_h(&c) - DMatrix::identity(3, 3)).abs().max() < 1e-15);
    }

    #[test]
    fn centered_nonneg_ds_vanishes() {
        let c = ConeSet::new(&[ConeSpec::Nonneg(2)]);
        let one = [1.0, 1.0];
        let st = c.update_scaling(&one, &one, 1.0).unwrap();
        let ds = c.combined_ds(&st, &one, &one, &[0.0; 2], &[0.0; 2], 1.0, 1.0).unwrap();
        assert_eq!(ds, vec![0.0, 0.0]);
    }

    #[test]
    fn nonneg_ds_elementwise() {
        let c = ConeSet::new(&[ConeSpec::Nonneg(2)]);
        let s = [2.0, 0.5];
        let z = [0.5, 3.0];
        let dz = [0.1, -0.2];
        let dss = [-0.3, 0.4];
        let st = c.update_scaling(&s, &z, 1.0).unwrap();
        let ds = c.combined_ds(&st, &s, &z, &dz, &dss, 0.2, 0.9).unwrap();
        for i in 0..2 {
            let expect = (s[i] * z[i] + dss[i] * dz[i] - 0.18) / z[i];
            assert!((ds[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn exp_ds_zero_on_central_path() {
        let c = ConeSet::new(&[ConeSpec::Exponential]);
        let mu = 0.4;
        let z = [-0.7, 0.9, 1.6];
        let s: Vec<f64> = c.barrier_gradient(&z).unwrap().iter().map(|g| -mu * g).collect();
        let st = c.update_scaling(&s, &z, mu).unwrap();
        let ds = c.combined_ds(&st, &s, &z, &[0.0; 3], &[0.0; 3], 1.0, mu).unwrap();
        assert!(ds.iter().all(|v| v.abs() < 1e-12), "{ds:?}");
    }

    #[test]
    fn dense_matches_operator() {
        let c = ConeSet::new(&[ConeSpec::Nonneg(2), ConeSpec::SecondOrder(3), ConeSpec::PsdTriangle(2)]);
        let s = [1.0, 2.0, 3.0, 1.0, -1.0, 2.0, 0.3, 1.0];
        let z = [0.5, 1.5, 2.0, -0.5, 0.7, 1.0, -0.2, 3.0];
        let st = c.update_scaling(&s, &z, 1.0).unwrap();
        let v: Vec<f64> = (0..8).map(|i| (i as f64).cos()).collect();
        let hv = st.apply_h(&c, &v);
        let dv = st.dense_h(&c) * nalgebra::DVector::from_column_slice(&v);
        for i in 0..8 {
            assert!((hv[i] - dv[i]).abs() < 1e-12 * (1.0 + hv[i].abs()));
        }
    }
}
