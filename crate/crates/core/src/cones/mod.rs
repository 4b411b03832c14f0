//! Cone engine: per-family kernels over a structure-of-arrays layout.
//!
//! Vectors passed to [`ConeSet`] methods span all `m` constraint rows; each
//! block reads and writes only its own slice. Blocks of one family are
//! independent, and families with many cones are processed with rayon.

mod batch;
pub(crate) mod nonneg;
pub(crate) mod nonsym;
pub(crate) mod psd;
mod scaling;
pub(crate) mod soc;
mod step;

pub use batch::{soc_residual, sum_squares, CHUNK as SOC_REDUCTION_CHUNK};
pub use nonsym::EXP_CENTRAL;
pub use psd::{smat as psd_smat, svec as psd_svec};
pub use scaling::{HBlock, ScalingState};
pub use step::{StepLengthRequest, MIN_STEP};

use crate::problem::{ConeFamily, ConeSpec};
use nalgebra::{DMatrix, Vector3};
use nonsym::Kind;
use rayon::prelude::*;
use std::ops::Range;
use thiserror::Error;

/// Families with at least this many cones are processed in parallel.
pub const PAR_MIN_CONES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("block {block} is not strictly interior")]
    DomainError { block: usize },
    #[error("scaling update failed on block {block}")]
    ScalingFailure { block: usize },
    #[error("step length {alpha:e} below the minimum")]
    StepTooSmall { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub spec: ConeSpec,
    pub range: Range<usize>,
}

const FAMILIES: [ConeFamily; 6] = [
    ConeFamily::Zero,
    ConeFamily::Nonneg,
    ConeFamily::SecondOrder,
    ConeFamily::Exponential,
    ConeFamily::Power,
    ConeFamily::Psd,
];

/// Immutable cone layout.
#[derive(Debug, Clone)]
pub struct ConeSet {
    blocks: Vec<Block>,
    by_family: [Vec<usize>; 6],
    m: usize,
    degree: usize,
}

fn family_index(f: ConeFamily) -> usize {
    FAMILIES.iter().position(|&g| g == f).unwrap()
}

impl ConeSet {
    pub fn new(cones: &[ConeSpec]) -> Self {
        let mut blocks = Vec::with_capacity(cones.len());
        let mut by_family: [Vec<usize>; 6] = Default::default();
        let mut off = 0;
        for (k, c) in cones.iter().enumerate() {
            blocks.push(Block { spec: *c, range: off..off + c.dim() });
            by_family[family_index(c.family())].push(k);
            off += c.dim();
        }
        let degree = cones.iter().map(ConeSpec::degree).sum();
        Self { blocks, by_family, m: off, degree }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Barrier degree ν of the product cone.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn family_count(&self, f: ConeFamily) -> usize {
        self.by_family[family_index(f)].len()
    }

    /// True when blocks appear in family order.
    pub fn is_family_ordered(&self) -> bool {
        self.blocks
            .windows(2)
            .all(|w| w[0].spec.family() <= w[1].spec.family())
    }

    pub fn has_nonsymmetric(&self) -> bool {
        self.family_count(ConeFamily::Exponential) + self.family_count(ConeFamily::Power) > 0
    }

    /// Applies `f` to every block, family by family, returning results in
    /// block order.
    pub(crate) fn map_blocks<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &Block) -> T + Sync,
    {
        let mut out: Vec<Option<T>> = (0..self.blocks.len()).map(|_| None).collect();
        for idx in &self.by_family {
            let results: Vec<(usize, T)> = if idx.len() >= PAR_MIN_CONES {
                idx.par_iter().map(|&k| (k, f(k, &self.blocks[k]))).collect()
            } else {
                idx.iter().map(|&k| (k, f(k, &self.blocks[k]))).collect()
            };
            for (k, r) in results {
                out[k] = Some(r);
            }
        }
        out.into_iter().map(Option::unwrap).collect()
    }

    fn try_map_blocks<T, F>(&self, f: F) -> Result<Vec<T>, ConeError>
    where
        T: Send,
        F: Fn(usize, &Block) -> Result<T, ConeError> + Sync,
    {
        self.map_blocks(f).into_iter().collect()
    }

    /// Scatters per-block vectors into a full-length vector.
    fn gather(&self, parts: Vec<Vec<f64>>) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (b, p) in self.blocks.iter().zip(parts) {
            out[b.range.clone()].copy_from_slice(&p);
        }
        out
    }

    /// Interior starting pair (s⁰, z⁰); the zero block gets s = z = 0.
    pub fn unit_init(&self) -> (Vec<f64>, Vec<f64>) {
        let parts = self.map_blocks(|_, b| unit_point(&b.spec));
        let v = self.gather(parts);
        (v.clone(), v)
    }

    pub fn is_in_cone(&self, v: &[f64], strict: bool) -> bool {
        self.map_blocks(|_, b| block_in_cone(&b.spec, &v[b.range.clone()], strict))
            .into_iter()
            .all(|x| x)
    }

    pub fn is_in_dual_cone(&self, v: &[f64], strict: bool) -> bool {
        self.map_blocks(|_, b| block_in_dual_cone(&b.spec, &v[b.range.clone()], strict))
            .into_iter()
            .all(|x| x)
    }

    pub fn barrier_value(&self, z: &[f64]) -> Result<f64, ConeError> {
        let vals = self.try_map_blocks(|k, b| {
            block_barrier(&b.spec, &z[b.range.clone()]).map_err(|_| ConeError::DomainError { block: k })
        })?;
        Ok(vals.iter().sum())
    }

    pub fn barrier_gradient(&self, z: &[f64]) -> Result<Vec<f64>, ConeError> {
        let parts = self.try_map_blocks(|k, b| {
            block_gradient(&b.spec, &z[b.range.clone()]).map_err(|_| ConeError::DomainError { block: k })
        })?;
        Ok(self.gather(parts))
    }

    /// d_s for the affine (predictor) direction.
    pub fn affine_ds(&self, s: &[f64]) -> Vec<f64> {
        let mut out = s.to_vec();
        for b in &self.blocks {
            if let ConeSpec::Zero(_) = b.spec {
                out[b.range.clone()].iter_mut().for_each(|v| *v = 0.0);
            }
        }
        out
    }

    /// Shadow iterates s̃ = −∇f(z), z̃ = −∇f*(s) and μ̃ = ⟨s̃, z̃⟩/ν.
    pub fn shadow_iterates(&self, s: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64), ConeError> {
        let parts = self.try_map_blocks(|k, b| {
            let r = b.range.clone();
            block_shadow(&b.spec, &s[r.clone()], &z[r]).ok_or(ConeError::DomainError { block: k })
        })?;
        let (sp, zp): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        let st = self.gather(sp);
        let zt = self.gather(zp);
        let nu = self.degree.max(1) as f64;
        let mt = st.iter().zip(&zt).map(|(a, b)| a * b).sum::<f64>() / nu;
        Ok((st, zt, mt))
    }

    /// True iff νᵢ/⟨∇f*(sᵢ), ∇f(zᵢ)⟩ ≥ βμ on every barrier block.
    pub fn neighborhood_ok(&self, s: &[f64], z: &[f64], mu: f64, beta: f64) -> Result<bool, ConeError> {
        let ok = self.try_map_blocks(|k, b| {
            let r = b.range.clone();
            let c = block_centrality(&b.spec, &s[r.clone()], &z[r]).ok_or(ConeError::DomainError { block: k })?;
            Ok(c >= beta * mu)
        })?;
        Ok(ok.into_iter().all(|x| x))
    }

    /// t² − ‖u‖² for every SOC block, in block order.
    pub fn soc_residuals_batch(&self, x: &[f64]) -> Vec<f64> {
        let idx = &self.by_family[family_index(ConeFamily::SecondOrder)];
        let f = |&k: &usize| soc_residual(&x[self.blocks[k].range.clone()]);
        if idx.len() >= PAR_MIN_CONES {
            idx.par_iter().map(f).collect()
        } else {
            idx.iter().map(f).collect()
        }
    }
}

fn unit_point(spec: &ConeSpec) -> Vec<f64> {
    match *spec {
        ConeSpec::Zero(d) => vec![0.0; d],
        ConeSpec::Nonneg(d) => vec![1.0; d],
        ConeSpec::SecondOrder(d) => {
            let mut v = vec![0.0; d];
            v[0] = 1.0;
            v
        }
        ConeSpec::Exponential => EXP_CENTRAL.to_vec(),
        ConeSpec::Power(a) => nonsym::pow_central(a).to_vec(),
        ConeSpec::PsdTriangle(n) => psd::svec(&DMatrix::identity(n, n)),
    }
}

fn kind(spec: &ConeSpec) -> Option<Kind> {
    match *spec {
        ConeSpec::Exponential => Some(Kind::Exp),
        ConeSpec::Power(a) => Some(Kind::Pow(a)),
        _ => None,
    }
}

/// Primal membership of one block.
pub fn block_in_cone(spec: &ConeSpec, v: &[f64], strict: bool) -> bool {
    match *spec {
        ConeSpec::Zero(_) => v.iter().all(|&x| x == 0.0),
        ConeSpec::Nonneg(_) => nonneg::in_cone(v, strict),
        ConeSpec::SecondOrder(_) => soc::in_cone(v, strict),
        ConeSpec::PsdTriangle(n) => psd::in_cone(v, n, strict),
        _ => nonsym::in_primal(kind(spec).unwrap(), v, strict),
    }
}

/// Dual membership of one block; the zero cone's dual is all of ℝⁿ.
pub fn block_in_dual_cone(spec: &ConeSpec, v: &[f64], strict: bool) -> bool {
    match *spec {
        ConeSpec::Zero(_) => true,
        ConeSpec::Exponential | ConeSpec::Power(_) => nonsym::in_dual(kind(spec).unwrap(), v, strict),
        _ => block_in_cone(spec, v, strict),
    }
}

/// Barrier f(z) of one block (zero for the zero cone).
pub fn block_barrier(spec: &ConeSpec, z: &[f64]) -> Result<f64, ConeError> {
    let err = ConeError::DomainError { block: 0 };
    match *spec {
        ConeSpec::Zero(_) => Ok(0.0),
        _ if !block_in_dual_cone(spec, z, true) => Err(err),
        ConeSpec::Nonneg(_) => Ok(nonneg::barrier(z)),
        ConeSpec::SecondOrder(_) => Ok(soc::barrier(z)),
        ConeSpec::PsdTriangle(n) => psd::barrier(z, n).ok_or(err),
        _ => nonsym::barrier(kind(spec).unwrap(), z).ok_or(err),
    }
}

pub fn block_gradient(spec: &ConeSpec, z: &[f64]) -> Result<Vec<f64>, ConeError> {
    let err = ConeError::DomainError { block: 0 };
    let mut out = vec![0.0; z.len()];
    match *spec {
        ConeSpec::Zero(_) => return Ok(out),
        _ if !block_in_dual_cone(spec, z, true) => return Err(err),
        ConeSpec::Nonneg(_) => nonneg::gradient(z, &mut out),
        ConeSpec::SecondOrder(_) => soc::gradient(z, &mut out),
        ConeSpec::PsdTriangle(n) => psd::gradient(z, n, &mut out).ok_or(err)?,
        _ => out.copy_from_slice(nonsym::gradient(kind(spec).unwrap(), z).ok_or(err)?.as_slice()),
    }
    Ok(out)
}

pub fn block_hessian(spec: &ConeSpec, z: &[f64]) -> Result<DMatrix<f64>, ConeError> {
    let err = ConeError::DomainError { block: 0 };
    let d = z.len();
    match *spec {
        ConeSpec::Zero(_) => Ok(DMatrix::zeros(d, d)),
        _ if !block_in_dual_cone(spec, z, true) => Err(err),
        ConeSpec::Nonneg(_) => Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            z.iter().map(|v| 1.0 / (v * v)),
        ))),
        ConeSpec::SecondOrder(_) => Ok(soc::hessian(z)),
        ConeSpec::PsdTriangle(n) => psd::hessian(z, n).ok_or(err),
        _ => {
            let h = nonsym::hessian(kind(spec).unwrap(), z).ok_or(err)?;
            Ok(DMatrix::from_fn(3, 3, |i, j| h[(i, j)]))
        }
    }
}

/// Third-order directional derivative ∇³f(z)[u, v].
pub fn block_third_order(spec: &ConeSpec, z: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>, ConeError> {
    let err = ConeError::DomainError { block: 0 };
    let mut out = vec![0.0; z.len()];
    match *spec {
        ConeSpec::Zero(_) => return Ok(out),
        _ if !block_in_dual_cone(spec, z, true) => return Err(err),
        ConeSpec::Nonneg(_) => nonneg::third_order(z, u, v, &mut out),
        ConeSpec::SecondOrder(_) => soc::third_order(z, u, v, &mut out),
        ConeSpec::PsdTriangle(n) => psd::third_order(z, n, u, v, &mut out).ok_or(err)?,
        _ => {
            let t = nonsym::third_order(
                kind(spec).unwrap(),
                z,
                &Vector3::from_column_slice(u),
                &Vector3::from_column_slice(v),
            )
            .ok_or(err)?;
            out.copy_from_slice(t.as_slice());
        }
    }
    Ok(out)
}

/// −∇f*(s) for one block.
pub fn block_conjugate_point(spec: &ConeSpec, s: &[f64]) -> Result<Vec<f64>, ConeError> {
    let err = ConeError::DomainError { block: 0 };
    match *spec {
        ConeSpec::Zero(d) => Ok(vec![0.0; d]),
        _ if !block_in_cone(spec, s, true) => Err(err),
        ConeSpec::Exponential | ConeSpec::Power(_) => nonsym::conjugate_point(kind(spec).unwrap(), s, None)
            .map(|v| v.as_slice().to_vec())
            .ok_or(err),
        // Self-scaled barriers: f* = f + const.
        _ => block_gradient(spec, s).map(|g| g.iter().map(|v| -v).collect()),
    }
}

fn block_shadow(spec: &ConeSpec, s: &[f64], z: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    match *spec {
        ConeSpec::Zero(d) => Some((vec![0.0; d], vec![0.0; d])),
        ConeSpec::Exponential | ConeSpec::Power(_) => {
            if !block_in_cone(spec, s, true) {
                return None;
            }
            let (st, zt, _) = nonsym::shadow(kind(spec).unwrap(), s, z)?;
            Some((st.as_slice().to_vec(), zt.as_slice().to_vec()))
        }
        _ => {
            let st = block_gradient(spec, z).ok()?.iter().map(|v| -v).collect();
            let zt = block_conjugate_point(spec, s).ok()?;
            Some((st, zt))
        }
    }
}

fn block_centrality(spec: &ConeSpec, s: &[f64], z: &[f64]) -> Option<f64> {
    if let ConeSpec::Zero(_) = spec {
        return Some(f64::INFINITY);
    }
    if !block_in_cone(spec, s, true) || !block_in_dual_cone(spec, z, true) {
        return None;
    }
    match *spec {
        ConeSpec::Nonneg(_) => Some(nonneg::centrality(s, z)),
        ConeSpec::SecondOrder(_) => Some(soc::centrality(s, z)),
        ConeSpec::PsdTriangle(n) => psd::centrality(s, z, n),
        _ => {
            let (_, _, mt) = nonsym::shadow(kind(spec).unwrap(), s, z)?;
            Some(1.0 / mt)
        }
    }
}
