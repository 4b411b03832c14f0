//! Quasi-definite KKT system
//!
//! ```text
//! K = [ P   Aᵀ ]
//!     [ A   −H ]
//! ```
//!
//! stored as its upper triangle, factored as LDLᵀ after a fill-reducing
//! permutation, and solved with iterative refinement against the
//! unregularized matrix.

pub mod ldl;
pub mod ordering;

use crate::cones::{ConeSet, HBlock};
use crate::problem::ConeSpec;
use crate::sparse::{norm_inf, CsrMatrix};
use ldl::{FactorFloat, LdlError, LdlFactor, LdlSymbolic, Regularization};
use thiserror::Error;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecisionMode {
    #[default]
    Full,
    /// Factor and triangular solves in single precision; residuals in double.
    Mixed,
}

impl PrecisionMode {
    /// (static, dynamic) regularization defaults for the mode.
    pub fn default_regularization(self) -> (f64, f64) {
        match self {
            PrecisionMode::Full => (1e-8, f64::EPSILON * f64::EPSILON),
            PrecisionMode::Mixed => {
                let e = f32::EPSILON as f64;
                (e.sqrt(), e * e)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementSettings {
    pub t_abs: f64,
    pub t_rel: f64,
    pub max_steps: usize,
}

impl Default for RefinementSettings {
    fn default() -> Self {
        Self { t_abs: 1e-12, t_rel: 1e-12, max_steps: 10 }
    }
}

/// Outcome of one refined solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineInfo {
    pub steps: usize,
    pub residual: f64,
    pub converged: bool,
    /// Residual rose on two consecutive steps; the best iterate was kept.
    pub stalled: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KktError {
    #[error("sparsity pattern of {0} differs from the assembled one")]
    PatternMismatch(&'static str),
    #[error("factorization failed: {0}")]
    FactorizationFailure(#[from] LdlError),
    #[error("numeric factorization is missing or stale")]
    NotFactored,
}

#[derive(Debug, Clone)]
struct Symbolic {
    perm: Vec<usize>,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    /// K slot → position in the permuted CSC arrays.
    slot_to_csc: Vec<usize>,
    signs: Vec<f64>,
    ldl: LdlSymbolic,
}

#[derive(Debug, Clone)]
enum Factor {
    Full(LdlFactor<f64>),
    Mixed(LdlFactor<f32>),
}

#[derive(Debug, Clone)]
pub struct KktSystem {
    n: usize,
    m: usize,
    rowptr: Vec<usize>,
    colidx: Vec<usize>,
    values: Vec<f64>,
    /// Single-precision copy of `values` (mixed mode only).
    values_reduced: Vec<f32>,
    p_pattern: CsrMatrix,
    a_pattern: CsrMatrix,
    p_map: Vec<usize>,
    a_map: Vec<usize>,
    /// Per H block: slot of each stored entry (diagonal, or column-major
    /// dense with `NONE` below the diagonal).
    h_map: Vec<Vec<usize>>,
    mode: PrecisionMode,
    reg: Regularization,
    symbolic: Option<Symbolic>,
    symbolic_count: usize,
    factor: Option<Factor>,
}

fn pattern_only(m: &CsrMatrix) -> CsrMatrix {
    let mut c = m.clone();
    c.values_mut().iter_mut().for_each(|v| *v = 0.0);
    c
}

enum Src {
    P(usize),
    A(usize),
    H(usize, usize),
    Diag,
}

impl KktSystem {
    /// Lays out K for the given data and cone structure; H starts at zero.
    pub fn assemble(p: &CsrMatrix, a: &CsrMatrix, cones: &ConeSet, mode: PrecisionMode) -> Self {
        let n = p.nrows();
        let m = a.nrows();
        let dim = n + m;

        let mut entries: Vec<(usize, usize, Src)> = Vec::new();
        for (k, (i, j, _)) in p.triplets().enumerate() {
            if i <= j {
                entries.push((i, j, Src::P(k)));
            }
        }
        for (k, (r, c, _)) in a.triplets().enumerate() {
            entries.push((c, n + r, Src::A(k)));
        }
        let mut h_map = Vec::new();
        for (b, blk) in cones.blocks().iter().enumerate() {
            let d = blk.range.len();
            let o = n + blk.range.start;
            if matches!(blk.spec, ConeSpec::Zero(_) | ConeSpec::Nonneg(_)) {
                h_map.push(vec![NONE; d]);
                for i in 0..d {
                    entries.push((o + i, o + i, Src::H(b, i)));
                }
            } else {
                h_map.push(vec![NONE; d * d]);
                for j in 0..d {
                    for i in 0..=j {
                        entries.push((o + i, o + j, Src::H(b, j * d + i)));
                    }
                }
            }
        }
        for i in 0..dim {
            entries.push((i, i, Src::Diag));
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut row_count = vec![0usize; dim];
        let mut colidx = Vec::with_capacity(entries.len());
        let mut p_map = vec![NONE; p.nnz()];
        let mut a_map = vec![NONE; a.nnz()];
        let mut prev = (NONE, NONE);
        for (i, j, src) in entries {
            if (i, j) != prev {
                colidx.push(j);
                row_count[i] += 1;
                prev = (i, j);
            }
            let slot = colidx.len() - 1;
            match src {
                Src::P(k) => p_map[k] = slot,
                Src::A(k) => a_map[k] = slot,
                Src::H(b, k) => h_map[b][k] = slot,
                Src::Diag => {}
            }
        }
        let mut rowptr = vec![0usize; dim + 1];
        for i in 0..dim {
            rowptr[i + 1] = rowptr[i] + row_count[i];
        }

        let (static_reg, dynamic_reg) = mode.default_regularization();
        let mut sys = Self {
            n,
            m,
            values: vec![0.0; colidx.len()],
            values_reduced: Vec::new(),
            rowptr,
            colidx,
            p_pattern: pattern_only(p),
            a_pattern: pattern_only(a),
            p_map,
            a_map,
            h_map,
            mode,
            reg: Regularization { static_reg, dynamic_reg },
            symbolic: None,
            symbolic_count: 0,
            factor: None,
        };
        sys.scatter_p(p);
        sys.scatter_a(a);
        sys.sync_reduced();
        sys
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn mode(&self) -> PrecisionMode {
        self.mode
    }

    pub fn regularization(&self) -> Regularization {
        self.reg
    }

    pub fn set_regularization(&mut self, reg: Regularization) {
        self.reg = reg;
        self.factor = None;
    }

    /// Number of symbolic analyses performed so far.
    pub fn symbolic_count(&self) -> usize {
        self.symbolic_count
    }

    /// Upper triangle of K as `(row, col, value)` triplets.
    pub fn upper_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |i| {
            (self.rowptr[i]..self.rowptr[i + 1]).map(move |k| (i, self.colidx[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out = vec![vec![0.0; d]; d];
        for (i, j, v) in self.upper_triplets() {
            out[i][j] = v;
            out[j][i] = v;
        }
        out
    }

    fn scatter_p(&mut self, p: &CsrMatrix) {
        for (k, &v) in p.values().iter().enumerate() {
            if self.p_map[k] != NONE {
                self.values[self.p_map[k]] = v;
            }
        }
    }

    fn scatter_a(&mut self, a: &CsrMatrix) {
        for (k, &v) in a.values().iter().enumerate() {
            self.values[self.a_map[k]] = v;
        }
    }

    fn sync_reduced(&mut self) {
        if self.mode == PrecisionMode::Mixed {
            self.values_reduced = self.values.iter().map(|&v| v as f32).collect();
        }
    }

    /// Scatters new values; patterns must match the assembled ones.
    /// Factors become stale until the next [`numeric_factor`](Self::numeric_factor).
    pub fn update_values(
        &mut self,
        p: Option<&CsrMatrix>,
        a: Option<&CsrMatrix>,
        h: Option<&[HBlock]>,
    ) -> Result<(), KktError> {
        if let Some(p) = p {
            if !p.same_pattern(&self.p_pattern) {
                return Err(KktError::PatternMismatch("P"));
            }
        }
        if let Some(a) = a {
            if !a.same_pattern(&self.a_pattern) {
                return Err(KktError::PatternMismatch("A"));
            }
        }
        if let Some(h) = h {
            let ok = h.len() == self.h_map.len()
                && h.iter().zip(&self.h_map).all(|(blk, map)| match blk {
                    HBlock::Diagonal(d) => d.len() == map.len(),
                    HBlock::Dense(dm) => dm.len() == map.len() && dm.is_square(),
                });
            if !ok {
                return Err(KktError::PatternMismatch("H"));
            }
        }
        if let Some(p) = p {
            self.scatter_p(p);
        }
        if let Some(a) = a {
            self.scatter_a(a);
        }
        if let Some(h) = h {
            for (blk, map) in h.iter().zip(&self.h_map) {
                match blk {
                    HBlock::Diagonal(d) => {
                        for (v, &slot) in d.iter().zip(map) {
                            self.values[slot] = -v;
                        }
                    }
                    HBlock::Dense(dm) => {
                        for (v, &slot) in dm.iter().zip(map) {
                            if slot != NONE {
                                self.values[slot] = -v;
                            }
                        }
                    }
                }
            }
        }
        self.sync_reduced();
        self.factor = None;
        Ok(())
    }

    /// Computes the fill-reducing permutation and elimination tree. Runs
    /// once; later calls are no-ops.
    pub fn symbolic_factor(&mut self) -> Result<(), KktError> {
        if self.symbolic.is_some() {
            return Ok(());
        }
        let dim = self.dim();
        let (perm, pinv) = ordering::amd_order(dim, self.upper_triplets().map(|(i, j, _)| (i, j)));

        let mut cols: Vec<(usize, usize, usize)> = self
            .upper_triplets()
            .enumerate()
            .map(|(slot, (i, j, _))| {
                let (a, b) = (pinv[i], pinv[j]);
                (a.max(b), a.min(b), slot)
            })
            .collect();
        cols.sort_unstable();
        let mut colptr = vec![0usize; dim + 1];
        let mut rowidx = Vec::with_capacity(cols.len());
        let mut slot_to_csc = vec![0usize; cols.len()];
        for (pos, &(c, r, slot)) in cols.iter().enumerate() {
            colptr[c + 1] += 1;
            rowidx.push(r);
            slot_to_csc[slot] = pos;
        }
        for c in 0..dim {
            colptr[c + 1] += colptr[c];
        }
        let signs = perm.iter().map(|&i| if i < self.n { 1.0 } else { -1.0 }).collect();
        let ldl = LdlSymbolic::new(dim, &colptr, &rowidx)?;
        self.symbolic = Some(Symbolic { perm, colptr, rowidx, slot_to_csc, signs, ldl });
        self.symbolic_count += 1;
        Ok(())
    }

    /// Number of nonzeros in the strictly lower factor L.
    pub fn factor_nnz(&self) -> Option<usize> {
        self.symbolic.as_ref().map(|s| s.ldl.nnz_l())
    }

    /// Fill-reducing permutation: pivot k is original index `perm[k]`.
    pub fn permutation(&self) -> Option<&[usize]> {
        self.symbolic.as_ref().map(|s| s.perm.as_slice())
    }

    fn factor_in<T: FactorFloat>(&self, sym: &Symbolic, vals: &[T]) -> Result<LdlFactor<T>, LdlError> {
        let mut ax = vec![T::zero(); vals.len()];
        for (slot, &pos) in sym.slot_to_csc.iter().enumerate() {
            ax[pos] = vals[slot];
        }
        LdlFactor::factor(&sym.ldl, &sym.colptr, &sym.rowidx, &ax, &sym.signs, self.reg)
    }

    /// LDLᵀ of the regularized, permuted K in the active precision.
    pub fn numeric_factor(&mut self) -> Result<(), KktError> {
        self.symbolic_factor()?;
        let sym = self.symbolic.as_ref().unwrap();
        let f = match self.mode {
            PrecisionMode::Full => Factor::Full(self.factor_in(sym, &self.values)?),
            PrecisionMode::Mixed => Factor::Mixed(self.factor_in(sym, &self.values_reduced)?),
        };
        self.factor = Some(f);
        Ok(())
    }

    /// Pivots of D in permuted order.
    pub fn pivots(&self) -> Option<Vec<f64>> {
        match self.factor.as_ref()? {
            Factor::Full(f) => Some(f.d.clone()),
            Factor::Mixed(f) => Some(f.d.iter().map(|&v| v as f64).collect()),
        }
    }

    /// y = K·x with the unregularized full-precision K.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for i in 0..self.dim() {
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                let j = self.colidx[k];
                let v = self.values[k];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// One pass through the factors: returns K̂⁻¹r.
    fn apply_factor(&self, r: &[f64]) -> Result<Vec<f64>, KktError> {
        let sym = self.symbolic.as_ref().ok_or(KktError::NotFactored)?;
        let f = self.factor.as_ref().ok_or(KktError::NotFactored)?;
        let mut out = vec![0.0; r.len()];
        match f {
            Factor::Full(f) => {
                let mut w: Vec<f64> = sym.perm.iter().map(|&i| r[i]).collect();
                f.solve_in_place(&mut w);
                for (k, &i) in sym.perm.iter().enumerate() {
                    out[i] = w[k];
                }
            }
            Factor::Mixed(f) => {
                let mut w: Vec<f32> = sym.perm.iter().map(|&i| r[i] as f32).collect();
                f.solve_in_place(&mut w);
                for (k, &i) in sym.perm.iter().enumerate() {
                    out[i] = w[k] as f64;
                }
            }
        }
        Ok(out)
    }

    /// Solves Kx = b by iterative refinement from x = 0; returns the iterate
    /// with the smallest residual.
    pub fn solve_refined(&self, b: &[f64], settings: &RefinementSettings) -> Result<(Vec<f64>, RefineInfo), KktError> {
        let tol = settings.t_abs + settings.t_rel * norm_inf(b);
        let mut x = vec![0.0; b.len()];
        let mut r = b.to_vec();
        let mut best = (x.clone(), norm_inf(b));
        let mut info = RefineInfo { steps: 0, residual: best.1, converged: best.1 <= tol, stalled: false };
        if info.converged {
            return Ok((x, info));
        }
        let mut prev = best.1;
        let mut rises = 0;
        for step in 1..=settings.max_steps.max(1) {
            let dx = self.apply_factor(&r)?;
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            let kx = self.mul(&x);
            for i in 0..r.len() {
                r[i] = b[i] - kx[i];
            }
            let rn = norm_inf(&r);
            info.steps = step;
            if !rn.is_finite() {
                break;
            }
            if rn < best.1 {
                best = (x.clone(), rn);
            }
            if rn <= tol {
                break;
            }
            rises = if rn > prev { rises + 1 } else { 0 };
            prev = rn;
            if rises >= 2 {
                info.stalled = true;
                break;
            }
        }
        info.residual = best.1;
        info.converged = best.1 <= tol;
        Ok((best.0, info))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn one_by_one() -> KktSystem {
        let p = CsrMatrix::from_dense(&[vec![2.0]]);
        let a = CsrMatrix::from_dense(&[vec![1.0]]);
        KktSystem::assemble(&p, &a, &ConeSet::new(&[ConeSpec::Nonneg(1)]), PrecisionMode::Full)
    }

    #[test]
    fn block_layout() {
        let mut k = one_by_one();
        k.update_values(None, None, Some(&[HBlock::Diagonal(vec![0.5])])).unwrap();
        let t: Vec<_> = k.upper_triplets().collect();
        assert_eq!(t, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 1, -0.5)]);
    }

    #[test]
    fn soc_block_is_dense() {
        let p = CsrMatrix::zeros(1, 1);
        let a = CsrMatrix::zeros(3, 1);
        let k = KktSystem::assemble(&p, &a, &ConeSet::new(&[ConeSpec::SecondOrder(3)]), PrecisionMode::Full);
        // 1 diagonal for x + 6 upper entries of the 3x3 block
        assert_eq!(k.upper_triplets().count(), 7);
    }

    #[test]
    fn unit_diagonal_solves_in_one_step() {
        let p = CsrMatrix::identity(2);
        let a = CsrMatrix::zeros(1, 2);
        let mut k = KktSystem::assemble(&p, &a, &ConeSet::new(&[ConeSpec::Nonneg(1)]), PrecisionMode::Full);
        k.update_values(None, None, Some(&[HBlock::Diagonal(vec![1.0])])).unwrap();
        k.set_regularization(Regularization { static_reg: 0.0, dynamic_reg: 0.0 });
        k.numeric_factor().unwrap();
        let b = [3.0, -2.0, 7.0];
        let (x, info) = k.solve_refined(&b, &RefinementSettings::default()).unwrap();
        assert_eq!(x, vec![3.0, -2.0, -7.0]);
        assert_eq!(info.steps, 1);
    }

    #[test]
    fn pattern_mismatch() {
        let mut k = one_by_one();
        let a = CsrMatrix::zeros(1, 1);
        assert_eq!(k.update_values(None, Some(&a), None), Err(KktError::PatternMismatch("A")));
    }

    #[test]
    fn symbolic_is_idempotent() {
        let mut k = one_by_one();
        k.symbolic_factor().unwrap();
        k.symbolic_factor().unwrap();
        k.numeric_factor().unwrap();
        assert_eq!(k.symbolic_count(), 1);
    }

    #[test]
    fn arrow_matrix_fill() {
        // 4 x-variables with P = I, one constraint row touching all of them:
        // the constraint row is the arrow spike.
        let p = CsrMatrix::identity(4);
        let a = CsrMatrix::from_dense(&[vec![1.0; 4]]);
        let mut k = KktSystem::assemble(&p, &a, &ConeSet::new(&[ConeSpec::Zero(1)]), PrecisionMode::Full);
        k.symbolic_factor().unwrap();
        assert_eq!(k.factor_nnz(), Some(4));
        assert_eq!(k.permutation().unwrap()[4], 4);
    }

    #[test]
    fn refined_solution_matches_dense() {
        let p = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, -1.0]]);
        let cones = ConeSet::new(&[ConeSpec::Nonneg(2)]);
        for mode in [PrecisionMode::Full, PrecisionMode::Mixed] {
            let mut k = KktSystem::assemble(&p, &a, &cones, mode);
            k.update_values(None, None, Some(&[HBlock::Diagonal(vec![0.7, 1.9])])).unwrap();
            k.numeric_factor().unwrap();
            let b = [1.0, -2.0, 0.5, 3.0];
            let (x, info) = k.solve_refined(&b, &RefinementSettings::default()).unwrap();
            assert!(info.converged, "{mode:?}: {info:?}");
            let dense = DMatrix::from_fn(4, 4, |i, j| k.to_dense()[i][j]);
            let xd = dense.lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
            for i in 0..4 {
                assert!((x[i] - xd[i]).abs() < 1e-10);
            }
        }
    }
}
