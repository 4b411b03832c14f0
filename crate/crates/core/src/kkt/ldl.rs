//! Up-looking sparse LDLᵀ on an upper-triangular CSC matrix, with static
//! and dynamic diagonal regularization for quasi-definite systems.

use num_traits::Float;
use thiserror::Error;

const NONE: usize = usize::MAX;

/// Floating-point widths the factorization can run in.
pub trait FactorFloat: Float + Send + Sync + std::fmt::Debug + 'static {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl FactorFloat for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl FactorFloat for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdlError {
    #[error("input is not upper triangular (entry ({row}, {col}))")]
    NotUpper { row: usize, col: usize },
    #[error("missing diagonal entry in column {0}")]
    MissingDiagonal(usize),
    #[error("zero pivot at {0}")]
    ZeroPivot(usize),
}

/// Elimination tree and column pointers of L.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlSymbolic {
    pub etree: Vec<usize>,
    pub lp: Vec<usize>,
}

impl LdlSymbolic {
    pub fn new(n: usize, ap: &[usize], ai: &[usize]) -> Result<Self, LdlError> {
        let mut work = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut etree = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            let mut has_diag = false;
            for &row in &ai[ap[j]..ap[j + 1]] {
                if row > j {
                    return Err(LdlError::NotUpper { row, col: j });
                }
                if row == j {
                    has_diag = true;
                }
                let mut i = row;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
            if !has_diag {
                return Err(LdlError::MissingDiagonal(j));
            }
        }
        let mut lp = Vec::with_capacity(n + 1);
        lp.push(0);
        for c in lnz {
            lp.push(lp.last().unwrap() + c);
        }
        Ok(Self { etree, lp })
    }

    pub fn nnz_l(&self) -> usize {
        *self.lp.last().unwrap()
    }
}

/// Regularization parameters: every pivot gets `sign·static_reg`; a pivot
/// with `sign·d < static_reg + dynamic_reg·max|D|` (running maximum over
/// earlier pivots) is replaced by `sign·(static_reg + dynamic_reg·max|D|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub static_reg: f64,
    pub dynamic_reg: f64,
}

#[derive(Debug, Clone)]
pub struct LdlFactor<T> {
    pub lp: Vec<usize>,
    pub li: Vec<usize>,
    pub lx: Vec<T>,
    pub d: Vec<T>,
    dinv: Vec<T>,
    pub dynamic_bumps: usize,
}

impl<T: FactorFloat> LdlFactor<T> {
    /// Factors the upper-triangular CSC matrix `(ap, ai, ax)`. `signs[k]`
    /// is +1 or −1 and sets the expected sign of pivot k.
    pub fn factor(
        sym: &LdlSymbolic,
        ap: &[usize],
        ai: &[usize],
        ax: &[T],
        signs: &[f64],
        reg: Regularization,
    ) -> Result<Self, LdlError> {
        let n = sym.etree.len();
        let nnz = sym.nnz_l();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![T::zero(); nnz];
        let mut d = vec![T::zero(); n];
        let mut dinv = vec![T::zero(); n];
        let mut next = sym.lp[..n].to_vec();
        let mut y = vec![T::zero(); n];
        let mut marked = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut dmax = 0.0f64;
        let mut bumps = 0;
        let static_reg = T::from_f64(reg.static_reg);

        for k in 0..n {
            let sign = T::from_f64(signs[k]);
            let mut nnz_y = 0;
            for p in ap[k]..ap[k + 1] {
                let b = ai[p];
                if b == k {
                    d[k] = ax[p];
                    continue;
                }
                y[b] = ax[p];
                if !marked[b] {
                    marked[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut nx = sym.etree[b];
                    while nx != NONE && nx < k {
                        if marked[nx] {
                            break;
                        }
                        marked[nx] = true;
                        elim[ne] = nx;
                        ne += 1;
                        nx = sym.etree[nx];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            d[k] = d[k] + sign * static_reg;

            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let yc = y[c];
                let end = next[c];
                for j in sym.lp[c]..end {
                    y[li[j]] = y[li[j]] - lx[j] * yc;
                }
                li[end] = k;
                lx[end] = yc * dinv[c];
                d[k] = d[k] - yc * lx[end];
                next[c] += 1;
                y[c] = T::zero();
                marked[c] = false;
            }

            let threshold = reg.static_reg + reg.dynamic_reg * dmax;
            if (signs[k] * d[k].to_f64()) < threshold {
                d[k] = sign * T::from_f64(threshold);
                bumps += 1;
            }
            if d[k] == T::zero() || !d[k].is_finite() {
                return Err(LdlError::ZeroPivot(k));
            }
            dmax = dmax.max(d[k].to_f64().abs());
            dinv[k] = T::one() / d[k];
        }
        Ok(Self { lp: sym.lp.clone(), li, lx, d, dinv, dynamic_bumps: bumps })
    }

    /// Solves L D Lᵀ x = b in place.
    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.d.len();
        for i in 0..n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] = x[self.li[j]] - self.lx[j] * xi;
            }
        }
        for i in 0..n {
            x[i] = x[i] * self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc = acc - self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOREG: Regularization = Regularization { static_reg: 0.0, dynamic_reg: 0.0 };

    #[test]
    fn diagonal_factor() {
        let ap = [0, 1, 2];
        let ai = [0, 1];
        let sym = LdlSymbolic::new(2, &ap, &ai).unwrap();
        assert_eq!(sym.nnz_l(), 0);
        let f = LdlFactor::<f64>::factor(&sym, &ap, &ai, &[2.0, -3.0], &[1.0, -1.0], NOREG).unwrap();
        assert_eq!(f.d, vec![2.0, -3.0]);
    }

    #[test]
    fn two_by_two_quasidefinite() {
        // [[4, 2], [2, -2]]
        let ap = [0, 1, 3];
        let ai = [0, 0, 1];
        let sym = LdlSymbolic::new(2, &ap, &ai).unwrap();
        let f = LdlFactor::<f64>::factor(&sym, &ap, &ai, &[4.0, 2.0, -2.0], &[1.0, -1.0], NOREG).unwrap();
        assert_eq!(f.lx, vec![0.5]);
        assert_eq!(f.d, vec![4.0, -3.0]);
        let mut x = [6.0, 0.0];
        f.solve_in_place(&mut x);
        // 4a + 2b = 6, 2a − 2b = 0 ⇒ a = b = 1
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_pivot_is_regularized() {
        let ap = [0, 1, 2];
        let ai = [0, 1];
        let sym = LdlSymbolic::new(2, &ap, &ai).unwrap();
        let reg = Regularization { static_reg: 1e-8, dynamic_reg: 1e-10 };
        let f = LdlFactor::<f64>::factor(&sym, &ap, &ai, &[1.0, 0.0], &[1.0, -1.0], reg).unwrap();
        let expect = -(1e-8 + 1e-10 * (1.0 + 1e-8));
        assert!((f.d[1] - expect).abs() < 1e-22);
        assert_eq!(f.dynamic_bumps, 1);
    }

    #[test]
    fn missing_diagonal_rejected() {
        assert_eq!(LdlSymbolic::new(2, &[0, 1, 2], &[0, 0]), Err(LdlError::MissingDiagonal(1)));
    }
}
