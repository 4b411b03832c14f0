//! Cone aggregation/reordering and Ruiz equilibration.

use crate::problem::{ConeFamily, ConeSpec, ProblemData};
use crate::sparse::norm_inf;

/// Bounds applied to every cumulative scaling factor.
pub const SCALE_MIN: f64 = 1e-4;
pub const SCALE_MAX: f64 = 1e4;

/// Diagonal scalings applied by [`equilibrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibration {
    pub d_row: Vec<f64>,
    pub d_col: Vec<f64>,
    pub c_obj: f64,
}

impl Equilibration {
    pub fn identity(n: usize, m: usize) -> Self {
        Self { d_row: vec![1.0; m], d_col: vec![1.0; n], c_obj: 1.0 }
    }
}

/// Merges all zero cones and all nonnegative cones into single leading
/// blocks and groups the rest by family. Returns the reordered problem
/// and `perm`, where new row `k` is original row `perm[k]`.
pub fn reorder_cones(problem: &ProblemData) -> (ProblemData, Vec<usize>) {
    let mut offsets = Vec::with_capacity(problem.cones.len());
    let mut off = 0;
    for c in &problem.cones {
        offsets.push(off);
        off += c.dim();
    }

    let order = [
        ConeFamily::Zero,
        ConeFamily::Nonneg,
        ConeFamily::SecondOrder,
        ConeFamily::Exponential,
        ConeFamily::Power,
        ConeFamily::Psd,
    ];
    let mut perm = Vec::with_capacity(problem.m());
    let mut cones = Vec::new();
    for fam in order {
        let mut merged = 0;
        for (c, &start) in problem.cones.iter().zip(&offsets) {
            if c.family() != fam {
                continue;
            }
            perm.extend(start..start + c.dim());
            match fam {
                ConeFamily::Zero | ConeFamily::Nonneg => merged += c.dim(),
                _ => cones.push(*c),
            }
        }
        if merged > 0 {
            cones.push(match fam {
                ConeFamily::Zero => ConeSpec::Zero(merged),
                _ => ConeSpec::Nonneg(merged),
            });
        }
    }

    let reordered = ProblemData {
        p: problem.p.clone(),
        a: problem.a.permute_rows(&perm),
        q: problem.q.clone(),
        b: perm.iter().map(|&i| problem.b[i]).collect(),
        cones,
    };
    (reordered, perm)
}

/// Row ranges that must share one scaling factor.
fn uniform_blocks(cones: &[ConeSpec]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut off = 0;
    for c in cones {
        let d = c.dim();
        if !matches!(c, ConeSpec::Zero(_) | ConeSpec::Nonneg(_)) {
            out.push(off..off + d);
        }
        off += d;
    }
    out
}

fn inv_sqrt_or_one(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        1.0 / v.sqrt()
    } else {
        1.0
    }
}

/// Ruiz equilibration of `[P Aᵀ; A 0]` followed by cost scaling.
pub fn equilibrate(problem: &ProblemData, iters: usize) -> (ProblemData, Equilibration) {
    let n = problem.n();
    let m = problem.m();
    let blocks = uniform_blocks(&problem.cones);
    let mut d_col = vec![1.0; n];
    let mut d_row = vec![1.0; m];
    let mut p = problem.p.clone();
    let mut a = problem.a.clone();

    for _ in 0..iters {
        let mut col_norm = vec![0.0f64; n];
        let mut row_norm = vec![0.0f64; m];
        for (_, j, v) in p.triplets() {
            col_norm[j] = col_norm[j].max(v.abs());
        }
        for (i, j, v) in a.triplets() {
            col_norm[j] = col_norm[j].max(v.abs());
            row_norm[i] = row_norm[i].max(v.abs());
        }
        let dc: Vec<f64> = col_norm.iter().map(|&v| inv_sqrt_or_one(v)).collect();
        let mut dr: Vec<f64> = row_norm.iter().map(|&v| inv_sqrt_or_one(v)).collect();
        for r in &blocks {
            let mean = dr[r.clone()].iter().sum::<f64>() / r.len() as f64;
            dr[r.clone()].iter_mut().for_each(|v| *v = mean);
        }

        // Clip the cumulative factors, then take the effective step.
        for (cum, d) in d_col.iter_mut().zip(dc.iter()) {
            *cum = (*cum * d).clamp(SCALE_MIN, SCALE_MAX);
        }
        for (cum, d) in d_row.iter_mut().zip(dr.iter()) {
            *cum = (*cum * d).clamp(SCALE_MIN, SCALE_MAX);
        }
        p = problem.p.scaled(&d_col, &d_col);
        a = problem.a.scaled(&d_row, &d_col);
    }

    let q_scaled: Vec<f64> = problem.q.iter().zip(&d_col).map(|(q, d)| q * d).collect();
    let qn = norm_inf(&q_scaled);
    let c_obj = if qn > 0.0 { (1.0 / qn).clamp(SCALE_MIN, SCALE_MAX) } else { 1.0 };

    p.scale_values(c_obj);
    let scaled = ProblemData {
        p,
        a,
        q: q_scaled.iter().map(|v| v * c_obj).collect(),
        b: problem.b.iter().zip(&d_row).map(|(b, d)| b * d).collect(),
        cones: problem.cones.clone(),
    };
    (scaled, Equilibration { d_row, d_col, c_obj })
}

/// Maps an iterate of the scaled problem back to the original one.
pub fn unscale_solution(
    x: &[f64],
    z: &[f64],
    s: &[f64],
    e: &Equilibration,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x = x.iter().zip(&e.d_col).map(|(x, d)| x * d).collect();
    let z = z.iter().zip(&e.d_row).map(|(z, d)| z * d / e.c_obj).collect();
    let s = s.iter().zip(&e.d_row).map(|(s, d)| s / d).collect();
    (x, z, s)
}

/// Inverse of [`unscale_solution`].
pub fn scale_solution(
    x: &[f64],
    z: &[f64],
    s: &[f64],
    e: &Equilibration,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x = x.iter().zip(&e.d_col).map(|(x, d)| x / d).collect();
    let z = z.iter().zip(&e.d_row).map(|(z, d)| z * e.c_obj / d).collect();
    let s = s.iter().zip(&e.d_row).map(|(s, d)| s * d).collect();
    (x, z, s)
}

/// Applies `perm` (new row k = old row perm[k]) in reverse.
pub fn unpermute(v: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (k, &i) in perm.iter().enumerate() {
        out[i] = v[k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    fn lp(a: CsrMatrix, cones: Vec<ConeSpec>) -> ProblemData {
        let n = a.ncols();
        let m = a.nrows();
        ProblemData {
            p: CsrMatrix::zeros(n, n),
            a,
            q: vec![1.0; n],
            b: (0..m).map(|i| i as f64).collect(),
            cones,
        }
    }

    #[test]
    fn aggregation_moves_zero_rows_first() {
        let a = CsrMatrix::from_dense(&(0..6).map(|i| vec![i as f64 + 1.0]).collect::<Vec<_>>());
        let p = lp(a, vec![ConeSpec::Nonneg(2), ConeSpec::Zero(1), ConeSpec::Nonneg(3)]);
        let (r, perm) = reorder_cones(&p);
        assert_eq!(r.cones, vec![ConeSpec::Zero(1), ConeSpec::Nonneg(5)]);
        assert_eq!(perm, vec![2, 0, 1, 3, 4, 5]);
        assert_eq!(r.b, vec![2.0, 0.0, 1.0, 3.0, 4.0, 5.0]);
        assert_eq!(r.a.get(0, 0), 3.0);
    }

    #[test]
    fn family_grouping() {
        let p = lp(
            CsrMatrix::zeros(9, 1),
            vec![ConeSpec::Exponential, ConeSpec::SecondOrder(3), ConeSpec::Exponential],
        );
        let (r, perm) = reorder_cones(&p);
        assert_eq!(
            r.cones,
            vec![ConeSpec::SecondOrder(3), ConeSpec::Exponential, ConeSpec::Exponential]
        );
        assert_eq!(perm, vec![3, 4, 5, 0, 1, 2, 6, 7, 8]);
    }

    #[test]
    fn ordered_input_is_fixed_point() {
        let p = lp(
            CsrMatrix::zeros(6, 1),
            vec![ConeSpec::Zero(1), ConeSpec::Nonneg(2), ConeSpec::SecondOrder(3)],
        );
        let (r, perm) = reorder_cones(&p);
        assert_eq!(perm, (0..6).collect::<Vec<_>>());
        assert_eq!(r, p);
    }

    #[test]
    fn ones_problem_is_already_equilibrated() {
        let p = ProblemData {
            p: CsrMatrix::from_dense(&[vec![1.0]]),
            a: CsrMatrix::from_dense(&[vec![1.0]]),
            q: vec![1.0],
            b: vec![1.0],
            cones: vec![ConeSpec::Nonneg(1)],
        };
        let (s, e) = equilibrate(&p, 10);
        assert_eq!(e.d_row, vec![1.0]);
        assert_eq!(e.d_col, vec![1.0]);
        assert_eq!(e.c_obj, 1.0);
        assert_eq!(s, p);
    }

    #[test]
    fn ruiz_equalizes_max_norms() {
        let p = lp(
            CsrMatrix::from_dense(&[vec![10.0, 0.0], vec![0.0, 0.1]]),
            vec![ConeSpec::Nonneg(1), ConeSpec::Nonneg(1)],
        );
        let (s, _) = equilibrate(&p, 10);
        for i in 0..2 {
            let row_max = s.a.row(i).map(|(_, v)| v.abs()).fold(0.0, f64::max);
            assert!((row_max - 1.0).abs() < 0.1, "row {i}: {row_max}");
        }
        let at = s.a.transpose();
        for j in 0..2 {
            let col_max = at.row(j).map(|(_, v)| v.abs()).fold(0.0, f64::max);
            assert!((col_max - 1.0).abs() < 0.1, "col {j}: {col_max}");
        }
    }

    #[test]
    fn soc_block_rows_share_scale() {
        let a = CsrMatrix::from_dense(&[vec![100.0, 0.0], vec![0.0, 1.0], vec![0.01, 0.5]]);
        let p = lp(a, vec![ConeSpec::SecondOrder(3)]);
        let (_, e) = equilibrate(&p, 10);
        assert_eq!(e.d_row[0], e.d_row[1]);
        assert_eq!(e.d_row[1], e.d_row[2]);
    }

    #[test]
    fn unscale_doubles_x() {
        let e = Equilibration { d_row: vec![1.0], d_col: vec![2.0, 1.0], c_obj: 1.0 };
        let (x, z, s) = unscale_solution(&[1.0, 1.0], &[3.0], &[4.0], &e);
        assert_eq!(x, vec![2.0, 1.0]);
        assert_eq!(z, vec![3.0]);
        assert_eq!(s, vec![4.0]);
        let (x2, z2, s2) = scale_solution(&x, &z, &s, &e);
        assert_eq!((x2, z2, s2), (vec![1.0, 1.0], vec![3.0], vec![4.0]));
    }

    #[test]
    fn unpermute_inverts() {
        let perm = vec![2, 0, 1];
        let v = vec![10.0, 20.0, 30.0];
        let permuted: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        assert_eq!(unpermute(&permuted, &perm), v);
    }
}
