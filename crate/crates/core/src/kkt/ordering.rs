//! Fill-reducing ordering.

/// Approximate minimum degree ordering of a symmetric pattern given by its
/// upper-triangle entries `(row, col)`. Returns `(perm, pinv)` where pivot
/// `k` is original index `perm[k]`. Falls back to the natural order if the
/// ordering routine rejects the input.
pub fn amd_order(n: usize, upper: impl Iterator<Item = (usize, usize)>) -> (Vec<usize>, Vec<usize>) {
    // Diagonal entries are ignored by the ordering but keep nnz ≥ n, which
    // the routine assumes.
    let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
    for (i, j) in upper {
        if i != j {
            cols[j].push(i);
            cols[i].push(j);
        }
    }
    let mut ap = Vec::with_capacity(n + 1);
    let mut ai = Vec::new();
    ap.push(0usize);
    for c in &mut cols {
        c.sort_unstable();
        c.dedup();
        ai.extend_from_slice(c);
        ap.push(ai.len());
    }
    match amd::order(n, &ap, &ai, &amd::Control::default()) {
        Ok((p, pinv, _)) => (p, pinv),
        Err(_) => ((0..n).collect(), (0..n).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pattern_is_a_permutation() {
        let (p, pinv) = amd_order(4, (0..4).map(|i| (i, i)));
        for k in 0..4 {
            assert_eq!(pinv[p[k]], k);
        }
    }

    #[test]
    fn arrow_spike_goes_last() {
        // dense row/column 0 of a 5x5 arrow matrix
        let (p, _) = amd_order(5, (0..5).map(|j| (0, j)));
        assert_eq!(p[4], 0);
    }
}
