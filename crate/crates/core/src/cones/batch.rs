//! Batched SOC residuals t² − ‖u‖² with a fixed reduction order.
//!
//! Squares are summed sequentially within chunks of [`CHUNK`] entries; the
//! chunk sums are then combined pairwise level by level, an odd trailing
//! element being carried unchanged to the next level. The order depends
//! only on the cone dimension, so results are identical whether chunks and
//! cones are processed serially or in parallel.

use rayon::prelude::*;

pub const CHUNK: usize = 8;

/// Chunk count above which a single cone's chunks are summed in parallel.
const PAR_CHUNKS: usize = 64;

fn chunk_sum(c: &[f64]) -> f64 {
    let mut acc = 0.0;
    for v in c {
        acc += v * v;
    }
    acc
}

fn tree_reduce(mut level: Vec<f64>) -> f64 {
    if level.is_empty() {
        return 0.0;
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            next.push(if pair.len() == 2 { pair[0] + pair[1] } else { pair[0] });
        }
        level = next;
    }
    level[0]
}

/// ‖u‖² in the fixed reduction order.
pub fn sum_squares(u: &[f64]) -> f64 {
    let nchunks = u.len().div_ceil(CHUNK);
    let partial: Vec<f64> = if nchunks >= PAR_CHUNKS {
        u.par_chunks(CHUNK).map(chunk_sum).collect()
    } else {
        u.chunks(CHUNK).map(chunk_sum).collect()
    };
    tree_reduce(partial)
}

/// t² − ‖u‖² for one cone stored as (t, u).
pub fn soc_residual(x: &[f64]) -> f64 {
    x[0] * x[0] - sum_squares(&x[1..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        assert_eq!(soc_residual(&[5.0, 3.0, 4.0]), 0.0);
        assert_eq!(soc_residual(&[2.0, 1.0, 1.0]), 2.0);
    }

    #[test]
    fn tree_shape_for_odd_chunk_count() {
        // three chunks: (c0 + c1) + c2
        let u: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
        let c: Vec<f64> = u.chunks(8).map(chunk_sum).collect();
        assert_eq!(sum_squares(&u), (c[0] + c[1]) + c[2]);
    }
}
