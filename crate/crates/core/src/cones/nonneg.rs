//! Nonnegative orthant.

pub(crate) fn barrier(z: &[f64]) -> f64 {
    -z.iter().map(|v| v.ln()).sum::<f64>()
}

pub(crate) fn gradient(z: &[f64], out: &mut [f64]) {
    for (o, v) in out.iter_mut().zip(z) {
        *o = -1.0 / v;
    }
}

pub(crate) fn third_order(z: &[f64], u: &[f64], v: &[f64], out: &mut [f64]) {
    for i in 0..z.len() {
        out[i] = -2.0 * u[i] * v[i] / (z[i] * z[i] * z[i]);
    }
}

pub(crate) fn in_cone(v: &[f64], strict: bool) -> bool {
    if strict {
        v.iter().all(|&x| x > 0.0)
    } else {
        v.iter().all(|&x| x >= 0.0)
    }
}

/// Largest α with `z + α·dz > 0`; infinite when unbounded.
pub(crate) fn step_bound(z: &[f64], dz: &[f64]) -> f64 {
    z.iter()
        .zip(dz)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// ν / ⟨∇f*(s), ∇f(z)⟩ for the whole block.
pub(crate) fn centrality(s: &[f64], z: &[f64]) -> f64 {
    let inner: f64 = s.iter().zip(z).map(|(a, b)| 1.0 / (a * b)).sum();
    s.len() as f64 / inner
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_at_ones() {
        let z = [1.0; 3];
        assert_eq!(barrier(&z), 0.0);
        let mut g = [0.0; 3];
        gradient(&z, &mut g);
        assert_eq!(g, [-1.0; 3]);
    }

    #[test]
    fn raw_step_bound() {
        assert_eq!(step_bound(&[1.0], &[-2.0]), 0.5);
        assert_eq!(step_bound(&[1.0], &[2.0]), f64::INFINITY);
    }

    #[test]
    fn central_point_ratio_is_mu() {
        let mu = 0.3;
        let z = [0.5, 2.0, 4.0];
        let s: Vec<f64> = z.iter().map(|v| mu / v).collect();
        assert!((centrality(&s, &z) - mu).abs() < 1e-15);
    }
}
