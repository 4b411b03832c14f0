mod common;

use common::*;
use conic_core::cones::{
    block_barrier, block_conjugate_point, block_gradient, block_hessian, block_in_cone, block_third_order,
    soc_residual, StepLengthRequest,
};
use conic_core::{ConeSet, ConeSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// A barrier block with a strictly interior point of its dual cone.
fn barrier_case() -> impl Strategy<Value = (ConeSpec, Vec<f64>)> {
    prop_oneof![
        (1usize..6).prop_flat_map(|d| nonneg_point(d).prop_map(move |z| (ConeSpec::Nonneg(d), z))),
        (2usize..7).prop_flat_map(|d| soc_point(d).prop_map(move |z| (ConeSpec::SecondOrder(d), z))),
        (1usize..4).prop_flat_map(|n| psd_point(n).prop_map(move |z| (ConeSpec::PsdTriangle(n), z))),
        exp_dual_point().prop_map(|z| (ConeSpec::Exponential, z)),
        (0.1..0.9f64).prop_flat_map(|a| pow_dual_point(a).prop_map(move |z| (ConeSpec::Power(a), z))),
    ]
}

/// Symmetric block with a primal–dual interior pair.
fn symmetric_pair() -> impl Strategy<Value = (ConeSpec, Vec<f64>, Vec<f64>)> {
    prop_oneof![
        (1usize..6).prop_flat_map(|d| (nonneg_point(d), nonneg_point(d)).prop_map(move |(s, z)| (ConeSpec::Nonneg(d), s, z))),
        (2usize..7).prop_flat_map(|d| (soc_point(d), soc_point(d)).prop_map(move |(s, z)| (ConeSpec::SecondOrder(d), s, z))),
        (1usize..4).prop_flat_map(|n| (psd_point(n), psd_point(n)).prop_map(move |(s, z)| (ConeSpec::PsdTriangle(n), s, z))),
    ]
}

fn nonsym_pair() -> impl Strategy<Value = (ConeSpec, Vec<f64>, Vec<f64>)> {
    prop_oneof![
        (exp_primal_point(), exp_dual_point()).prop_map(|(s, z)| (ConeSpec::Exponential, s, z)),
        (0.1..0.9f64).prop_flat_map(|a| (pow_primal_point(a), pow_dual_point(a)).prop_map(move |(s, z)| (ConeSpec::Power(a), s, z))),
    ]
}

fn dir(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, d)
}

fn add(z: &[f64], h: f64, e: &[f64]) -> Vec<f64> {
    z.iter().zip(e).map(|(a, b)| a + h * b).collect()
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn logarithmic_homogeneity((spec, z) in barrier_case(), t in 0.2..5.0f64) {
        let g = block_gradient(&spec, &z).unwrap();
        let nu = spec.degree() as f64;
        let gz: f64 = g.iter().zip(&z).map(|(a, b)| a * b).sum();
        prop_assert!((gz + nu).abs() <= 1e-9 * nu, "⟨∇f(z), z⟩ = {gz}, ν = {nu}");
        let zt: Vec<f64> = z.iter().map(|v| v * t).collect();
        let gt = block_gradient(&spec, &zt).unwrap();
        for (a, b) in gt.iter().zip(&g) {
            prop_assert!((a - b / t).abs() <= 1e-9 * (1.0 + b.abs() / t));
        }
    }

    #[test]
    fn gradient_matches_finite_differences((spec, z) in barrier_case()) {
        let g = block_gradient(&spec, &z).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..z.len()).map(|i| {
            let mut e = vec![0.0; z.len()];
            e[i] = 1.0;
            let fp = block_barrier(&spec, &add(&z, h, &e)).unwrap();
            let fm = block_barrier(&spec, &add(&z, -h, &e)).unwrap();
            (fp - fm) / (2.0 * h)
        }).collect();
        prop_assert!(rel(max_diff(&g, &fd), norm_inf(&g)) <= 1e-6, "{g:?} vs {fd:?}");
    }

    #[test]
    fn hessian_matches_finite_differences((spec, z) in barrier_case()) {
        let hm = block_hessian(&spec, &z).unwrap();
        let h = 1e-6;
        let d = z.len();
        let fd = DMatrix::from_fn(d, d, |i, j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            let gp = block_gradient(&spec, &add(&z, h, &e)).unwrap();
            let gm = block_gradient(&spec, &add(&z, -h, &e)).unwrap();
            (gp[i] - gm[i]) / (2.0 * h)
        });
        prop_assert!(rel((&hm - &fd).amax(), hm.amax()) <= 1e-5, "{hm} vs {fd}");
    }

    #[test]
    fn third_order_matches_finite_differences(
        (spec, z, u, v) in barrier_case().prop_flat_map(|(s, z)| {
            let d = z.len();
            (Just(s), Just(z), dir(d), dir(d))
        })
    ) {
        let t = block_third_order(&spec, &z, &u, &v).unwrap();
        let h = 1e-5;
        let hp = block_hessian(&spec, &add(&z, h, &u)).unwrap();
        let hm = block_hessian(&spec, &add(&z, -h, &u)).unwrap();
        let fd = (hp - hm) / (2.0 * h) * nalgebra::DVector::from_column_slice(&v);
        prop_assert!(rel(max_diff(&t, fd.as_slice()), norm_inf(&t)) <= 1e-4, "{t:?} vs {fd}");
    }

    #[test]
    fn conjugate_point_inverts_gradient((spec, s, _z) in nonsym_pair()) {
        let zt = block_conjugate_point(&spec, &s).unwrap();
        let back: Vec<f64> = block_gradient(&spec, &zt).unwrap().iter().map(|v| -v).collect();
        prop_assert!(rel(max_diff(&back, &s), norm_inf(&s)) <= 1e-8, "{back:?} vs {s:?}");
    }

    #[test]
    fn nt_scaling_maps_z_to_s((spec, s, z) in symmetric_pair()) {
        let cones = ConeSet::new(&[spec]);
        let st = cones.update_scaling(&s, &z, 1.0).unwrap();
        let hz = st.apply_h(&cones, &z);
        prop_assert!(max_diff(&hz, &s) <= 1e-10 * (1.0 + norm_inf(&s)), "{hz:?} vs {s:?}");
    }

    #[test]
    fn bfgs_scaling_identities((spec, s, z) in nonsym_pair()) {
        let cones = ConeSet::new(&[spec]);
        let mu = s.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() / 3.0;
        let st = cones.update_scaling(&s, &z, mu).unwrap();
        let hz = st.apply_h(&cones, &z);
        prop_assert!(max_diff(&hz, &s) <= 1e-8 * (1.0 + norm_inf(&s)));
        let (s_tilde, z_tilde) = st.nonsym_shadow(0).unwrap();
        let hzt = st.apply_h(&cones, &z_tilde);
        prop_assert!(max_diff(&hzt, &s_tilde) <= 1e-8 * (1.0 + norm_inf(&s_tilde)), "{hzt:?} vs {s_tilde:?}");
    }

    #[test]
    fn scaling_blocks_are_positive_definite(
        s in (nonneg_point(2), soc_point(3), exp_primal_point(), pow_primal_point(0.35), psd_point(2)),
        z in (nonneg_point(2), soc_point(3), exp_dual_point(), pow_dual_point(0.35), psd_point(2)),
    ) {
        let cones = ConeSet::new(&[
            ConeSpec::Nonneg(2),
            ConeSpec::SecondOrder(3),
            ConeSpec::Exponential,
            ConeSpec::Power(0.35),
            ConeSpec::PsdTriangle(2),
        ]);
        let s: Vec<f64> = [s.0, s.1, s.2, s.3, s.4].concat();
        let z: Vec<f64> = [z.0, z.1, z.2, z.3, z.4].concat();
        let mu = s.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() / cones.degree() as f64;
        let h = cones.update_scaling(&s, &z, mu).unwrap().dense_h(&cones);
        prop_assert!((&h - h.transpose()).amax() <= 1e-12 * h.amax());
        prop_assert!(h.cholesky().is_some());
    }

    #[test]
    fn step_length_is_exact_on_symmetric_blocks(
        (spec, z, dz) in symmetric_pair().prop_flat_map(|(spec, _, z)| {
            let d = z.len();
            (Just(spec), Just(z), prop::collection::vec(-4.0..1.0f64, d))
        })
    ) {
        let cones = ConeSet::new(&[spec]);
        let zero = vec![0.0; z.len()];
        let req = StepLengthRequest {
            z: &z, s: &z, tau: 1.0, kappa: 1.0, dz: &dz, ds: &zero,
            dtau: 0.0, dkappa: 0.0, alpha_max: 1e6, backtrack: 0.8,
        };
        let alpha = cones.step_length(&req).unwrap();
        prop_assume!(alpha < 1e6);
        prop_assert!(block_in_cone(&spec, &add(&z, alpha * (1.0 - 1e-9), &dz), true));
        prop_assert!(!block_in_cone(&spec, &add(&z, alpha * (1.0 + 1e-6), &dz), false));
    }
}

/// ‖u‖² in the documented order: sequential within chunks of eight,
/// then pairwise across chunks with odd tails carried up.
fn oracle(x: &[f64]) -> f64 {
    let mut level: Vec<f64> = x[1..]
        .chunks(8)
        .map(|c| {
            let mut acc = 0.0;
            for v in c {
                acc += v * v;
            }
            acc
        })
        .collect();
    while level.len() > 1 {
        level = level.chunks(2).map(|p| if p.len() == 2 { p[0] + p[1] } else { p[0] }).collect();
    }
    x[0] * x[0] - level.first().copied().unwrap_or(0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn batched_soc_residuals_are_bitwise_sequential(
        dims in prop::collection::vec(2usize..600, 1..120),
        seed in any::<u64>(),
    ) {
        let cones = ConeSet::new(&dims.iter().map(|&d| ConeSpec::SecondOrder(d)).collect::<Vec<_>>());
        let mut rng = conic_core::generators::GenRng::new(seed);
        let x = rng.normals(cones.m());
        let batch = cones.soc_residuals_batch(&x);
        let mut off = 0;
        for (k, &d) in dims.iter().enumerate() {
            let seq = oracle(&x[off..off + d]);
            prop_assert_eq!(batch[k].to_bits(), seq.to_bits());
            prop_assert_eq!(soc_residual(&x[off..off + d]).to_bits(), seq.to_bits());
            off += d;
        }
    }
}
