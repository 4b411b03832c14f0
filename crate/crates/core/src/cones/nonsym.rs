//! Exponential and power cones. The barrier is the dual-side function
//! f(z) = −log ψ(z) − Σ cᵢ·log|zᵢ|, so everything here takes z ∈ 𝒦*.

use nalgebra::{Matrix2, Matrix3, Vector3};

/// Interior point shared by the primal and dual exponential cones.
pub const EXP_CENTRAL: [f64; 3] = [-1.051383945322714, 0.556409619469370, 1.258967884768947];

pub(crate) fn pow_central(alpha: f64) -> [f64; 3] {
    [(1.0 + alpha).sqrt(), (2.0 - alpha).sqrt(), 0.0]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kind {
    Exp,
    Pow(f64),
}

impl Kind {
    pub fn central(self) -> [f64; 3] {
        match self {
            Kind::Exp => EXP_CENTRAL,
            Kind::Pow(a) => pow_central(a),
        }
    }

    fn log_coeffs(self) -> [f64; 3] {
        match self {
            Kind::Exp => [1.0, 0.0, 1.0],
            Kind::Pow(a) => [1.0 - a, a, 0.0],
        }
    }
}

/// ψ with its first three derivatives; `t[i]` is the Hessian of ∂ψ/∂zᵢ.
struct Psi {
    val: f64,
    g: Vector3<f64>,
    h: Matrix3<f64>,
    t: [Matrix3<f64>; 3],
}

fn psi(kind: Kind, z: &[f64]) -> Option<Psi> {
    match kind {
        Kind::Exp => {
            let (u, v, w) = (z[0], z[1], z[2]);
            if !(u < 0.0 && w > 0.0) {
                return None;
            }
            let l = (-u / w).ln();
            let val = v - u + u * l;
            if !(val > 0.0) {
                return None;
            }
            let g = Vector3::new(l, 1.0, -u / w);
            let h = Matrix3::new(1.0 / u, 0.0, -1.0 / w, 0.0, 0.0, 0.0, -1.0 / w, 0.0, u / (w * w));
            let w2 = w * w;
            let t0 = Matrix3::new(-1.0 / (u * u), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / w2);
            let t2 = Matrix3::new(0.0, 0.0, 1.0 / w2, 0.0, 0.0, 0.0, 1.0 / w2, 0.0, -2.0 * u / (w2 * w));
            Some(Psi { val, g, h, t: [t0, Matrix3::zeros(), t2] })
        }
        Kind::Pow(alpha) => {
            let (x, y, w) = (z[0], z[1], z[2]);
            if !(x > 0.0 && y > 0.0) {
                return None;
            }
            let a = 2.0 * alpha;
            let b = 2.0 * (1.0 - alpha);
            let phi = (a * (x / alpha).ln() + b * (y / (1.0 - alpha)).ln()).exp();
            let val = phi - w * w;
            if !(val > 0.0) {
                return None;
            }
            let g = Vector3::new(a * phi / x, b * phi / y, -2.0 * w);
            let p11 = a * (a - 1.0) * phi / (x * x);
            let p12 = a * b * phi / (x * y);
            let p22 = b * (b - 1.0) * phi / (y * y);
            let h = Matrix3::new(p11, p12, 0.0, p12, p22, 0.0, 0.0, 0.0, -2.0);
            let p111 = a * (a - 1.0) * (a - 2.0) * phi / (x * x * x);
            let p112 = a * (a - 1.0) * b * phi / (x * x * y);
            let p122 = a * b * (b - 1.0) * phi / (x * y * y);
            let p222 = b * (b - 1.0) * (b - 2.0) * phi / (y * y * y);
            let t0 = Matrix3::new(p111, p112, 0.0, p112, p122, 0.0, 0.0, 0.0, 0.0);
            let t1 = Matrix3::new(p112, p122, 0.0, p122, p222, 0.0, 0.0, 0.0, 0.0);
            Some(Psi { val, g, h, t: [t0, t1, Matrix3::zeros()] })
        }
    }
}

pub(crate) fn barrier(kind: Kind, z: &[f64]) -> Option<f64> {
    let p = psi(kind, z)?;
    let c = kind.log_coeffs();
    let logs: f64 = (0..3).filter(|&i| c[i] != 0.0).map(|i| c[i] * z[i].abs().ln()).sum();
    Some(-p.val.ln() - logs)
}

pub(crate) fn gradient(kind: Kind, z: &[f64]) -> Option<Vector3<f64>> {
    let p = psi(kind, z)?;
    let c = kind.log_coeffs();
    Some(Vector3::from_fn(|i, _| -p.g[i] / p.val - if c[i] != 0.0 { c[i] / z[i] } else { 0.0 }))
}

pub(crate) fn hessian(kind: Kind, z: &[f64]) -> Option<Matrix3<f64>> {
    let p = psi(kind, z)?;
    let c = kind.log_coeffs();
    let mut h = -p.h / p.val + p.g * p.g.transpose() / (p.val * p.val);
    for i in (0..3).filter(|&i| c[i] != 0.0) {
        h[(i, i)] += c[i] / (z[i] * z[i]);
    }
    Some(h)
}

/// ∇³f(z)[u, v].
pub(crate) fn third_order(kind: Kind, z: &[f64], u: &Vector3<f64>, v: &Vector3<f64>) -> Option<Vector3<f64>> {
    let p = psi(kind, z)?;
    let c = kind.log_coeffs();
    let psi3 = Vector3::from_fn(|i, _| u.dot(&(p.t[i] * v)));
    let (gu, gv) = (p.g.dot(u), p.g.dot(v));
    let uhv = u.dot(&(p.h * v));
    let (f, f2, f3) = (p.val, p.val * p.val, p.val * p.val * p.val);
    let mut out = -psi3 / f + (p.h * u) * gv / f2 + (p.h * v) * gu / f2 + p.g * uhv / f2
        - p.g * (2.0 * gu * gv / f3);
    for i in (0..3).filter(|&i| c[i] != 0.0) {
        out[i] -= 2.0 * c[i] * u[i] * v[i] / (z[i] * z[i] * z[i]);
    }
    Some(out)
}

pub(crate) fn in_dual(kind: Kind, v: &[f64], strict: bool) -> bool {
    if psi(kind, v).is_some() {
        return true;
    }
    if strict {
        return false;
    }
    match kind {
        Kind::Exp => {
            let (u, vv, w) = (v[0], v[1], v[2]);
            if u < 0.0 && w > 0.0 {
                vv - u + u * (-u / w).ln() >= 0.0
            } else {
                u == 0.0 && vv >= 0.0 && w >= 0.0
            }
        }
        Kind::Pow(a) => pow_boundary(v[0] / a, v[1] / (1.0 - a), v[2], a),
    }
}

fn pow_boundary(x: f64, y: f64, w: f64, a: f64) -> bool {
    x >= 0.0 && y >= 0.0 && x.powf(a) * y.powf(1.0 - a) >= w.abs()
}

pub(crate) fn in_primal(kind: Kind, v: &[f64], strict: bool) -> bool {
    match kind {
        Kind::Exp => {
            let (x, y, z) = (v[0], v[1], v[2]);
            if y > 0.0 && z > 0.0 {
                let r = y * (z / y).ln() - x;
                if strict {
                    r > 0.0
                } else {
                    r >= 0.0
                }
            } else {
                !strict && x <= 0.0 && y == 0.0 && z >= 0.0
            }
        }
        Kind::Pow(a) => {
            let (x, y, z) = (v[0], v[1], v[2]);
            if x > 0.0 && y > 0.0 {
                let lhs = a * x.ln() + (1.0 - a) * y.ln();
                if z == 0.0 {
                    return true;
                }
                if strict {
                    lhs > z.abs().ln()
                } else {
                    lhs >= z.abs().ln()
                }
            } else {
                !strict && pow_boundary(x, y, z, a)
            }
        }
    }
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

/// −∇f*(s): the minimiser of ⟨s, z⟩ + f(z), found by damped Newton.
/// Solves e + ln(1 + e) = δ for e > 0, i.e. e = ω(1 + δ) − 1 with ω the
/// Wright omega function. Newton from δ/2 increases monotonically to the
/// root because the left side is concave.
fn omega_minus_one(delta: f64) -> f64 {
    let mut e = 0.5 * delta;
    for _ in 0..100 {
        let h = e + e.ln_1p() - delta;
        let step = h / (1.0 + 1.0 / (1.0 + e));
        e -= step;
        if step.abs() <= 4.0 * f64::EPSILON * e {
            break;
        }
    }
    e
}

/// Closed-form conjugate point for the exponential cone; accurate up to
/// the boundary, where Newton's method loses its footing.
fn exp_conjugate_point(s: &[f64]) -> Option<Vector3<f64>> {
    let (x, y, z) = (s[0], s[1], s[2]);
    if !(y > 0.0 && z > 0.0) {
        return None;
    }
    let delta = (y * (z / y).ln() - x) / y;
    if !(delta > 0.0 && delta.is_finite()) {
        return None;
    }
    let e = omega_minus_one(delta);
    let w = 1.0 + e;
    let g0 = 1.0 / (e * y);
    let g1 = g0 * (w * y / z).ln() + g0 - 1.0 / y;
    let g2 = -w / (e * z);
    let out = -Vector3::new(g0, g1, g2);
    out.iter().all(|v| v.is_finite()).then_some(out)
}

pub(crate) fn conjugate_point(kind: Kind, s: &[f64], guess: Option<&[f64]>) -> Option<Vector3<f64>> {
    if kind == Kind::Exp {
        if let Some(p) = exp_conjugate_point(s) {
            if psi(kind, p.as_slice()).is_some() {
                return Some(p);
            }
        }
    }
    let start = match guess {
        Some(g) if psi(kind, g).is_some() => Vector3::from_column_slice(g),
        _ => {
            let c = Vector3::from(kind.central());
            let sn = Vector3::from_column_slice(s).norm();
            c * (c.norm() / sn.max(f64::MIN_POSITIVE))
        }
    };
    newton(kind, s, start).or_else(|| {
        let c = Vector3::from(kind.central());
        newton(kind, s, c)
    })
}

fn newton(kind: Kind, s: &[f64], mut z: Vector3<f64>) -> Option<Vector3<f64>> {
    let s = Vector3::from_column_slice(s);
    for _ in 0..NEWTON_MAX_ITER {
        let g = s + gradient(kind, z.as_slice())?;
        let h = hessian(kind, z.as_slice())?;
        let chol = h.cholesky()?;
        let dz = -chol.solve(&g);
        let dec = (-g.dot(&dz)).max(0.0).sqrt();
        if dec <= NEWTON_TOL {
            return Some(z);
        }
        let mut t = if dec > 0.25 { 1.0 / (1.0 + dec) } else { 1.0 };
        while psi(kind, (z + dz * t).as_slice()).is_none() {
            t *= 0.5;
            if t < 1e-20 {
                return None;
            }
        }
        z += dz * t;
    }
    let g = s + gradient(kind, z.as_slice())?;
    let h = hessian(kind, z.as_slice())?;
    let dec = g.dot(&h.cholesky()?.solve(&g)).max(0.0).sqrt();
    (dec <= 1e-7).then_some(z)
}

/// Primal-dual scaling block with its shadow iterates.
#[derive(Debug, Clone)]
pub(crate) struct NonsymScaling {
    pub h: Matrix3<f64>,
    pub z_tilde: Vector3<f64>,
    pub s_tilde: Vector3<f64>,
}

/// Returns (s̃, z̃, μ̃) with s̃ = −∇f(z), z̃ = −∇f*(s).
pub(crate) fn shadow(kind: Kind, s: &[f64], z: &[f64]) -> Option<(Vector3<f64>, Vector3<f64>, f64)> {
    let st = -gradient(kind, z)?;
    let mu = s.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() / 3.0;
    let guess: Vec<f64> = z.iter().map(|v| v / mu).collect();
    let zt = conjugate_point(kind, s, (mu > 0.0).then_some(guess.as_slice()))?;
    let mt = st.dot(&zt) / 3.0;
    Some((st, zt, mt))
}

/// Rank-4 quasi-Newton scaling satisfying H z = s and H z̃ = s̃:
///
/// H = S(SᵀZ)⁻¹Sᵀ + Ha − HaZ(ZᵀHaZ)⁻¹ZᵀHa,  Z = [z z̃], S = [s s̃].
///
/// The last two terms form a rank-one matrix vvᵀ/(vᵀHa⁻¹v) with
/// v = z × z̃, which is how it is evaluated: the difference form cancels
/// badly once μ is small. Falls back to Ha when SᵀZ is near singular.
/// `mu_fallback` (the global μ) anchors the dual scaling when ⟨s, z⟩
/// has lost all significant digits.
pub(crate) fn bfgs_scaling(kind: Kind, s: &[f64], z: &[f64], mu_fallback: f64) -> Option<NonsymScaling> {
    let sv = Vector3::from_column_slice(s);
    let zv = Vector3::from_column_slice(z);
    let mu = sv.dot(&zv) / 3.0;
    let hess = hessian(kind, z)?;
    if !(mu > 0.0) {
        if !(mu_fallback > 0.0) {
            return None;
        }
        let st = -gradient(kind, z)?;
        let zt = zv / mu_fallback;
        return Some(NonsymScaling { h: hess * mu_fallback, z_tilde: zt, s_tilde: st });
    }
    let ha = hess * mu;
    let (st, zt, mt) = match shadow(kind, s, z) {
        Some(v) => v,
        // conjugate point not found: dual scaling with the guess z/μ
        None => return Some(NonsymScaling { h: ha, z_tilde: zv / mu, s_tilde: -gradient(kind, z)? }),
    };
    let dual = || NonsymScaling { h: ha, z_tilde: zt, s_tilde: st };
    if !((mu * mt - 1.0).abs() >= f64::EPSILON.sqrt()) {
        return Some(dual());
    }

    let zm = nalgebra::Matrix3x2::from_columns(&[zv, zt]);
    let sm = nalgebra::Matrix3x2::from_columns(&[sv, st]);
    let stz: Matrix2<f64> = sm.transpose() * zm;
    let stz = (stz + stz.transpose()) * 0.5;
    let det = stz.determinant();
    let v = zv.cross(&zt);
    let hinv_v = hess.cholesky().map(|c| c.solve(&v) / mu);
    let (Some(hinv_v), true) = (hinv_v, det > 0.0 && stz[(0, 0)] > 0.0) else {
        return Some(dual());
    };
    let vhv = v.dot(&hinv_v);
    let a_inv = Matrix2::new(stz[(1, 1)], -stz[(0, 1)], -stz[(1, 0)], stz[(0, 0)]) / det;
    let h = sm * a_inv * sm.transpose() + v * v.transpose() / vhv;
    let h = (h + h.transpose()) * 0.5;
    if !(vhv > 0.0) || !h.iter().all(|x| x.is_finite()) || h.cholesky().is_none() {
        return Some(dual());
    }
    Some(NonsymScaling { h, z_tilde: zt, s_tilde: st })
}

/// Step bound for one block by backtracking from `alpha_max`.
pub(crate) fn step_bound(
    kind: Kind,
    s: &[f64],
    ds: &[f64],
    z: &[f64],
    dz: &[f64],
    alpha_max: f64,
    ratio: f64,
    alpha_min: f64,
) -> f64 {
    let mut alpha = alpha_max;
    let mut ts = [0.0; 3];
    let mut tz = [0.0; 3];
    while alpha >= alpha_min {
        for i in 0..3 {
            ts[i] = s[i] + alpha * ds[i];
            tz[i] = z[i] + alpha * dz[i];
        }
        if in_primal(kind, &ts, true) && in_dual(kind, &tz, true) {
            return alpha;
        }
        alpha *= ratio;
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_closed_form_matches_newton() {
        for s in [[0.3, 1.2, 2.0], [-2.0, 0.5, 0.1], [1.0, 1.0, 3.0], [-4.0, 3.0, 0.97]] {
            assert!(in_primal(Kind::Exp, &s, true));
            let closed = exp_conjugate_point(&s).unwrap();
            let start = Vector3::from(EXP_CENTRAL);
            let newton = newton(Kind::Exp, &s, start).unwrap();
            assert!((closed - newton).norm() < 1e-8 * (1.0 + newton.norm()), "{closed} vs {newton}");
        }
    }

    #[test]
    fn exp_closed_form_near_boundary() {
        // y·ln(z/y) − x = 1e-8; the round trip itself loses digits here
        let (y, z) = (0.7f64, 2.3f64);
        let s = [y * (z / y).ln() - 1e-8, y, z];
        let zt = exp_conjugate_point(&s).unwrap();
        let back = -gradient(Kind::Exp, zt.as_slice()).unwrap();
        for i in 0..3 {
            assert!((back[i] - s[i]).abs() < 1e-4 * (1.0 + s[i].abs()), "{back} vs {s:?}");
        }
    }

    #[test]
    fn membership_examples() {
        assert!(in_primal(Kind::Exp, &[0.0, 1.0, std::f64::consts::E], false));
        assert!(in_dual(Kind::Exp, &[-1.0, 0.0, 1.0], false));
        assert!(in_primal(Kind::Exp, &EXP_CENTRAL, true));
        assert!(in_dual(Kind::Exp, &EXP_CENTRAL, true));
        assert!(in_primal(Kind::Pow(0.3), &pow_central(0.3), true));
        assert!(in_dual(Kind::Pow(0.3), &pow_central(0.3), true));
    }

    #[test]
    fn dual_exp_barrier_value() {
        let f = barrier(Kind::Exp, &[-1.0, 1.0, 1.0]).unwrap();
        assert!((f + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn central_points_are_self_dual() {
        for kind in [Kind::Exp, Kind::Pow(0.3), Kind::Pow(0.8)] {
            let c = kind.central();
            let g = gradient(kind, &c).unwrap();
            for i in 0..3 {
                assert!((g[i] + c[i]).abs() < 1e-6, "{kind:?}: {g:?}");
            }
        }
    }

    #[test]
    fn conjugate_inverts_gradient() {
        let kind = Kind::Exp;
        let s = [-0.5, 0.8, 2.0];
        let zt = conjugate_point(kind, &s, None).unwrap();
        let back = -gradient(kind, zt.as_slice()).unwrap();
        for i in 0..3 {
            assert!((back[i] - s[i]).abs() < 1e-8 * (1.0 + s[i].abs()));
        }
    }

    #[test]
    fn bfgs_identities() {
        let kind = Kind::Pow(0.4);
        let s = [1.2, 0.7, 0.3];
        let z = [0.9, 1.4, -0.5];
        let sc = bfgs_scaling(kind, &s, &z, 1.0).unwrap();
        let hz = sc.h * Vector3::from_column_slice(&z);
        let hzt = sc.h * sc.z_tilde;
        for i in 0..3 {
            assert!((hz[i] - s[i]).abs() < 1e-8);
            assert!((hzt[i] - sc.s_tilde[i]).abs() < 1e-8 * (1.0 + sc.s_tilde[i].abs()));
        }
    }
}
