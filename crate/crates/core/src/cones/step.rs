//! Step-length search keeping (z, s, τ, κ) strictly interior.

use super::nonsym::{self, Kind};
use super::{nonneg, psd, soc, ConeError, ConeSet};
use crate::problem::ConeSpec;

pub const MIN_STEP: f64 = 1e-11;

/// Current iterate plus direction for a step-length query.
#[derive(Debug, Clone, Copy)]
pub struct StepLengthRequest<'a> {
    pub z: &'a [f64],
    pub s: &'a [f64],
    pub tau: f64,
    pub kappa: f64,
    pub dz: &'a [f64],
    pub ds: &'a [f64],
    pub dtau: f64,
    pub dkappa: f64,
    pub alpha_max: f64,
    pub backtrack: f64,
}

fn scalar_bound(x: f64, dx: f64) -> f64 {
    if dx < 0.0 {
        -x / dx
    } else {
        f64::INFINITY
    }
}

impl ConeSet {
    /// Largest α ≤ `alpha_max` keeping the iterate interior: closed form on
    /// symmetric blocks and τ, κ; exponential and power blocks backtrack
    /// from that bound. No safety margin is applied.
    pub fn step_length(&self, req: &StepLengthRequest<'_>) -> Result<f64, ConeError> {
        let mut alpha = req
            .alpha_max
            .min(scalar_bound(req.tau, req.dtau))
            .min(scalar_bound(req.kappa, req.dkappa));

        let sym = self.map_blocks(|_, b| {
            let r = b.range.clone();
            let (z, s, dz, ds) = (&req.z[r.clone()], &req.s[r.clone()], &req.dz[r.clone()], &req.ds[r]);
            match b.spec {
                ConeSpec::Nonneg(_) => nonneg::step_bound(z, dz).min(nonneg::step_bound(s, ds)),
                ConeSpec::SecondOrder(_) => soc::step_bound(z, dz).min(soc::step_bound(s, ds)),
                ConeSpec::PsdTriangle(n) => psd::step_bound(z, dz, n).min(psd::step_bound(s, ds, n)),
                _ => f64::INFINITY,
            }
        });
        alpha = sym.into_iter().fold(alpha, f64::min);

        if self.has_nonsymmetric() {
            let start = alpha;
            let nonsym = self.map_blocks(|_, b| {
                let kind = match b.spec {
                    ConeSpec::Exponential => Kind::Exp,
                    ConeSpec::Power(a) => Kind::Pow(a),
                    _ => return f64::INFINITY,
                };
                let r = b.range.clone();
                nonsym::step_bound(
                    kind,
                    &req.s[r.clone()],
                    &req.ds[r.clone()],
                    &req.z[r.clone()],
                    &req.dz[r],
                    start,
                    req.backtrack,
                    MIN_STEP,
                )
            });
            alpha = nonsym.into_iter().fold(alpha, f64::min);
        }

        if !(alpha >= MIN_STEP) {
            return Err(ConeError::StepTooSmall { alpha });
        }
        Ok(alpha)
    }
}
