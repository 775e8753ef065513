//! Non-iterative regridding to the arclength parametrization.

use std::f64::consts::PI;

use crate::curve::{reconstruct, Anchor, CurveState, DerivedGeometry};
use crate::error::Result;
use crate::meshref::ArclengthMap;
use crate::nufft::NufftPlan;
use crate::spectral;

/// Upsampling factor for the arclength coefficient sums.
const UPSAMPLE: usize = 4;

/// A curve in the uniform arclength parametrization, where `s_alpha = l_p / 2pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformCurve {
    pub theta_u: Vec<f64>,
    pub kappa_u: Vec<f64>,
    pub gamma_u: Vec<f64>,
    pub l_p: f64,
}

impl UniformCurve {
    pub fn s_alpha(&self) -> f64 {
        self.l_p / (2.0 * PI)
    }

    pub fn to_state(&self, t: f64, sigma: f64) -> Result<CurveState> {
        let n = self.theta_u.len();
        CurveState::new(
            t,
            self.theta_u.clone(),
            vec![self.s_alpha(); n],
            self.gamma_u.clone(),
            sigma,
        )
    }
}

/// Resamples `kappa_z` and the sheet strength at equal arclength spacing and rebuilds the
/// tangent angle from the curvature. The starting tangent is kept.
pub fn to_uniform(state: &CurveState, geom: &DerivedGeometry) -> Result<UniformCurve> {
    let n = state.n();
    let plan = NufftPlan::new(1e-15, n)?;
    let map = ArclengthMap::new(&state.s_alpha, UPSAMPLE * n)?;
    let l_p = map.l_p();
    let sa = l_p / (2.0 * PI);

    let kappa_u = spectral::inverse(&map.coeffs(&geom.kappa_z, &plan)?);
    // gamma / s_alpha is parametrization-free
    let strength: Vec<f64> = state
        .gamma
        .iter()
        .zip(&state.s_alpha)
        .map(|(g, s)| g / s)
        .collect();
    let gamma_u: Vec<f64> = spectral::inverse(&map.coeffs(&strength, &plan)?)
        .into_iter()
        .map(|g| g * sa)
        .collect();

    let mut turn: Vec<f64> = kappa_u.iter().map(|k| k * sa).collect();
    let excess = spectral::mean(&turn) - 1.0;
    turn.iter_mut().for_each(|v| *v -= excess + 1.0);
    let periodic = spectral::antiderivative_from_zero(&turn)?;
    let theta_u = spectral::grid(n)
        .into_iter()
        .zip(&periodic)
        .map(|(a, p)| a + p + state.theta[0])
        .collect();
    Ok(UniformCurve {
        theta_u,
        kappa_u,
        gamma_u,
        l_p,
    })
}

/// Relative maximum distance between two curves after both are brought to the arclength
/// parametrization and anchored with the south pole at the origin. Normalized by the
/// largest `|X|` on either curve, which keeps the measure symmetric.
pub fn geometric_distance(a: &CurveState, b: &CurveState) -> Result<f64> {
    let xa = uniform_points(a)?;
    let xb = uniform_points(b)?;
    if xa.len() != xb.len() {
        return Err(crate::Error::LengthMismatch {
            expected: xa.len(),
            got: xb.len(),
        });
    }
    let la = xa.last().map(|p| p.2).unwrap_or(0.0);
    let lb = xb.last().map(|p| p.2).unwrap_or(0.0);
    if (la - lb).abs() > 0.1 * la.max(lb) {
        log::warn!(
            "comparing curves with lengths {la} and {lb}; the distance may not be meaningful"
        );
    }
    let mut diff = 0.0_f64;
    let mut scale = 0.0_f64;
    for (p, q) in xa.iter().zip(&xb) {
        diff = diff.max((p.0 - q.0).hypot(p.1 - q.1));
        scale = scale.max(p.0.hypot(p.1)).max(q.0.hypot(q.1));
    }
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// `(r, z, L_p)` at the uniform arclength nodes.
fn uniform_points(state: &CurveState) -> Result<Vec<(f64, f64, f64)>> {
    let geom = reconstruct(state, Anchor::Fixed(0.0))?;
    let u = to_uniform(state, &geom)?.to_state(state.t, state.sigma)?;
    let g = reconstruct(&u, Anchor::Fixed(0.0))?;
    Ok(g.r.iter().zip(&g.z).map(|(r, z)| (*r, *z, g.l_p)).collect())
}
