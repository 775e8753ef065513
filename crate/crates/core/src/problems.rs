//! Built-in initial conditions.

use std::f64::consts::PI;

use crate::curve::CurveState;
use crate::error::{check_param, Result};
use crate::spectral;

/// Capillary pinch-off: unit sphere, `sigma = 0.2`, `gamma = -2 sin(2 alpha)`.
pub fn pinchoff(n: usize) -> Result<CurveState> {
    let gamma = spectral::grid(n)
        .iter()
        .map(|a| -2.0 * (2.0 * a).sin())
        .collect();
    CurveState::sphere(n, 1.0, gamma, 0.2)
}

/// Bag breakup: unit sphere, `sigma = 0.04`, `gamma = -sin(alpha)`.
pub fn bagbreakup(n: usize) -> Result<CurveState> {
    let gamma = spectral::grid(n).iter().map(|a| -a.sin()).collect();
    CurveState::sphere(n, 1.0, gamma, 0.04)
}

/// Unit sphere at rest.
pub fn sphere_at_rest(n: usize, sigma: f64) -> Result<CurveState> {
    CurveState::sphere(n, 1.0, vec![0.0; n], sigma)
}

/// Axisymmetric curve `eta(phi) = 1 + eps P2(cos phi)` in polar coordinates about the
/// origin, with `r = eta sin phi`, `z = -eta cos phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2Curve {
    pub eps: f64,
}

impl P2Curve {
    pub fn new(eps: f64) -> Result<Self> {
        check_param(
            eps.abs() < 0.5,
            "eps",
            format!("amplitude {eps} would not give a star-shaped curve"),
        )?;
        Ok(Self { eps })
    }

    pub fn eta(&self, phi: f64) -> f64 {
        let c = phi.cos();
        1.0 + self.eps * 0.5 * (3.0 * c * c - 1.0)
    }

    pub fn eta_prime(&self, phi: f64) -> f64 {
        -3.0 * self.eps * phi.sin() * phi.cos()
    }

    pub fn eta_second(&self, phi: f64) -> f64 {
        -3.0 * self.eps * (2.0 * phi).cos()
    }

    pub fn point(&self, phi: f64) -> (f64, f64) {
        let e = self.eta(phi);
        (e * phi.sin(), -e * phi.cos())
    }

    /// In-plane curvature of the polar curve.
    pub fn kappa(&self, phi: f64) -> f64 {
        let (e, e1, e2) = (self.eta(phi), self.eta_prime(phi), self.eta_second(phi));
        (e * e + 2.0 * e1 * e1 - e * e2) / (e * e + e1 * e1).powf(1.5)
    }

    /// Polar angle of a point on the curve.
    pub fn polar_angle(r: f64, z: f64) -> f64 {
        r.atan2(-z)
    }

    /// Samples the curve on `n` nodes with `phi = alpha + warp sin(alpha)`; `warp = 0`
    /// gives the polar-angle parametrization.
    pub fn state(&self, n: usize, warp: f64, sigma: f64) -> Result<CurveState> {
        check_param(warp.abs() < 1.0, "warp", "parameter map must stay monotone")?;
        let alpha = spectral::grid(n);
        let mut theta = Vec::with_capacity(n);
        let mut s_alpha = Vec::with_capacity(n);
        for &a in &alpha {
            let phi = a + warp * a.sin();
            let dphi = 1.0 + warp * a.cos();
            let (e, e1) = (self.eta(phi), self.eta_prime(phi));
            theta.push(phi + (-e1).atan2(e));
            s_alpha.push(e.hypot(e1) * dphi);
        }
        CurveState::new(0.0, theta, s_alpha, vec![0.0; n], sigma)
    }

    /// `z` of the south pole.
    pub fn south_pole(&self) -> f64 {
        -self.eta(0.0)
    }

    /// Enclosed volume `(2 pi / 3) int_0^pi eta^3 sin(phi) dphi`, which for this
    /// polynomial integrand is `(4 pi / 3)(1 + 3 eps^2/5 + 2 eps^3/35)`.
    pub fn volume(&self) -> f64 {
        let e = self.eps;
        4.0 * PI / 3.0 * (1.0 + 0.6 * e * e + 2.0 * e * e * e / 35.0)
    }
}
