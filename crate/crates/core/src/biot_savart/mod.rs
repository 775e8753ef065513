//! Principal-value Biot-Savart velocities of an axisymmetric vortex sheet.
//!
//! For a target `alpha` the two integrands are evaluated on `M` uniform quadrature nodes
//! over `[0, pi]` using Fourier-interpolated `(r, z, gamma)`. Near the target each
//! integrand has the form `c/(alpha'-alpha) + T(alpha') ln m1(alpha') + smooth`, with
//! `m1 = rho1^2/rho2^2` the complementary elliptic parameter and `T` known in closed form
//! from the logarithmic expansions of `K` and `E`. The rule is the punctured trapezoid sum
//! plus three local corrections: the regular part at the target (Richardson extrapolation
//! of the even part of `g - T ln (alpha'-alpha)^2`) and the first two terms of the
//! zeta-function expansion of the trapezoid error for `T ln|x|`. Targets must coincide with
//! quadrature nodes.

mod elliptic;

use std::f64::consts::PI;

use rayon::prelude::*;

use elliptic::ke_split;
pub use elliptic::{elliptic_ke, EllipticPair};

use crate::curve::{CurveState, DerivedGeometry};
use crate::error::{check_param, Error, Result};
use crate::spectral;

/// `zeta'(-2) = -zeta(3) / (4 pi^2)`.
pub(crate) const ZETA_PRIME_MINUS_TWO: f64 = -0.030_448_457_058_393_27;

/// Average sheet velocity and its normal/tangential decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetVelocity {
    pub w_r: Vec<f64>,
    pub w_z: Vec<f64>,
    /// `W . n` with `n = (-sin theta, cos theta)`.
    pub u: Vec<f64>,
    /// `W . t` with `t = (cos theta, sin theta)`.
    pub wt: Vec<f64>,
}

/// Default quadrature size `4N + 1`.
pub fn default_quad_nodes(n: usize) -> usize {
    4 * n + 1
}

/// Checks that `m_quad` is admissible for grid size `n`.
pub fn check_quad_nodes(n: usize, m_quad: usize) -> Result<()> {
    check_param(
        m_quad % 2 == 1 && m_quad > 2 * n,
        "m_quad",
        format!(
            "need an odd node count of at least 2N+1 = {}, got {m_quad}",
            2 * n + 1
        ),
    )?;
    check_param(
        (m_quad - 1) % (n / 2) == 0,
        "m_quad",
        format!(
            "(m_quad - 1) must be a multiple of N/2 = {} so grid nodes are quadrature nodes",
            n / 2
        ),
    )
}

/// Log-singular expansion `F(0) h ln(h/2pi) + zeta'(-2) F''(0) h^3`: the amount to add
/// to the punctured trapezoid sum `h sum_{k != 0} F(kh) ln|kh|` to approximate
/// `int F(x) ln|x| dx`.
pub(crate) fn log_correction(f0: f64, f2: f64, h: f64) -> f64 {
    f0 * h * (h / (2.0 * PI)).ln() + ZETA_PRIME_MINUS_TWO * f2 * h * h * h
}

#[derive(Clone, Copy)]
struct Target {
    r: f64,
    z: f64,
}

/// Integrands `(g_r, g_z)`, including the `1/(2 pi)` prefactor.
#[inline]
fn kernel(t: Target, rp: f64, zp: f64, gp: f64) -> (f64, f64) {
    let dz = zp - t.z;
    let dz2 = dz * dz;
    let rho1 = dz2 + (rp - t.r) * (rp - t.r);
    let rho2 = dz2 + (rp + t.r) * (rp + t.r);
    let m = 4.0 * t.r * rp / rho2;
    let m1 = rho1 / rho2;
    let (k, _, e) = ke_split(m, m1);
    let pre = gp / (2.0 * PI * rho2.sqrt());
    let r2 = t.r * t.r;
    let rp2 = rp * rp;
    let gz = pre * (k - (dz2 + r2 - rp2) / rho1 * e);
    let gr = pre * (dz / t.r) * (k - (dz2 + r2 + rp2) / rho1 * e);
    (gr, gz)
}

/// Coefficients `(T_r, T_z)` of `ln m1` in the integrands.
#[inline]
fn log_coeffs(t: Target, rp: f64, zp: f64, gp: f64) -> (f64, f64) {
    let dz = zp - t.z;
    let dz2 = dz * dz;
    let rho1 = dz2 + (rp - t.r) * (rp - t.r);
    let rho2 = dz2 + (rp + t.r) * (rp + t.r);
    let m1 = rho1 / rho2;
    let m = 4.0 * t.r * rp / rho2;
    let (k1, k1_minus_e1, _) = ke_split(m1, m);
    let ratio = if m1 > 0.0 { k1_minus_e1 / m1 } else { PI / 4.0 };
    let pre = gp / (2.0 * PI * PI * rho2.sqrt());
    let r2 = t.r * t.r;
    let rp2 = rp * rp;
    let tz = pre * (-k1 + (dz2 + r2 - rp2) * ratio / rho2);
    let tr = pre * (dz / t.r) * (-k1 + (dz2 + r2 + rp2) * ratio / rho2);
    (tr, tz)
}

/// Sum with a fixed binary tree so the result does not depend on scheduling.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

struct Sources {
    r: Vec<f64>,
    z: Vec<f64>,
    gamma: Vec<f64>,
    h: f64,
}

impl Sources {
    fn len(&self) -> usize {
        self.r.len()
    }

    /// Off-axis target sitting on quadrature node `kt`.
    fn interior(&self, kt: usize, buf_r: &mut [f64], buf_z: &mut [f64]) -> (f64, f64) {
        let m = self.len();
        let t = Target {
            r: self.r[kt],
            z: self.z[kt],
        };
        for k in 0..m {
            let (gr, gz) = if k == kt {
                (0.0, 0.0)
            } else {
                kernel(t, self.r[k], self.z[k], self.gamma[k])
            };
            let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
            buf_r[k] = w * gr;
            buf_z[k] = w * gz;
        }
        let h = self.h;
        let coeffs = |k: usize| log_coeffs(t, self.r[k], self.z[k], self.gamma[k]);
        let (t0r, t0z) = coeffs(kt);
        let (tpr, tpz) = coeffs(kt + 1);
        let (tmr, tmz) = coeffs(kt - 1);
        // even part of g - T ln(dalpha^2) at distance d*h
        let even = |d: usize| {
            let l = (d as f64 * h).powi(2).ln();
            let (gpr, gpz) = (buf_r[kt + d], buf_z[kt + d]);
            let (gmr, gmz) = (buf_r[kt - d], buf_z[kt - d]);
            let ((pr, pz), (mr, mz)) = if d == 1 {
                ((tpr, tpz), (tmr, tmz))
            } else {
                (coeffs(kt + d), coeffs(kt - d))
            };
            (
                0.5 * (gpr - pr * l + gmr - mr * l),
                0.5 * (gpz - pz * l + gmz - mz * l),
            )
        };
        let (e1r, e1z) = even(1);
        let (e2r, e2z) = even(2);
        let a0r = (4.0 * e1r - e2r) / 3.0;
        let a0z = (4.0 * e1z - e2z) / 3.0;
        let t2r = (tpr - 2.0 * t0r + tmr) / (h * h);
        let t2z = (tpz - 2.0 * t0z + tmz) / (h * h);
        let wr = h * (pairwise_sum(buf_r) + a0r) + log_correction(2.0 * t0r, 2.0 * t2r, h);
        let wz = h * (pairwise_sum(buf_z) + a0z) + log_correction(2.0 * t0z, 2.0 * t2z, h);
        (wr, wz)
    }

    /// Axial velocity at a pole, `w_z = 1/2 int gamma' r'^2 / rho^3`; `limit` is the
    /// integrand's value at the pole itself.
    fn axis(&self, kt: usize, limit: f64, buf: &mut [f64]) -> f64 {
        let m = self.len();
        let z0 = self.z[kt];
        for k in 0..m {
            let f = if k == kt {
                limit
            } else {
                let rp = self.r[k];
                let dz = self.z[k] - z0;
                let rho2 = dz * dz + rp * rp;
                0.5 * self.gamma[k] * rp * rp / (rho2 * rho2.sqrt())
            };
            let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
            buf[k] = w * f;
        }
        self.h * pairwise_sum(buf)
    }
}

/// Biot-Savart velocity at every grid node.
pub fn principal_velocity(
    state: &CurveState,
    geom: &DerivedGeometry,
    m_quad: usize,
) -> Result<SheetVelocity> {
    let n = state.n();
    if geom.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: geom.n(),
        });
    }
    check_quad_nodes(n, m_quad)?;
    let fine = 2 * (m_quad - 1);
    let take = |f: &[f64]| -> Result<Vec<f64>> {
        let mut v = spectral::resample(f, fine)?;
        v.truncate(m_quad);
        Ok(v)
    };
    let mut src = Sources {
        r: take(&geom.r)?,
        z: take(&geom.z)?,
        gamma: take(&state.gamma)?,
        h: PI / (m_quad - 1) as f64,
    };
    // the poles are exactly on the axis
    src.r[0] = 0.0;
    src.r[m_quad - 1] = 0.0;
    for j in 1..n / 2 {
        if !(geom.r[j] > 0.0) {
            return Err(Error::SingularGeometry {
                index: j,
                r: geom.r[j],
            });
        }
    }
    let gamma_alpha = spectral::derivative(&state.gamma)?;
    let stride = fine / n;
    let half = n / 2;

    let values: Vec<(f64, f64)> = (0..=half)
        .into_par_iter()
        .map_init(
            || (vec![0.0; m_quad], vec![0.0; m_quad]),
            |(br, bz), j| {
                let kt = j * stride;
                if j == 0 || j == half {
                    let sign = if j == 0 { 1.0 } else { -1.0 };
                    let sa = state.s_alpha[j];
                    let limit = sign * 0.5 * gamma_alpha[j] / sa;
                    (0.0, src.axis(kt, limit, bz))
                } else {
                    src.interior(kt, br, bz)
                }
            },
        )
        .collect();

    let mut w_r = vec![0.0; n];
    let mut w_z = vec![0.0; n];
    for (j, &(wr, wz)) in values.iter().enumerate() {
        if !(wr.is_finite() && wz.is_finite()) {
            return Err(Error::GeometryDegenerate { index: j });
        }
        w_r[j] = wr;
        w_z[j] = wz;
        if j > 0 && j < half {
            w_r[n - j] = -wr;
            w_z[n - j] = wz;
        }
    }
    let (u, wt) = decompose(&state.theta, &w_r, &w_z);
    Ok(SheetVelocity { w_r, w_z, u, wt })
}

/// Normal and tangential components of `(w_r, w_z)`.
pub fn decompose(theta: &[f64], w_r: &[f64], w_z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    theta
        .iter()
        .zip(w_r.iter().zip(w_z))
        .map(|(th, (wr, wz))| {
            let (s, c) = th.sin_cos();
            (-wr * s + wz * c, wr * c + wz * s)
        })
        .unzip()
}
