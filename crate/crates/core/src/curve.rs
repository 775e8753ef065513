//! Curve state in angle-arclength variables and the geometry derived from it.
//!
//! The half curve `alpha in [0, pi]` runs from the south pole `X(0)` to the north pole
//! `X(pi)` counterclockwise in the `r`-`z` plane. It is stored on the extended periodic grid
//! over `[0, 2*pi)`, where `r` is odd and `z` even about both poles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{self, check_grid};

/// Dynamical variables `(theta, s_alpha, gamma)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveState {
    pub t: f64,
    /// Tangent angle; `theta - alpha` is periodic.
    pub theta: Vec<f64>,
    /// Relative spacing `ds/dalpha`.
    pub s_alpha: Vec<f64>,
    /// Unnormalized vortex sheet strength.
    pub gamma: Vec<f64>,
    /// Surface tension coefficient.
    pub sigma: f64,
}

impl CurveState {
    pub fn new(
        t: f64,
        theta: Vec<f64>,
        s_alpha: Vec<f64>,
        gamma: Vec<f64>,
        sigma: f64,
    ) -> Result<Self> {
        let state = Self {
            t,
            theta,
            s_alpha,
            gamma,
            sigma,
        };
        state.validate()?;
        Ok(state)
    }

    /// Sphere of the given radius with the uniform parametrization.
    pub fn sphere(n: usize, radius: f64, gamma: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::new(0.0, spectral::grid(n), vec![radius; n], gamma, sigma)
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.theta.len();
        check_grid(n)?;
        for len in [self.s_alpha.len(), self.gamma.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        for (index, &value) in self.s_alpha.iter().enumerate() {
            if !(value > 0.0) {
                return Err(Error::NonPositiveSpacing { index, value });
            }
        }
        let finite = self.theta.iter().chain(&self.gamma).all(|v| v.is_finite());
        if !finite || !self.t.is_finite() {
            return Err(Error::NumericalAbort {
                t: self.t,
                reason: "non-finite value in curve state".into(),
            });
        }
        Ok(())
    }

    /// The periodic part `theta - alpha`.
    pub fn theta_periodic(&self) -> Vec<f64> {
        let h = 2.0 * PI / self.n() as f64;
        self.theta
            .iter()
            .enumerate()
            .map(|(j, th)| th - j as f64 * h)
            .collect()
    }

    /// `theta_alpha = 1 + (theta - alpha)_alpha`.
    pub fn theta_alpha(&self) -> Result<Vec<f64>> {
        Ok(spectral::derivative(&self.theta_periodic())?
            .into_iter()
            .map(|v| 1.0 + v)
            .collect())
    }

    /// Largest deviation from the reflection symmetry about `alpha = pi`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n();
        let p = self.theta_periodic();
        (0..n)
            .map(|j| {
                let m = (n - j) % n;
                (p[j] + p[m])
                    .abs()
                    .max((self.s_alpha[j] - self.s_alpha[m]).abs())
                    .max((self.gamma[j] + self.gamma[m]).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Where the reconstructed curve is pinned along the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// `z(0) = value`.
    Fixed(f64),
    /// Volume centroid at `z = 0`.
    Centroid,
}

impl Default for Anchor {
    fn default() -> Self {
        Anchor::Fixed(0.0)
    }
}

/// Geometry reconstructed from a [`CurveState`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedGeometry {
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub r_alpha: Vec<f64>,
    pub z_alpha: Vec<f64>,
    /// Arclength from `alpha = 0`.
    pub s: Vec<f64>,
    /// Half-curve length `s(pi)`.
    pub l: f64,
    /// Full periodic length `s(2 pi)`.
    pub l_p: f64,
    pub theta_alpha: Vec<f64>,
    pub kappa_z: Vec<f64>,
    pub kappa_r: Vec<f64>,
    /// Minimum distance between adjacent reconstructed points.
    pub ds_min: f64,
    /// Gap the curve would leave before the mean of `X_alpha` is removed.
    pub closure_residual: f64,
}

impl DerivedGeometry {
    pub fn n(&self) -> usize {
        self.r.len()
    }
}

/// Integrates `X_alpha = s_alpha (cos theta, sin theta)` and evaluates curvatures.
pub fn reconstruct(state: &CurveState, anchor: Anchor) -> Result<DerivedGeometry> {
    state.validate()?;
    let n = state.n();
    let mut r_alpha: Vec<f64> = state
        .s_alpha
        .iter()
        .zip(&state.theta)
        .map(|(s, th)| s * th.cos())
        .collect();
    let mut z_alpha: Vec<f64> = state
        .s_alpha
        .iter()
        .zip(&state.theta)
        .map(|(s, th)| s * th.sin())
        .collect();
    let (mr, mz) = (spectral::mean(&r_alpha), spectral::mean(&z_alpha));
    let closure_residual = 2.0 * PI * mr.hypot(mz);
    if closure_residual > 0.0 {
        log::trace!("closure residual {closure_residual:e} removed");
    }
    r_alpha.iter_mut().for_each(|v| *v -= mr);
    z_alpha.iter_mut().for_each(|v| *v -= mz);
    let r = spectral::antiderivative_from_zero(&r_alpha)?;
    let mut z = spectral::antiderivative_from_zero(&z_alpha)?;
    let s = spectral::antiderivative_from_zero(&state.s_alpha)?;
    let l_p = 2.0 * PI * spectral::mean(&state.s_alpha);
    let l = spectral::integral_to_pi(&state.s_alpha)?;

    let theta_alpha = state.theta_alpha()?;
    let kappa_z: Vec<f64> = theta_alpha
        .iter()
        .zip(&state.s_alpha)
        .map(|(ta, s)| ta / s)
        .collect();
    let kappa_r = azimuthal_curvature(&r, &z_alpha, &state.s_alpha, &kappa_z)?;

    let shift = match anchor {
        Anchor::Fixed(z0) => z0,
        Anchor::Centroid => -volume_moment(&r, &z, &z_alpha)? / volume_from(&r, &z_alpha)?,
    };
    z.iter_mut().for_each(|v| *v += shift);

    let ds_min = (0..n)
        .map(|j| {
            let k = (j + 1) % n;
            (r[k] - r[j]).hypot(z[k] - z[j])
        })
        .fold(f64::INFINITY, f64::min);

    Ok(DerivedGeometry {
        r,
        z,
        r_alpha,
        z_alpha,
        s,
        l,
        l_p,
        theta_alpha,
        kappa_z,
        kappa_r,
        ds_min,
        closure_residual,
    })
}

/// `kappa_r = z_alpha / (s_alpha r)`, replaced by `kappa_z` at the two axis nodes.
fn azimuthal_curvature(
    r: &[f64],
    z_alpha: &[f64],
    s_alpha: &[f64],
    kappa_z: &[f64],
) -> Result<Vec<f64>> {
    let n = r.len();
    let scale = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (0..n)
        .map(|j| {
            if j == 0 || j == n / 2 {
                Ok(kappa_z[j])
            } else if r[j].abs() <= f64::EPSILON * scale {
                Err(Error::SingularGeometry { index: j, r: r[j] })
            } else {
                Ok(z_alpha[j] / (s_alpha[j] * r[j]))
            }
        })
        .collect()
}

/// Principal curvatures `(kappa_z, kappa_r)` for a state and its reconstructed radius.
pub fn curvatures(state: &CurveState, r: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if r.len() != state.n() {
        return Err(Error::LengthMismatch {
            expected: state.n(),
            got: r.len(),
        });
    }
    let kappa_z: Vec<f64> = state
        .theta_alpha()?
        .iter()
        .zip(&state.s_alpha)
        .map(|(ta, s)| ta / s)
        .collect();
    let z_alpha: Vec<f64> = state
        .s_alpha
        .iter()
        .zip(&state.theta)
        .map(|(s, th)| s * th.sin())
        .collect();
    let kappa_r = azimuthal_curvature(r, &z_alpha, &state.s_alpha, &kappa_z)?;
    Ok((kappa_z, kappa_r))
}

fn volume_from(r: &[f64], z_alpha: &[f64]) -> Result<f64> {
    let f: Vec<f64> = r.iter().zip(z_alpha).map(|(r, za)| r * r * za).collect();
    Ok(PI * spectral::integral_to_pi(&f)?)
}

fn volume_moment(r: &[f64], z: &[f64], z_alpha: &[f64]) -> Result<f64> {
    let f: Vec<f64> = r
        .iter()
        .zip(z)
        .zip(z_alpha)
        .map(|((r, z), za)| r * r * z * za)
        .collect();
    Ok(PI * spectral::integral_to_pi(&f)?)
}

/// Enclosed volume `pi * int_0^pi r^2 z_alpha dalpha`.
pub fn enclosed_volume(geom: &DerivedGeometry) -> Result<f64> {
    volume_from(&geom.r, &geom.z_alpha)
}

/// Projects a state onto the reflection-symmetric subspace: `theta - alpha` and `gamma`
/// odd, `s_alpha` even about `alpha = pi`.
pub fn symmetrize(state: &CurveState) -> CurveState {
    let n = state.n();
    let h = 2.0 * PI / n as f64;
    let p = state.theta_periodic();
    let mirror = |j: usize| (n - j) % n;
    let odd = |f: &[f64]| -> Vec<f64> { (0..n).map(|j| 0.5 * (f[j] - f[mirror(j)])).collect() };
    let even = |f: &[f64]| -> Vec<f64> { (0..n).map(|j| 0.5 * (f[j] + f[mirror(j)])).collect() };
    let theta = odd(&p)
        .into_iter()
        .enumerate()
        .map(|(j, v)| v + j as f64 * h)
        .collect();
    CurveState {
        t: state.t,
        theta,
        s_alpha: even(&state.s_alpha),
        gamma: odd(&state.gamma),
        sigma: state.sigma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_sphere(n: usize) -> CurveState {
        CurveState::sphere(n, 1.0, vec![0.0; n], 0.2).unwrap()
    }

    #[test]
    fn unit_sphere_reconstruction() {
        let n = 64;
        let g = reconstruct(&unit_sphere(n), Anchor::Fixed(-1.0)).unwrap();
        for (j, a) in spectral::grid(n).into_iter().enumerate() {
            assert!((g.r[j] - a.sin()).abs() < 1e-14);
            assert!((g.z[j] + a.cos()).abs() < 1e-14);
            assert!((g.kappa_z[j] - 1.0).abs() < 1e-13);
            assert!((g.kappa_r[j] - 1.0).abs() < 1e-12);
        }
        assert!(g.closure_residual <= 1e-13);
        assert!((g.l - PI).abs() < 1e-14);
        assert!((g.l_p - 2.0 * PI).abs() < 1e-14);
        assert!((enclosed_volume(&g).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_sphere() {
        let n = 32;
        let st = CurveState::sphere(n, 2.0, vec![0.0; n], 0.0).unwrap();
        let g = reconstruct(&st, Anchor::Fixed(-2.0)).unwrap();
        for (j, a) in spectral::grid(n).into_iter().enumerate() {
            assert!((g.r[j] - 2.0 * a.sin()).abs() < 1e-13);
            assert!((g.z[j] + 2.0 * a.cos()).abs() < 1e-13);
        }
        assert!((enclosed_volume(&g).unwrap() - 32.0 * PI / 3.0).abs() < 1e-11);
    }

    #[test]
    fn centroid_anchor_centers_sphere() {
        let g = reconstruct(&unit_sphere(32), Anchor::Centroid).unwrap();
        assert!((g.z[0] + 1.0).abs() < 1e-13);
        assert!((g.z[16] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn axis_nodes_use_kappa_z() {
        let g = reconstruct(&unit_sphere(16), Anchor::default()).unwrap();
        assert_eq!(g.kappa_r[0], g.kappa_z[0]);
        assert_eq!(g.kappa_r[8], g.kappa_z[8]);
    }

    #[test]
    fn rejects_non_positive_spacing() {
        let mut st = unit_sphere(16);
        st.s_alpha[3] = 0.0;
        assert_eq!(
            reconstruct(&st, Anchor::default()),
            Err(Error::NonPositiveSpacing {
                index: 3,
                value: 0.0
            })
        );
    }

    #[test]
    fn off_axis_zero_radius_is_singular() {
        let st = unit_sphere(16);
        let mut r: Vec<f64> = spectral::grid(16).iter().map(|a| a.sin()).collect();
        r[4] = 0.0;
        assert!(matches!(
            curvatures(&st, &r),
            Err(Error::SingularGeometry { index: 4, .. })
        ));
    }

    #[test]
    fn symmetrize_restores_reflection() {
        let n = 32;
        let a = spectral::grid(n);
        let st = CurveState::new(
            0.0,
            a.iter()
                .map(|x| x + 0.1 * x.sin() + 1e-3 * x.cos())
                .collect(),
            a.iter()
                .map(|x| 1.0 + 0.2 * x.cos() + 1e-3 * x.sin())
                .collect(),
            a.iter().map(|x| x.sin() + 1e-3).collect(),
            0.1,
        )
        .unwrap();
        assert!(st.symmetry_residual() > 1e-4);
        let s1 = symmetrize(&st);
        assert!(s1.symmetry_residual() < 1e-15);
        for j in 0..n {
            assert!((s1.theta[j] - (a[j] + 0.1 * a[j].sin())).abs() < 1e-15);
            assert!((s1.s_alpha[j] - (1.0 + 0.2 * a[j].cos())).abs() < 1e-15);
            assert!((s1.gamma[j] - a[j].sin()).abs() < 1e-15);
        }
        let s2 = symmetrize(&s1);
        assert_eq!(
            (s2.s_alpha, s2.gamma),
            (s1.s_alpha.clone(), s1.gamma.clone())
        );
        assert!(s2
            .theta
            .iter()
            .zip(&s1.theta)
            .all(|(x, y)| (x - y).abs() < 1e-15));
    }
}
