//! Adaptive mesh density from the curvature envelope, and the tangential velocity that
//! realizes it.
//!
//! The guideline `GL` is built in arclength: `kappa_z` is expanded in Fourier modes of
//! `s` (a Type-1 NUFFT over the upsampled, non-uniform arclength nodes), resampled on a
//! uniform-in-`s` grid, replaced by its regularized analytic envelope, smoothed with a
//! heat kernel and brought back to the curve's nodes by a Type-2 NUFFT. The mesh density
//! `R` is proportional to `1/GL`, blended in time from the uniform density `1/pi`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::curve::{CurveState, DerivedGeometry};
use crate::error::{check_param, Error, Result};
use crate::nufft::{NodeSet, NufftPlan};
use crate::spectral::{self, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidelineParams {
    /// Heat-kernel sharpness.
    pub a: f64,
    /// Ramp rate of the blend from uniform to adapted density.
    pub d: f64,
    /// Fraction of uniform density always retained.
    pub delta_r: f64,
    /// Largest retained arclength wavenumber.
    pub k_max: usize,
    /// Size of the upsampled grid the arclength sums run over.
    pub n_up: usize,
    pub eps_rel: f64,
}

impl GuidelineParams {
    pub fn defaults(n: usize) -> Self {
        Self {
            a: 20.0,
            d: 5.0,
            delta_r: 0.125,
            k_max: 8 * (n / 2),
            n_up: 32 * n,
            eps_rel: 1e-15,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_param(
            self.a > 0.0 && self.a.is_finite(),
            "a",
            format!("must be positive, got {}", self.a),
        )?;
        check_param(
            self.d >= 0.0 && self.d.is_finite(),
            "d",
            format!("must be non-negative, got {}", self.d),
        )?;
        check_param(
            self.delta_r > 0.0 && self.delta_r < 1.0,
            "delta_r",
            format!("must lie in (0, 1), got {}", self.delta_r),
        )?;
        check_param(
            self.k_max >= n / 2,
            "k_max",
            format!("must be at least N/2 = {}, got {}", n / 2, self.k_max),
        )?;
        check_param(
            self.n_up >= 2 * self.k_max && self.n_up >= n && self.n_up % 2 == 0,
            "n_up",
            format!(
                "must be even and at least max(N, 2 k_max) = {}, got {}",
                (2 * self.k_max).max(n),
                self.n_up
            ),
        )?;
        check_param(
            (1e-15..=1e-2).contains(&self.eps_rel),
            "eps_rel",
            format!("must lie in [1e-15, 1e-2], got {}", self.eps_rel),
        )
    }

    pub fn plan(&self) -> Result<NufftPlan> {
        NufftPlan::new(self.eps_rel, 2 * self.k_max)
    }
}

/// Arclength parametrization of a state sampled on an upsampled grid.
#[derive(Debug, Clone)]
pub struct ArclengthMap {
    s_alpha: Vec<f64>,
    nodes: NodeSet,
    l_p: f64,
}

impl ArclengthMap {
    /// Upsamples `s_alpha` to `n_up` points and integrates it to `s`.
    pub fn new(s_alpha: &[f64], n_up: usize) -> Result<Self> {
        let sa = spectral::resample(s_alpha, n_up)?;
        if let Some(j) = sa.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::NonPositiveSpacing {
                index: j,
                value: sa[j],
            });
        }
        let s = spectral::antiderivative_from_zero(&sa)?;
        if let Some(j) = s.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneArclength { index: j + 1 });
        }
        let l_p = 2.0 * PI * spectral::mean(&sa);
        let nodes = NodeSet::new(s.iter().map(|v| 2.0 * PI * v / l_p).collect::<Vec<_>>())?;
        Ok(Self {
            s_alpha: sa,
            nodes,
            l_p,
        })
    }

    pub fn l_p(&self) -> f64 {
        self.l_p
    }

    pub fn len(&self) -> usize {
        self.s_alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_alpha.is_empty()
    }

    /// `f_hat(k) = (h / L_p) sum_j f(s_j) s_alpha(alpha_j) exp(-2 pi i k s_j / L_p)` for
    /// `k = -k_max .. k_max - 1`, where `f` is given on the original grid and upsampled
    /// here. The Nyquist coefficient is dropped.
    pub fn coeffs(&self, f: &[f64], plan: &NufftPlan) -> Result<Spectrum> {
        let n_up = self.len();
        let fu = spectral::resample(f, n_up)?;
        let h = 2.0 * PI / n_up as f64;
        let weighted: Vec<f64> = fu
            .iter()
            .zip(&self.s_alpha)
            .map(|(f, sa)| f * sa * h / self.l_p)
            .collect();
        let mut c = plan.type1_real(&weighted, &self.nodes)?;
        c[0] = Complex64::new(0.0, 0.0);
        Spectrum::from_natural_order(&c)
    }
}

/// Fourier coefficients of `f` in normalized arclength, with `2 k_max` modes.
pub fn arclength_coeffs(
    f: &[f64],
    state: &CurveState,
    n_up: usize,
    plan: &NufftPlan,
) -> Result<Spectrum> {
    ArclengthMap::new(&state.s_alpha, n_up)?.coeffs(f, plan)
}

/// Regularized analytic envelope `sqrt(1 + f^2 + H[f]^2)` of samples uniform in `s`.
pub fn analytic_envelope(f_uniform: &[f64]) -> Result<Vec<f64>> {
    let hf = spectral::hilbert(f_uniform)?;
    Ok(f_uniform
        .iter()
        .zip(&hf)
        .map(|(f, h)| (1.0 + f * f + h * h).sqrt())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Guideline {
    /// `GL(s(alpha_j))` on the state's grid.
    pub gl_at_nodes: Vec<f64>,
    /// `GL` on `2 k_max` points uniform in `s` over `[0, L_p)`.
    pub gl_uniform: Vec<f64>,
    pub l_p: f64,
}

/// Evaluates the guideline at the state's nodes.
pub fn build_guideline(
    state: &CurveState,
    geom: &DerivedGeometry,
    params: &GuidelineParams,
    plan: &NufftPlan,
) -> Result<Guideline> {
    let n = state.n();
    params.validate(n)?;
    if plan.modes() != 2 * params.k_max {
        return Err(Error::LengthMismatch {
            expected: 2 * params.k_max,
            got: plan.modes(),
        });
    }
    let map = ArclengthMap::new(&state.s_alpha, params.n_up)?;
    let kappa_hat = map.coeffs(&geom.kappa_z, plan)?;
    let kappa_uniform = spectral::inverse(&kappa_hat);
    let envelope = analytic_envelope(&kappa_uniform)?;
    let gl_uniform = spectral::gaussian_filter(&envelope, params.a, map.l_p())?;

    let mut gl_hat = spectral::forward(&gl_uniform)?.to_natural_order();
    gl_hat[0] = Complex64::new(0.0, 0.0);
    let targets = NodeSet::new(
        geom.s
            .iter()
            .map(|s| 2.0 * PI * s / map.l_p())
            .collect::<Vec<_>>(),
    )?;
    let gl_at_nodes = plan.type2_real(&gl_hat, &targets)?;
    if let Some(j) = gl_at_nodes.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::GeometryDegenerate { index: j % n });
    }
    Ok(Guideline {
        gl_at_nodes,
        gl_uniform,
        l_p: map.l_p(),
    })
}

/// Target density `R(alpha)` at time `t`, normalized so `int_0^pi R = 1`.
pub fn build_r(gl: &Guideline, t: f64, params: &GuidelineParams) -> Result<Vec<f64>> {
    let inv: Vec<f64> = gl.gl_at_nodes.iter().map(|g| 1.0 / g).collect();
    let norm = spectral::integral_to_pi(&inv)?;
    let ramp = (-params.d * t * t).exp();
    let r0 = 1.0 / PI;
    let dr = params.delta_r;
    Ok(inv
        .iter()
        .map(|v| (1.0 - dr) * ((1.0 - ramp) * v / norm + ramp * r0) + dr * r0)
        .collect())
}

/// Density together with its backward-difference time derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct RFunction {
    pub r: Vec<f64>,
    pub drdt: Vec<f64>,
    /// Delay of the backward difference; zero when `drdt` is identically zero.
    pub tau: f64,
}

impl RFunction {
    /// `dR/dt = (R_now - R_past) / tau`, shifted to zero mean on `[0, pi]`. Without a past
    /// density the derivative is taken to vanish.
    pub fn new(r_now: Vec<f64>, r_past: Option<&[f64]>, tau: f64) -> Result<Self> {
        let n = r_now.len();
        let Some(past) = r_past else {
            return Ok(Self {
                drdt: vec![0.0; n],
                r: r_now,
                tau: 0.0,
            });
        };
        if past.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: past.len(),
            });
        }
        check_param(
            tau > 0.0 && tau.is_finite(),
            "tau",
            format!("delay must be positive, got {tau}"),
        )?;
        let mut drdt: Vec<f64> = r_now.iter().zip(past).map(|(a, b)| (a - b) / tau).collect();
        let shift = spectral::integral_to_pi(&drdt)? / PI;
        drdt.iter_mut().for_each(|v| *v -= shift);
        Ok(Self {
            r: r_now,
            drdt,
            tau,
        })
    }
}

/// Tangential velocity `V` that keeps `s_alpha / L` moving like `R`:
/// `V(alpha) = int_0^alpha (R_t L + R dL/dt + theta_alpha U)` with
/// `dL/dt = -int_0^pi theta_alpha U`.
pub fn tangential_velocity(
    geom: &DerivedGeometry,
    u: &[f64],
    density: &RFunction,
) -> Result<Vec<f64>> {
    Ok(tangential_velocity_with_derivative(geom, u, density)?.0)
}

/// `(V, V_alpha)`. The derivative is the integrand itself, which unlike the spectral
/// derivative of `V` keeps its Nyquist component.
pub fn tangential_velocity_with_derivative(
    geom: &DerivedGeometry,
    u: &[f64],
    density: &RFunction,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = geom.n();
    for len in [u.len(), density.r.len(), density.drdt.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let stretch: Vec<f64> = geom
        .theta_alpha
        .iter()
        .zip(u)
        .map(|(ta, u)| ta * u)
        .collect();
    let dl_dt = -spectral::integral_to_pi(&stretch)?;
    let integrand: Vec<f64> = (0..n)
        .map(|j| density.drdt[j] * geom.l + density.r[j] * dl_dt + stretch[j])
        .collect();
    let v = spectral::antiderivative_from_zero(&integrand)?;
    Ok((v, integrand))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{reconstruct, Anchor};
    use crate::problems::P2Curve;

    fn sphere(n: usize) -> (CurveState, DerivedGeometry) {
        let st = CurveState::sphere(n, 1.0, vec![0.0; n], 0.0).unwrap();
        let g = reconstruct(&st, Anchor::Fixed(-1.0)).unwrap();
        (st, g)
    }

    #[test]
    fn constant_has_single_mode() {
        let c = P2Curve::new(0.2).unwrap();
        let st = c.state(64, 0.3, 0.0).unwrap();
        let plan = NufftPlan::new(1e-15, 128).unwrap();
        let spec = arclength_coeffs(&vec![1.0; 64], &st, 1024, &plan).unwrap();
        assert!((spec.coeff(0).re - 1.0).abs() < 1e-13);
        for k in -63..64 {
            if k != 0 {
                assert!(spec.coeff(k).norm() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn uniform_parametrization_gives_dft() {
        let (st, _) = sphere(32);
        let f: Vec<f64> = spectral::grid(32)
            .iter()
            .map(|a| (3.0 * a).cos() + 0.5 * a.sin())
            .collect();
        let plan = NufftPlan::new(1e-15, 64).unwrap();
        let spec = arclength_coeffs(&f, &st, 256, &plan).unwrap();
        let dft = spectral::forward(&f).unwrap();
        for k in -15..16 {
            assert!((spec.coeff(k) - dft.coeff(k)).norm() < 1e-14, "k={k}");
        }
        for k in 16..32 {
            assert!(spec.coeff(k).norm() < 1e-14 && spec.coeff(-k).norm() < 1e-14);
        }
    }

    #[test]
    fn envelope_of_pure_tone_is_flat() {
        let f: Vec<f64> = spectral::grid(64).iter().map(|a| (5.0 * a).cos()).collect();
        for v in analytic_envelope(&f).unwrap() {
            assert!((v - 2f64.sqrt()).abs() < 1e-14);
        }
        assert!(analytic_envelope(&[0.0; 16])
            .unwrap()
            .iter()
            .all(|v| *v == 1.0));
    }

    #[test]
    fn sphere_guideline_is_constant() {
        let (st, g) = sphere(32);
        let p = GuidelineParams::defaults(32);
        let gl = build_guideline(&st, &g, &p, &p.plan().unwrap()).unwrap();
        for v in gl.gl_at_nodes.iter().chain(&gl.gl_uniform) {
            assert!((v - 2f64.sqrt()).abs() < 1e-10);
        }
        let r = build_r(&gl, 0.7, &p).unwrap();
        assert!(r.iter().all(|v| (v - 1.0 / PI).abs() < 1e-12));
    }

    #[test]
    fn initial_density_is_uniform() {
        let gl = Guideline {
            gl_at_nodes: spectral::grid(32).iter().map(|a| 2.0 + a.cos()).collect(),
            gl_uniform: vec![],
            l_p: 2.0 * PI,
        };
        let p = GuidelineParams::defaults(32);
        let r = build_r(&gl, 0.0, &p).unwrap();
        assert!(r.iter().all(|v| (v - 1.0 / PI).abs() < 1e-15));
        let later = build_r(&gl, 3.0, &p).unwrap();
        assert!((spectral::integral_to_pi(&later).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn uniform_density_matches_explicit_formula() {
        let n = 64;
        let c = P2Curve::new(0.2).unwrap();
        let st = c.state(n, 0.0, 0.0).unwrap();
        let g = reconstruct(&st, Anchor::Fixed(0.0)).unwrap();
        let u: Vec<f64> = spectral::grid(n)
            .iter()
            .map(|a| (2.0 * a).cos() + 0.3)
            .collect();
        let rf = RFunction::new(vec![1.0 / PI; n], None, 0.0).unwrap();
        let v = tangential_velocity(&g, &u, &rf).unwrap();
        let stretch: Vec<f64> = g.theta_alpha.iter().zip(&u).map(|(t, u)| t * u).collect();
        let total = spectral::integral_to_pi(&stretch).unwrap();
        let partial = spectral::antiderivative_from_zero(&stretch).unwrap();
        for (j, a) in spectral::grid(n).into_iter().enumerate() {
            let expect = -a / PI * total + partial[j];
            assert!((v[j] - expect).abs() < 1e-13, "j={j}");
        }
    }

    #[test]
    fn shrinking_sphere_needs_no_tangential_motion() {
        let (_, g) = sphere(32);
        let rf = RFunction::new(vec![1.0 / PI; 32], None, 0.0).unwrap();
        let v = tangential_velocity(&g, &[-0.3; 32], &rf).unwrap();
        assert!(v.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn rejects_bad_delay() {
        assert!(RFunction::new(vec![0.3; 8], Some(&[0.3; 8]), 0.0).is_err());
        assert!(RFunction::new(vec![0.3; 8], Some(&[0.3; 4]), 1.0).is_err());
    }

    #[test]
    fn default_params_validate() {
        let p = GuidelineParams::defaults(512);
        assert_eq!(p.k_max, 2048);
        assert_eq!(p.n_up, 16384);
        assert!(p.validate(512).is_ok());
        assert!(GuidelineParams { delta_r: 1.0, ..p }.validate(512).is_err());
        assert!(GuidelineParams { n_up: 1000, ..p }.validate(512).is_err());
    }
}
