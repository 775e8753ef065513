//! Classical RK4 for `(theta, s_alpha, gamma)`.
//!
//! The mesh density at each stage is differenced against a stored density with delay
//! `tau = c_i dt`, `c = [1, 1/2, 1/2, 1]`: stage 1 reaches back to the previous step's
//! base density, stages 2 to 4 to the current step's base density. On the very first step
//! there is no previous density and `dR/dt` is taken as zero.

use crate::biot_savart::{default_quad_nodes, principal_velocity, SheetVelocity};
use crate::curve::{enclosed_volume, reconstruct, symmetrize, Anchor, CurveState, DerivedGeometry};
use crate::error::{check_param, Error, Result};
use crate::meshref::{
    build_guideline, build_r, tangential_velocity_with_derivative, GuidelineParams, RFunction,
};
use crate::nufft::NufftPlan;
use crate::spectral;

/// How the target mesh density is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshMode {
    /// Density from the curvature guideline.
    Adaptive(GuidelineParams),
    /// `R = 1/pi` at all times.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub eps_k: f64,
    pub c_cfl: f64,
    pub m_quad: usize,
    pub mesh: MeshMode,
    pub symmetrize: bool,
}

impl StepConfig {
    /// Defaults for grid size `n`: adaptive mesh, `eps_K = 1e-11`, `C = 2.5`, `4N + 1`
    /// quadrature nodes.
    pub fn new(n: usize, dt: f64) -> Self {
        Self {
            dt,
            eps_k: 1e-11,
            c_cfl: 2.5,
            m_quad: default_quad_nodes(n),
            mesh: MeshMode::Adaptive(GuidelineParams::defaults(n)),
            symmetrize: true,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_param(
            self.dt > 0.0 && self.dt.is_finite(),
            "dt",
            format!("must be positive, got {}", self.dt),
        )?;
        check_param(
            self.eps_k >= 0.0,
            "eps_k",
            format!("must be non-negative, got {}", self.eps_k),
        )?;
        check_param(
            self.c_cfl > 0.0,
            "c_cfl",
            format!("must be positive, got {}", self.c_cfl),
        )?;
        crate::biot_savart::check_quad_nodes(n, self.m_quad)?;
        if let MeshMode::Adaptive(p) = &self.mesh {
            p.validate(n)?;
        }
        Ok(())
    }
}

/// Delay multipliers of the four stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageCoeffs {
    pub c: [f64; 4],
}

impl StageCoeffs {
    pub const RK4: StageCoeffs = StageCoeffs {
        c: [1.0, 0.5, 0.5, 1.0],
    };
}

/// Time derivatives of the three evolved fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub theta: Vec<f64>,
    pub s_alpha: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Everything computed along the way by one right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct RhsEval {
    pub rates: Rates,
    pub geom: DerivedGeometry,
    pub velocity: SheetVelocity,
    /// Mesh density of the evaluated state.
    pub r_now: Vec<f64>,
    pub v: Vec<f64>,
    /// Guideline at the nodes, when the mesh is adaptive.
    pub gl: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub l: f64,
    pub ds_min: f64,
    pub volume: f64,
    pub closure_residual: f64,
    /// `dt / (C ds_min^(3/2))`; above 1 the stability bound is violated.
    pub cfl_ratio: f64,
    pub filtered_modes: usize,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: CurveState,
    /// Density of the step's base state, the stage-1 reference for the next step.
    pub r_base: Vec<f64>,
    pub diagnostics: StepDiagnostics,
}

/// Integrator for a fixed grid size.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: StepConfig,
    plan: Option<NufftPlan>,
}

impl Stepper {
    pub fn new(cfg: StepConfig, n: usize) -> Result<Self> {
        cfg.validate(n)?;
        let plan = match &cfg.mesh {
            MeshMode::Adaptive(p) => Some(p.plan()?),
            MeshMode::Uniform => None,
        };
        Ok(Self { cfg, plan })
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    /// Mesh density and guideline of a state at its own time.
    pub fn density(
        &self,
        state: &CurveState,
        geom: &DerivedGeometry,
    ) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        match (&self.cfg.mesh, &self.plan) {
            (MeshMode::Adaptive(p), Some(plan)) => {
                let gl = build_guideline(state, geom, p, plan)?;
                let r = build_r(&gl, state.t, p)?;
                Ok((r, Some(gl.gl_at_nodes)))
            }
            _ => Ok((vec![1.0 / std::f64::consts::PI; state.n()], None)),
        }
    }

    /// Right-hand side with the density differenced against `r_ref` over delay `tau`.
    pub fn rhs(&self, state: &CurveState, r_ref: Option<&[f64]>, tau: f64) -> Result<RhsEval> {
        let geom = reconstruct(state, Anchor::Fixed(0.0))?;
        let velocity = principal_velocity(state, &geom, self.cfg.m_quad)?;
        let (r_now, gl) = self.density(state, &geom)?;
        let density = RFunction::new(r_now, r_ref, tau)?;
        let (v, v_alpha) = tangential_velocity_with_derivative(&geom, &velocity.u, &density)?;
        let n = state.n();

        let u_alpha = spectral::derivative(&velocity.u)?;
        let theta = (0..n)
            .map(|j| (u_alpha[j] + v[j] * geom.theta_alpha[j]) / state.s_alpha[j])
            .collect();
        let s_alpha = (0..n)
            .map(|j| v_alpha[j] - geom.theta_alpha[j] * velocity.u[j])
            .collect();
        let curvature: Vec<f64> = geom
            .kappa_z
            .iter()
            .zip(&geom.kappa_r)
            .map(|(a, b)| a + b)
            .collect();
        let curvature_alpha = spectral::derivative(&curvature)?;
        let transport: Vec<f64> = (0..n)
            .map(|j| (v[j] - velocity.wt[j]) * state.gamma[j] / state.s_alpha[j])
            .collect();
        let transport_alpha = spectral::derivative(&transport)?;
        let gamma = (0..n)
            .map(|j| -state.sigma * curvature_alpha[j] + transport_alpha[j])
            .collect();

        Ok(RhsEval {
            rates: Rates {
                theta,
                s_alpha,
                gamma,
            },
            geom,
            velocity,
            r_now: density.r,
            v,
            gl,
        })
    }

    /// One RK4 step. `r_prev` is the base density of the previous step, `None` on the
    /// first step.
    pub fn step(&self, state: &CurveState, r_prev: Option<&[f64]>) -> Result<StepOutcome> {
        let dt = self.cfg.dt;
        let c = StageCoeffs::RK4.c;
        let abort = |e: Error| match e {
            Error::NumericalAbort { .. } => e,
            other => Error::NumericalAbort {
                t: state.t,
                reason: other.to_string(),
            },
        };

        let k1 = self.rhs(state, r_prev, c[0] * dt).map_err(abort)?;
        let r_base = k1.r_now.clone();
        let y2 = advance(state, &k1.rates, 0.5 * dt).map_err(abort)?;
        let k2 = self.rhs(&y2, Some(&r_base), c[1] * dt).map_err(abort)?;
        let y3 = advance(state, &k2.rates, 0.5 * dt).map_err(abort)?;
        let k3 = self.rhs(&y3, Some(&r_base), c[2] * dt).map_err(abort)?;
        let y4 = advance(state, &k3.rates, dt).map_err(abort)?;
        let k4 = self.rhs(&y4, Some(&r_base), c[3] * dt).map_err(abort)?;

        let n = state.n();
        let combine = |a: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|j| a[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
                .collect()
        };
        let (r1, r2, r3, r4) = (&k1.rates, &k2.rates, &k3.rates, &k4.rates);
        let theta = combine(&state.theta, &r1.theta, &r2.theta, &r3.theta, &r4.theta);
        let s_alpha = combine(
            &state.s_alpha,
            &r1.s_alpha,
            &r2.s_alpha,
            &r3.s_alpha,
            &r4.s_alpha,
        );
        let gamma = combine(&state.gamma, &r1.gamma, &r2.gamma, &r3.gamma, &r4.gamma);

        let t_new = state.t + dt;
        if let Some(j) = (0..n)
            .find(|&j| !(theta[j].is_finite() && s_alpha[j].is_finite() && gamma[j].is_finite()))
        {
            return Err(Error::NumericalAbort {
                t: t_new,
                reason: format!("non-finite value at node {j}"),
            });
        }
        let (next, filtered_modes) = self
            .filter(t_new, theta, s_alpha, gamma, state.sigma)
            .map_err(abort)?;

        let geom = reconstruct(&next, Anchor::Fixed(0.0)).map_err(abort)?;
        let volume = enclosed_volume(&geom).map_err(abort)?;
        let cfl_ratio = dt / (self.cfg.c_cfl * geom.ds_min.powf(1.5));
        if cfl_ratio > 1.0 {
            log::warn!("t = {t_new:.6}: dt exceeds the stability bound by a factor {cfl_ratio:.3}");
        }
        Ok(StepOutcome {
            state: next,
            r_base,
            diagnostics: StepDiagnostics {
                t: t_new,
                l: geom.l,
                ds_min: geom.ds_min,
                volume,
                closure_residual: geom.closure_residual,
                cfl_ratio,
                filtered_modes,
            },
        })
    }

    /// Krasny filter on the periodic fields, then the symmetry projection.
    fn filter(
        &self,
        t: f64,
        theta: Vec<f64>,
        s_alpha: Vec<f64>,
        gamma: Vec<f64>,
        sigma: f64,
    ) -> Result<(CurveState, usize)> {
        let eps = self.cfg.eps_k;
        let raw = CurveState::new(t, theta, s_alpha, gamma, sigma)?;
        if eps == 0.0 && !self.cfg.symmetrize {
            return Ok((raw, 0));
        }
        let alpha = spectral::grid(raw.n());
        let (p, n1) = spectral::krasny_filter_counted(&raw.theta_periodic(), eps)?;
        let (sa, n2) = spectral::krasny_filter_counted(&raw.s_alpha, eps)?;
        let (g, n3) = spectral::krasny_filter_counted(&raw.gamma, eps)?;
        let theta = p.iter().zip(&alpha).map(|(p, a)| p + a).collect();
        let filtered = CurveState::new(t, theta, sa, g, sigma)?;
        let out = if self.cfg.symmetrize {
            symmetrize(&filtered)
        } else {
            filtered
        };
        Ok((out, n1 + n2 + n3))
    }
}

/// `state + h * rates` at time `state.t + h`.
fn advance(state: &CurveState, rates: &Rates, h: f64) -> Result<CurveState> {
    let add =
        |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + h * b).collect() };
    CurveState::new(
        state.t + h,
        add(&state.theta, &rates.theta),
        add(&state.s_alpha, &rates.s_alpha),
        add(&state.gamma, &rates.gamma),
        state.sigma,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    #[test]
    fn sphere_at_rest_is_stationary() {
        let n = 32;
        let st = problems::sphere_at_rest(n, 0.2).unwrap();
        let stepper = Stepper::new(StepConfig::new(n, 1e-3), n).unwrap();
        let e = stepper.rhs(&st, None, 1e-3).unwrap();
        for f in [&e.rates.theta, &e.rates.s_alpha, &e.rates.gamma] {
            assert!(f.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn pinchoff_gamma_rate_vanishes_on_axis() {
        let n = 64;
        let st = problems::pinchoff(n).unwrap();
        let stepper = Stepper::new(StepConfig::new(n, 1e-3), n).unwrap();
        let e = stepper.rhs(&st, None, 1e-3).unwrap();
        assert!(e.rates.gamma[0].abs() < 1e-12);
        assert!(e.rates.gamma[n / 2].abs() < 1e-12);
    }

    #[test]
    fn length_rate_is_consistent() {
        // with uniform density, d/dt int_0^pi s_alpha = -int_0^pi theta_alpha U
        let n = 64;
        let st = problems::pinchoff(n).unwrap();
        let mut cfg = StepConfig::new(n, 1e-3);
        cfg.mesh = MeshMode::Uniform;
        let e = Stepper::new(cfg, n).unwrap().rhs(&st, None, 1e-3).unwrap();
        let dl = spectral::integral_to_pi(&e.rates.s_alpha).unwrap();
        let stretch: Vec<f64> = e
            .geom
            .theta_alpha
            .iter()
            .zip(&e.velocity.u)
            .map(|(a, b)| a * b)
            .collect();
        assert!((dl + spectral::integral_to_pi(&stretch).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn inactive_filters_change_nothing() {
        let n = 32;
        let st = problems::P2Curve::new(0.1)
            .unwrap()
            .state(n, 0.2, 0.1)
            .unwrap();
        let mut cfg = StepConfig::new(n, 1e-3);
        cfg.eps_k = 0.0;
        cfg.symmetrize = false;
        let stepper = Stepper::new(cfg, n).unwrap();
        let (out, count) = stepper
            .filter(
                0.0,
                st.theta.clone(),
                st.s_alpha.clone(),
                st.gamma.clone(),
                st.sigma,
            )
            .unwrap();
        assert_eq!(count, 0);
        assert_eq!(out, st);
        let mut cfg = StepConfig::new(n, 1e-3);
        cfg.eps_k = 0.0;
        let (sym, _) = Stepper::new(cfg, n)
            .unwrap()
            .filter(
                0.0,
                st.theta.clone(),
                st.s_alpha.clone(),
                st.gamma.clone(),
                st.sigma,
            )
            .unwrap();
        for j in 0..n {
            assert!((sym.theta[j] - st.theta[j]).abs() < 1e-13);
            assert!((sym.s_alpha[j] - st.s_alpha[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = StepConfig::new(64, 1e-3);
        assert!(cfg.validate(64).is_ok());
        cfg.dt = 0.0;
        assert!(cfg.validate(64).is_err());
        let mut cfg = StepConfig::new(64, 1e-3);
        cfg.m_quad = 130;
        assert!(Stepper::new(cfg, 64).is_err());
    }
}
