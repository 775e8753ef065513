//! Type-1 and Type-2 nonuniform discrete Fourier transforms by Gaussian gridding.
//!
//! Type-1: `F_k = sum_j f_j exp(-i k x_j)`; Type-2: `f_j = sum_k F_k exp(i k x_j)`, both for
//! `k = -M/2 .. M/2 - 1` listed in natural order. Nodes are spread onto an oversampled
//! periodic grid with a truncated periodized Gaussian, transformed with a uniform FFT, and
//! deconvolved by the Gaussian's Fourier multiplier.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_param, Error, Result};
use crate::spectral::{fft_forward, fft_inverse};

const OVERSAMPLING: f64 = 2.0;
const TWO_PI_HI: f64 = 6.283_185_307_179_586;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;
/// Nodes per spreading chunk; each chunk accumulates into its own buffer and buffers are
/// summed in chunk order, so results do not depend on the thread count.
const SPREAD_CHUNK: usize = 2048;

/// Nonuniform nodes wrapped into `[0, 2*pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    x: Vec<f64>,
}

impl NodeSet {
    pub fn new(x: impl Into<Vec<f64>>) -> Result<Self> {
        let mut x = x.into();
        for (i, v) in x.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "nodes",
                    reason: format!("node {i} is not finite"),
                });
            }
            *v = v.rem_euclid(2.0 * PI);
            if *v >= 2.0 * PI {
                *v = 0.0;
            }
        }
        Ok(Self { x })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }
}

/// Immutable transform plan for a fixed mode count and accuracy.
#[derive(Debug, Clone)]
pub struct NufftPlan {
    eps_rel: f64,
    modes: usize,
    fine: usize,
    half_width: usize,
    tau: f64,
    /// fine-grid spacing `2*pi/fine` as an unevaluated sum `hi + lo`
    dx_hi: f64,
    dx_lo: f64,
    /// `exp(-(l*dx)^2 / (4 tau))` for `l = 0..=half_width`
    taper: Vec<f64>,
    /// `sqrt(pi/tau) exp(k^2 tau) / fine` in natural order
    deconv: Vec<f64>,
}

impl NufftPlan {
    pub fn new(eps_rel: f64, modes: usize) -> Result<Self> {
        check_param(
            (1e-15..=1e-2).contains(&eps_rel),
            "eps_rel",
            format!("accuracy {eps_rel} outside [1e-15, 1e-2]"),
        )?;
        check_param(
            modes >= 2 && modes % 2 == 0,
            "modes",
            format!("mode count {modes} must be even and positive"),
        )?;
        let r = OVERSAMPLING;
        // aliasing error of the Gaussian gridding decays like exp(-pi w (R-1)/(R-1/2))
        let rate = PI * (r - 1.0) / (r - 0.5);
        let half_width = (((1.0 / eps_rel).ln() / rate).ceil() as usize).max(2);
        Self::with_half_width(eps_rel, modes, half_width)
    }

    /// Plan with an explicit kernel half-width; `new` picks it from `eps_rel`.
    pub fn with_half_width(eps_rel: f64, modes: usize, half_width: usize) -> Result<Self> {
        check_param(
            half_width >= 1,
            "half_width",
            "kernel half-width must be positive",
        )?;
        let r = OVERSAMPLING;
        let fine = (r as usize) * modes;
        let m = modes as f64;
        let tau = PI * half_width as f64 / (m * m * r * (r - 0.5));
        let dx = 2.0 * PI / fine as f64;
        let taper = (0..=half_width)
            .map(|l| {
                let d = l as f64 * dx;
                (-d * d / (4.0 * tau)).exp()
            })
            .collect();
        let norm = (PI / tau).sqrt() / fine as f64;
        let fine_f = fine as f64;
        let dx_hi = TWO_PI_HI / fine_f;
        let dx_lo = ((-dx_hi).mul_add(fine_f, TWO_PI_HI) + TWO_PI_LO) / fine_f;
        let half = (modes / 2) as i64;
        let deconv = (-half..half)
            .map(|k| norm * ((k * k) as f64 * tau).exp())
            .collect();
        Ok(Self {
            eps_rel,
            modes,
            fine,
            half_width,
            tau,
            dx_hi,
            dx_lo,
            taper,
            deconv,
        })
    }

    pub fn eps_rel(&self) -> f64 {
        self.eps_rel
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn fine_size(&self) -> usize {
        self.fine
    }

    /// Nearest fine-grid index of `x` (unwrapped).
    #[inline]
    fn cell(&self, x: f64) -> i64 {
        (x / self.dx_hi).round() as i64
    }

    /// Gaussian weights at the `2w+1` fine-grid points `m0-w ..= m0+w` nearest `x`,
    /// written to `out` in that order; returns `m0`.
    #[inline]
    fn weights(&self, x: f64, out: &mut [f64]) -> i64 {
        let m0 = self.cell(x);
        // offset from the nearest grid point, kept accurate to a few ulps of dx
        let mf = m0 as f64;
        let d = (-mf).mul_add(self.dx_hi, x) - mf * self.dx_lo;
        let e1 = (-d * d / (4.0 * self.tau)).exp();
        let e2 = (d * self.dx_hi / (2.0 * self.tau)).exp();
        let e2inv = 1.0 / e2;
        let w = self.half_width;
        out[w] = e1;
        let (mut up, mut down) = (e1, e1);
        for l in 1..=w {
            up *= e2;
            down *= e2inv;
            let t = self.taper[l];
            out[w + l] = up * t;
            out[w - l] = down * t;
        }
        m0
    }

    /// Node indices ordered by grid cell, for cache-local spreading and interpolation.
    fn sorted_order(&self, x: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by_key(|&j| self.cell(x[j]));
        order
    }

    /// `F_k = sum_j f_j exp(-i k x_j)` for `k = -M/2 .. M/2 - 1`.
    pub fn type1(&self, f: &[Complex64], nodes: &NodeSet) -> Result<Vec<Complex64>> {
        if f.len() != nodes.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                got: f.len(),
            });
        }
        let zero = Complex64::new(0.0, 0.0);
        let x = nodes.as_slice();
        let w = self.half_width;
        let order = self.sorted_order(x);
        // each chunk of cell-sorted nodes spreads into a local window; windows are
        // merged in chunk order so the sum is independent of the thread count
        let partials: Vec<(i64, Vec<Complex64>)> = order
            .par_chunks(SPREAD_CHUNK)
            .map(|chunk| {
                let lo = self.cell(x[chunk[0]]) - w as i64;
                let hi = self.cell(x[chunk[chunk.len() - 1]]) + w as i64;
                let mut buf = vec![zero; (hi - lo + 1) as usize];
                let mut wts = vec![0.0; 2 * w + 1];
                for &j in chunk {
                    let m0 = self.weights(x[j], &mut wts);
                    let base = (m0 - w as i64 - lo) as usize;
                    let fj = f[j];
                    for (b, g) in buf[base..base + 2 * w + 1].iter_mut().zip(&wts) {
                        *b += fj * *g;
                    }
                }
                (lo, buf)
            })
            .collect();
        let fine = self.fine as i64;
        let mut grid = vec![zero; self.fine];
        for (lo, buf) in &partials {
            for (i, v) in buf.iter().enumerate() {
                grid[(lo + i as i64).rem_euclid(fine) as usize] += v;
            }
        }
        fft_forward(&mut grid);
        let half = (self.modes / 2) as i64;
        Ok((-half..half)
            .zip(&self.deconv)
            .map(|(k, s)| grid[k.rem_euclid(fine) as usize] * *s)
            .collect())
    }

    /// `f_j = sum_k F_k exp(i k x_j)` with `F` in natural order.
    pub fn type2(&self, fhat: &[Complex64], nodes: &NodeSet) -> Result<Vec<Complex64>> {
        if fhat.len() != self.modes {
            return Err(Error::LengthMismatch {
                expected: self.modes,
                got: fhat.len(),
            });
        }
        let zero = Complex64::new(0.0, 0.0);
        let half = (self.modes / 2) as i64;
        let fine = self.fine as i64;
        let mut grid = vec![zero; self.fine];
        for ((k, c), s) in (-half..half).zip(fhat).zip(&self.deconv) {
            grid[k.rem_euclid(fine) as usize] = c * *s;
        }
        fft_inverse(&mut grid);
        let x = nodes.as_slice();
        let w = self.half_width;
        let order = self.sorted_order(x);
        let values: Vec<Complex64> = order
            .par_chunks(SPREAD_CHUNK)
            .flat_map_iter(|chunk| {
                let mut wts = vec![0.0; 2 * w + 1];
                let grid = &grid;
                chunk
                    .iter()
                    .map(move |&j| {
                        let m0 = self.weights(x[j], &mut wts);
                        let mut acc = zero;
                        for (l, g) in wts.iter().enumerate() {
                            acc += grid[(m0 + l as i64 - w as i64).rem_euclid(fine) as usize] * *g;
                        }
                        acc
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut out = vec![zero; x.len()];
        for (&j, v) in order.iter().zip(values) {
            out[j] = v;
        }
        Ok(out)
    }

    /// Type-1 of real strengths.
    pub fn type1_real(&self, f: &[f64], nodes: &NodeSet) -> Result<Vec<Complex64>> {
        let fc: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.type1(&fc, nodes)
    }

    /// Real part of the Type-2 sum.
    pub fn type2_real(&self, fhat: &[Complex64], nodes: &NodeSet) -> Result<Vec<f64>> {
        Ok(self.type2(fhat, nodes)?.into_iter().map(|c| c.re).collect())
    }
}
