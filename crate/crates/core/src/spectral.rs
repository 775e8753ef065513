//! Periodic Fourier toolbox on the uniform grid `alpha_j = 2*pi*j/N`.
//!
//! Coefficients are normalized as `c(k) = (1/N) * sum_j f_j exp(-i k alpha_j)` for
//! `k = -N/2 .. N/2 - 1`, so that `f_j = sum_k c(k) exp(i k alpha_j)`. The Nyquist mode
//! `k = -N/2` is dropped by every operator that needs the sign of `k`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_param, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// Unnormalized in-place forward transform, `X_k = sum_j x_j exp(-2 pi i jk/n)`.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), true).process(buf);
    }
}

/// Unnormalized in-place inverse transform, `x_j = sum_k X_k exp(+2 pi i jk/n)`.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), false).process(buf);
    }
}

/// Checks the grid-size invariant shared by all sampled fields.
pub fn check_grid(n: usize) -> Result<()> {
    if n < 8 || n % 2 != 0 {
        return Err(Error::InvalidGridSize(n));
    }
    Ok(())
}

/// Grid nodes `2*pi*j/n`.
pub fn grid(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|j| j as f64 * h).collect()
}

/// Fourier coefficients of a periodic sample vector, stored in transform order
/// (index `i` holds wavenumber `i` for `i < n/2` and `i - n` otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    /// Wraps coefficients already in transform order.
    pub fn from_transform_order(coeffs: Vec<Complex64>) -> Result<Self> {
        check_grid(coeffs.len())?;
        Ok(Self { coeffs })
    }

    /// Builds a spectrum from coefficients listed for `k = -n/2 .. n/2 - 1`.
    pub fn from_natural_order(natural: &[Complex64]) -> Result<Self> {
        let n = natural.len();
        check_grid(n)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in natural.iter().enumerate() {
            let k = i as i64 - (n / 2) as i64;
            coeffs[index_of(k, n)] = *c;
        }
        Ok(Self { coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient for wavenumber `k`, `-n/2 <= k < n/2`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[index_of(k, self.len())]
    }

    pub fn coeff_mut(&mut self, k: i64) -> &mut Complex64 {
        let n = self.len();
        &mut self.coeffs[index_of(k, n)]
    }

    /// Wavenumber stored at transform-order index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(i, self.len())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficients listed for `k = -n/2 .. n/2 - 1`.
    pub fn to_natural_order(&self) -> Vec<Complex64> {
        let n = self.len() as i64;
        (-n / 2..n / 2).map(|k| self.coeff(k)).collect()
    }

    /// Evaluates the real trigonometric interpolant (or its `order`-th derivative) at an
    /// arbitrary point. The Nyquist mode enters as a cosine and is dropped for derivatives.
    pub fn eval(&self, alpha: f64, order: u32) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = wavenumber(i, n);
            if k == -(n as i64) / 2 {
                if order == 0 {
                    acc += c.re * (k as f64 * alpha).cos();
                }
                continue;
            }
            let kf = k as f64;
            let phase = Complex64::from_polar(1.0, kf * alpha);
            let factor = Complex64::new(0.0, kf).powu(order);
            acc += (c * factor * phase).re;
        }
        acc
    }
}

pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

pub(crate) fn index_of(k: i64, n: usize) -> usize {
    debug_assert!(
        k >= -(n as i64) / 2 && k < (n as i64) / 2,
        "wavenumber out of range"
    );
    if k >= 0 {
        k as usize
    } else {
        (k + n as i64) as usize
    }
}

/// Forward transform of real samples.
pub fn forward(f: &[f64]) -> Result<Spectrum> {
    check_grid(f.len())?;
    let n = f.len() as f64;
    let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut buf);
    for c in &mut buf {
        *c /= n;
    }
    Ok(Spectrum { coeffs: buf })
}

/// Inverse transform, returning the real part.
pub fn inverse(spec: &Spectrum) -> Vec<f64> {
    inverse_complex(spec).into_iter().map(|c| c.re).collect()
}

pub fn inverse_complex(spec: &Spectrum) -> Vec<Complex64> {
    let mut buf = spec.coeffs.clone();
    fft_inverse(&mut buf);
    buf
}

fn map_spectrum(f: &[f64], mut op: impl FnMut(i64, Complex64) -> Complex64) -> Result<Vec<f64>> {
    let mut spec = forward(f)?;
    let n = spec.len();
    for (i, c) in spec.coeffs.iter_mut().enumerate() {
        *c = op(wavenumber(i, n), *c);
    }
    Ok(inverse(&spec))
}

/// Spectral derivative with respect to `alpha`.
pub fn derivative(f: &[f64]) -> Result<Vec<f64>> {
    let nyq = -(f.len() as i64) / 2;
    map_spectrum(f, |k, c| {
        if k == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            c * Complex64::new(0.0, k as f64)
        }
    })
}

/// `F(alpha_j) = integral_0^{alpha_j} f`, exact for trigonometric polynomials: the mean
/// contributes a linear ramp, the rest a periodic antiderivative shifted so `F(0) = 0`.
pub fn antiderivative_from_zero(f: &[f64]) -> Result<Vec<f64>> {
    let spec = forward(f)?;
    let n = spec.len();
    let mean = spec.coeffs[0].re;
    let mut p = spec.coeffs;
    p[0] = Complex64::new(0.0, 0.0);
    for (i, c) in p.iter_mut().enumerate().skip(1) {
        let k = wavenumber(i, n);
        if k == -(n as i64) / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= Complex64::new(0.0, k as f64);
        }
    }
    fft_inverse(&mut p);
    let p0 = p[0].re;
    let h = 2.0 * PI / n as f64;
    Ok(p.iter()
        .enumerate()
        .map(|(j, c)| mean * j as f64 * h + (c.re - p0))
        .collect())
}

/// `integral_0^pi f(alpha) d alpha` of the trigonometric interpolant.
pub fn integral_to_pi(f: &[f64]) -> Result<f64> {
    let spec = forward(f)?;
    let n = spec.len();
    let mut acc = PI * spec.coeffs[0].re;
    for (i, c) in spec.coeffs.iter().enumerate().skip(1) {
        let k = wavenumber(i, n);
        if k == -(n as i64) / 2 || k % 2 == 0 {
            continue;
        }
        // (exp(i k pi) - 1)/(i k) = 2i/k for odd k
        acc += (c * Complex64::new(0.0, 2.0 / k as f64)).re;
    }
    Ok(acc)
}

/// Mean over one period.
pub fn mean(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

/// Band-limited interpolation onto `n_target` uniform nodes by zero-padding or truncating
/// the spectrum. Truncation folds the two Nyquist coefficients together.
pub fn resample(f: &[f64], n_target: usize) -> Result<Vec<f64>> {
    check_grid(n_target)?;
    let spec = forward(f)?;
    Ok(inverse(&resample_spectrum(&spec, n_target)?))
}

pub fn resample_spectrum(spec: &Spectrum, n_target: usize) -> Result<Spectrum> {
    check_grid(n_target)?;
    let n = spec.len();
    if n_target == n {
        return Ok(spec.clone());
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; n_target];
    if n_target > n {
        for (i, c) in spec.coeffs.iter().enumerate() {
            let k = wavenumber(i, n);
            if k == -(n as i64) / 2 {
                // split the Nyquist mode evenly between +-n/2
                out[index_of(k, n_target)] += c * 0.5;
                out[index_of(-k, n_target)] += c * 0.5;
            } else {
                out[index_of(k, n_target)] = *c;
            }
        }
    } else {
        let half = (n_target / 2) as i64;
        for (i, c) in spec.coeffs.iter().enumerate() {
            let k = wavenumber(i, n);
            if k > -half && k < half {
                out[index_of(k, n_target)] = *c;
            } else if k == -half || k == half {
                out[index_of(-half, n_target)] += c;
            }
        }
    }
    Ok(Spectrum { coeffs: out })
}

/// Removes every mode whose magnitude is strictly below `eps_k` (absolute threshold).
pub fn krasny_filter(f: &[f64], eps_k: f64) -> Result<Vec<f64>> {
    krasny_filter_counted(f, eps_k).map(|(g, _)| g)
}

/// As [`krasny_filter`], also returning how many nonzero modes were removed.
pub fn krasny_filter_counted(f: &[f64], eps_k: f64) -> Result<(Vec<f64>, usize)> {
    check_param(
        eps_k >= 0.0,
        "eps_k",
        "filter threshold must be non-negative",
    )?;
    if eps_k == 0.0 {
        check_grid(f.len())?;
        return Ok((f.to_vec(), 0));
    }
    let mut removed = 0;
    let g = map_spectrum(f, |_, c| {
        if c.norm() < eps_k {
            if c.norm() > 0.0 {
                removed += 1;
            }
            Complex64::new(0.0, 0.0)
        } else {
            c
        }
    })?;
    Ok((g, removed))
}

/// Periodic Hilbert transform, multiplier `-i sgn(k)`.
pub fn hilbert(f: &[f64]) -> Result<Vec<f64>> {
    let nyq = -(f.len() as i64) / 2;
    map_spectrum(f, |k, c| {
        if k == 0 || k == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            c * Complex64::new(0.0, -(k.signum() as f64))
        }
    })
}

/// Convolution with the heat kernel `(a^2/pi)^(1/2) exp(-a^2 s^2)` for samples uniform in
/// `s` over one period `[0, l_p)`, applied as its exact Fourier multiplier.
pub fn gaussian_filter(f: &[f64], a: f64, l_p: f64) -> Result<Vec<f64>> {
    check_param(
        a > 0.0 && a.is_finite(),
        "a",
        format!("kernel sharpness must be positive, got {a}"),
    )?;
    check_param(
        l_p > 0.0 && l_p.is_finite(),
        "l_p",
        format!("period length must be positive, got {l_p}"),
    )?;
    map_spectrum(f, |k, c| {
        let xi = 2.0 * PI * k as f64 / l_p;
        c * (-(xi * xi) / (4.0 * a * a)).exp()
    })
}
