//! Reference implementations shared by the integration tests. Everything here is
//! deliberately independent of the library internals: brute-force sums, Carlson
//! symmetric forms, adaptive Gauss-Kronrod quadrature.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn random_nodes(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
}

/// `exp(-i k x)` with the rounding error of the product `k x` folded back in.
fn phase(k: i64, x: f64) -> Complex64 {
    let kf = k as f64;
    let p = kf * x;
    let e = kf.mul_add(x, -p);
    let (s, c) = p.sin_cos();
    Complex64::new(c, -s) * Complex64::new(1.0, -e)
}

/// Direct `F_k = sum_j f_j exp(-i k x_j)`, `k = -M/2 .. M/2-1`.
pub fn direct_type1(f: &[Complex64], x: &[f64], m: usize) -> Vec<Complex64> {
    let half = (m / 2) as i64;
    (-half..half)
        .map(|k| f.iter().zip(x).map(|(fj, &xj)| fj * phase(k, xj)).sum())
        .collect()
}

/// Direct `f_j = sum_k F_k exp(i k x_j)`.
pub fn direct_type2(fhat: &[Complex64], x: &[f64]) -> Vec<Complex64> {
    let half = (fhat.len() / 2) as i64;
    x.iter()
        .map(|&xj| {
            (-half..half)
                .zip(fhat)
                .map(|(k, c)| c * phase(k, xj).conj())
                .sum()
        })
        .collect()
}

pub fn rel_l2(approx: &[Complex64], exact: &[Complex64]) -> f64 {
    let num: f64 = approx
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let den: f64 = exact.iter().map(|b| b.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn log_slope(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub mod oracle;
