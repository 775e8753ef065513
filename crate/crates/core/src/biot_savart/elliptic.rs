//! Complete elliptic integrals by the arithmetic-geometric mean.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `K(m)` and `E(m)` at parameter `m = k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticPair {
    pub k: f64,
    pub e: f64,
}

/// Complete elliptic integrals of the first and second kind.
pub fn elliptic_ke(m: f64) -> Result<EllipticPair> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::EllipticDomain(m));
    }
    let (k, _, e) = ke_split(m, 1.0 - m);
    Ok(EllipticPair { k, e })
}

/// `(K, K - E, E)` at parameter `m` given together with its complement `m1 = 1 - m`.
///
/// Passing both lets callers supply a complement computed without cancellation, which
/// keeps `K` accurate as `m -> 1`. The difference `K - E` is accumulated directly from the
/// AGM defects `c_n`, so it carries full relative accuracy as `m -> 0`.
#[inline]
pub(crate) fn ke_split(m: f64, m1: f64) -> (f64, f64, f64) {
    let mut a = 1.0_f64;
    let mut b = m1.sqrt();
    // sum_{n>=0} 2^(n-1) c_n^2 with c_0^2 = m
    let mut sum = 0.5 * m;
    let mut weight = 0.5;
    let mut c2 = m;
    for _ in 0..40 {
        let a_next = 0.5 * (a + b);
        let c_next = c2 / (4.0 * a_next);
        b = (a * b).sqrt();
        a = a_next;
        weight *= 2.0;
        c2 = c_next * c_next;
        sum += weight * c2;
        if c_next <= 1e-17 * a {
            break;
        }
    }
    let k = PI / (2.0 * a);
    let k_minus_e = k * sum;
    (k, k_minus_e, k - k_minus_e)
}
