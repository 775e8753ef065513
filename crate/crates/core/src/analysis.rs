//! Neck tracking and pinch-off scaling fits.

use crate::curve::DerivedGeometry;
use crate::error::{check_param, Result};
use crate::spectral::{self, Spectrum};

/// A local minimum of `r(alpha)` away from the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neck {
    pub r_min: f64,
    pub z_min: f64,
    pub alpha: f64,
}

/// All interior local minima of `r` on `(0, pi)`, sorted by radius.
///
/// Each grid minimum is refined on the spectral interpolant by a Newton iteration for
/// `r_alpha = 0`, safeguarded by bisection inside the neighbouring nodes.
pub fn track_neck(geom: &DerivedGeometry) -> Result<Vec<Neck>> {
    let n = geom.n();
    spectral::check_grid(n)?;
    let r_hat = spectral::forward(&geom.r)?;
    let z_hat = spectral::forward(&geom.z)?;
    let h = 2.0 * std::f64::consts::PI / n as f64;

    let mut necks: Vec<Neck> = Vec::new();
    for j in 1..n / 2 {
        let (a, b, c) = (geom.r[j - 1], geom.r[j], geom.r[j + 1]);
        if !(b < a && b <= c) {
            continue;
        }
        let alpha = refine_minimum(
            &r_hat,
            (j as f64 - 1.0) * h,
            j as f64 * h,
            (j as f64 + 1.0) * h,
        );
        if necks.iter().any(|m| (m.alpha - alpha).abs() < 1e-10) {
            continue;
        }
        necks.push(Neck {
            r_min: r_hat.eval(alpha, 0),
            z_min: z_hat.eval(alpha, 0),
            alpha,
        });
    }
    necks.sort_by(|p, q| {
        p.r_min
            .total_cmp(&q.r_min)
            .then(p.alpha.total_cmp(&q.alpha))
    });
    Ok(necks)
}

fn refine_minimum(r_hat: &Spectrum, lo: f64, start: f64, hi: f64) -> f64 {
    let slope = |x: f64| r_hat.eval(x, 1);
    let (mut lo, mut hi) = (lo, hi);
    let (f_lo, f_hi) = (slope(lo), slope(hi));
    if !(f_lo <= 0.0 && f_hi >= 0.0) {
        // no sign change of the derivative: the grid minimum is the best we have
        return start;
    }
    let mut x = start;
    for _ in 0..100 {
        let f = slope(x);
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let df = r_hat.eval(x, 2);
        let newton = x - f / df;
        let next = if df > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 {
            return next;
        }
        x = next;
    }
    x
}

/// Follows one neck through time by nearest-`alpha` matching.
#[derive(Debug, Clone, Default)]
pub struct NeckTracker {
    alpha: Option<f64>,
}

impl NeckTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from the neck nearest to `alpha` on the first update.
    pub fn seeded(alpha: f64) -> Self {
        Self { alpha: Some(alpha) }
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Picks the neck matching the tracked one, or the thinnest when nothing is tracked yet.
    /// When a neck splits into two equally distant ones, the one further along the curve
    /// (larger `alpha`) is kept.
    pub fn update(&mut self, necks: &[Neck]) -> Option<Neck> {
        let pick = match self.alpha {
            None => necks.first().copied(),
            Some(a) => {
                let dist = |n: &Neck| (n.alpha - a).abs();
                let best = necks.iter().map(dist).fold(f64::INFINITY, f64::min);
                necks
                    .iter()
                    .filter(|n| dist(n) <= best + 1e-9)
                    .max_by(|p, q| p.alpha.total_cmp(&q.alpha))
                    .copied()
            }
        };
        if let Some(neck) = pick {
            self.alpha = Some(neck.alpha);
        }
        pick
    }
}

/// Time series of a tracked neck.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalingSeries {
    pub times: Vec<f64>,
    pub r_min: Vec<f64>,
    pub z_min: Vec<f64>,
}

impl ScalingSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: f64, r_min: f64, z_min: f64) {
        self.times.push(t);
        self.r_min.push(r_min);
        self.z_min.push(z_min);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The last 30% of the samples whose radius is below 20% of the first one.
    pub fn default_window(&self) -> Option<(f64, f64)> {
        let r0 = *self.r_min.first()?;
        let thin: Vec<usize> = (0..self.len())
            .filter(|&i| self.r_min[i] < 0.2 * r0)
            .collect();
        if thin.is_empty() {
            return None;
        }
        let keep = ((0.3 * thin.len() as f64).ceil() as usize).max(1);
        let first = thin[thin.len() - keep];
        Some((self.times[first], self.times[*thin.last()?]))
    }
}

/// Result of the two straight-line fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    /// `r_min^{3/2} = slope t + intercept`.
    pub slope: f64,
    pub intercept: f64,
    pub t_p: f64,
    /// `z_min = z_slope (t_p - t)^{2/3} + z_p`.
    pub z_slope: f64,
    pub z_p: f64,
    pub r2_r: f64,
    pub r2_z: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares fits of `r_min^{3/2}` against `t` and then of `z_min` against
/// `(t_p - t)^{2/3}`. Without an explicit window the series' default window is used.
pub fn fit_scaling(series: &ScalingSeries, window: Option<(f64, f64)>) -> Result<ScalingFit> {
    let n = series.len();
    check_param(
        series.r_min.len() == n && series.z_min.len() == n,
        "series",
        "times, r_min and z_min differ in length",
    )?;
    check_param(
        series.times.windows(2).all(|w| w[1] > w[0]),
        "series",
        "times must be strictly increasing",
    )?;
    let window = match window {
        Some(w) => w,
        None => series
            .default_window()
            .ok_or_else(|| crate::Error::InvalidParameter {
                name: "window",
                reason: "no samples below 20% of the initial radius".into(),
            })?,
    };
    check_param(
        window.0 < window.1,
        "window",
        format!("empty interval {window:?}"),
    )?;
    let idx: Vec<usize> = (0..n)
        .filter(|&i| series.times[i] >= window.0 && series.times[i] <= window.1)
        .collect();
    check_param(
        idx.len() >= 10,
        "window",
        format!("{} samples, need at least 10", idx.len()),
    )?;
    if let Some(&i) = idx.iter().find(|&&i| !(series.r_min[i] > 0.0)) {
        return Err(crate::Error::InvalidParameter {
            name: "r_min",
            reason: format!(
                "non-positive neck radius {} at t = {}",
                series.r_min[i], series.times[i]
            ),
        });
    }

    let t: Vec<f64> = idx.iter().map(|&i| series.times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| series.r_min[i].powf(1.5)).collect();
    let (slope, intercept, r2_r) = line_fit(&t, &y)?;
    check_param(
        slope != 0.0,
        "window",
        "flat neck radius, no pinch-off time",
    )?;
    let t_p = -intercept / slope;

    let x: Vec<f64> = t
        .iter()
        .map(|&ti| (t_p - ti).max(0.0).powf(2.0 / 3.0))
        .collect();
    let z: Vec<f64> = idx.iter().map(|&i| series.z_min[i]).collect();
    let (z_slope, z_p, r2_z) = line_fit(&x, &z)?;

    Ok(ScalingFit {
        slope,
        intercept,
        t_p,
        z_slope,
        z_p,
        r2_r,
        r2_z,
        window,
        samples: idx.len(),
    })
}

/// `(slope, intercept, R^2)` of the least-squares line through `(x, y)`.
fn line_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    check_param(sxx > 0.0, "window", "abscissae are all equal")?;
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Ok((slope, intercept, r2))
}
