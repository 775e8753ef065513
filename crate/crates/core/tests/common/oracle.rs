//! Slow, independent reference values for elliptic integrals and ring-vortex sheets.

use std::f64::consts::PI;

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
pub fn carlson_rf(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    for _ in 0..200 {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sy * sz + sz * sx;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        let a = (x + y + z) / 3.0;
        let (dx, dy, dz) = (1.0 - x / a, 1.0 - y / a, 1.0 - z / a);
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0)
                / a.sqrt();
        }
    }
    panic!("R_F did not converge at ({x}, {y}, {z})");
}

/// Carlson's `R_D(x, y, z)` by duplication.
pub fn carlson_rd(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    let mut sum = 0.0;
    let mut fac = 1.0;
    for _ in 0..200 {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sy * sz + sz * sx;
        sum += fac / (sz * (z + lam));
        fac *= 0.25;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        let a = (x + y + 3.0 * z) / 5.0;
        let (dx, dy, dz) = ((a - x) / a, (a - y) / a, (a - z) / a);
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
            let (c1, c2, c3, c4) = (3.0 / 14.0, 1.0 / 6.0, 9.0 / 22.0, 3.0 / 26.0);
            let (c5, c6) = (0.25 * c3, 1.5 * c4);
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            let series = 1.0
                + ed * (-c1 + c5 * ed - c6 * dz * ee)
                + dz * (c2 * ee + dz * (-c3 * ec + dz * c4 * ea));
            return 3.0 * sum + fac * series / (a * a.sqrt());
        }
    }
    panic!("R_D did not converge at ({x}, {y}, {z})");
}

/// `(K, E)` at parameter `m`, given the complement `m1 = 1 - m` separately.
pub fn carlson_ke(m: f64, m1: f64) -> (f64, f64) {
    let k = carlson_rf(0.0, m1, 1.0);
    (k, k - m / 3.0 * carlson_rd(0.0, m1, 1.0))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature: the interval with the largest
/// error estimate is bisected until the summed estimate drops below `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (k, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, k, e)];
    for _ in 0..5000 {
        let total: f64 = parts.iter().map(|p| p.3).sum();
        if total <= tol {
            break;
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (k1, e1) = gk15(f, lo, mid);
        let (k2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, k1, e1));
        parts.push((mid, hi, k2, e2));
    }
    let mut vals: Vec<f64> = parts.iter().map(|p| p.2).collect();
    vals.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    vals.iter().sum()
}

/// Velocity `(u_r, u_z)` induced at a target of radius `r` by a vortex ring of circulation
/// `g` and radius `rp`. The offsets `dr = rp - r`, `dz = zp - z` are passed directly so
/// that nearby rings do not lose precision to cancellation.
pub fn ring_velocity(r: f64, rp: f64, dr: f64, dz: f64, g: f64) -> (f64, f64) {
    let rho1 = dz * dz + dr * dr;
    let rho2 = dz * dz + (r + rp) * (r + rp);
    let (k, e) = carlson_ke(4.0 * r * rp / rho2, rho1 / rho2);
    let s = rho2.sqrt();
    let uz = g / (2.0 * PI * s) * (k + (dr * (rp + r) - dz * dz) / rho1 * e);
    let ur = -g * dz / (2.0 * PI * r * s) * (-k + (rp * rp + r * r + dz * dz) / rho1 * e);
    (ur, uz)
}

/// A sheet given analytically on `alpha in [0, pi]`.
pub trait Sheet {
    /// `(r, z, gamma)` at `alpha`.
    fn at(&self, alpha: f64) -> (f64, f64, f64);
    /// `(r(a0 + x) - r(a0), z(a0 + x) - z(a0))` without cancellation.
    fn offset(&self, a0: f64, x: f64) -> (f64, f64);
}

/// `sin(a + x) - sin(a)` and `cos(a + x) - cos(a)`.
fn trig_offsets(a: f64, x: f64) -> (f64, f64) {
    let s = 2.0 * (0.5 * x).sin();
    let mid = a + 0.5 * x;
    (s * mid.cos(), -s * mid.sin())
}

/// Sphere of radius `a` centred at the origin with strength `gamma(alpha)`.
pub struct SphereSheet<G: Fn(f64) -> f64> {
    pub radius: f64,
    pub gamma: G,
}

impl<G: Fn(f64) -> f64> Sheet for SphereSheet<G> {
    fn at(&self, a: f64) -> (f64, f64, f64) {
        (
            self.radius * a.sin(),
            -self.radius * a.cos(),
            (self.gamma)(a),
        )
    }
    fn offset(&self, a0: f64, x: f64) -> (f64, f64) {
        let (ds, dc) = trig_offsets(a0, x);
        (self.radius * ds, -self.radius * dc)
    }
}

/// `eta(phi) = 1 + eps P2(cos phi)` traced with `phi = alpha + warp sin(alpha)`.
pub struct WarpedP2<G: Fn(f64) -> f64> {
    pub eps: f64,
    pub warp: f64,
    pub gamma: G,
}

impl<G: Fn(f64) -> f64> WarpedP2<G> {
    fn phi(&self, a: f64) -> f64 {
        a + self.warp * a.sin()
    }
    fn eta(&self, phi: f64) -> f64 {
        let c = phi.cos();
        1.0 + self.eps * 0.5 * (3.0 * c * c - 1.0)
    }
}

impl<G: Fn(f64) -> f64> Sheet for WarpedP2<G> {
    fn at(&self, a: f64) -> (f64, f64, f64) {
        let p = self.phi(a);
        let e = self.eta(p);
        (e * p.sin(), -e * p.cos(), (self.gamma)(a))
    }
    fn offset(&self, a0: f64, x: f64) -> (f64, f64) {
        let p0 = self.phi(a0);
        let dp = x + self.warp * trig_offsets(a0, x).0;
        let (ds, dc) = trig_offsets(p0, dp);
        let (s0, c0) = p0.sin_cos();
        let c1 = c0 + dc;
        let deta = 1.5 * self.eps * dc * (c1 + c0);
        let e1 = self.eta(p0) + deta;
        (e1 * ds + deta * s0, -(e1 * dc + deta * c0))
    }
}

/// Principal-value sheet velocity `(w_r, w_z)` at parameter `alpha0`. Interior targets
/// fold the integrand about the target so only a logarithmic endpoint singularity
/// remains; pole targets use the regular on-axis kernel.
pub fn sheet_velocity(sheet: &dyn Sheet, alpha0: f64, tol: f64) -> (f64, f64) {
    let (r0, _, _) = sheet.at(alpha0);
    if alpha0 == 0.0 || alpha0 == PI {
        let f = |a: f64| {
            let (rp, _, g) = sheet.at(a);
            let (_, dz) = sheet.offset(alpha0, a - alpha0);
            let rho2 = dz * dz + rp * rp;
            0.5 * g * rp * rp / (rho2 * rho2.sqrt())
        };
        return (0.0, integrate(&f, 0.0, PI, tol));
    }
    let comp = |x: f64, which: usize| {
        let (rp, _, g) = sheet.at(alpha0 + x);
        let (dr, dz) = sheet.offset(alpha0, x);
        let v = ring_velocity(r0, rp, dr, dz, g);
        if which == 0 {
            v.0
        } else {
            v.1
        }
    };
    let d = alpha0.min(PI - alpha0);
    let mut out = [0.0; 2];
    for (which, o) in out.iter_mut().enumerate() {
        let folded = |x: f64| comp(x, which) + comp(-x, which);
        let mut v = integrate(&folded, 0.0, d, tol);
        let one_sided = |a: f64| comp(a - alpha0, which);
        if alpha0 + d < PI {
            v += integrate(&one_sided, alpha0 + d, PI, tol);
        } else if alpha0 - d > 0.0 {
            v += integrate(&one_sided, 0.0, alpha0 - d, tol);
        }
        *o = v;
    }
    (out[0], out[1])
}
