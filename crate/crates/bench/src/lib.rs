//! Inputs shared by the kernel benchmarks.

use axisheet::curve::{reconstruct, Anchor, CurveState, DerivedGeometry};
use axisheet::nufft::NodeSet;
use axisheet::problems;

/// Pinch-off initial state with its geometry.
pub fn pinchoff(n: usize) -> (CurveState, DerivedGeometry) {
    let st = problems::pinchoff(n).expect("valid grid size");
    let g = reconstruct(&st, Anchor::Fixed(0.0)).expect("sphere reconstructs");
    (st, g)
}

/// `m` nodes in `[0, 2pi)` from the golden-ratio sequence, sorted.
pub fn scattered_nodes(m: usize) -> NodeSet {
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x: Vec<f64> = (0..m)
        .map(|j| 2.0 * std::f64::consts::PI * (j as f64 * phi).fract())
        .collect();
    x.sort_by(f64::total_cmp);
    NodeSet::new(x).expect("nodes lie in [0, 2pi)")
}
