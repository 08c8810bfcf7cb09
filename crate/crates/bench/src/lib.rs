//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use solitonlab_core::geometry::{FiberDescriptor, WarpedMetric};
use solitonlab_core::profile::{Elementary, RadialGrid, RadialProfile};

/// Round sphere `ds^2 + sin(s)^2 g_sphere` of dimension `n` on `nodes` nodes.
pub fn sphere(n: usize, nodes: usize) -> WarpedMetric {
    let g = RadialGrid::uniform(0.0, PI, nodes).expect("valid grid");
    let w = RadialProfile::elementary(g, &Elementary::sin()).expect("analytic warp");
    WarpedMetric::new(n, w, FiberDescriptor::round_sphere(n).expect("n >= 3")).expect("valid metric")
}

/// The same sphere with the warp sampled and differentiated numerically.
pub fn sampled_sphere(n: usize, nodes: usize) -> WarpedMetric {
    let g = RadialGrid::uniform(0.0, PI, nodes).expect("valid grid");
    let values = g.nodes().iter().map(|s| s.sin()).collect();
    let w = RadialProfile::sampled(g, values, Default::default()).expect("sampled warp");
    WarpedMetric::new(n, w, FiberDescriptor::round_sphere(n).expect("n >= 3")).expect("valid metric")
}

/// Potential `-cos s` on the grid of `m`.
pub fn sphere_potential(m: &WarpedMetric) -> RadialProfile {
    RadialProfile::elementary(m.warp().grid().clone(), &Elementary::cos().scaled(-1.0)).expect("analytic potential")
}
