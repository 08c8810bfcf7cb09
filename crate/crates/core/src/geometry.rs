//! Curvature of warped products `g = dr^2 + w(r)^2 g_fiber` over an Einstein
//! fiber of dimension `n - 1`.
//!
//! Every natural symmetric tensor of such a metric is diagonal with one radial
//! eigenvalue and one `(n-1)`-fold tangential eigenvalue, so Ricci, Schouten
//! and Hessians of radial functions are represented by that pair.

use num_dual::{Dual64, DualNum};

use crate::error::{Result, SolitonError};
use crate::profile::{Jet, RadialProfile};

/// `|w|` at an end node below this fraction of `max |w|` marks a closing end.
pub const WARP_CLOSING_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberKind {
    RoundSphereUnit,
    Flat,
    ConstantScalar,
}

/// Einstein fiber described by its scalar curvature alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberDescriptor {
    kind: FiberKind,
    r_sigma: f64,
    dim: usize,
}

impl FiberDescriptor {
    /// Unit round sphere of dimension `n - 1`.
    pub fn round_sphere(n: usize) -> Result<Self> {
        check_dim(n)?;
        let nf = n as f64;
        Ok(Self { kind: FiberKind::RoundSphereUnit, r_sigma: (nf - 1.0) * (nf - 2.0), dim: n - 1 })
    }

    pub fn flat(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { kind: FiberKind::Flat, r_sigma: 0.0, dim: n - 1 })
    }

    pub fn constant_scalar(n: usize, r_sigma: f64) -> Result<Self> {
        check_dim(n)?;
        if !r_sigma.is_finite() {
            return Err(SolitonError::input("fiber scalar curvature must be finite"));
        }
        Ok(Self { kind: FiberKind::ConstantScalar, r_sigma, dim: n - 1 })
    }

    pub fn kind(&self) -> FiberKind {
        self.kind
    }

    pub fn r_sigma(&self) -> f64 {
        self.r_sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalue of the fiber's Ricci endomorphism.
    pub fn ricci_eigenvalue(&self) -> f64 {
        self.r_sigma / self.dim as f64
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 3 {
        Err(SolitonError::Dimension(n))
    } else {
        Ok(())
    }
}

/// `g = dr^2 + w(r)^2 g_fiber`.
#[derive(Debug, Clone)]
pub struct WarpedMetric {
    n: usize,
    warp: RadialProfile,
    fiber: FiberDescriptor,
}

impl WarpedMetric {
    pub fn new(n: usize, warp: RadialProfile, fiber: FiberDescriptor) -> Result<Self> {
        check_dim(n)?;
        if fiber.dim() != n - 1 {
            return Err(SolitonError::input(format!(
                "fiber of dimension {} does not fit n = {n}",
                fiber.dim()
            )));
        }
        let x = warp.nodes();
        let w = warp.values();
        for i in 1..w.len() - 1 {
            if w[i] <= 0.0 {
                return Err(SolitonError::DegenerateMetric { r: x[i], warp: w[i] });
            }
        }
        Ok(Self { n, warp, fiber })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn warp(&self) -> &RadialProfile {
        &self.warp
    }

    pub fn fiber(&self) -> &FiberDescriptor {
        &self.fiber
    }

    pub fn with_warp(&self, warp: RadialProfile) -> Result<Self> {
        Self::new(self.n, warp, self.fiber)
    }

    pub fn closes_at_min(&self) -> bool {
        let w = self.warp.values();
        w[0].abs() <= WARP_CLOSING_THRESHOLD * max_abs(w)
    }

    pub fn closes_at_max(&self) -> bool {
        let w = self.warp.values();
        w[w.len() - 1].abs() <= WARP_CLOSING_THRESHOLD * max_abs(w)
    }

    /// Node range on which curvature is evaluated: closing ends are skipped,
    /// by two stencil widths when the warp's derivatives are finite
    /// differences and by the end node alone otherwise.
    pub fn evaluation_range(&self) -> std::ops::Range<usize> {
        let len = self.warp.len();
        let margin = match self.warp.stencil_order() {
            Some(order) => 2 * order.width(3),
            None => 1,
        };
        let lo = if self.closes_at_min() { margin } else { 0 };
        let hi = if self.closes_at_max() { len - margin } else { len };
        lo..hi.max(lo)
    }

    /// Warp jet at `r`, checked to lie on the grid with `w > 0`.
    pub fn warp_jet(&self, r: f64) -> Result<Jet> {
        let g = self.warp.grid();
        let slack = 1e-12 * (1.0 + g.r_min().abs().max(g.r_max().abs()));
        if !(r >= g.r_min() - slack && r <= g.r_max() + slack) {
            return Err(SolitonError::input(format!(
                "r = {r} outside the warp grid [{}, {}]",
                g.r_min(),
                g.r_max()
            )));
        }
        let j = self.warp.eval(r);
        check_warp(r, &j)?;
        Ok(j)
    }
}

fn check_warp(r: f64, j: &Jet) -> Result<()> {
    if !(j.value > 0.0) {
        return Err(SolitonError::DegenerateMetric { r, warp: j.value });
    }
    Ok(())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Christoffel symbols in coordinates adapted to the level sets.
/// `Γ^r_ij = gamma_r_ij * g_fiber_ij` and `Γ^k_ir = gamma_k_ir * δ^k_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelTable {
    pub gamma_r_rr: f64,
    pub gamma_k_rr: f64,
    pub gamma_r_ir: f64,
    pub gamma_r_ij: f64,
    pub gamma_k_ir: f64,
}

pub fn christoffels(m: &WarpedMetric, r: f64) -> Result<ChristoffelTable> {
    let j = m.warp_jet(r)?;
    Ok(ChristoffelTable {
        gamma_r_rr: 0.0,
        gamma_k_rr: 0.0,
        gamma_r_ir: 0.0,
        gamma_r_ij: -j.value * j.d1,
        gamma_k_ir: j.d1 / j.value,
    })
}

/// Hessian of a radial function: `f'' dr⊗dr + tangential_coeff * g_fiber`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialHessian {
    pub radial: f64,
    pub tangential_coeff: f64,
    /// Tangential eigenvalue of `g^{-1} ∇²f`, i.e. `f' w' / w`.
    pub tangential: f64,
}

pub fn hessian_radial(m: &WarpedMetric, f: &RadialProfile, r: f64) -> Result<RadialHessian> {
    let w = m.warp_jet(r)?;
    Ok(hessian_from_jets(&w, &f.eval(r)))
}

pub(crate) fn hessian_from_jets(w: &Jet, f: &Jet) -> RadialHessian {
    RadialHessian {
        radial: f.d2,
        tangential_coeff: f.d1 * w.d1 * w.value,
        tangential: f.d1 * w.d1 / w.value,
    }
}

/// Pointwise curvature of a warped metric.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub r: f64,
    pub ric_rr: f64,
    pub ric_tan: f64,
    pub scalar: f64,
    pub mu_r: f64,
    pub mu_t: f64,
    /// `sigma[k - 1]` is `σ_k` for `k = 1..=n`.
    pub sigma: Vec<f64>,
}

impl CurvatureReport {
    pub fn sigma_k(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.sigma.get(i)).copied()
    }

    pub fn min_ricci(&self) -> f64 {
        self.ric_rr.min(self.ric_tan)
    }
}

/// Radial derivatives of the curvature quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSlope {
    pub ric_rr: f64,
    pub ric_tan: f64,
    pub scalar: f64,
    pub sigma: Vec<f64>,
}

// Closed forms, generic so that dual numbers carry radial derivatives.

fn ricci_generic<D: DualNum<Primitive = f64> + Copy>(n: usize, rs: f64, w: D, w1: D, w2: D) -> (D, D) {
    let nf = n as f64;
    let ric_rr = -(w2 / w) * (nf - 1.0);
    let ric_tan = (-(w1 * w1) * (nf - 2.0) - w * w2 + rs / (nf - 1.0)) / (w * w);
    (ric_rr, ric_tan)
}

fn scalar_generic<D: DualNum<Primitive = f64> + Copy>(n: usize, rs: f64, w: D, w1: D, w2: D) -> D {
    let nf = n as f64;
    -(w2 / w) * (2.0 * (nf - 1.0)) + (-(w1 * w1) * ((nf - 1.0) * (nf - 2.0)) + rs) / (w * w)
}

fn schouten_generic<D: DualNum<Primitive = f64> + Copy>(n: usize, ric_rr: D, ric_tan: D, scalar: D) -> (D, D) {
    let nf = n as f64;
    let trace_part = scalar / (2.0 * (nf - 1.0));
    ((ric_rr - trace_part) / (nf - 2.0), (ric_tan - trace_part) / (nf - 2.0))
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `σ_k` of the spectrum `(mu_r, mu_t, ..., mu_t)` with `mu_t` repeated `n - 1` times.
pub fn sigma_from_spectrum<D: DualNum<Primitive = f64> + Copy>(n: usize, k: usize, mu_r: D, mu_t: D) -> D {
    let a = binomial(n - 1, k);
    let b = binomial(n - 1, k - 1);
    let mut out = mu_r * b * mu_t.powi(k as i32 - 1);
    if a != 0.0 {
        out += mu_t.powi(k as i32) * a;
    }
    out
}

/// Curvature from a warp jet; the caller guarantees `w > 0`.
pub fn curvature_from_jet(n: usize, fiber: &FiberDescriptor, r: f64, w: &Jet) -> CurvatureReport {
    let rs = fiber.r_sigma();
    let (ric_rr, ric_tan) = ricci_generic(n, rs, w.value, w.d1, w.d2);
    let scalar = scalar_generic(n, rs, w.value, w.d1, w.d2);
    let (mu_r, mu_t) = schouten_generic(n, ric_rr, ric_tan, scalar);
    let sigma = (1..=n).map(|k| sigma_from_spectrum(n, k, mu_r, mu_t)).collect();
    CurvatureReport { r, ric_rr, ric_tan, scalar, mu_r, mu_t, sigma }
}

/// Radial derivatives of curvature from a warp jet (uses `w'''`).
pub fn curvature_slope_from_jet(n: usize, fiber: &FiberDescriptor, w: &Jet) -> CurvatureSlope {
    let rs = fiber.r_sigma();
    let wd = Dual64::new(w.value, w.d1);
    let w1 = Dual64::new(w.d1, w.d2);
    let w2 = Dual64::new(w.d2, w.d3);
    let (ric_rr, ric_tan) = ricci_generic(n, rs, wd, w1, w2);
    let scalar = scalar_generic(n, rs, wd, w1, w2);
    let (mu_r, mu_t) = schouten_generic(n, ric_rr, ric_tan, scalar);
    let sigma = (1..=n).map(|k| sigma_from_spectrum(n, k, mu_r, mu_t).eps).collect();
    CurvatureSlope { ric_rr: ric_rr.eps, ric_tan: ric_tan.eps, scalar: scalar.eps, sigma }
}

pub fn curvature(m: &WarpedMetric, r: f64) -> Result<CurvatureReport> {
    let j = m.warp_jet(r)?;
    Ok(curvature_from_jet(m.n, &m.fiber, r, &j))
}

pub fn curvature_at_node(m: &WarpedMetric, i: usize) -> Result<CurvatureReport> {
    let r = m.warp.nodes()[i];
    let j = m.warp.jet_at_node(i);
    check_warp(r, &j)?;
    Ok(curvature_from_jet(m.n, &m.fiber, r, &j))
}

pub fn curvature_slope_at_node(m: &WarpedMetric, i: usize) -> Result<CurvatureSlope> {
    let r = m.warp.nodes()[i];
    let j = m.warp.jet_at_node(i);
    check_warp(r, &j)?;
    Ok(curvature_slope_from_jet(m.n, &m.fiber, &j))
}

/// `(Ric_rr, ric_tan)`: radial Ricci component and tangential eigenvalue.
pub fn ricci(m: &WarpedMetric, r: f64) -> Result<(f64, f64)> {
    let j = m.warp_jet(r)?;
    Ok(ricci_generic(m.n, m.fiber.r_sigma(), j.value, j.d1, j.d2))
}

pub fn scalar(m: &WarpedMetric, r: f64) -> Result<f64> {
    let j = m.warp_jet(r)?;
    Ok(scalar_generic(m.n, m.fiber.r_sigma(), j.value, j.d1, j.d2))
}

/// Eigenvalues `(mu_r, mu_t)` of the Schouten endomorphism.
pub fn schouten_spectrum(m: &WarpedMetric, r: f64) -> Result<(f64, f64)> {
    let c = curvature(m, r)?;
    Ok((c.mu_r, c.mu_t))
}

pub fn sigma_k(m: &WarpedMetric, r: f64, k: usize) -> Result<f64> {
    if k == 0 || k > m.n {
        return Err(SolitonError::KOutOfRange { k, n: m.n });
    }
    let (mu_r, mu_t) = schouten_spectrum(m, r)?;
    Ok(sigma_from_spectrum(m.n, k, mu_r, mu_t))
}

/// Curvature at every node of [`WarpedMetric::evaluation_range`].
pub fn curvature_sweep(m: &WarpedMetric) -> Result<Vec<CurvatureReport>> {
    m.evaluation_range().map(|i| curvature_at_node(m, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Elementary, RadialGrid};
    use std::f64::consts::PI;

    fn metric(n: usize, w: &Elementary, fiber: FiberDescriptor, a: f64, b: f64) -> WarpedMetric {
        let g = RadialGrid::uniform(a, b, 257).unwrap();
        WarpedMetric::new(n, RadialProfile::elementary(g, w).unwrap(), fiber).unwrap()
    }

    fn sphere(n: usize) -> WarpedMetric {
        metric(n, &Elementary::sin(), FiberDescriptor::round_sphere(n).unwrap(), 0.0, PI)
    }

    #[test]
    fn christoffel_examples() {
        let cyl = metric(3, &Elementary::constant(1.0), FiberDescriptor::flat(3).unwrap(), -1.0, 1.0);
        let t = christoffels(&cyl, 0.3).unwrap();
        assert_eq!((t.gamma_r_ij, t.gamma_k_ir), (0.0, 0.0));

        let cone = metric(3, &Elementary::linear(1.0, 0.0), FiberDescriptor::round_sphere(3).unwrap(), 0.0, 4.0);
        let t = christoffels(&cone, 2.0).unwrap();
        assert_eq!(t.gamma_k_ir, 0.5);
        assert_eq!(t.gamma_r_ij, -2.0);
        assert_eq!((t.gamma_r_rr, t.gamma_k_rr, t.gamma_r_ir), (0.0, 0.0, 0.0));

        let t = christoffels(&sphere(3), PI / 2.0).unwrap();
        assert!(t.gamma_k_ir.abs() < 1e-16 && t.gamma_r_ij.abs() < 1e-16);
    }

    #[test]
    fn hessian_examples() {
        let s = sphere(4);
        let f = RadialProfile::elementary(s.warp().grid().clone(), &Elementary::cos().scaled(-1.0)).unwrap();
        let h = hessian_radial(&s, &f, PI / 3.0).unwrap();
        assert!((h.radial - 0.5).abs() < 1e-15);
        assert!((h.tangential - 0.5).abs() < 1e-15);

        let flat = metric(3, &Elementary::linear(1.0, 0.0), FiberDescriptor::round_sphere(3).unwrap(), 0.0, 5.0);
        let f = RadialProfile::elementary(flat.warp().grid().clone(), &Elementary::quadratic(0.5)).unwrap();
        let h = hessian_radial(&flat, &f, 3.0).unwrap();
        assert_eq!((h.radial, h.tangential), (1.0, 1.0));
    }

    #[test]
    fn ricci_examples() {
        let cyl = metric(3, &Elementary::constant(1.0), FiberDescriptor::flat(3).unwrap(), -1.0, 1.0);
        assert_eq!(ricci(&cyl, 0.2).unwrap(), (0.0, 0.0));
        let s = sphere(3);
        for r in [0.3, 1.0, 2.5] {
            let (a, b) = ricci(&s, r).unwrap();
            assert!((a - 2.0).abs() < 1e-13 && (b - 2.0).abs() < 1e-13);
        }
        let flat = metric(3, &Elementary::linear(1.0, 0.0), FiberDescriptor::round_sphere(3).unwrap(), 0.0, 5.0);
        assert_eq!(ricci(&flat, 1.3).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn scalar_examples() {
        for n in 3..=7 {
            let s = sphere(n);
            let expected = (n * (n - 1)) as f64;
            assert!((scalar(&s, 1.1).unwrap() - expected).abs() < 1e-12 * expected);
        }
        let flat = metric(4, &Elementary::linear(1.0, 0.0), FiberDescriptor::round_sphere(4).unwrap(), 0.0, 5.0);
        assert_eq!(scalar(&flat, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn schouten_examples() {
        let (a, b) = schouten_spectrum(&sphere(5), 0.8).unwrap();
        assert!((a - 0.5).abs() < 1e-14 && (b - 0.5).abs() < 1e-14);

        let cyl = metric(3, &Elementary::constant(1.0), FiberDescriptor::round_sphere(3).unwrap(), -1.0, 1.0);
        let c = curvature(&cyl, 0.0).unwrap();
        assert_eq!((c.scalar, c.ric_rr, c.ric_tan), (2.0, 0.0, 1.0));
        assert!((c.mu_r + 0.5).abs() < 1e-15 && (c.mu_t - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sigma_examples() {
        assert!((sigma_k(&sphere(4), 1.0, 2).unwrap() - 1.5).abs() < 1e-13);
        let flat = metric(4, &Elementary::linear(1.0, 0.0), FiberDescriptor::round_sphere(4).unwrap(), 0.0, 5.0);
        for k in 1..=4 {
            assert_eq!(sigma_k(&flat, 2.0, k).unwrap(), 0.0);
        }
        assert!(matches!(sigma_k(&flat, 2.0, 5), Err(SolitonError::KOutOfRange { .. })));
        assert!(matches!(sigma_k(&flat, 2.0, 0), Err(SolitonError::KOutOfRange { .. })));
    }

    #[test]
    fn degenerate_and_out_of_range_points() {
        let s = sphere(3);
        assert!(matches!(christoffels(&s, 0.0), Err(SolitonError::DegenerateMetric { .. })));
        assert!(christoffels(&s, 4.0).is_err());
        let g = RadialGrid::uniform(-1.0, 1.0, 32).unwrap();
        let w = RadialProfile::elementary(g, &Elementary::linear(1.0, 0.0)).unwrap();
        assert!(WarpedMetric::new(3, w, FiberDescriptor::flat(3).unwrap()).is_err());
        assert!(matches!(FiberDescriptor::flat(2), Err(SolitonError::Dimension(2))));
    }

    #[test]
    fn slopes_match_finite_differences() {
        let g = RadialGrid::uniform(0.0, 3.0, 64).unwrap();
        let w = Elementary::sin().plus(Elementary::quadratic(0.1).plus(Elementary::constant(0.3)));
        let m = WarpedMetric::new(4, RadialProfile::elementary(g, &w).unwrap(), FiberDescriptor::constant_scalar(4, 3.0).unwrap()).unwrap();
        let r = 1.3;
        let h = 1e-5;
        let s = curvature_slope_from_jet(4, m.fiber(), &w.jet(r));
        let fd = |k: usize| {
            (curvature(&m, r + h).unwrap().sigma[k] - curvature(&m, r - h).unwrap().sigma[k]) / (2.0 * h)
        };
        let fds = (scalar(&m, r + h).unwrap() - scalar(&m, r - h).unwrap()) / (2.0 * h);
        assert!((s.scalar - fds).abs() < 1e-6 * (1.0 + fds.abs()));
        for k in 0..4 {
            assert!((s.sigma[k] - fd(k)).abs() < 1e-6 * (1.0 + fd(k).abs()));
        }
    }
}
