//! Conformal normal forms of a warped metric `dr^2 + w^2 g_fiber`.
//!
//! * no closing end: `t = ∫ dr / w` gives `g = u(t)^2 (dt^2 + g_fiber)`
//! * one closing end: `t = exp((1/c) ∫ ds / w)` gives `g = v(t)^2 (dt^2 + t^2 g_sphere)`
//! * two closing ends: `t = 2 atan exp((1/c) ∫ ds / w)` gives
//!   `g = w(t)^2 (dt^2 + sin^2 t g_sphere)`
//!
//! where `c^2 = (n-1)(n-2) / R_fiber` rescales the fiber to the unit sphere.
//! `1/w` has a simple pole at a closing end; the integrals are computed with
//! the pole `1 / (w'(s_*) (s - s_*))` subtracted on the end cell and
//! integrated in closed form.

use std::f64::consts::PI;

use crate::error::{Result, SolitonError};
use crate::geometry::{FiberDescriptor, WarpedMetric};
use crate::profile::{stencil, Jet, RadialGrid, RadialProfile, StencilOrder};
use crate::quadrature;
use crate::roots;

/// Agreement required between `lim w/s` and `1/c` at a closing end (relative).
pub const CLOSING_TOL: f64 = 1e-6;
/// Partial integrals beyond this size count as divergent.
pub const OVERFLOW_GUARD: f64 = 1e300;
/// Target accuracy of the inverse map `r(t)`.
pub const INVERSION_TOL: f64 = 1e-12;

const CELL_ABS_TOL: f64 = 1e-15;
const CELL_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// `u^2 (dt^2 + g_fiber)`
    Product,
    /// `v^2 (dt^2 + t^2 g_sphere)`
    Punctured,
    /// `w^2 (dt^2 + sin^2 t g_sphere)`
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Lower,
    Upper,
}

/// Limit of the conformal coordinate at one end of the domain. When
/// `bounded` is false the limit is infinite and `value` holds the last
/// finite partial value reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub value: f64,
    pub bounded: bool,
}

impl Endpoint {
    fn finite(value: f64) -> Self {
        Self { value, bounded: true }
    }
}

/// Base point of the radial integral in the one- and two-point charts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Gauge {
    /// `t ~ s` at the closing point, so the conformal factor is 1 there.
    #[default]
    Origin,
    /// The integral starts at `s = s0` (distance from the closing end).
    LowerLimit(f64),
}

/// `c` together with the extrapolated closing slope it was checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosingConstant {
    pub c: f64,
    /// Richardson-extrapolated `lim w(s) / s` at the end.
    pub limit: f64,
    /// Estimated error of `limit`.
    pub limit_error: f64,
}

/// `c = ((n-1)(n-2) / R_fiber)^{1/2}`, after checking that the warp closes
/// smoothly at `end`, i.e. `lim w/s = 1/c`.
pub fn closing_constant(m: &WarpedMetric, end: End) -> Result<ClosingConstant> {
    let closes = match end {
        End::Lower => m.closes_at_min(),
        End::Upper => m.closes_at_max(),
    };
    if !closes {
        return Err(SolitonError::WrongCase { expected: "a closing end", found: format!("{end:?} end open") });
    }
    let r_sigma = m.fiber().r_sigma();
    if !(r_sigma > 0.0) {
        return Err(SolitonError::InconsistentClosing { r_sigma });
    }
    let nf = m.n() as f64;
    let c = ((nf - 1.0) * (nf - 2.0) / r_sigma).sqrt();
    let (limit, limit_error) = closing_slope(m.warp(), end);
    if !((limit * c - 1.0).abs() <= CLOSING_TOL) {
        return Err(SolitonError::NonSmoothClosing { limit, expected: 1.0 / c });
    }
    Ok(ClosingConstant { c, limit, limit_error })
}

/// Richardson extrapolation of `w(a ± h) / h` as `h -> 0`.
fn closing_slope(w: &RadialProfile, end: End) -> (f64, f64) {
    let g = w.grid();
    let (a, sign) = match end {
        End::Lower => (g.r_min(), 1.0),
        End::Upper => (g.r_max(), -1.0),
    };
    let h0 = (0.05 * g.span()).max(4.0 * g.max_step()).min(0.5 * g.span());
    const LEVELS: usize = 8;
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    for k in 0..LEVELS {
        let h = h0 / (1u32 << k) as f64;
        table[k][0] = w.eval(a + sign * h).value / h;
        for j in 1..=k {
            let f = (1u32 << j) as f64 - 1.0;
            table[k][j] = table[k][j - 1] + (table[k][j - 1] - table[k - 1][j - 1]) / f;
        }
    }
    let best = table[LEVELS - 1][LEVELS - 1];
    let err = (best - table[LEVELS - 2][LEVELS - 2]).abs();
    (best, err)
}

/// Cumulative `∫ dr / w` over the grid with pole subtraction at closing ends.
#[derive(Debug, Clone)]
struct Primitive {
    warp: RadialProfile,
    nodes: Vec<f64>,
    lo_closes: bool,
    hi_closes: bool,
    /// `w ≈ |s - s_*| / pole` near each closing end.
    pole_lo: f64,
    pole_hi: f64,
    /// Sampled warps: `w / |s - s_*|` on the nodes next to each closing end.
    quot_lo: Option<(Vec<f64>, Vec<f64>)>,
    quot_hi: Option<(Vec<f64>, Vec<f64>)>,
    /// `P(r_i)`, measured from node `base`; infinite past closing ends.
    cum: Vec<f64>,
    base: usize,
    /// `∫_{r0}^{r1} (1/w - pole / (z - r0)) dz` when the lower end closes.
    j0: f64,
}

const QUOTIENT_POINTS: usize = 6;

impl Primitive {
    fn new(warp: &RadialProfile, lo_closes: bool, hi_closes: bool) -> Result<Self> {
        let nodes = warp.nodes().to_vec();
        let n = nodes.len();
        let base = lo_closes as usize;
        let last = if hi_closes { n - 2 } else { n - 1 };
        let mut cum = vec![f64::NAN; n];
        cum[base] = 0.0;
        let inv = |z: f64| 1.0 / warp.eval(z).value;
        for i in base..last {
            let q = quadrature::integrate(inv, nodes[i], nodes[i + 1], CELL_ABS_TOL, CELL_REL_TOL)?;
            cum[i + 1] = cum[i] + q.value;
        }
        if lo_closes {
            cum[0] = f64::NEG_INFINITY;
        }
        if hi_closes {
            cum[n - 1] = f64::INFINITY;
        }
        let w = warp.values();
        let d1 = warp.d1();
        let sampled = !warp.is_analytic();
        let quot_lo = (sampled && lo_closes).then(|| {
            let x: Vec<f64> = nodes[..QUOTIENT_POINTS].to_vec();
            let q = (0..QUOTIENT_POINTS).map(|i| if i == 0 { d1[0] } else { w[i] / (x[i] - x[0]) }).collect();
            (x, q)
        });
        let quot_hi = (sampled && hi_closes).then(|| {
            let x: Vec<f64> = nodes[n - QUOTIENT_POINTS..].to_vec();
            let end = nodes[n - 1];
            let q = (n - QUOTIENT_POINTS..n)
                .map(|i| if i == n - 1 { -d1[i] } else { w[i] / (end - nodes[i]) })
                .collect();
            (x, q)
        });
        let mut p = Self {
            warp: warp.clone(),
            pole_lo: 1.0 / d1[0].abs(),
            pole_hi: 1.0 / d1[n - 1].abs(),
            nodes,
            lo_closes,
            hi_closes,
            quot_lo,
            quot_hi,
            cum,
            base,
            j0: 0.0,
        };
        if lo_closes {
            p.j0 = p.lower_regular(p.nodes[1])?;
        }
        Ok(p)
    }

    /// `1/w - pole/d` at distance `d` from a closing end.
    fn regular_integrand(&self, z: f64, d: f64, pole: f64, quot: &Option<(Vec<f64>, Vec<f64>)>) -> f64 {
        match quot {
            Some((x, q)) => (1.0 / stencil::interpolate(x, q, z, QUOTIENT_POINTS) - 1.0 / pole) / d,
            None => 1.0 / self.warp.eval(z).value - pole / d,
        }
    }

    /// `∫_{r0}^{x} (1/w - pole/(z - r0)) dz`
    fn lower_regular(&self, x: f64) -> Result<f64> {
        let r0 = self.nodes[0];
        let f = |z: f64| self.regular_integrand(z, z - r0, self.pole_lo, &self.quot_lo);
        Ok(quadrature::integrate(f, r0, x, CELL_ABS_TOL, CELL_REL_TOL)?.value)
    }

    /// `∫_{x}^{R} (1/w - pole/(R - z)) dz`
    fn upper_regular(&self, x: f64) -> Result<f64> {
        let rr = self.nodes[self.nodes.len() - 1];
        let f = |z: f64| self.regular_integrand(z, rr - z, self.pole_hi, &self.quot_hi);
        Ok(quadrature::integrate(f, x, rr, CELL_ABS_TOL, CELL_REL_TOL)?.value)
    }

    fn eval(&self, r: f64) -> Result<f64> {
        let x = &self.nodes;
        let n = x.len();
        if self.lo_closes && r <= x[0] {
            return Ok(f64::NEG_INFINITY);
        }
        if self.hi_closes && r >= x[n - 1] {
            return Ok(f64::INFINITY);
        }
        if self.lo_closes && r < x[1] {
            // P(r) = -∫_r^{r1} dz/w
            let s1 = x[1] - x[0];
            let reg = self.j0 - self.lower_regular(r)?;
            return Ok(-(reg + self.pole_lo * (s1 / (r - x[0])).ln()));
        }
        if self.hi_closes && r > x[n - 2] {
            let tail = self.upper_regular(x[n - 2])? - self.upper_regular(r)?;
            let log = self.pole_hi * ((x[n - 1] - x[n - 2]) / (x[n - 1] - r)).ln();
            return Ok(self.cum[n - 2] + tail + log);
        }
        let i = self.warp.grid().cell_of(r).max(self.base);
        let inv = |z: f64| 1.0 / self.warp.eval(z).value;
        let q = quadrature::integrate(inv, x[i], r, CELL_ABS_TOL, CELL_REL_TOL)?;
        Ok(self.cum[i] + q.value)
    }

    /// Monotone inversion of `κ P(r) + shift = target`.
    fn invert(&self, target: f64, kappa: f64, shift: f64) -> Result<f64> {
        let x = &self.nodes;
        let n = x.len();
        let phi_nodes = |i: usize| kappa * self.cum[i] + shift;
        // first node whose value reaches the target
        let j = (0..n).find(|&i| phi_nodes(i) >= target).unwrap_or(n - 1).max(1);
        let (a, b) = (x[j - 1], x[j]);
        let g = |r: f64| {
            let v = self.eval(r).map(|p| kappa * p + shift - target).unwrap_or(f64::NAN);
            (v, kappa / self.warp.eval(r).value)
        };
        let xtol = 1e-16 * (1.0 + a.abs().max(b.abs()));
        roots::safeguarded_newton(g, a, b, xtol, 1e-15 * (1.0 + target.abs()))
    }
}

/// Map between the radial coordinate and the conformal coordinate.
#[derive(Debug, Clone)]
struct ChartMap {
    kind: ChartKind,
    prim: Primitive,
    /// `φ = kappa * P + shift` is the log-like coordinate (t, ln t, ln tan(t/2)).
    kappa: f64,
    shift: f64,
}

impl ChartMap {
    fn t_from_phi(&self, phi: f64) -> f64 {
        match self.kind {
            ChartKind::Product => phi,
            ChartKind::Punctured => phi.exp(),
            ChartKind::TwoPoint => 2.0 * phi.exp().atan(),
        }
    }

    fn phi_from_t(&self, t: f64) -> f64 {
        match self.kind {
            ChartKind::Product => t,
            ChartKind::Punctured => t.ln(),
            ChartKind::TwoPoint => (0.5 * t).tan().ln(),
        }
    }

    fn t_of_r(&self, r: f64) -> Result<f64> {
        Ok(self.t_from_phi(self.kappa * self.prim.eval(r)? + self.shift))
    }

    fn r_of_t(&self, t: f64) -> Result<f64> {
        self.prim.invert(self.phi_from_t(t), self.kappa, self.shift)
    }
}

/// Model warp `h(t)` of the chart: `1`, `t` or `sin t`.
pub fn model_warp(kind: ChartKind, t: f64) -> f64 {
    match kind {
        ChartKind::Product => 1.0,
        ChartKind::Punctured => t,
        ChartKind::TwoPoint => t.sin(),
    }
}

/// A conformal normal form sampled at the images `t_i = t(r_i)` of the grid.
#[derive(Debug, Clone)]
pub struct ConformalChart {
    pub kind: ChartKind,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    /// `u`, `v` or the two-point factor, per `kind`.
    pub factor: Vec<f64>,
    pub t_lower: Endpoint,
    pub t_upper: Endpoint,
    pub closing_constant: Option<f64>,
    /// Radius of the closing end (`r_min` of the grid) or of the base point.
    pub r_star: f64,
    /// One closing end, unbounded `t` and nonnegative Ricci.
    pub case_prime: bool,
    map: ChartMap,
}

impl ConformalChart {
    pub fn t_of_r(&self, r: f64) -> Result<f64> {
        self.map.t_of_r(r)
    }

    /// Inverse map by bracketed Newton on the quadrature.
    pub fn r_of_t(&self, t: f64) -> Result<f64> {
        self.map.r_of_t(t)
    }

    /// Chart resampled on `nodes` uniformly spaced `t` values spanning the
    /// sampled range, each `r(t)` found by monotone inversion.
    pub fn on_uniform_t(&self, nodes: usize) -> Result<Vec<(f64, f64, f64)>> {
        let (t0, t1) = (self.t[0], self.t[self.t.len() - 1]);
        let c = self.closing_constant.unwrap_or(1.0);
        let warp = &self.map.prim.warp;
        (0..nodes)
            .map(|j| {
                let t = t0 + (t1 - t0) * j as f64 / (nodes - 1) as f64;
                let r = if j == 0 {
                    self.r[0]
                } else if j == nodes - 1 {
                    self.r[self.r.len() - 1]
                } else {
                    self.r_of_t(t)?
                };
                let factor = if j == 0 || j == nodes - 1 {
                    if j == 0 { self.factor[0] } else { self.factor[self.factor.len() - 1] }
                } else {
                    factor_at(self.kind, c, warp.eval(r).value, t)
                };
                Ok((t, r, factor))
            })
            .collect()
    }
}

fn factor_at(kind: ChartKind, c: f64, w: f64, t: f64) -> f64 {
    match kind {
        ChartKind::Product => w,
        _ => c * w / model_warp(kind, t),
    }
}

/// Case 1 chart `t(r) = ∫_{r_ref}^{r} dz / w(z)` with `r_ref = 0` clamped to the grid.
pub fn chart_case1(m: &WarpedMetric) -> Result<ConformalChart> {
    if m.closes_at_min() || m.closes_at_max() || m.warp().values().iter().any(|&w| w <= 0.0) {
        return Err(SolitonError::WrongCase { expected: "no critical points", found: "a closing end".into() });
    }
    let warp = m.warp();
    let prim = Primitive::new(warp, false, false)?;
    let g = warp.grid();
    let r_ref = 0.0f64.clamp(g.r_min(), g.r_max());
    let shift = -prim.eval(r_ref)?;
    let map = ChartMap { kind: ChartKind::Product, prim, kappa: 1.0, shift };
    let r = warp.nodes().to_vec();
    let t: Vec<f64> = map.prim.cum.iter().map(|p| p + shift).collect();
    let factor = warp.values().to_vec();
    let t_lower = match tail(warp, End::Lower) {
        Tail::Bounded(v) => Endpoint::finite(t[0] - v),
        Tail::Unbounded => Endpoint { value: t[0], bounded: false },
    };
    let t_upper = match tail(warp, End::Upper) {
        Tail::Bounded(v) => Endpoint::finite(t[t.len() - 1] + v),
        Tail::Unbounded => Endpoint { value: t[t.len() - 1], bounded: false },
    };
    Ok(ConformalChart {
        kind: ChartKind::Product,
        t,
        r,
        factor,
        t_lower,
        t_upper,
        closing_constant: None,
        r_star: r_ref,
        case_prime: false,
        map,
    })
}

pub fn chart_case2(m: &WarpedMetric) -> Result<ConformalChart> {
    chart_case2_with_gauge(m, Gauge::Origin)
}

/// Case 2 chart `t(s) = exp((1/c) ∫ ds / w)`, `s = r - r_min`.
pub fn chart_case2_with_gauge(m: &WarpedMetric, gauge: Gauge) -> Result<ConformalChart> {
    if !m.closes_at_min() || m.closes_at_max() {
        return Err(SolitonError::WrongCase {
            expected: "one critical point at r_min",
            found: closing_pattern(m),
        });
    }
    let cc = closing_constant(m, End::Lower)?;
    let c = cc.c;
    let warp = m.warp();
    let x = warp.nodes();
    let prim = Primitive::new(warp, true, false)?;
    let s1 = x[1] - x[0];
    let origin_shift = s1.ln() + prim.j0 / c;
    let shift = origin_shift - gauge_offset(&prim, gauge, 1.0 / c, origin_shift)?;
    let map = ChartMap { kind: ChartKind::Punctured, prim, kappa: 1.0 / c, shift };
    let gauge_factor = (origin_shift - shift).exp();

    let mut t = Vec::with_capacity(x.len());
    let mut factor = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        if i == 0 {
            t.push(0.0);
            factor.push(gauge_factor);
        } else {
            let ti = map.t_from_phi(map.kappa * map.prim.cum[i] + shift);
            t.push(ti);
            factor.push(c * warp.values()[i] / ti);
        }
    }
    let last_phi = map.kappa * map.prim.cum[x.len() - 1] + shift;
    let t_upper = match tail(warp, End::Upper) {
        Tail::Bounded(v) => {
            let phi = last_phi + v / c;
            let tu = phi.exp();
            if tu.is_finite() && tu < OVERFLOW_GUARD {
                Endpoint::finite(tu)
            } else {
                Endpoint { value: t[t.len() - 1], bounded: false }
            }
        }
        Tail::Unbounded => Endpoint { value: t[t.len() - 1], bounded: false },
    };
    let ricci_nonneg = crate::geometry::curvature_sweep(m)?
        .iter()
        .all(|c| c.min_ricci() >= -crate::verify::RICCI_NONNEG_TOL);
    Ok(ConformalChart {
        kind: ChartKind::Punctured,
        t,
        r: x.to_vec(),
        factor,
        t_lower: Endpoint::finite(0.0),
        t_upper,
        closing_constant: Some(c),
        r_star: x[0],
        case_prime: !t_upper.bounded && ricci_nonneg,
        map,
    })
}

pub fn chart_case3(m: &WarpedMetric) -> Result<ConformalChart> {
    chart_case3_with_gauge(m, Gauge::Origin)
}

/// Case 3 chart `t(s) = 2 atan exp((1/c) ∫ ds / w)`, `t ∈ (0, π)`.
pub fn chart_case3_with_gauge(m: &WarpedMetric, gauge: Gauge) -> Result<ConformalChart> {
    if !(m.closes_at_min() && m.closes_at_max()) {
        return Err(SolitonError::WrongCase { expected: "two critical points", found: closing_pattern(m) });
    }
    let cc = closing_constant(m, End::Lower)?;
    closing_constant(m, End::Upper)?;
    let c = cc.c;
    let warp = m.warp();
    let x = warp.nodes();
    let n = x.len();
    let prim = Primitive::new(warp, true, true)?;
    let s1 = x[1] - x[0];
    let origin_shift = (0.5 * s1).ln() + prim.j0 / c;
    let shift = origin_shift - gauge_offset(&prim, gauge, 1.0 / c, origin_shift)?;
    let map = ChartMap { kind: ChartKind::TwoPoint, prim, kappa: 1.0 / c, shift };

    let mut t = vec![0.0; n];
    let mut factor = vec![0.0; n];
    t[n - 1] = PI;
    for i in 1..n - 1 {
        t[i] = map.t_from_phi(map.kappa * map.prim.cum[i] + shift);
        factor[i] = c * warp.values()[i] / t[i].sin();
    }
    // t ≈ 2 e^φ near the lower closing, so the factor tends to e^{origin_shift - shift}
    factor[0] = (origin_shift - shift).exp();
    factor[n - 1] = extrapolate_end(&t[n - 4..n - 1], &factor[n - 4..n - 1], PI);
    Ok(ConformalChart {
        kind: ChartKind::TwoPoint,
        t,
        r: x.to_vec(),
        factor,
        t_lower: Endpoint::finite(0.0),
        t_upper: Endpoint::finite(PI),
        closing_constant: Some(c),
        r_star: x[0],
        case_prime: false,
        map,
    })
}

fn closing_pattern(m: &WarpedMetric) -> String {
    format!("closing at r_min: {}, closing at r_max: {}", m.closes_at_min(), m.closes_at_max())
}

/// Origin-gauge value of the log coordinate at distance `s0` from the
/// closing end; the chart measured from `s0` subtracts it.
fn gauge_offset(prim: &Primitive, gauge: Gauge, kappa: f64, origin_shift: f64) -> Result<f64> {
    match gauge {
        Gauge::Origin => Ok(0.0),
        Gauge::LowerLimit(s0) => {
            let r0 = prim.nodes[0] + s0;
            if !(s0 > 0.0) || r0 >= prim.nodes[prim.nodes.len() - 1] {
                return Err(SolitonError::input(format!("lower limit s0 = {s0} outside the open domain")));
            }
            Ok(kappa * prim.eval(r0)? + origin_shift)
        }
    }
}

fn extrapolate_end(t: &[f64], y: &[f64], at: f64) -> f64 {
    let w = stencil::fornberg_weights(at, t, 0);
    w[0].iter().zip(y).map(|(c, v)| c * v).sum()
}

/// Whether `∫ dz / w` over the unsampled remainder of the line converges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    Bounded(f64),
    Unbounded,
}

/// Tail of `∫ dz / w` from the grid end to infinity in the given direction.
///
/// Analytic warps are integrated over doubling intervals until the increments
/// are negligible (bounded) or the sum overflows or stops shrinking
/// (unbounded). Sampled warps are judged from their end behaviour: the tail
/// converges only when `w` grows super-linearly, and it is then estimated by
/// the exponential model `1 / |w'|`. A warp that turns nonpositive past the
/// grid is treated as sampled.
pub fn tail(warp: &RadialProfile, end: End) -> Tail {
    let g = warp.grid();
    let (start, dir) = match end {
        End::Lower => (g.r_min(), -1.0),
        End::Upper => (g.r_max(), 1.0),
    };
    if warp.is_analytic() {
        if let Some(t) = analytic_tail(warp, start, dir, g.span()) {
            return t;
        }
    }
    let j = match end {
        End::Lower => warp.jet_at_node(0),
        End::Upper => warp.jet_at_node(warp.len() - 1),
    };
    sampled_tail(&j, dir)
}

fn sampled_tail(j: &Jet, dir: f64) -> Tail {
    let growth = dir * j.d1;
    if j.value > 0.0 && growth > 0.0 && j.d2 > 1e-8 * growth.max(j.value) {
        Tail::Bounded(1.0 / growth)
    } else {
        Tail::Unbounded
    }
}

fn analytic_tail(warp: &RadialProfile, start: f64, dir: f64, span: f64) -> Option<Tail> {
    let inv = |z: f64| {
        let w = warp.eval(z).value;
        if w > 0.0 {
            1.0 / w
        } else {
            f64::NAN
        }
    };
    let mut sum = 0.0f64;
    let mut prev_inc = f64::INFINITY;
    let mut growing = 0;
    let mut a = start;
    for k in 0..64 {
        let b = start + dir * span * ((1u64 << k) as f64);
        let (lo, hi) = if dir > 0.0 { (a, b) } else { (b, a) };
        let inc = match quadrature::integrate(inv, lo, hi, 1e-300, 1e-12) {
            Ok(q) => q.value,
            Err(_) => {
                // non-finite: either w reached zero (not a valid extension) or 1/w overflowed
                let probe = warp.eval(b).value;
                return if probe > 0.0 || probe.is_infinite() { Some(Tail::Unbounded) } else { None };
            }
        };
        if inc.is_nan() {
            return None;
        }
        sum += inc;
        if !sum.is_finite() || sum > OVERFLOW_GUARD {
            return Some(Tail::Unbounded);
        }
        if inc <= 1e-15 * (1.0 + sum) {
            return Some(Tail::Bounded(sum));
        }
        if inc >= 0.9 * prev_inc {
            growing += 1;
            if growing >= 8 {
                return Some(Tail::Unbounded);
            }
        } else {
            growing = 0;
        }
        prev_inc = inc;
        a = b;
    }
    Some(Tail::Unbounded)
}

/// Pullback residual of a chart against a metric: sup over interior samples
/// of the relative mismatch of the `dr^2` coefficient `F^2 (dt/dr)^2` with 1
/// and of `F^2 h(t)^2` with the fiber coefficient of `m`.
pub fn pullback_verify(m: &WarpedMetric, chart: &ConformalChart) -> Result<f64> {
    let n = chart.t.len();
    if chart.r.len() != n || chart.factor.len() != n {
        return Err(SolitonError::input("chart arrays differ in length"));
    }
    let dtdr = stencil::differentiate(&chart.r, &chart.t, 1, StencilOrder::Six)?;
    let c = chart.closing_constant.unwrap_or(1.0);
    let mut sup = 0.0f64;
    for (i, d) in dtdr.iter().enumerate().take(n - 1).skip(1) {
        let f2 = chart.factor[i] * chart.factor[i];
        let radial = (f2 * d * d - 1.0).abs();
        let w = m.warp().eval(chart.r[i]).value;
        let target = match chart.kind {
            ChartKind::Product => w * w,
            _ => (c * w) * (c * w),
        };
        let h = model_warp(chart.kind, chart.t[i]);
        let tangential = (f2 * h * h - target).abs() / target.abs().max(f64::MIN_POSITIVE);
        sup = sup.max(radial).max(tangential);
    }
    Ok(sup)
}

/// Inverse of the two-point chart: the metric `W(t)^2 (dt^2 + sin^2 t g_sphere)`
/// rewritten as `ds^2 + b(s)^2 g_sphere` on `nodes` uniform arclength samples.
///
/// `factor` returns the jet of `W` in `t`; `b` and its first three
/// `s`-derivatives follow from `b = W sin t` and `d/ds = W^{-1} d/dt`.
pub fn metric_from_sphere_factor<F>(n: usize, factor: F, nodes: usize) -> Result<WarpedMetric>
where
    F: Fn(f64) -> Jet,
{
    conformal_pair_from_sphere_factor(n, factor, nodes).map(|(m, _)| m)
}

/// [`metric_from_sphere_factor`] together with the potential of the
/// conformal field `sin t ∂_t`: `f = ∫ W^2 sin t dt`, so that `f' = b`.
pub fn conformal_pair_from_sphere_factor<F>(n: usize, factor: F, nodes: usize) -> Result<(WarpedMetric, RadialProfile)>
where
    F: Fn(f64) -> Jet,
{
    let w_of = |t: f64| factor(t).value;
    if (0..=64).any(|j| !(w_of(PI * j as f64 / 64.0) > 0.0)) {
        return Err(SolitonError::input("conformal factor must be positive on [0, π]"));
    }
    let arclength = |t: f64| quadrature::integrate(w_of, 0.0, t, 1e-15, 1e-14).map(|q| q.value);
    let total = arclength(PI)?;
    let grid = RadialGrid::uniform(0.0, total, nodes)?;
    let mut jets = Vec::with_capacity(nodes);
    let mut pot = Vec::with_capacity(nodes);
    let mut t_prev = 0.0;
    let mut f_prev = 0.0;
    for (i, &s) in grid.nodes().iter().enumerate() {
        let t = if i == 0 {
            0.0
        } else if i == nodes - 1 {
            PI
        } else {
            let g = |t: f64| (arclength(t).unwrap_or(f64::NAN) - s, w_of(t));
            roots::safeguarded_newton(g, t_prev, PI, 1e-15, 1e-15 * (1.0 + s))?
        };
        let df = quadrature::integrate(|x: f64| w_of(x).powi(2) * x.sin(), t_prev, t, 1e-16, 1e-14)?;
        f_prev += df.value;
        t_prev = t;
        jets.push(warp_jet_from_factor(&factor(t), t));
        pot.push(f_prev);
    }
    let col = |sel: fn(&Jet) -> f64| jets.iter().map(sel).collect::<Vec<f64>>();
    let warp = RadialProfile::tabulated(grid.clone(), col(|j| j.value), col(|j| j.d1), col(|j| j.d2), col(|j| j.d3))?;
    let f = RadialProfile::tabulated(grid, pot, col(|j| j.value), col(|j| j.d1), col(|j| j.d2))?;
    Ok((WarpedMetric::new(n, warp, FiberDescriptor::round_sphere(n)?)?, f))
}

/// Arclength jet of `b = W sin t` given the `t`-jet of `W`.
fn warp_jet_from_factor(wj: &Jet, t: f64) -> Jet {
    let (s, c) = t.sin_cos();
    let w = wj.value;
    let p = wj.d1 / w;
    let p1 = wj.d2 / w - p * p;
    let p2 = wj.d3 / w - p * wj.d2 / w - 2.0 * p * p1;
    let b = w * s;
    let b1 = p * s + c;
    let u2 = (p1 * s + p * c - s) / w;
    let u2_t = (p2 * s + 2.0 * p1 * c - p * s - c) / w - p * u2;
    Jet::new(b, b1, u2, u2_t / w)
}
