//! Shooting for rotationally symmetric gradient Yamabe and `σ_k`-Yamabe solitons.
//!
//! With the round unit sphere as fiber and `w = f'`, the soliton equation
//! `f'' = Φ(σ_k)` becomes a second-order ODE for `w`. `σ_k` is affine in `w''`
//! (only the radial Schouten eigenvalue `μ_r` contains it), so each family
//! gives `w''` in closed form once `Φ` is inverted:
//!
//! * Yamabe: `Φ(σ_1) = 2(n-1) σ_1 - λ = R - λ`
//! * k-Yamabe: `Φ(σ_k) = 2(n-1) (σ_k - λ)`
//! * generalized: `Φ = ψ`, monotone and inverted numerically

pub mod dopri;

use std::fmt;

use num_dual::{Dual64, DualNum};

use crate::error::{Result, SolitonError};
use crate::geometry::{binomial, curvature_from_jet, FiberDescriptor, WarpedMetric};
use crate::profile::{stencil, Jet, RadialGrid, RadialProfile, StencilOrder};
use crate::roots;
use crate::verify::{self, ClassificationResult, ResidualReport, ScalarFn, SolitonCase, SolitonSpec};

use dopri::{Control, DenseStep, EndReason, Settings};

/// Series start offset from the origin.
pub const DEFAULT_SERIES_START: f64 = 1e-3;
/// `|w|` or `|w'|` beyond this stops the integration.
pub const BLOWUP_GUARD: f64 = 1e12;
/// `w` below this fraction of its running maximum counts as a closing.
pub const CLOSING_FRACTION: f64 = 1e-6;
pub const DEFAULT_OUTPUT_NODES: usize = 2001;

#[derive(Clone)]
pub enum Family {
    Yamabe,
    KYamabe(usize),
    GeneralizedSigmaK { psi: ScalarFn, k: usize },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Yamabe => f.write_str("Yamabe"),
            Family::KYamabe(k) => write!(f, "KYamabe({k})"),
            Family::GeneralizedSigmaK { k, .. } => write!(f, "GeneralizedSigmaK({k})"),
        }
    }
}

impl Family {
    pub fn k(&self) -> usize {
        match self {
            Family::Yamabe => 1,
            Family::KYamabe(k) => *k,
            Family::GeneralizedSigmaK { k, .. } => *k,
        }
    }

    /// `Φ(σ)`, the right-hand side of `w' = Φ(σ_k)`.
    pub fn phi(&self, n: usize, lambda: f64, sigma: f64) -> f64 {
        let c = 2.0 * (n as f64 - 1.0);
        match self {
            Family::Yamabe => c * sigma - lambda,
            Family::KYamabe(_) => c * (sigma - lambda),
            Family::GeneralizedSigmaK { psi, .. } => psi(sigma),
        }
    }

    /// `Φ^{-1}(slope)` and its derivative in `slope`.
    fn sigma_target(&self, n: usize, lambda: f64, slope: f64, guess: f64) -> Result<(f64, f64)> {
        let c = 2.0 * (n as f64 - 1.0);
        match self {
            Family::Yamabe => Ok(((slope + lambda) / c, 1.0 / c)),
            Family::KYamabe(_) => Ok((lambda + slope / c, 1.0 / c)),
            Family::GeneralizedSigmaK { psi, .. } => {
                let s = roots::invert_monotone(|x| psi(x), slope, guess)?;
                let h = 1e-6 * (1.0 + s.abs());
                let dpsi = (psi(s + h) - psi(s - h)) / (2.0 * h);
                if !(dpsi.abs() > 0.0) {
                    return Err(SolitonError::Root(format!("ψ is flat at σ = {s}")));
                }
                Ok((s, 1.0 / dpsi))
            }
        }
    }

    pub fn soliton_spec(&self, lambda: f64) -> SolitonSpec {
        match self {
            Family::Yamabe => SolitonSpec::Yamabe { lambda },
            Family::KYamabe(k) => SolitonSpec::KYamabe { k: *k, lambda },
            Family::GeneralizedSigmaK { psi, k } => SolitonSpec::GeneralizedSigmaK { psi: psi.clone(), k: *k },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    /// `w(0) = 0`, `w'(0) = 1`: the fiber caps off smoothly at `s = 0`.
    SmoothOrigin,
    /// `w(0) = w0 > 0`, `w'(0) = a0`.
    Cylinder { w0: f64, a0: f64 },
}

#[derive(Debug, Clone)]
pub struct OdeProblem {
    pub n: usize,
    pub family: Family,
    pub lambda: f64,
    pub start: Start,
    /// Integration interval `[0, span]`.
    pub span: f64,
    pub settings: Settings,
    pub series_start: f64,
    pub output_nodes: usize,
    pub blowup: f64,
}

impl OdeProblem {
    pub fn new(n: usize, family: Family, lambda: f64, start: Start, span: f64) -> Self {
        Self {
            n,
            family,
            lambda,
            start,
            span,
            settings: Settings::default(),
            series_start: DEFAULT_SERIES_START,
            output_nodes: DEFAULT_OUTPUT_NODES,
            blowup: BLOWUP_GUARD,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.settings.rtol = tol;
        self.settings.atol = tol;
        self
    }

    pub fn with_output_nodes(mut self, nodes: usize) -> Self {
        self.output_nodes = nodes;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(SolitonError::Dimension(self.n));
        }
        let k = self.family.k();
        if k == 0 || k > self.n {
            return Err(SolitonError::KOutOfRange { k, n: self.n });
        }
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(SolitonError::input(format!("span must be positive, got {}", self.span)));
        }
        if !(self.settings.rtol > 0.0 && self.settings.atol > 0.0) {
            return Err(SolitonError::input("tolerances must be positive"));
        }
        if self.output_nodes < crate::profile::MIN_NODES {
            return Err(SolitonError::GridTooCoarse { nodes: self.output_nodes, needed: crate::profile::MIN_NODES });
        }
        if let Start::Cylinder { w0, a0 } = self.start {
            if !(w0 > 0.0) || !a0.is_finite() {
                return Err(SolitonError::input(format!("cylinder start needs w0 > 0, got w0 = {w0}")));
            }
        }
        if let Start::SmoothOrigin = self.start {
            if !(self.series_start > 0.0 && self.series_start < 0.1 * self.span) {
                return Err(SolitonError::input("series start must lie well inside the span"));
            }
        }
        Ok(())
    }
}

/// `w''` of the Yamabe soliton equation `w' = R - λ` with a round unit fiber.
pub fn yamabe_rhs(n: usize, lambda: f64, s: f64, w: f64, w1: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(SolitonError::DegenerateMetric { r: s, warp: w });
    }
    Ok(yamabe_generic(n, lambda, w, w1))
}

fn yamabe_generic<D: DualNum<Primitive = f64> + Copy>(n: usize, lambda: f64, w: D, w1: D) -> D {
    let nf = n as f64;
    let fiber = (-(w1 * w1) + 1.0) * ((nf - 1.0) * (nf - 2.0)) / (w * w);
    w * (fiber - w1 - lambda) / (2.0 * (nf - 1.0))
}

/// `w''` solving `w' = 2(n-1)(σ_k - λ)`. `σ_k` is affine in `w''` with slope
/// `-C(n-1,k-1) μ_t^{k-1} / w`; when that slope vanishes (`μ_t = 0`, as on
/// flat space) the equation does not see `w''` and `prev` is kept if the
/// remaining constraint holds.
pub fn k_yamabe_step(n: usize, k: usize, lambda: f64, s: f64, w: f64, w1: f64, prev: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(SolitonError::KOutOfRange { k, n });
    }
    if !(w > 0.0) {
        return Err(SolitonError::DegenerateMetric { r: s, warp: w });
    }
    let target = lambda + w1 / (2.0 * (n as f64 - 1.0));
    solve_w2(n, k, w, w1, target, prev, s)
}

fn solve_w2<D: DualNum<Primitive = f64> + Copy>(n: usize, k: usize, w: D, w1: D, sigma: D, prev: f64, s: f64) -> Result<D> {
    let mu_t = (-(w1 * w1) + 1.0) / (w * w * 2.0);
    let num = sigma - mu_t.powi(k as i32) * binomial(n - 1, k);
    let den = mu_t.powi(k as i32 - 1) * binomial(n - 1, k - 1);
    if den.re() == 0.0 || !(num.re() / den.re()).is_finite() {
        let scale = 1.0 + sigma.re().abs();
        return if num.re().abs() <= 1e-12 * scale {
            Ok(D::from(prev))
        } else {
            Err(SolitonError::Root(format!("σ_{k} does not depend on w'' at s = {s} and the equation fails by {}", num.re())))
        };
    }
    let mu_r = num / den;
    Ok(-w * (mu_r + mu_t))
}

/// `(w'', w''')` for any family; `w'''` by differentiating the closed form
/// along the solution with dual numbers.
fn second_and_third(p: &OdeProblem, s: f64, w: f64, w1: f64, prev: f64, sigma_guess: f64) -> Result<(f64, f64, f64)> {
    if !(w > 0.0) {
        return Err(SolitonError::DegenerateMetric { r: s, warp: w });
    }
    let n = p.n;
    if let Family::Yamabe = p.family {
        let w2 = yamabe_generic(n, p.lambda, w, w1);
        let d = yamabe_generic(n, p.lambda, Dual64::new(w, w1), Dual64::new(w1, w2));
        return Ok((w2, d.eps, (w1 + p.lambda) / (2.0 * (n as f64 - 1.0))));
    }
    let (sig, dsig) = p.family.sigma_target(n, p.lambda, w1, sigma_guess)?;
    let w2 = solve_w2(n, p.family.k(), w, w1, sig, prev, s)?;
    let d = solve_w2(n, p.family.k(), Dual64::new(w, w1), Dual64::new(w1, w2), Dual64::new(sig, dsig * w2), prev, s)?;
    Ok((w2, d.eps, sig))
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// `w` reached zero: the fiber caps off.
    Closing,
    /// `w'` changed sign.
    SlopeSignChange,
    BlowUp,
    StepUnderflow,
    BranchFailure(String),
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Closing => f.write_str("closing"),
            EventKind::SlopeSignChange => f.write_str("slope_sign_change"),
            EventKind::BlowUp => f.write_str("blow_up"),
            EventKind::StepUnderflow => f.write_str("step_underflow"),
            EventKind::BranchFailure(m) => write!(f, "branch_failure: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    SpanEnd,
    Closing,
    BlowUp,
    StepUnderflow { h: f64 },
    BranchFailure(String),
    MaxSteps,
}

impl Termination {
    /// The curve covers the requested span or ends at a regular closing.
    pub fn is_success(&self) -> bool {
        matches!(self, Termination::SpanEnd | Termination::Closing)
    }
}

/// A shooting result resampled on a uniform grid of `[0, s_end]`.
#[derive(Debug, Clone)]
pub struct SolutionCurve {
    pub n: usize,
    pub family: Family,
    pub lambda: f64,
    pub start: Start,
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
    pub f: Vec<f64>,
    pub scalar: Vec<f64>,
    /// `σ_k` for the family's `k`.
    pub sigma: Vec<f64>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl SolutionCurve {
    pub fn k(&self) -> usize {
        self.family.k()
    }

    pub fn s_end(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    pub fn closed(&self) -> bool {
        self.events.iter().any(|e| e.kind == EventKind::Closing)
    }

    /// Metric and potential as tabulated profiles on the curve's grid.
    pub fn to_pair(&self) -> Result<(WarpedMetric, RadialProfile)> {
        let grid = RadialGrid::from_nodes(self.s.clone())?;
        let warp = RadialProfile::tabulated(grid.clone(), self.w.clone(), self.w1.clone(), self.w2.clone(), self.w3.clone())?;
        let f = RadialProfile::tabulated(grid, self.f.clone(), self.w.clone(), self.w1.clone(), self.w2.clone())?;
        Ok((WarpedMetric::new(self.n, warp, FiberDescriptor::round_sphere(self.n)?)?, f))
    }

    /// Metric and potential with derivatives recomputed from the sampled `w`
    /// and `f` by finite differences, independent of the ODE right-hand side.
    pub fn to_sampled_pair(&self, order: StencilOrder) -> Result<(WarpedMetric, RadialProfile)> {
        let grid = RadialGrid::from_nodes(self.s.clone())?;
        let warp = RadialProfile::sampled(grid.clone(), self.w.clone(), order)?;
        let f = RadialProfile::sampled(grid, self.f.clone(), order)?;
        Ok((WarpedMetric::new(self.n, warp, FiberDescriptor::round_sphere(self.n)?)?, f))
    }

    /// `|w' - Φ(σ_k)|` at every node, with `σ_k` from the reported columns.
    pub fn identity_residual(&self) -> Vec<f64> {
        self.sigma
            .iter()
            .zip(&self.w1)
            .map(|(&sig, &w1)| (w1 - self.family.phi(self.n, self.lambda, sig)).abs())
            .collect()
    }

    /// `|w' - Φ(σ_k)|` with `w''` taken from finite differences of the
    /// integrated `w'` rather than from the right-hand side; skips the
    /// end nodes.
    pub fn fd_identity_residual(&self) -> Result<Vec<f64>> {
        let w2 = stencil::differentiate(&self.s, &self.w1, 1, StencilOrder::Six)?;
        let fiber = FiberDescriptor::round_sphere(self.n)?;
        let k = self.k();
        Ok((1..self.s.len() - 1)
            .filter(|&i| self.w[i] > 0.0)
            .map(|i| {
                let c = curvature_from_jet(self.n, &fiber, self.s[i], &Jet::new(self.w[i], self.w1[i], w2[i], 0.0));
                (self.w1[i] - self.family.phi(self.n, self.lambda, c.sigma[k - 1])).abs()
            })
            .collect())
    }
}

/// Origin coefficient `a` of `w = s + a s^3`: every Schouten eigenvalue at
/// the origin equals `-3a`, so `C(n,k) (-3a)^k = Φ^{-1}(1)`.
fn series_coefficient(p: &OdeProblem) -> Result<f64> {
    let k = p.family.k();
    let (target, _) = p.family.sigma_target(p.n, p.lambda, 1.0, 0.0)?;
    let q = target / binomial(p.n, k);
    let x = if k % 2 == 1 {
        q.signum() * q.abs().powf(1.0 / k as f64)
    } else if q >= 0.0 {
        // the positive root: positive curvature at the origin
        q.powf(1.0 / k as f64)
    } else {
        return Err(SolitonError::input(format!(
            "no smooth origin: σ_{k} would have to equal {target} < 0 on a constant-curvature point"
        )));
    };
    Ok(-x / 3.0)
}

pub fn shoot(p: &OdeProblem) -> Result<SolutionCurve> {
    p.validate()?;
    let (s_start, y0, a) = match p.start {
        Start::SmoothOrigin => {
            let a = series_coefficient(p)?;
            let s0 = p.series_start;
            (s0, [0.5 * s0 * s0 + 0.25 * a * s0.powi(4), s0 + a * s0.powi(3), 1.0 + 3.0 * a * s0 * s0], Some(a))
        }
        Start::Cylinder { w0, a0 } => (0.0, [0.0, w0, a0], None),
    };

    let mut prev_w2 = a.map_or(0.0, |a| 6.0 * a * s_start);
    let mut sigma_guess = 0.0;
    let rhs = |s: f64, y: &[f64; 3]| -> std::result::Result<[f64; 3], SolitonError> {
        let (w2, _, sig) = second_and_third(p, s, y[1], y[2], prev_w2, sigma_guess)?;
        prev_w2 = w2;
        sigma_guess = sig;
        Ok([y[1], y[2], w2])
    };

    let mut steps: Vec<DenseStep<3>> = Vec::new();
    let mut events = Vec::new();
    let mut max_w = y0[1];
    let mut stop: Option<Termination> = None;
    let out = dopri::integrate(rhs, s_start, y0, p.span, &p.settings, |st| {
        let (y_a, y_b) = (st.start(), st.end());
        if y_a[2] != 0.0 && y_a[2].signum() != y_b[2].signum() {
            if let Some(s) = st.locate(2, 0.0) {
                events.push(Event { kind: EventKind::SlopeSignChange, s });
            }
        }
        let level = CLOSING_FRACTION * max_w;
        if y_b[1] < level {
            let s = st.locate(1, level).unwrap_or(st.s1());
            steps.push(*st);
            stop = Some(Termination::Closing);
            events.push(Event { kind: EventKind::Closing, s });
            return Control::Stop;
        }
        max_w = max_w.max(y_b[1]);
        steps.push(*st);
        if y_b[1].abs() > p.blowup || y_b[2].abs() > p.blowup {
            stop = Some(Termination::BlowUp);
            events.push(Event { kind: EventKind::BlowUp, s: st.s1() });
            return Control::Stop;
        }
        Control::Continue
    });

    let mut end_s = out.s;
    let mut end_y = out.y;
    let termination = match (out.reason, stop) {
        (EndReason::Reached, _) => Termination::SpanEnd,
        (EndReason::Stopped, Some(t)) => t,
        (EndReason::Stopped, None) => unreachable!("observer stops only with a reason"),
        (EndReason::MaxSteps, _) => Termination::MaxSteps,
        (EndReason::StepUnderflow { h }, _) => {
            events.push(Event { kind: EventKind::StepUnderflow, s: out.s });
            Termination::StepUnderflow { h }
        }
        (EndReason::RhsFailed(e), _) => {
            let msg = e.to_string();
            // a warp running into zero with negative slope is a closing the
            // steps could not resolve
            if end_y[1] < 1e-3 * max_w && end_y[2] < 0.0 {
                events.push(Event { kind: EventKind::Closing, s: out.s });
                Termination::Closing
            } else {
                events.push(Event { kind: EventKind::BranchFailure(msg.clone()), s: out.s });
                Termination::BranchFailure(msg)
            }
        }
    };
    if termination == Termination::Closing {
        // cut at the located crossing, then extend linearly to w = 0
        let cut = events.iter().rev().find(|e| e.kind == EventKind::Closing).map(|e| e.s).unwrap_or(end_s);
        if let Some(st) = steps.iter().rev().find(|st| st.s0 <= cut && cut <= st.s1()) {
            end_y = st.eval(cut);
        }
        end_s = cut;
        if end_y[2] < 0.0 {
            end_s = cut + end_y[1] / -end_y[2];
        }
        if let Some(e) = events.iter_mut().rev().find(|e| e.kind == EventKind::Closing) {
            e.s = end_s;
        }
    }
    resample(p, a, s_start, &steps, end_s, end_y, cut_point(&termination, &steps), events, termination, out.accepted, out.rejected)
}

fn cut_point(t: &Termination, steps: &[DenseStep<3>]) -> f64 {
    match (t, steps.last()) {
        (Termination::Closing, Some(st)) => st.s1(),
        (_, Some(st)) => st.s1(),
        (_, None) => f64::NEG_INFINITY,
    }
}

#[allow(clippy::too_many_arguments)]
fn resample(
    p: &OdeProblem,
    a: Option<f64>,
    s_start: f64,
    steps: &[DenseStep<3>],
    end_s: f64,
    end_y: [f64; 3],
    dense_end: f64,
    events: Vec<Event>,
    termination: Termination,
    accepted: usize,
    rejected: usize,
) -> Result<SolutionCurve> {
    if !(end_s > s_start) || steps.is_empty() {
        return Err(SolitonError::Root(format!("integration stopped at s = {end_s} before taking a step ({termination:?})")));
    }
    let nn = p.output_nodes;
    let grid = RadialGrid::uniform(0.0, end_s, nn)?;
    let s: Vec<f64> = grid.nodes().to_vec();
    let closing = termination == Termination::Closing;
    let closing_at = if closing { end_s } else { f64::INFINITY };
    // Taylor data at the last dense point, for the closing extension
    let tail = closing.then(|| {
        let st = steps.last().unwrap();
        let cut = dense_end.min(end_s);
        let y = if cut < st.s1() { st.eval(cut) } else { st.end() };
        (cut, y)
    });

    let (mut fv, mut wv, mut w1v) = (vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]);
    let mut j = 0usize;
    for (i, &si) in s.iter().enumerate() {
        let y = if let (Some(a), true) = (a, si < s_start) {
            [0.5 * si * si + 0.25 * a * si.powi(4), si + a * si.powi(3), 1.0 + 3.0 * a * si * si]
        } else if i == nn - 1 {
            end_y
        } else {
            while j + 1 < steps.len() && steps[j].s1() < si {
                j += 1;
            }
            let st = &steps[j];
            if si <= st.s1() {
                st.eval(si.max(st.s0))
            } else {
                let (c, y) = tail.unwrap_or((st.s1(), st.end()));
                let d = si - c;
                [y[0] + y[1] * d + 0.5 * y[2] * d * d, y[1] + y[2] * d, y[2]]
            }
        };
        fv[i] = y[0];
        wv[i] = y[1];
        w1v[i] = y[2];
    }
    if closing {
        wv[nn - 1] = 0.0;
    }

    let fiber = FiberDescriptor::round_sphere(p.n)?;
    let k = p.family.k();
    let (mut w2v, mut w3v, mut rv, mut sgv) = (vec![f64::NAN; nn], vec![f64::NAN; nn], vec![f64::NAN; nn], vec![f64::NAN; nn]);
    let mut prev = a.map_or(0.0, |a| 6.0 * a * s_start);
    let mut guess = 0.0;
    let nf = p.n as f64;
    for i in 0..nn {
        if let (Some(a), 0) = (a, i) {
            w2v[0] = 0.0;
            w3v[0] = 6.0 * a;
            rv[0] = -6.0 * a * nf * (nf - 1.0);
            sgv[0] = binomial(p.n, k) * (-3.0 * a).powi(k as i32);
            continue;
        }
        if closing && s[i] >= closing_at {
            continue;
        }
        let (w2, w3, sig) = second_and_third(p, s[i], wv[i], w1v[i], prev, guess)?;
        prev = w2;
        guess = sig;
        w2v[i] = w2;
        w3v[i] = w3;
        let c = curvature_from_jet(p.n, &fiber, s[i], &Jet::new(wv[i], w1v[i], w2, w3));
        rv[i] = c.scalar;
        sgv[i] = c.sigma[k - 1];
    }
    if closing {
        for v in [&mut w2v, &mut w3v, &mut rv, &mut sgv] {
            let e = nn - 1;
            v[e] = 3.0 * v[e - 1] - 3.0 * v[e - 2] + v[e - 3];
        }
    }
    Ok(SolutionCurve {
        n: p.n,
        family: p.family.clone(),
        lambda: p.lambda,
        start: p.start,
        s,
        w: wv,
        w1: w1v,
        w2: w2v,
        w3: w3v,
        f: fv,
        scalar: rv,
        sigma: sgv,
        events,
        termination,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

/// Case expected from the integration events alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate {
    /// No closing point: product-type end.
    Case1,
    /// One closing point.
    Case2,
    /// Closes at both ends: compact.
    Case3,
    Undetermined,
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Candidate::Case1 => "Case1",
            Candidate::Case2 => "Case2",
            Candidate::Case3 => "Case3",
            Candidate::Undetermined => "Undetermined",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct ClosingHandoff {
    pub candidate: Candidate,
    pub classification: Option<ClassificationResult>,
    pub residual: Option<ResidualReport>,
    /// Compact, residual passed, yet `R` is not constant. Compact Yamabe
    /// solitons have constant scalar curvature, so this marks a numerical
    /// artefact rather than a new soliton.
    pub contradiction: bool,
    pub notes: Vec<String>,
}

impl ClosingHandoff {
    /// Candidate and classification agree on the number of closing points.
    pub fn consistent(&self) -> bool {
        matches!(
            (self.candidate, self.classification.as_ref().map(|c| c.case)),
            (Candidate::Case1, Some(SolitonCase::Case1 | SolitonCase::Case1Prime))
                | (Candidate::Case2, Some(SolitonCase::Case2 | SolitonCase::Case2Prime))
                | (Candidate::Case3, Some(SolitonCase::Case3))
        )
    }
}

/// Maps the events of a curve to an expected case and hands the resampled
/// pair to the verifier and the classifier.
pub fn closing_detect(curve: &SolutionCurve) -> ClosingHandoff {
    let closings = curve.events.iter().filter(|e| e.kind == EventKind::Closing).count();
    let origin = matches!(curve.start, Start::SmoothOrigin);
    let candidate = if !(curve.termination.is_success() || curve.termination == Termination::BlowUp) {
        Candidate::Undetermined
    } else {
        match (origin, closings) {
            (true, 0) | (false, 1) => Candidate::Case2,
            (true, _) => Candidate::Case3,
            (false, 0) => Candidate::Case1,
            (false, _) => Candidate::Undetermined,
        }
    };
    let mut notes = Vec::new();
    let pair = match curve.to_pair() {
        Ok(p) => Some(p),
        Err(e) => {
            notes.push(format!("pair rejected: {e}"));
            None
        }
    };
    let (classification, residual) = match &pair {
        Some((m, f)) => {
            let c = verify::classify(m, f).map_err(|e| notes.push(format!("classification failed: {e}"))).ok();
            let spec = curve.family.soliton_spec(curve.lambda);
            let r = verify::soliton_residual_with_tol(m, f, &spec, Some(verify::TABULATED_RESIDUAL_TOL))
                .map_err(|e| notes.push(format!("residual failed: {e}")))
                .ok();
            (c, r)
        }
        None => (None, None),
    };
    let mut contradiction = false;
    if candidate == Candidate::Case3 && residual.as_ref().is_some_and(|r| r.pass) {
        let interior = &curve.scalar[1..curve.scalar.len() - 1];
        let (lo, hi) = interior.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if hi - lo > verify::TABULATED_RESIDUAL_TOL * (1.0 + hi.abs()) {
            contradiction = true;
            notes.push(format!("compact soliton with nonconstant scalar curvature (range {lo} .. {hi})"));
        }
    }
    ClosingHandoff { candidate, classification, residual, contradiction, notes }
}
