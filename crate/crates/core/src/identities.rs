//! Integral identities on compact rotationally symmetric metrics
//! `ds^2 + b(s)^2 g_sphere`, `s ∈ [0, L]`, closing smoothly at both ends.
//!
//! Volume integrals use composite Simpson on the metric's grid, corrected
//! by one Richardson step against the doubled spacing. Every integrand carries `b^{n-1}`, which
//! vanishes at the poles, so curvature is never evaluated there.

use std::f64::consts::PI;

use crate::charts::{self, End};
use crate::error::{Result, SolitonError};
use crate::geometry::{self, CurvatureReport, CurvatureSlope, FiberKind, WarpedMetric};
use crate::profile::{stencil, RadialProfile, Spacing};
use crate::quadrature::{self, QuadResult};
use crate::verify;

/// Identity tolerance for analytic inputs.
pub const ANALYTIC_IDENTITY_TOL: f64 = 1e-8;
/// Identity tolerance for finite-difference or tabulated inputs.
pub const SAMPLED_IDENTITY_TOL: f64 = 1e-6;

/// `Γ(m / 2)` from `Γ(1) = 1`, `Γ(1/2) = √π` and `Γ(x + 1) = x Γ(x)`.
pub fn gamma_half(m: usize) -> f64 {
    assert!(m > 0, "Γ has a pole at 0");
    let (mut x, mut g) = if m % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while x < 0.5 * m as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Area of the unit sphere `S^{n-1}`: `2 π^{n/2} / Γ(n/2)`.
pub fn omega(n: usize) -> f64 {
    2.0 * PI.powf(0.5 * n as f64) / gamma_half(n)
}

/// A warped metric over a round unit sphere that closes smoothly at both ends
/// of a uniform grid with `N ≡ 1 (mod 4)` nodes.
#[derive(Debug, Clone)]
pub struct CompactRotMetric {
    metric: WarpedMetric,
    omega: f64,
}

impl CompactRotMetric {
    pub fn new(metric: WarpedMetric) -> Result<Self> {
        if metric.fiber().kind() != FiberKind::RoundSphereUnit {
            return Err(SolitonError::input("compact identities need the round unit sphere as fiber"));
        }
        let g = metric.warp().grid();
        if g.spacing() != Spacing::Uniform {
            return Err(SolitonError::input("compact identities need a uniform grid"));
        }
        if (g.len() - 1) % 4 != 0 {
            return Err(SolitonError::input(format!("grid needs N = 4m + 1 nodes, got {}", g.len())));
        }
        if !(metric.closes_at_min() && metric.closes_at_max()) {
            return Err(SolitonError::WrongCase {
                expected: "closing at both ends",
                found: format!("closing at r_min: {}, at r_max: {}", metric.closes_at_min(), metric.closes_at_max()),
            });
        }
        charts::closing_constant(&metric, End::Lower)?;
        charts::closing_constant(&metric, End::Upper)?;
        let omega = omega(metric.n());
        Ok(Self { metric, omega })
    }

    pub fn metric(&self) -> &WarpedMetric {
        &self.metric
    }

    pub fn n(&self) -> usize {
        self.metric.n()
    }

    pub fn len(&self) -> usize {
        self.metric.warp().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> &[f64] {
        self.metric.warp().nodes()
    }

    pub fn step(&self) -> f64 {
        let x = self.nodes();
        x[1] - x[0]
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn is_analytic(&self) -> bool {
        self.metric.warp().is_analytic()
    }

    fn default_tol(&self, f: Option<&RadialProfile>) -> f64 {
        if self.is_analytic() && f.map_or(true, |f| f.is_analytic()) {
            ANALYTIC_IDENTITY_TOL
        } else {
            SAMPLED_IDENTITY_TOL
        }
    }

    /// `b^{n-1} ω` at each node (zero at both poles).
    pub fn volume_density(&self) -> Vec<f64> {
        let p = self.n() as i32 - 1;
        let b = self.metric.warp().values();
        let last = b.len() - 1;
        b.iter()
            .enumerate()
            .map(|(i, v)| if i == 0 || i == last { 0.0 } else { v.powi(p) * self.omega })
            .collect()
    }

    fn check_profile(&self, f: &RadialProfile) -> Result<()> {
        let a = self.nodes();
        let b = f.nodes();
        if a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs())) {
            Ok(())
        } else {
            Err(SolitonError::input("profile is not sampled on the metric grid"))
        }
    }

    /// Curvature at interior nodes; `None` at the poles.
    fn curvature(&self) -> Result<Vec<Option<CurvatureReport>>> {
        let last = self.len() - 1;
        (0..=last)
            .map(|i| if i == 0 || i == last { Ok(None) } else { geometry::curvature_at_node(&self.metric, i).map(Some) })
            .collect()
    }

    fn curvature_slope(&self) -> Result<Vec<Option<CurvatureSlope>>> {
        let last = self.len() - 1;
        (0..=last)
            .map(|i| {
                if i == 0 || i == last {
                    Ok(None)
                } else {
                    geometry::curvature_slope_at_node(&self.metric, i).map(Some)
                }
            })
            .collect()
    }
}

/// Outcome of comparing two sides of an identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
    /// Quadrature error estimate of the compared values.
    pub estimate: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, estimate: f64, tolerance: f64) -> Self {
        let defect = (lhs - rhs).abs();
        let pass = defect < tolerance.max(10.0 * estimate);
        Self { name: name.into(), lhs, rhs, defect, estimate, tolerance, pass }
    }
}

/// `∫ u dV` over the whole manifold for `u` sampled on the grid. Values at
/// the poles are ignored.
pub fn volume_integral(m: &CompactRotMetric, integrand: &[f64]) -> Result<QuadResult> {
    if integrand.len() != m.len() {
        return Err(SolitonError::input(format!("integrand has {} samples, grid has {}", integrand.len(), m.len())));
    }
    let y: Vec<f64> = m.volume_density().iter().zip(integrand).map(|(d, u)| if *d == 0.0 { 0.0 } else { d * u }).collect();
    Ok(quadrature::simpson_extrapolated(&y, m.step()))
}

pub fn volume(m: &CompactRotMetric) -> QuadResult {
    let y = m.volume_density();
    quadrature::simpson_extrapolated(&y, m.step())
}

/// `Δf = f'' + (n-1) f' b'/b` at each node; `n f''` at the poles.
pub fn laplacian(m: &CompactRotMetric, f: &RadialProfile) -> Result<Vec<f64>> {
    m.check_profile(f)?;
    let w = m.metric.warp();
    let n = m.n() as f64;
    let last = m.len() - 1;
    Ok((0..=last)
        .map(|i| {
            if i == 0 || i == last {
                n * f.d2()[i]
            } else {
                f.d2()[i] + (n - 1.0) * f.d1()[i] * w.d1()[i] / w.values()[i]
            }
        })
        .collect())
}

/// Scalar curvature at interior nodes (poles carry a placeholder that every
/// volume integral ignores).
fn scalar_samples(m: &CompactRotMetric) -> Result<Vec<f64>> {
    Ok(m.curvature()?.iter().map(|c| c.as_ref().map_or(0.0, |c| c.scalar)).collect())
}

/// `Vol^{-1} ∫ R dV`.
pub fn mean_scalar(m: &CompactRotMetric) -> Result<QuadResult> {
    let r = scalar_samples(m)?;
    let i = volume_integral(m, &r)?;
    let v = volume(m);
    let value = i.value / v.value;
    Ok(QuadResult { value, error: i.error / v.value + value.abs() * v.error / v.value })
}

/// `λ` against the volume average of `R`, which `∫ Δf dV = 0` and
/// `Δf = n (R - λ)` force on a compact Yamabe soliton.
pub fn check_lambda_mean(m: &CompactRotMetric, f: &RadialProfile, lambda: f64) -> Result<IdentityReport> {
    m.check_profile(f)?;
    let mean = mean_scalar(m)?;
    Ok(IdentityReport::new("lambda_mean", lambda, mean.value, mean.error, m.default_tol(Some(f))))
}

/// Synthetic scalar curvature and its radial derivative, replacing the
/// values computed from the metric.
#[derive(Debug, Clone, Copy)]
pub struct ScalarOverride<'a> {
    pub scalar: &'a [f64],
    pub slope: &'a [f64],
}

/// Terms of the chain `∫(R-λ)R = ∫⟨Ric, ∇²f⟩ = -½∫⟨∇R, ∇f⟩` and the
/// rigidity gap it leads to.
#[derive(Debug, Clone, PartialEq)]
pub struct BochnerChain {
    /// `A = ∫ (R - λ) R dV`
    pub a: f64,
    /// `∫ ⟨Ric, ∇²f⟩ dV`
    pub a_mid: f64,
    /// `B = -½ ∫ R' f' dV`
    pub b: f64,
    /// `∫ (R - λ)^2 dV`
    pub square: f64,
    /// `C = (n/2) ∫ (R - λ)^2 dV`
    pub c: f64,
    /// `∫ (R - λ)^2 - C = (1 - n/2) ∫ (R - λ)^2`
    pub rigidity_gap: f64,
    /// `(∫ (Δf/n - (R - λ))^2 dV)^{1/2}`, zero for a Yamabe soliton.
    pub premise_defect: f64,
    /// `A = ∫⟨Ric, ∇²f⟩`, holding when `∇²f = (R - λ) g`.
    pub soliton_link: IdentityReport,
    /// `∫⟨Ric, ∇²f⟩ = B`, holding on every metric by the contracted Bianchi identity.
    pub bianchi_link: IdentityReport,
    /// `A = B`
    pub chain: IdentityReport,
    /// `Δf = n (R - λ)` in the `L^2` sense.
    pub premise: IdentityReport,
    pub pass: bool,
}

pub fn check_bochner_chain(m: &CompactRotMetric, f: &RadialProfile, lambda: f64) -> Result<BochnerChain> {
    check_bochner_chain_with(m, f, lambda, None)
}

pub fn check_bochner_chain_with(
    m: &CompactRotMetric,
    f: &RadialProfile,
    lambda: f64,
    over: Option<ScalarOverride<'_>>,
) -> Result<BochnerChain> {
    m.check_profile(f)?;
    let len = m.len();
    let n = m.n() as f64;
    let curv = m.curvature()?;
    let slope = m.curvature_slope()?;
    let (r, dr): (Vec<f64>, Vec<f64>) = match over {
        Some(o) => {
            if o.scalar.len() != len || o.slope.len() != len {
                return Err(SolitonError::input("override arrays must match the grid"));
            }
            (o.scalar.to_vec(), o.slope.to_vec())
        }
        None => (
            curv.iter().map(|c| c.as_ref().map_or(0.0, |c| c.scalar)).collect(),
            slope.iter().map(|c| c.as_ref().map_or(0.0, |c| c.scalar)).collect(),
        ),
    };
    let w = m.metric.warp();
    let lap = laplacian(m, f)?;
    let mut ua = vec![0.0; len];
    let mut umid = vec![0.0; len];
    let mut ub = vec![0.0; len];
    let mut usq = vec![0.0; len];
    let mut uprem = vec![0.0; len];
    for i in 1..len - 1 {
        let c = curv[i].as_ref().expect("interior curvature");
        let e = r[i] - lambda;
        ua[i] = e * r[i];
        umid[i] = c.ric_rr * f.d2()[i] + (n - 1.0) * c.ric_tan * f.d1()[i] * w.d1()[i] / w.values()[i];
        ub[i] = -0.5 * dr[i] * f.d1()[i];
        usq[i] = e * e;
        uprem[i] = (lap[i] / n - e).powi(2);
    }
    let qa = volume_integral(m, &ua)?;
    let qmid = volume_integral(m, &umid)?;
    let qb = volume_integral(m, &ub)?;
    let qsq = volume_integral(m, &usq)?;
    let qprem = volume_integral(m, &uprem)?;
    let tol = m.default_tol(Some(f));
    let soliton_link = IdentityReport::new("bochner_soliton_link", qa.value, qmid.value, qa.error + qmid.error, tol);
    let bianchi_link = IdentityReport::new("bochner_bianchi_link", qmid.value, qb.value, qmid.error + qb.error, tol);
    let chain = IdentityReport::new("bochner_chain", qa.value, qb.value, qa.error + qb.error, tol);
    let premise_defect = qprem.value.max(0.0).sqrt();
    let premise = IdentityReport::new("bochner_premise", premise_defect, 0.0, qprem.error.sqrt(), tol);
    let c = 0.5 * n * qsq.value;
    let pass = chain.pass && premise.pass;
    Ok(BochnerChain {
        a: qa.value,
        a_mid: qmid.value,
        b: qb.value,
        square: qsq.value,
        c,
        rigidity_gap: qsq.value - c,
        premise_defect,
        soliton_link,
        bianchi_link,
        chain,
        premise,
        pass,
    })
}

/// Contracted Bianchi identity `2 div(Ric) = dR`, radial component:
/// `div(Ric)_r = Ric_rr' + (n-1)(b'/b)(Ric_rr - ric_tan)`. Reports the sup
/// of `|2 div(Ric)_r - R'|` over the evaluated nodes. With analytic or
/// tabulated warps the slopes come from the closed forms and the defect is
/// at rounding level; with a sampled warp `Ric_rr'` and `R'` are finite
/// differences of the curvature columns, so the defect shrinks with the
/// stencil order. In that case nodes near the ends of the range are left
/// out of the sup, since one-sided stencils there are a full order less
/// accurate once differentiated again.
pub fn check_schur(m: &WarpedMetric) -> Result<IdentityReport> {
    let n = m.n() as f64;
    let w = m.warp();
    let range = m.evaluation_range();
    let curv = range.clone().map(|i| geometry::curvature_at_node(m, i)).collect::<Result<Vec<_>>>()?;
    let (ric_slope, scalar_slope) = match w.stencil_order() {
        Some(order) => {
            let x = &w.nodes()[range.clone()];
            let ric: Vec<f64> = curv.iter().map(|c| c.ric_rr).collect();
            let scalar: Vec<f64> = curv.iter().map(|c| c.scalar).collect();
            (stencil::differentiate(x, &ric, 1, order)?, stencil::differentiate(x, &scalar, 1, order)?)
        }
        None => {
            let slopes = range.clone().map(|i| geometry::curvature_slope_at_node(m, i)).collect::<Result<Vec<_>>>()?;
            (slopes.iter().map(|d| d.ric_rr).collect(), slopes.iter().map(|d| d.scalar).collect())
        }
    };
    let margin = w.stencil_order().map_or(0, |o| 2 * o.width(3));
    let len = range.len();
    let mut sup = 0.0f64;
    for (j, i) in range.enumerate() {
        if j < margin || j + margin >= len {
            continue;
        }
        let c = &curv[j];
        let div = ric_slope[j] + (n - 1.0) * w.d1()[i] / w.values()[i] * (c.ric_rr - c.ric_tan);
        sup = sup.max((2.0 * div - scalar_slope[j]).abs());
    }
    let tol = if w.is_analytic() { ANALYTIC_IDENTITY_TOL } else { SAMPLED_IDENTITY_TOL };
    Ok(IdentityReport::new("schur", sup, 0.0, 0.0, tol))
}

/// Kazdan–Warner quantities for `X = ∇f` with `f` a conformal potential.
#[derive(Debug, Clone, PartialEq)]
pub struct KazdanWarnerReport {
    pub k: usize,
    /// `I_1 = ∫ f' σ_k' dV`
    pub i1: f64,
    /// `I_2 = -1/(2(n-1)^2) ∫ Ric_rr f'^2 dV`
    pub i2: f64,
    /// `I_1 = 0`: holds for every conformal Killing field on a conformally flat
    /// compact manifold.
    pub vanishing: IdentityReport,
    /// `I_1 = I_2`: holds when `f` is a k-Yamabe potential.
    pub contraction: IdentityReport,
}

pub fn check_kazdan_warner_integral(m: &CompactRotMetric, f: &RadialProfile, k: usize) -> Result<KazdanWarnerReport> {
    m.check_profile(f)?;
    let n = m.n();
    if k == 0 || k > n {
        return Err(SolitonError::KOutOfRange { k, n });
    }
    let res = verify::conformal_residual(&m.metric, f)?;
    if !res.pass {
        return Err(SolitonError::input(format!(
            "potential is not conformal (residual {:e} above {:e})",
            res.sup(),
            res.tolerance
        )));
    }
    let len = m.len();
    let curv = m.curvature()?;
    let slope = m.curvature_slope()?;
    let mut u1 = vec![0.0; len];
    let mut u2 = vec![0.0; len];
    let nf = n as f64;
    for i in 1..len - 1 {
        let fp = f.d1()[i];
        u1[i] = fp * slope[i].as_ref().expect("interior slope").sigma[k - 1];
        u2[i] = -curv[i].as_ref().expect("interior curvature").ric_rr * fp * fp / (2.0 * (nf - 1.0).powi(2));
    }
    let q1 = volume_integral(m, &u1)?;
    let q2 = volume_integral(m, &u2)?;
    let tol = m.default_tol(Some(f));
    Ok(KazdanWarnerReport {
        k,
        i1: q1.value,
        i2: q2.value,
        vanishing: IdentityReport::new("kazdan_warner_vanishing", q1.value, 0.0, q1.error, tol),
        contraction: IdentityReport::new("kazdan_warner_contraction", q1.value, q2.value, q1.error + q2.error, tol),
    })
}

/// `∫ Δf dV`, zero by the divergence theorem when `f'` vanishes at both poles.
pub fn check_divergence(m: &CompactRotMetric, f: &RadialProfile) -> Result<IdentityReport> {
    let lap = laplacian(m, f)?;
    let q = volume_integral(m, &lap)?;
    Ok(IdentityReport::new("divergence", q.value, 0.0, q.error, m.default_tol(Some(f))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FiberDescriptor;
    use crate::profile::{Elementary, RadialGrid};

    fn sphere(n: usize, nodes: usize) -> CompactRotMetric {
        let g = RadialGrid::uniform(0.0, PI, nodes).unwrap();
        let w = RadialProfile::elementary(g, &Elementary::sin()).unwrap();
        CompactRotMetric::new(WarpedMetric::new(n, w, FiberDescriptor::round_sphere(n).unwrap()).unwrap()).unwrap()
    }

    fn profile(m: &CompactRotMetric, e: &Elementary) -> RadialProfile {
        RadialProfile::elementary(m.metric().warp().grid().clone(), e).unwrap()
    }

    #[test]
    fn gamma_and_sphere_areas() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(8), 6.0);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert!((omega(2) - 2.0 * PI).abs() < 1e-14);
        assert!((omega(3) - 4.0 * PI).abs() < 1e-14);
        assert!((omega(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn sphere_volumes() {
        let m = sphere(3, 1025);
        assert!((volume(&m).value - 2.0 * PI * PI).abs() < 1e-10);
        let m = sphere(4, 1025);
        assert!((volume(&m).value - 8.0 * PI * PI / 3.0).abs() < 1e-10);
        let zero = volume_integral(&m, &vec![0.0; m.len()]).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = RadialGrid::uniform(0.0, PI, 1024).unwrap();
        let w = RadialProfile::elementary(g, &Elementary::sin()).unwrap();
        assert!(CompactRotMetric::new(WarpedMetric::new(3, w, FiberDescriptor::round_sphere(3).unwrap()).unwrap()).is_err());
        let g = RadialGrid::uniform(0.0, 5.0, 1025).unwrap();
        let w = RadialProfile::elementary(g, &Elementary::linear(1.0, 0.0)).unwrap();
        let e = CompactRotMetric::new(WarpedMetric::new(3, w, FiberDescriptor::round_sphere(3).unwrap()).unwrap());
        assert!(matches!(e, Err(SolitonError::WrongCase { .. })));
        let m = sphere(3, 65);
        assert!(volume_integral(&m, &[1.0; 10]).is_err());
    }

    #[test]
    fn lambda_mean_on_the_sphere() {
        let m = sphere(3, 1025);
        let f = profile(&m, &Elementary::constant(1.0));
        let r = check_lambda_mean(&m, &f, 6.0).unwrap();
        assert!(r.pass && r.defect < 1e-10, "{r:?}");
        let r = check_lambda_mean(&m, &f, 0.0).unwrap();
        assert!(!r.pass && (r.defect - 6.0).abs() < 1e-10);
    }

    #[test]
    fn bochner_chain_examples() {
        let m = sphere(3, 1025);
        let f = profile(&m, &Elementary::constant(0.0));
        let ch = check_bochner_chain(&m, &f, 6.0).unwrap();
        assert!(ch.pass);
        assert!(ch.a.abs() < 1e-10 && ch.b.abs() < 1e-10 && ch.rigidity_gap.abs() < 1e-10);

        let f = profile(&m, &Elementary::cos().scaled(-1.0));
        let ch = check_bochner_chain(&m, &f, 6.0).unwrap();
        assert!(!ch.pass && !ch.premise.pass);
        assert!(ch.bianchi_link.pass);
    }

    #[test]
    fn divergence_theorem() {
        let m = sphere(4, 1025);
        for e in [Elementary::cos().scaled(-1.0), Elementary::term(crate::profile::analytic::Basis::Cos, 1.0, 2.0, 0.0)] {
            let r = check_divergence(&m, &profile(&m, &e)).unwrap();
            assert!(r.pass && r.lhs.abs() < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn schur_on_sphere_and_cone() {
        assert!(check_schur(sphere(3, 257).metric()).unwrap().lhs < 1e-10);
        let g = RadialGrid::uniform(0.0, 3.0, 257).unwrap();
        let w = RadialProfile::elementary(g, &Elementary::linear(1.0, 0.0)).unwrap();
        let m = WarpedMetric::new(4, w, FiberDescriptor::round_sphere(4).unwrap()).unwrap();
        assert_eq!(check_schur(&m).unwrap().lhs, 0.0);
    }

    #[test]
    fn kazdan_warner_on_sphere() {
        let m = sphere(3, 1025);
        let f = profile(&m, &Elementary::cos().scaled(-1.0));
        for k in 1..=3 {
            let kw = check_kazdan_warner_integral(&m, &f, k).unwrap();
            assert!(kw.vanishing.pass && kw.i1.abs() < 1e-10);
            assert!(!kw.contraction.pass && kw.i2 < 0.0);
        }
        let f = profile(&m, &Elementary::constant(2.0));
        let kw = check_kazdan_warner_integral(&m, &f, 2).unwrap();
        assert_eq!((kw.i1, kw.i2), (0.0, 0.0));
        let g = profile(&m, &Elementary::linear(1.0, 0.0));
        assert!(check_kazdan_warner_integral(&m, &g, 1).is_err());
    }

    #[test]
    fn kazdan_warner_on_deformed_sphere() {
        let wf = |t: f64| crate::profile::Jet::new(1.0 + 0.2 * t.cos(), -0.2 * t.sin(), -0.2 * t.cos(), 0.2 * t.sin());
        let (metric, f) = charts::conformal_pair_from_sphere_factor(4, wf, 2049).unwrap();
        let m = CompactRotMetric::new(metric).unwrap();
        for k in 1..=4 {
            let kw = check_kazdan_warner_integral(&m, &f, k).unwrap();
            assert!(kw.vanishing.pass, "k={k}: {:?}", kw.vanishing);
        }
    }
}
