//! Residual checks for soliton structures `∇²f = φ g` on warped products,
//! the divergence identity `(n-1) ∇φ = -Ric(∇f, ·)`, and case classification
//! by critical points of the potential.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SolitonError};
use crate::geometry::{self, WarpedMetric};
use crate::profile::{CriticalPointReport, RadialProfile, DEFAULT_CRITICAL_TOL};

/// Residual tolerance for pairs with analytic derivatives.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
/// Residual tolerance for tabulated pairs (ODE output, CSV input).
pub const TABULATED_RESIDUAL_TOL: f64 = 1e-6;
/// Ricci eigenvalues above `-RICCI_NONNEG_TOL` count as nonnegative.
pub const RICCI_NONNEG_TOL: f64 = 1e-8;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The structure a pair `(g, f)` is claimed to carry.
#[derive(Clone)]
pub enum SolitonSpec {
    /// `∇²f = φ g` with `φ` given on the grid.
    Conformal(RadialProfile),
    /// `∇²f = (R - λ) g`.
    Yamabe { lambda: f64 },
    /// `∇²f = 2(n-1)(σ_k - λ) g`.
    KYamabe { k: usize, lambda: f64 },
    /// `∇²f = ψ(σ_k) g` with `ψ` strictly monotone (declared by the caller).
    GeneralizedSigmaK { psi: ScalarFn, k: usize },
}

impl fmt::Debug for SolitonSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolitonSpec::Conformal(_) => f.write_str("Conformal(φ)"),
            SolitonSpec::Yamabe { lambda } => write!(f, "Yamabe {{ lambda: {lambda} }}"),
            SolitonSpec::KYamabe { k, lambda } => write!(f, "KYamabe {{ k: {k}, lambda: {lambda} }}"),
            SolitonSpec::GeneralizedSigmaK { k, .. } => write!(f, "GeneralizedSigmaK {{ k: {k} }}"),
        }
    }
}

impl SolitonSpec {
    fn k(&self) -> Option<usize> {
        match self {
            SolitonSpec::KYamabe { k, .. } | SolitonSpec::GeneralizedSigmaK { k, .. } => Some(*k),
            _ => None,
        }
    }
}

/// Pointwise residuals of the radial (`dr⊗dr`) and tangential channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub r: Vec<f64>,
    pub radial: Vec<f64>,
    pub tangential: Vec<f64>,
    pub radial_sup: f64,
    pub tangential_sup: f64,
    pub radial_l2: f64,
    pub tangential_l2: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    fn new(r: Vec<f64>, radial: Vec<f64>, tangential: Vec<f64>, tolerance: f64) -> Self {
        let sup = |v: &[f64]| v.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        let l2 = |v: &[f64]| {
            let s: f64 = r.windows(2).zip(v.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] * y[0] + y[1] * y[1])).sum();
            s.sqrt()
        };
        let (radial_sup, tangential_sup) = (sup(&radial), sup(&tangential));
        let (radial_l2, tangential_l2) = (l2(&radial), l2(&tangential));
        let pass = radial_sup < tolerance && tangential_sup < tolerance;
        Self { r, radial, tangential, radial_sup, tangential_sup, radial_l2, tangential_l2, tolerance, pass }
    }

    pub fn sup(&self) -> f64 {
        self.radial_sup.max(self.tangential_sup)
    }
}

/// Default tolerance for a pair: `1e-8` when both are analytic, the
/// stencil-order bound `10 h^p * scale` for finite differences and
/// [`TABULATED_RESIDUAL_TOL`] otherwise.
pub fn default_tolerance(m: &WarpedMetric, f: &RadialProfile) -> f64 {
    if m.warp().is_analytic() && f.is_analytic() {
        return DEFAULT_RESIDUAL_TOL;
    }
    let order = m.warp().stencil_order().or(f.stencil_order());
    match order {
        Some(o) => {
            let h = m.warp().grid().max_step();
            let scale = f.d2().iter().fold(1.0f64, |a, v| a.max(v.abs()));
            10.0 * h.powi(o.as_usize() as i32) * scale
        }
        None => TABULATED_RESIDUAL_TOL,
    }
}

fn check_shared_grid(m: &WarpedMetric, p: &RadialProfile) -> Result<()> {
    let a = m.warp().nodes();
    let b = p.nodes();
    let same = a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    if same {
        Ok(())
    } else {
        Err(SolitonError::input("metric and profile must share a grid"))
    }
}

fn residuals<T>(m: &WarpedMetric, f: &RadialProfile, tol: Option<f64>, target: T) -> Result<ResidualReport>
where
    T: Fn(usize, &geometry::CurvatureReport, f64) -> f64,
{
    check_shared_grid(m, f)?;
    let n = m.n() as f64;
    let range = m.evaluation_range();
    let mut r = Vec::with_capacity(range.len());
    let mut radial = Vec::with_capacity(range.len());
    let mut tangential = Vec::with_capacity(range.len());
    for i in range {
        let curv = geometry::curvature_at_node(m, i)?;
        let w = m.warp().jet_at_node(i);
        let fj = f.jet_at_node(i);
        let h = geometry::hessian_from_jets(&w, &fj);
        let laplacian = h.radial + (n - 1.0) * h.tangential;
        let phi = target(i, &curv, laplacian / n);
        r.push(curv.r);
        radial.push((h.radial - phi).abs());
        tangential.push((h.tangential - phi).abs());
    }
    Ok(ResidualReport::new(r, radial, tangential, tol.unwrap_or_else(|| default_tolerance(m, f))))
}

/// Residual of `∇²f = (Δf / n) g`.
pub fn conformal_residual(m: &WarpedMetric, f: &RadialProfile) -> Result<ResidualReport> {
    conformal_residual_with_tol(m, f, None)
}

pub fn conformal_residual_with_tol(m: &WarpedMetric, f: &RadialProfile, tol: Option<f64>) -> Result<ResidualReport> {
    residuals(m, f, tol, |_, _, mean_laplacian| mean_laplacian)
}

/// Residual of `∇²f = φ* g` for the target `φ*` named by `spec`.
pub fn soliton_residual(m: &WarpedMetric, f: &RadialProfile, spec: &SolitonSpec) -> Result<ResidualReport> {
    soliton_residual_with_tol(m, f, spec, None)
}

pub fn soliton_residual_with_tol(
    m: &WarpedMetric,
    f: &RadialProfile,
    spec: &SolitonSpec,
    tol: Option<f64>,
) -> Result<ResidualReport> {
    if let Some(k) = spec.k() {
        if k == 0 || k > m.n() {
            return Err(SolitonError::KOutOfRange { k, n: m.n() });
        }
    }
    if let SolitonSpec::Conformal(phi) = spec {
        check_shared_grid(m, phi)?;
    }
    let n = m.n() as f64;
    residuals(m, f, tol, |i, curv, _| match spec {
        SolitonSpec::Conformal(phi) => phi.values()[i],
        SolitonSpec::Yamabe { lambda } => curv.scalar - lambda,
        SolitonSpec::KYamabe { k, lambda } => 2.0 * (n - 1.0) * (curv.sigma[k - 1] - lambda),
        SolitonSpec::GeneralizedSigmaK { psi, k } => psi(curv.sigma[k - 1]),
    })
}

/// `sup |(n-1) φ' + Ric_rr f'|`, the radial component of the divergence
/// identity satisfied by every conformal gradient soliton.
pub fn check_identity_eq2(m: &WarpedMetric, f: &RadialProfile, phi: &RadialProfile) -> Result<f64> {
    check_shared_grid(m, f)?;
    check_shared_grid(m, phi)?;
    let n = m.n() as f64;
    let mut sup = 0.0f64;
    for i in m.evaluation_range() {
        let curv = geometry::curvature_at_node(m, i)?;
        sup = sup.max(((n - 1.0) * phi.d1()[i] + curv.ric_rr * f.d1()[i]).abs());
    }
    Ok(sup)
}

/// `sup |2(n-1)^2 f' σ_k' + Ric_rr f'^2|`: the divergence identity for
/// `φ = 2(n-1)(σ_k - λ)` contracted with `∇f`.
pub fn check_kazdan_warner_pointwise(m: &WarpedMetric, f: &RadialProfile, k: usize) -> Result<f64> {
    check_shared_grid(m, f)?;
    if k == 0 || k > m.n() {
        return Err(SolitonError::KOutOfRange { k, n: m.n() });
    }
    let n = m.n() as f64;
    let mut sup = 0.0f64;
    for i in m.evaluation_range() {
        let curv = geometry::curvature_at_node(m, i)?;
        let slope = geometry::curvature_slope_at_node(m, i)?;
        let fp = f.d1()[i];
        let v = 2.0 * (n - 1.0).powi(2) * fp * slope.sigma[k - 1] + curv.ric_rr * fp * fp;
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolitonCase {
    /// No critical points: conformal to a product `I × N`.
    Case1,
    /// No critical points and `Ric ≥ 0`: isometric to `R × N`.
    Case1Prime,
    /// One critical point: conformal to a Euclidean ball.
    Case2,
    /// One critical point and `Ric ≥ 0`: conformal to `R^n`.
    Case2Prime,
    /// Two critical points: conformal to the round sphere.
    Case3,
    Invalid,
}

impl fmt::Display for SolitonCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolitonCase::Case1 => "Case1",
            SolitonCase::Case1Prime => "Case1Prime",
            SolitonCase::Case2 => "Case2",
            SolitonCase::Case2Prime => "Case2Prime",
            SolitonCase::Case3 => "Case3",
            SolitonCase::Invalid => "Invalid",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub case: SolitonCase,
    pub critical: CriticalPointReport,
    /// Smallest Ricci eigenvalue over the evaluated nodes.
    pub min_ricci: f64,
    pub ricci_nonnegative: bool,
    pub notes: Vec<String>,
}

pub fn classify(m: &WarpedMetric, f: &RadialProfile) -> Result<ClassificationResult> {
    check_shared_grid(m, f)?;
    let critical = f.find_critical_points(DEFAULT_CRITICAL_TOL);
    let mut min_ricci = f64::INFINITY;
    for i in m.evaluation_range() {
        min_ricci = min_ricci.min(geometry::curvature_at_node(m, i)?.min_ricci());
    }
    let ricci_nonnegative = min_ricci >= -RICCI_NONNEG_TOL;
    let mut notes = Vec::new();
    let case = match (critical.count(), ricci_nonnegative) {
        (0, true) => {
            notes.push("Ricci tensor has a zero eigenvalue (radial direction) at every point".to_owned());
            SolitonCase::Case1Prime
        }
        (0, false) => SolitonCase::Case1,
        (1, true) => SolitonCase::Case2Prime,
        (1, false) => SolitonCase::Case2,
        (2, _) => SolitonCase::Case3,
        (c, _) => {
            notes.push(format!("{c} critical points; a conformal gradient soliton has at most two"));
            SolitonCase::Invalid
        }
    };
    Ok(ClassificationResult { case, critical, min_ricci, ricci_nonnegative, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FiberDescriptor;
    use crate::profile::{Elementary, RadialGrid};
    use std::f64::consts::PI;

    fn pair(n: usize, w: &Elementary, f: &Elementary, fiber: FiberDescriptor, a: f64, b: f64) -> (WarpedMetric, RadialProfile) {
        let g = RadialGrid::uniform(a, b, 513).unwrap();
        let m = WarpedMetric::new(n, RadialProfile::elementary(g.clone(), w).unwrap(), fiber).unwrap();
        (m, RadialProfile::elementary(g, f).unwrap())
    }

    fn sphere(n: usize) -> (WarpedMetric, RadialProfile) {
        pair(n, &Elementary::sin(), &Elementary::cos().scaled(-1.0), FiberDescriptor::round_sphere(n).unwrap(), 0.0, PI)
    }

    #[test]
    fn conformal_residual_examples() {
        let (m, f) = pair(3, &Elementary::constant(1.0), &Elementary::linear(1.0, 0.0), FiberDescriptor::flat(3).unwrap(), -3.0, 3.0);
        let rep = conformal_residual(&m, &f).unwrap();
        assert_eq!(rep.sup(), 0.0);
        assert!(rep.pass);

        let (m, f) = sphere(4);
        assert!(conformal_residual(&m, &f).unwrap().sup() < 1e-14);

        // w = sin, f = r: f'' = 0, tangential = cos/sin; at r = π/4 the
        // tangential channel is |1 - 3/4| = 1/4 for n = 4.
        let (m, f) = pair(4, &Elementary::sin(), &Elementary::linear(1.0, 0.0), FiberDescriptor::round_sphere(4).unwrap(), 0.0, PI);
        let rep = conformal_residual(&m, &f).unwrap();
        assert!(!rep.pass);
        let i = rep.r.iter().position(|&r| (r - PI / 4.0).abs() < 1e-12).unwrap();
        assert!((rep.tangential[i] - 0.25).abs() < 1e-14);
        assert!((rep.radial[i] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn yamabe_residual_examples() {
        for n in 3..6 {
            let (m, f) = pair(n, &Elementary::linear(1.0, 0.0), &Elementary::quadratic(0.5), FiberDescriptor::round_sphere(n).unwrap(), 0.0, 8.0);
            let rep = soliton_residual(&m, &f, &SolitonSpec::Yamabe { lambda: -1.0 }).unwrap();
            assert!(rep.sup() < 1e-14, "n={n}: {}", rep.sup());
        }
        let (m, f) = pair(3, &Elementary::constant(1.0), &Elementary::quadratic(0.5), FiberDescriptor::flat(3).unwrap(), -2.0, 2.0);
        let rep = soliton_residual(&m, &f, &SolitonSpec::Yamabe { lambda: -1.0 }).unwrap();
        assert_eq!(rep.radial_sup, 0.0);
        assert_eq!(rep.tangential_sup, 1.0);
        assert!(!rep.pass);

        let (m, f) = sphere(3);
        let phi = RadialProfile::elementary(m.warp().grid().clone(), &Elementary::cos()).unwrap();
        assert!(soliton_residual(&m, &f, &SolitonSpec::Conformal(phi)).unwrap().sup() < 1e-15);
    }

    #[test]
    fn k_out_of_range() {
        let (m, f) = sphere(3);
        let err = soliton_residual(&m, &f, &SolitonSpec::KYamabe { k: 4, lambda: 0.0 });
        assert!(matches!(err, Err(SolitonError::KOutOfRange { k: 4, n: 3 })));
    }

    #[test]
    fn eq2_examples() {
        let (m, f) = sphere(3);
        let g = m.warp().grid().clone();
        let phi = RadialProfile::elementary(g.clone(), &Elementary::cos()).unwrap();
        assert!(check_identity_eq2(&m, &f, &phi).unwrap() < 1e-14);

        let bad = RadialProfile::elementary(g, &Elementary::cos().plus(Elementary::linear(0.1, 0.0))).unwrap();
        assert!(check_identity_eq2(&m, &f, &bad).unwrap() >= 0.2 * (1.0 - 1e-12));

        let (m, f) = pair(3, &Elementary::constant(1.0), &Elementary::linear(1.0, 0.0), FiberDescriptor::flat(3).unwrap(), -3.0, 3.0);
        let zero = RadialProfile::elementary(m.warp().grid().clone(), &Elementary::constant(0.0)).unwrap();
        assert_eq!(check_identity_eq2(&m, &f, &zero).unwrap(), 0.0);
    }

    #[test]
    fn kazdan_warner_pointwise_examples() {
        // the sphere's f is conformal but not k-Yamabe: defect (n-1) sin^2 r peaks at n-1
        let (m, f) = sphere(4);
        for k in 1..=4 {
            let d = check_kazdan_warner_pointwise(&m, &f, k).unwrap();
            assert!((d - 3.0).abs() < 1e-4, "k={k}: {d}");
        }
        let (m, f) = pair(3, &Elementary::linear(1.0, 0.0), &Elementary::quadratic(0.5), FiberDescriptor::round_sphere(3).unwrap(), 0.0, 8.0);
        assert_eq!(check_kazdan_warner_pointwise(&m, &f, 1).unwrap(), 0.0);
    }

    #[test]
    fn classification_table() {
        let (m, f) = pair(3, &Elementary::constant(1.0), &Elementary::linear(1.0, 0.0), FiberDescriptor::flat(3).unwrap(), -5.0, 5.0);
        let c = classify(&m, &f).unwrap();
        assert_eq!(c.case, SolitonCase::Case1Prime);
        assert!(c.min_ricci.abs() <= RICCI_NONNEG_TOL);

        let (m, f) = pair(3, &Elementary::cosh(), &Elementary::sinh(), FiberDescriptor::flat(3).unwrap(), -3.0, 3.0);
        assert_eq!(classify(&m, &f).unwrap().case, SolitonCase::Case1);

        let (m, f) = pair(3, &Elementary::linear(1.0, 0.0), &Elementary::quadratic(0.5), FiberDescriptor::round_sphere(3).unwrap(), 0.0, 10.0);
        assert_eq!(classify(&m, &f).unwrap().case, SolitonCase::Case2Prime);

        let (m, f) = sphere(3);
        assert_eq!(classify(&m, &f).unwrap().case, SolitonCase::Case3);
    }
}
