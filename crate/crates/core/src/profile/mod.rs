//! Radial scalar functions (potentials and warps) with derivatives up to
//! third order, critical-point detection and normalization at a regular point.

pub mod analytic;
mod critical;
pub mod grid;
pub mod stencil;

use std::fmt;
use std::sync::Arc;

pub use analytic::{Basis, Elementary, Term};
pub use critical::{CriticalPoint, CriticalPointReport, DEFAULT_CRITICAL_TOL};
pub use grid::{RadialGrid, Spacing, MIN_NODES};
pub use stencil::StencilOrder;

use crate::error::{Result, SolitonError};

/// Relative threshold below which `|f'|` counts as vanishing when checking
/// that a point is regular.
pub const REGULARITY_THRESHOLD: f64 = 1e-8;

/// Value and first three derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub const fn new(value: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Self { value, d1, d2, d3 }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()
    }

    pub fn affine(self, a: f64, b: f64) -> Self {
        Jet::new(a * self.value + b, a * self.d1, a * self.d2, a * self.d3)
    }
}

/// Analytic callback returning the full jet at `r`.
pub type JetFn = Arc<dyn Fn(f64) -> Jet + Send + Sync>;

/// Where the derivative arrays of a profile came from.
#[derive(Clone)]
pub enum DerivativeSource {
    Analytic(JetFn),
    FiniteDifference(StencilOrder),
    /// Derivatives supplied alongside the values (CSV files, ODE output).
    Tabulated,
}

impl fmt::Debug for DerivativeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivativeSource::Analytic(_) => f.write_str("Analytic"),
            DerivativeSource::FiniteDifference(o) => write!(f, "FiniteDifference({o:?})"),
            DerivativeSource::Tabulated => f.write_str("Tabulated"),
        }
    }
}

/// Input accepted by [`build_profile`].
pub enum ProfileInput {
    Analytic(JetFn),
    Sampled { values: Vec<f64>, order: StencilOrder },
    Tabulated { values: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>, d3: Vec<f64> },
}

/// A radial function sampled on a grid with its first three derivatives.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
    source: DerivativeSource,
}

pub fn build_profile(input: ProfileInput, grid: RadialGrid) -> Result<RadialProfile> {
    match input {
        ProfileInput::Analytic(f) => {
            let jets: Vec<Jet> = grid.nodes().iter().map(|&r| f(r)).collect();
            if let Some(i) = jets.iter().position(|j| !j.is_finite()) {
                return Err(SolitonError::NonFinite { index: i, r: grid.nodes()[i] });
            }
            Ok(RadialProfile {
                values: jets.iter().map(|j| j.value).collect(),
                d1: jets.iter().map(|j| j.d1).collect(),
                d2: jets.iter().map(|j| j.d2).collect(),
                d3: jets.iter().map(|j| j.d3).collect(),
                grid,
                source: DerivativeSource::Analytic(f),
            })
        }
        ProfileInput::Sampled { values, order } => {
            check_samples(&grid, &values)?;
            let x = grid.nodes();
            let d1 = stencil::differentiate(x, &values, 1, order)?;
            let d2 = stencil::differentiate(x, &values, 2, order)?;
            let d3 = stencil::differentiate(x, &values, 3, order)?;
            Ok(RadialProfile { grid, values, d1, d2, d3, source: DerivativeSource::FiniteDifference(order) })
        }
        ProfileInput::Tabulated { values, d1, d2, d3 } => {
            for arr in [&values, &d1, &d2, &d3] {
                check_samples(&grid, arr)?;
            }
            Ok(RadialProfile { grid, values, d1, d2, d3, source: DerivativeSource::Tabulated })
        }
    }
}

fn check_samples(grid: &RadialGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(SolitonError::input(format!(
            "{} samples for a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SolitonError::NonFinite { index: i, r: grid.nodes()[i] });
    }
    Ok(())
}

impl RadialProfile {
    pub fn analytic(grid: RadialGrid, f: JetFn) -> Result<Self> {
        build_profile(ProfileInput::Analytic(f), grid)
    }

    pub fn elementary(grid: RadialGrid, f: &Elementary) -> Result<Self> {
        build_profile(ProfileInput::Analytic(f.jet_fn()), grid)
    }

    pub fn sampled(grid: RadialGrid, values: Vec<f64>, order: StencilOrder) -> Result<Self> {
        build_profile(ProfileInput::Sampled { values, order }, grid)
    }

    pub fn tabulated(grid: RadialGrid, values: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>, d3: Vec<f64>) -> Result<Self> {
        build_profile(ProfileInput::Tabulated { values, d1, d2, d3 }, grid)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    pub fn d3(&self) -> &[f64] {
        &self.d3
    }

    pub fn source(&self) -> &DerivativeSource {
        &self.source
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.source, DerivativeSource::Analytic(_))
    }

    /// Stencil order of finite-difference profiles, if any.
    pub fn stencil_order(&self) -> Option<StencilOrder> {
        match self.source {
            DerivativeSource::FiniteDifference(o) => Some(o),
            _ => None,
        }
    }

    pub fn jet_at_node(&self, i: usize) -> Jet {
        Jet::new(self.values[i], self.d1[i], self.d2[i], self.d3[i])
    }

    /// Jet at an arbitrary radius. Analytic profiles call their callback
    /// (valid beyond the grid); sampled ones interpolate each derivative
    /// array with a local degree-5 polynomial.
    pub fn eval(&self, r: f64) -> Jet {
        match &self.source {
            DerivativeSource::Analytic(f) => f(r),
            _ => {
                let x = self.grid.nodes();
                Jet::new(
                    stencil::interpolate(x, &self.values, r, 6),
                    stencil::interpolate(x, &self.d1, r, 6),
                    stencil::interpolate(x, &self.d2, r, 6),
                    stencil::interpolate(x, &self.d3, r, 6),
                )
            }
        }
    }

    pub fn max_abs_d1(&self) -> f64 {
        self.d1.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The profile `a * f + b`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let source = match &self.source {
            DerivativeSource::Analytic(f) => {
                let f = Arc::clone(f);
                DerivativeSource::Analytic(Arc::new(move |r| f(r).affine(a, b)))
            }
            other => other.clone(),
        };
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v + b).collect(),
            d1: self.d1.iter().map(|v| a * v).collect(),
            d2: self.d2.iter().map(|v| a * v).collect(),
            d3: self.d3.iter().map(|v| a * v).collect(),
            source,
        }
    }

    /// Rescales `f` so that `f'(r0) = 1`.
    pub fn normalize_at_regular_point(&self, r0: f64) -> Result<Self> {
        if !self.grid.contains(r0) {
            return Err(SolitonError::input(format!("r0 = {r0} lies outside the grid")));
        }
        let slope = self.eval(r0).d1;
        if !(slope.abs() > REGULARITY_THRESHOLD * self.max_abs_d1()) || slope == 0.0 {
            return Err(SolitonError::CriticalPoint { r: r0, slope });
        }
        let source = match &self.source {
            DerivativeSource::Analytic(f) => {
                let f = Arc::clone(f);
                DerivativeSource::Analytic(Arc::new(move |r| {
                    let j = f(r);
                    Jet::new(j.value / slope, j.d1 / slope, j.d2 / slope, j.d3 / slope)
                }))
            }
            other => other.clone(),
        };
        let div = |v: &Vec<f64>| v.iter().map(|x| x / slope).collect::<Vec<_>>();
        Ok(Self {
            grid: self.grid.clone(),
            values: div(&self.values),
            d1: div(&self.d1),
            d2: div(&self.d2),
            d3: div(&self.d3),
            source,
        })
    }

    pub fn find_critical_points(&self, tol: f64) -> CriticalPointReport {
        critical::find_critical_points(self, tol)
    }

    /// Maximum deviation, over interior nodes, between a finite-difference
    /// reconstruction of `f'` (from the values alone) and the stored `f'`.
    pub fn fd_cross_check(&self, order: StencilOrder) -> Result<f64> {
        let fd = stencil::differentiate(self.grid.nodes(), &self.values, 1, order)?;
        let margin = order.width(1) / 2;
        let n = self.len();
        Ok((margin..n - margin).map(|i| (fd[i] - self.d1[i]).abs()).fold(0.0, f64::max))
    }

    /// Samples of the same function on a different grid; analytic profiles
    /// are re-evaluated exactly, others interpolated.
    pub fn resample(&self, grid: RadialGrid) -> Result<Self> {
        match &self.source {
            DerivativeSource::Analytic(f) => Self::analytic(grid, Arc::clone(f)),
            _ => {
                let jets: Vec<Jet> = grid.nodes().iter().map(|&r| self.eval(r)).collect();
                Self::tabulated(
                    grid,
                    jets.iter().map(|j| j.value).collect(),
                    jets.iter().map(|j| j.d1).collect(),
                    jets.iter().map(|j| j.d2).collect(),
                    jets.iter().map(|j| j.d3).collect(),
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_profile_has_trivial_derivatives() {
        let g = RadialGrid::uniform(-5.0, 5.0, 256).unwrap();
        let p = RadialProfile::elementary(g, &Elementary::linear(1.0, 0.0)).unwrap();
        assert!(p.d1().iter().all(|&v| v == 1.0));
        assert!(p.d2().iter().all(|&v| v == 0.0));
        assert!(p.d3().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fourth_order_fd_of_minus_cos() {
        // max |f' - sin r| <= C h^4, with C frozen from the stencil's error term
        // (|f^(5)| <= 1, 5-point weight constant 1/30) plus boundary slack.
        let mut prev = f64::NAN;
        for nodes in [64, 128, 256] {
            let g = RadialGrid::uniform(0.1, PI - 0.1, nodes).unwrap();
            let h = g.max_step();
            let v: Vec<f64> = g.nodes().iter().map(|r| -r.cos()).collect();
            let p = RadialProfile::sampled(g.clone(), v, StencilOrder::Four).unwrap();
            let err = g.nodes().iter().zip(p.d1()).map(|(r, d)| (d - r.sin()).abs()).fold(0.0, f64::max);
            assert!(err <= 1.0 * h.powi(4), "nodes {nodes}: {err:e} vs h^4 {:e}", h.powi(4));
            if prev.is_finite() {
                let order = (prev / err).log2();
                assert!((order - 4.0).abs() < 0.5, "observed order {order}");
            }
            prev = err;
        }
    }

    #[test]
    fn second_order_fd_of_cube() {
        let g = RadialGrid::uniform(0.0, 2.0, 201).unwrap();
        let h = g.max_step();
        let v: Vec<f64> = g.nodes().iter().map(|r| r.powi(3)).collect();
        let p = RadialProfile::sampled(g.clone(), v, StencilOrder::Two).unwrap();
        let i = g.nodes().iter().position(|&r| (r - 1.0).abs() < 1e-12).unwrap();
        assert!((p.d2()[i] - 6.0).abs() < 10.0 * h * h);
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let g = RadialGrid::uniform(0.0, 1.0, 32).unwrap();
        let mut v = vec![1.0; 32];
        v[7] = f64::NAN;
        assert!(matches!(
            RadialProfile::sampled(g, v, StencilOrder::Four),
            Err(SolitonError::NonFinite { index: 7, .. })
        ));
    }

    #[test]
    fn normalization_examples() {
        let g = RadialGrid::uniform(-2.0, 2.0, 64).unwrap();
        let p = RadialProfile::elementary(g.clone(), &Elementary::linear(2.0, 0.0)).unwrap();
        let n = p.normalize_at_regular_point(0.0).unwrap();
        for (r, v) in g.nodes().iter().zip(n.values()) {
            assert!((v - r).abs() < 1e-15);
        }

        let g = RadialGrid::uniform(0.0, PI, 64).unwrap();
        let f = Elementary::cos().scaled(-3.0);
        let p = RadialProfile::elementary(g.clone(), &f).unwrap();
        let n = p.normalize_at_regular_point(PI / 2.0).unwrap();
        for (r, v) in g.nodes().iter().zip(n.values()) {
            assert!((v + r.cos()).abs() < 1e-15);
        }
        assert!((n.eval(1.1).value + 1.1f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn normalizing_at_a_critical_point_fails() {
        let g = RadialGrid::uniform(0.0, PI, 64).unwrap();
        let p = RadialProfile::elementary(g, &Elementary::cos().scaled(-1.0)).unwrap();
        assert!(matches!(p.normalize_at_regular_point(0.0), Err(SolitonError::CriticalPoint { .. })));
    }

    #[test]
    fn analytic_cross_check_is_small() {
        let g = RadialGrid::uniform(0.0, 3.0, 128).unwrap();
        let p = RadialProfile::elementary(g, &Elementary::sinh()).unwrap();
        assert!(p.fd_cross_check(StencilOrder::Four).unwrap() < 1e-7);
    }
}
