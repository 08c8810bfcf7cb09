use super::RadialProfile;
use crate::roots;

/// Default refinement tolerance on `|f'|` at a critical point.
pub const DEFAULT_CRITICAL_TOL: f64 = 1e-10;

/// Relative size of `|f'|` at an end node below which the profile closes there.
pub const CLOSING_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    /// Node interval containing the root.
    pub bracket: (f64, f64),
    pub location: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriticalPointReport {
    /// Interior zeros of `f'`, sorted.
    pub roots: Vec<CriticalPoint>,
    /// `f' -> 0` at the lower end of the grid.
    pub closes_at_min: bool,
    /// `f' -> 0` at the upper end of the grid.
    pub closes_at_max: bool,
}

impl CriticalPointReport {
    /// Interior roots plus closing ends.
    pub fn count(&self) -> usize {
        self.roots.len() + self.closes_at_min as usize + self.closes_at_max as usize
    }

    /// At most two critical points is all a conformal gradient soliton allows.
    pub fn valid_as_soliton(&self) -> bool {
        self.count() <= 2
    }
}

pub(super) fn find_critical_points(p: &RadialProfile, tol: f64) -> CriticalPointReport {
    let x = p.nodes();
    let d1 = p.d1();
    let n = x.len();
    let scale = p.max_abs_d1();
    let closes_at_min = d1[0].abs() < CLOSING_THRESHOLD * scale;
    let closes_at_max = d1[n - 1].abs() < CLOSING_THRESHOLD * scale;

    let slope = |r: f64| {
        let j = p.eval(r);
        (j.d1, j.d2)
    };
    let mut roots = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        let (a, b) = (d1[i], d1[i + 1]);
        if i > 0 && a == 0.0 {
            roots.push(CriticalPoint { bracket: (x[i - 1], x[i + 1]), location: x[i] });
            i += 1;
            continue;
        }
        let at_closing_end = (i == 0 && closes_at_min) || (i + 1 == n - 1 && closes_at_max);
        if a * b < 0.0 && !at_closing_end {
            let xtol = 1e-15 * (1.0 + x[i].abs().max(x[i + 1].abs()));
            let location = roots::safeguarded_newton(slope, x[i], x[i + 1], xtol, tol)
                .unwrap_or(0.5 * (x[i] + x[i + 1]));
            roots.push(CriticalPoint { bracket: (x[i], x[i + 1]), location });
        }
        i += 1;
    }
    CriticalPointReport { roots, closes_at_min, closes_at_max }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Elementary, RadialGrid};
    use std::f64::consts::PI;

    #[test]
    fn constant_slope_has_no_critical_points() {
        let g = RadialGrid::uniform(-5.0, 5.0, 128).unwrap();
        let p = RadialProfile::elementary(g, &Elementary::linear(1.0, 0.0)).unwrap();
        let rep = p.find_critical_points(DEFAULT_CRITICAL_TOL);
        assert_eq!(rep.count(), 0);
    }

    #[test]
    fn cone_closes_at_lower_end() {
        let g = RadialGrid::uniform(0.0, 10.0, 128).unwrap();
        let p = RadialProfile::elementary(g, &Elementary::quadratic(0.5)).unwrap();
        let rep = p.find_critical_points(DEFAULT_CRITICAL_TOL);
        assert!(rep.closes_at_min && !rep.closes_at_max);
        assert!(rep.roots.is_empty());
    }

    #[test]
    fn sphere_closes_at_both_ends() {
        let g = RadialGrid::uniform(0.0, PI, 257).unwrap();
        let p = RadialProfile::elementary(g, &Elementary::cos().scaled(-1.0)).unwrap();
        let rep = p.find_critical_points(DEFAULT_CRITICAL_TOL);
        assert!(rep.closes_at_min && rep.closes_at_max);
        assert_eq!(rep.count(), 2);
        assert!(rep.valid_as_soliton());
    }

    #[test]
    fn interior_roots_are_refined_inside_brackets() {
        let g = RadialGrid::uniform(0.3, 10.0, 100).unwrap();
        // f' = sin r has zeros at pi, 2 pi, 3 pi
        let p = RadialProfile::elementary(g, &Elementary::cos().scaled(-1.0)).unwrap();
        let rep = p.find_critical_points(DEFAULT_CRITICAL_TOL);
        assert_eq!(rep.roots.len(), 3);
        for (k, cp) in rep.roots.iter().enumerate() {
            assert!(cp.bracket.0 <= cp.location && cp.location <= cp.bracket.1);
            assert!((cp.location - (k + 1) as f64 * PI).abs() < 1e-10);
        }
        assert!(!rep.valid_as_soliton());
    }
}
