//! Finite-difference weights on arbitrary nodes (Fornberg's recursion).

use crate::error::{Result, SolitonError};

/// Formal accuracy order of a finite-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StencilOrder {
    Two,
    #[default]
    Four,
    Six,
}

impl StencilOrder {
    pub fn as_usize(self) -> usize {
        match self {
            StencilOrder::Two => 2,
            StencilOrder::Four => 4,
            StencilOrder::Six => 6,
        }
    }

    pub fn from_usize(order: usize) -> Result<Self> {
        match order {
            2 => Ok(StencilOrder::Two),
            4 => Ok(StencilOrder::Four),
            6 => Ok(StencilOrder::Six),
            other => Err(SolitonError::input(format!("stencil order must be 2, 4 or 6, got {other}"))),
        }
    }

    /// Points used for derivative `m`: `m + order`, bumped to the next odd
    /// count so that interior stencils are symmetric.
    pub fn width(self, m: usize) -> usize {
        let w = m + self.as_usize();
        if w % 2 == 0 {
            w + 1
        } else {
            w
        }
    }
}


/// Weights `c[k][j]` such that `sum_j c[k][j] * f(x[j])` approximates the
/// `k`-th derivative of `f` at `z`, for `k = 0..=m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First index of a `width`-point window centred on node `i` and shifted to
/// stay inside `0..len`.
pub fn window_start(i: usize, width: usize, len: usize) -> usize {
    let half = width / 2;
    i.saturating_sub(half).min(len - width)
}

/// Derivative `m` of the sampled function at every node, using centred
/// stencils in the interior and one-sided stencils of the same width at the
/// boundaries.
pub fn differentiate(x: &[f64], y: &[f64], m: usize, order: StencilOrder) -> Result<Vec<f64>> {
    let width = order.width(m);
    if x.len() < width {
        return Err(SolitonError::GridTooCoarse { nodes: x.len(), needed: width });
    }
    let out = (0..x.len())
        .map(|i| {
            let s = window_start(i, width, x.len());
            let w = fornberg_weights(x[i], &x[s..s + width], m);
            w[m].iter().zip(&y[s..s + width]).map(|(c, v)| c * v).sum()
        })
        .collect();
    Ok(out)
}

/// Lagrange interpolation of `y` at `z` through the `points` nodes nearest `z`.
pub fn interpolate(x: &[f64], y: &[f64], z: f64, points: usize) -> f64 {
    let points = points.min(x.len());
    let cell = x.partition_point(|&v| v <= z).saturating_sub(1);
    let s = (cell + 1).saturating_sub(points / 2).min(x.len() - points);
    let w = fornberg_weights(z, &x[s..s + points], 0);
    w[0].iter().zip(&y[s..s + points]).map(|(c, v)| c * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_centered_weights() {
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let c = fornberg_weights(0.0, &x, 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for j in 0..5 {
            assert!((c[1][j] - d1[j]).abs() < 1e-14);
            assert!((c[2][j] - d2[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn widths() {
        assert_eq!(StencilOrder::Four.width(1), 5);
        assert_eq!(StencilOrder::Four.width(2), 7);
        assert_eq!(StencilOrder::Four.width(3), 7);
        assert_eq!(StencilOrder::Two.width(1), 3);
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let x: Vec<f64> = (0..20).map(|i| 0.1 * i as f64 + 0.013 * (i as f64).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v * v).collect();
        let d3 = differentiate(&x, &y, 3, StencilOrder::Four).unwrap();
        for v in d3 {
            assert!((v - 6.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn too_coarse_is_reported() {
        let x = [0.0, 1.0, 2.0];
        assert!(matches!(
            differentiate(&x, &x, 1, StencilOrder::Four),
            Err(SolitonError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn interpolation_reproduces_quintic() {
        let x: Vec<f64> = (0..16).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(5) - v).collect();
        let z = 1.37;
        assert!((interpolate(&x, &y, z, 6) - (z.powi(5) - z)).abs() < 1e-10);
    }
}
