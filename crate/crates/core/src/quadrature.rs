//! Adaptive Gauss–Kronrod quadrature and composite rules on sampled data.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, SolitonError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// One 15-point Kronrod panel with the embedded 7-point Gauss estimate.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> QuadResult {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    QuadResult { value: kronrod * h, error: ((kronrod - gauss) * h).abs() }
}

struct Panel {
    a: f64,
    b: f64,
    r: QuadResult,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.r.error == other.r.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.r.error.total_cmp(&other.r.error)
    }
}

/// Globally adaptive quadrature: the panel with the largest error estimate is
/// bisected until the summed estimate meets `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let first = gauss_kronrod_15(&f, a, b);
    if !first.value.is_finite() {
        return Err(SolitonError::Quadrature { a, b, estimate: first.error });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, r: first });
    let mut value = first.value;
    let mut error = first.error;
    for _ in 0..2000 {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(QuadResult { value, error });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // panel too narrow to split further
            heap.push(worst);
            break;
        }
        let left = gauss_kronrod_15(&f, worst.a, mid);
        let right = gauss_kronrod_15(&f, mid, worst.b);
        if !(left.value.is_finite() && right.value.is_finite()) {
            return Err(SolitonError::Quadrature { a, b, estimate: error });
        }
        value += left.value + right.value - worst.r.value;
        error += left.error + right.error - worst.r.error;
        heap.push(Panel { a: worst.a, b: mid, r: left });
        heap.push(Panel { a: mid, b: worst.b, r: right });
    }
    // recompute sums to shed accumulated cancellation
    let value: f64 = heap.iter().map(|p| p.r.value).sum();
    let error: f64 = heap.iter().map(|p| p.r.error).sum();
    if error <= 10.0 * abs_tol.max(rel_tol * value.abs()) {
        Ok(QuadResult { value, error })
    } else {
        Err(SolitonError::Quadrature { a, b, estimate: error })
    }
}

/// Composite Simpson rule on uniformly spaced samples (`y.len()` odd).
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    debug_assert!(n >= 3 && n % 2 == 1);
    let mut s = y[0] + y[n - 1];
    for (i, v) in y.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Simpson on `h` and on `2h` (every other sample); the Richardson difference
/// `|S_h - S_2h| / 15` estimates the error of `S_h`. Needs `y.len() ≡ 1 mod 4`.
pub fn simpson_with_estimate(y: &[f64], h: f64) -> QuadResult {
    let fine = simpson(y, h);
    let coarse: Vec<f64> = y.iter().step_by(2).copied().collect();
    let coarse = simpson(&coarse, 2.0 * h);
    QuadResult { value: fine, error: (fine - coarse).abs() / 15.0 }
}

/// Simpson on `h` improved by one Richardson step against `2h` (Boole's
/// rule); the reported error is the uncorrected estimate `|S_h - S_2h| / 15`.
pub fn simpson_extrapolated(y: &[f64], h: f64) -> QuadResult {
    let fine = simpson(y, h);
    let coarse: Vec<f64> = y.iter().step_by(2).copied().collect();
    let coarse = simpson(&coarse, 2.0 * h);
    QuadResult { value: fine + (fine - coarse) / 15.0, error: (fine - coarse).abs() / 15.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_for_degree_22() {
        let r = gauss_kronrod_15(&|x: f64| x.powi(22), -1.0, 1.0);
        assert!((r.value - 2.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, 1e-13, 1e-13).unwrap();
        assert!((r.value + 1.0).abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn adaptive_smooth() {
        let r = integrate(|x: f64| x.exp() * x.cos(), 0.0, 3.0, 1e-14, 1e-14).unwrap();
        let exact = |x: f64| 0.5 * x.exp() * (x.cos() + x.sin());
        assert!((r.value - (exact(3.0) - exact(0.0))).abs() < 1e-12);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let h = 0.25;
        let y: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(3)).collect();
        let r = simpson_with_estimate(&y, h);
        // ∫_0^2 x^3 dx
        assert!((r.value - 4.0).abs() < 1e-12);
        assert!(r.error < 1e-13);
    }

    #[test]
    fn extrapolated_simpson_is_sixth_order() {
        let err = |n: usize| {
            let h = std::f64::consts::PI / (n - 1) as f64;
            let y: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin().powi(3)).collect();
            (simpson_extrapolated(&y, h).value - 4.0 / 3.0).abs()
        };
        let (a, b) = (err(65), err(129));
        assert!(a / b > 50.0, "{a} {b}");
    }
}
