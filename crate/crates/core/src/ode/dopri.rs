//! Dormand–Prince 5(4) with adaptive steps and the 4th-order dense output of
//! Hairer, Nørsett & Wanner.

use crate::error::SolitonError;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen from the tolerances when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    /// Steps shorter than `h_min_rel * (1 + |s|)` abort the integration.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_init: None, h_max: f64::INFINITY, h_min_rel: 1e-14, max_steps: 1_000_000 }
    }
}

/// Interpolant over one accepted step `[s0, s0 + h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub s0: f64,
    pub h: f64,
    coeff: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    pub fn start(&self) -> [f64; N] {
        self.coeff[0]
    }

    pub fn end(&self) -> [f64; N] {
        let mut y = self.coeff[0];
        for (v, d) in y.iter_mut().zip(&self.coeff[1]) {
            *v += d;
        }
        y
    }

    pub fn eval(&self, s: f64) -> [f64; N] {
        let th = (s - self.s0) / self.h;
        let th1 = 1.0 - th;
        let c = &self.coeff;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
        y
    }

    /// Component `i` crosses `level` inside the step; bisection on the interpolant.
    pub fn locate(&self, i: usize, level: f64) -> Option<f64> {
        let g = |s: f64| self.eval(s)[i] - level;
        let (mut a, mut b) = (self.s0, self.s1());
        let (ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            return Some(a);
        }
        if ga.signum() == gb.signum() {
            return None;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if g(m).signum() == ga.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    }
}

/// What the observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug)]
pub enum EndReason {
    Reached,
    Stopped,
    StepUnderflow { h: f64 },
    RhsFailed(SolitonError),
    MaxSteps,
}

#[derive(Debug)]
pub struct Outcome<const N: usize> {
    pub reason: EndReason,
    pub s: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], s: &Settings) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = s.atol + s.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate `y' = f(s, y)` from `s0` to `s_end`, calling `observe` after each
/// accepted step. A failing right-hand side shrinks the step; it aborts only
/// once the step underflows.
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    s0: f64,
    y0: [f64; N],
    s_end: f64,
    settings: &Settings,
    mut observe: O,
) -> Outcome<N>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], SolitonError>,
    O: FnMut(&DenseStep<N>) -> Control,
{
    let mut s = s0;
    let mut y = y0;
    let mut accepted = 0;
    let mut rejected = 0;
    let done = |reason, s, y, accepted, rejected| Outcome { reason, s, y, accepted, rejected };

    let mut k1 = match f(s, &y) {
        Ok(k) => k,
        Err(e) => return done(EndReason::RhsFailed(e), s, y, 0, 0),
    };
    let span = s_end - s0;
    let mut h = settings.h_init.unwrap_or_else(|| {
        let scale: f64 = y.iter().zip(&k1).map(|(v, d)| d.abs() / (settings.atol + settings.rtol * v.abs())).fold(0.0, f64::max);
        let guess = if scale > 0.0 { 0.01 * scale.recip() } else { 1e-3 * span };
        guess.min(1e-2 * span).max(1e-6 * span)
    });
    h = h.min(settings.h_max);
    let mut last_err: Option<SolitonError> = None;

    while s < s_end {
        if accepted >= settings.max_steps {
            return done(EndReason::MaxSteps, s, y, accepted, rejected);
        }
        let h_min = settings.h_min_rel * (1.0 + s.abs());
        if h < h_min {
            let reason = match last_err.take() {
                Some(e) => EndReason::RhsFailed(e),
                None => EndReason::StepUnderflow { h },
            };
            return done(reason, s, y, accepted, rejected);
        }
        let last = s + h >= s_end;
        if last {
            h = s_end - s;
        }
        let trial = (|| -> Result<_, SolitonError> {
            let k2 = f(s + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = f(s + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(s + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(s + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = f(s + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
            let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(s + h, &y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        let (_k2, k3, k4, k5, k6, k7, y1) = match trial {
            Ok(t) => t,
            Err(e) => {
                last_err = Some(e);
                rejected += 1;
                h *= 0.25;
                continue;
            }
        };
        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y1, settings);
        if !en.is_finite() {
            rejected += 1;
            h *= 0.25;
            continue;
        }
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        if en > 1.0 {
            rejected += 1;
            h *= fac.min(1.0);
            continue;
        }
        last_err = None;
        let mut coeff = [[0.0; N]; 5];
        for i in 0..N {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            coeff[0][i] = y[i];
            coeff[1][i] = ydiff;
            coeff[2][i] = bspl;
            coeff[3][i] = ydiff - h * k7[i] - bspl;
            coeff[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let step = DenseStep { s0: s, h, coeff };
        accepted += 1;
        s = if last { s_end } else { s + h };
        y = y1;
        k1 = k7;
        if observe(&step) == Control::Stop {
            return done(EndReason::Stopped, s, y, accepted, rejected);
        }
        h = (h * fac).min(settings.h_max);
    }
    done(EndReason::Reached, s, y, accepted, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(tol: f64) -> (f64, Vec<DenseStep<2>>) {
        let settings = Settings { rtol: tol, atol: tol, ..Settings::default() };
        let mut steps = Vec::new();
        let out = integrate(
            |_, y: &[f64; 2]| Ok([y[1], -y[0]]),
            0.0,
            [0.0, 1.0],
            10.0,
            &settings,
            |st| {
                steps.push(*st);
                Control::Continue
            },
        );
        assert!(matches!(out.reason, EndReason::Reached));
        ((out.y[0] - 10f64.sin()).abs(), steps)
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let (e, _) = oscillator(1e-10);
        assert!(e < 1e-8, "{e}");
        let (coarse, _) = oscillator(1e-6);
        assert!(e < coarse);
    }

    #[test]
    fn dense_output_is_accurate_mid_step() {
        let (_, steps) = oscillator(1e-10);
        for st in steps.iter().step_by(7) {
            let s = st.s0 + 0.37 * st.h;
            let y = st.eval(s);
            assert!((y[0] - s.sin()).abs() < 1e-8);
            assert!((y[1] - s.cos()).abs() < 1e-8);
            let e = st.end();
            assert!((e[0] - st.s1().sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn locate_zero_of_sine() {
        let (_, steps) = oscillator(1e-12);
        let root = steps.iter().find_map(|st| st.locate(0, 0.0).filter(|&r| r > 1.0)).unwrap();
        assert!((root - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn observer_can_stop() {
        let out = integrate(|_, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 5.0, &Settings::default(), |st| {
            if st.s1() > 1.0 {
                Control::Stop
            } else {
                Control::Continue
            }
        });
        assert!(matches!(out.reason, EndReason::Stopped));
        assert!(out.s > 1.0 && out.s < 5.0);
    }

    #[test]
    fn failing_rhs_underflows() {
        let out = integrate(
            |s, y: &[f64; 1]| if s > 0.5 { Err(SolitonError::Root("x".into())) } else { Ok([y[0]]) },
            0.0,
            [1.0],
            1.0,
            &Settings::default(),
            |_| Control::Continue,
        );
        assert!(matches!(out.reason, EndReason::RhsFailed(_)));
        assert!(out.s <= 0.5 && out.s > 0.49);
    }
}
