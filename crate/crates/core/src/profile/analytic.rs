//! Closed-form radial functions with exact derivatives of every order.
//!
//! An [`Elementary`] is a finite sum of terms `amp * g(freq * (r - shift))`
//! where `g` is a monomial or one of sin, cos, sinh, cosh, exp. The family is
//! closed under differentiation and (for nonzero frequency) integration, which
//! is what lets a potential `f` be built from a warp `w = f'`.

use std::sync::Arc;

use super::{Jet, JetFn};
use crate::error::{Result, SolitonError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    Power(u32),
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub basis: Basis,
    pub amp: f64,
    pub freq: f64,
    pub shift: f64,
}

impl Term {
    pub fn new(basis: Basis, amp: f64, freq: f64, shift: f64) -> Self {
        Self { basis, amp, freq, shift }
    }

    fn derivative_value(&self, r: f64, order: u32) -> f64 {
        let x = self.freq * (r - self.shift);
        let g = match self.basis {
            Basis::Power(d) => {
                if order > d {
                    0.0
                } else {
                    let falling: f64 = (0..order).map(|j| (d - j) as f64).product();
                    falling * x.powi((d - order) as i32)
                }
            }
            Basis::Sin => match order % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            },
            Basis::Cos => match order % 4 {
                0 => x.cos(),
                1 => -x.sin(),
                2 => -x.cos(),
                _ => x.sin(),
            },
            Basis::Sinh => {
                if order % 2 == 0 {
                    x.sinh()
                } else {
                    x.cosh()
                }
            }
            Basis::Cosh => {
                if order % 2 == 0 {
                    x.cosh()
                } else {
                    x.sinh()
                }
            }
            Basis::Exp => x.exp(),
        };
        if g == 0.0 {
            return 0.0;
        }
        self.amp * self.freq.powi(order as i32) * g
    }

    fn derivative(&self) -> Option<Term> {
        let t = |basis, amp| Some(Term { basis, amp, ..*self });
        let af = self.amp * self.freq;
        match self.basis {
            Basis::Power(0) => None,
            Basis::Power(d) => t(Basis::Power(d - 1), af * d as f64),
            Basis::Sin => t(Basis::Cos, af),
            Basis::Cos => t(Basis::Sin, -af),
            Basis::Sinh => t(Basis::Cosh, af),
            Basis::Cosh => t(Basis::Sinh, af),
            Basis::Exp => t(Basis::Exp, af),
        }
    }

    fn antiderivative(&self) -> Term {
        if self.freq == 0.0 {
            // constant term amp * g(0)
            let c = self.derivative_value(self.shift, 0);
            return Term::new(Basis::Power(1), c, 1.0, 0.0);
        }
        let a = self.amp / self.freq;
        let t = |basis, amp| Term { basis, amp, ..*self };
        match self.basis {
            Basis::Power(d) => t(Basis::Power(d + 1), a / (d + 1) as f64),
            Basis::Sin => t(Basis::Cos, -a),
            Basis::Cos => t(Basis::Sin, a),
            Basis::Sinh => t(Basis::Cosh, a),
            Basis::Cosh => t(Basis::Sinh, a),
            Basis::Exp => t(Basis::Exp, a),
        }
    }
}

/// A sum of elementary terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Elementary {
    terms: Vec<Term>,
}

impl Elementary {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn term(basis: Basis, amp: f64, freq: f64, shift: f64) -> Self {
        Self::new(vec![Term::new(basis, amp, freq, shift)])
    }

    pub fn constant(c: f64) -> Self {
        Self::term(Basis::Power(0), c, 1.0, 0.0)
    }

    /// `a * r + b`
    pub fn linear(a: f64, b: f64) -> Self {
        Self::term(Basis::Power(1), a, 1.0, 0.0).plus(Self::constant(b))
    }

    /// `a * r^2`
    pub fn quadratic(a: f64) -> Self {
        Self::term(Basis::Power(2), a, 1.0, 0.0)
    }

    pub fn sin() -> Self {
        Self::term(Basis::Sin, 1.0, 1.0, 0.0)
    }

    pub fn cos() -> Self {
        Self::term(Basis::Cos, 1.0, 1.0, 0.0)
    }

    pub fn sinh() -> Self {
        Self::term(Basis::Sinh, 1.0, 1.0, 0.0)
    }

    pub fn cosh() -> Self {
        Self::term(Basis::Cosh, 1.0, 1.0, 0.0)
    }

    pub fn exp() -> Self {
        Self::term(Basis::Exp, 1.0, 1.0, 0.0)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn plus(mut self, other: Elementary) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.amp *= factor;
        }
        self
    }

    pub fn derivative_value(&self, r: f64, order: u32) -> f64 {
        self.terms.iter().map(|t| t.derivative_value(r, order)).sum()
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivative_value(r, 0)
    }

    pub fn jet(&self, r: f64) -> Jet {
        Jet::new(
            self.derivative_value(r, 0),
            self.derivative_value(r, 1),
            self.derivative_value(r, 2),
            self.derivative_value(r, 3),
        )
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.terms.iter().filter_map(Term::derivative).collect())
    }

    /// An antiderivative (integration constant chosen by the term shapes).
    pub fn antiderivative(&self) -> Result<Self> {
        if self.terms.iter().any(|t| !t.freq.is_finite() || !t.amp.is_finite()) {
            return Err(SolitonError::input("non-finite term parameters"));
        }
        Ok(Self::new(self.terms.iter().map(Term::antiderivative).collect()))
    }

    pub fn jet_fn(&self) -> JetFn {
        let me = self.clone();
        Arc::new(move |r| me.jet(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_derivatives_cycle() {
        let f = Elementary::sin();
        let r = 0.7;
        let j = f.jet(r);
        assert_eq!(j.value, r.sin());
        assert_eq!(j.d1, r.cos());
        assert_eq!(j.d2, -r.sin());
        assert_eq!(j.d3, -r.cos());
    }

    #[test]
    fn chain_rule_through_frequency() {
        let f = Elementary::term(Basis::Exp, 2.0, 3.0, 1.0);
        let r = 1.2;
        let e = (3.0_f64 * (r - 1.0)).exp();
        assert!((f.derivative_value(r, 2) - 2.0 * 9.0 * e).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let f = Elementary::linear(2.0, -1.0)
            .plus(Elementary::cosh())
            .plus(Elementary::term(Basis::Sin, 0.5, 2.0, 0.3));
        let g = f.antiderivative().unwrap();
        for r in [-1.0, 0.0, 0.4, 2.5] {
            assert!((g.derivative_value(r, 1) - f.value(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_profile_matches_jet() {
        let f = Elementary::term(Basis::Power(3), 1.5, 1.0, 0.0);
        let d = f.derivative();
        for r in [0.3, 1.7] {
            assert!((d.jet(r).d2 - f.jet(r).d3).abs() < 1e-12);
        }
    }
}
