mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use solitonlab_core::charts;
use solitonlab_core::geometry::{self, curvature_from_jet, FiberDescriptor, WarpedMetric};
use solitonlab_core::identities::{self, CompactRotMetric};
use solitonlab_core::io::fmt_num;
use solitonlab_core::ode::{k_yamabe_step, yamabe_rhs};
use solitonlab_core::profile::{Basis, Elementary, RadialGrid, RadialProfile};
use solitonlab_core::verify;

fn fiber(n: usize, kind: u8) -> FiberDescriptor {
    match kind {
        0 => FiberDescriptor::round_sphere(n).unwrap(),
        1 => FiberDescriptor::flat(n).unwrap(),
        _ => FiberDescriptor::constant_scalar(n, -(((n - 1) * (n - 2)) as f64)).unwrap(),
    }
}

fn jet() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.1..5.0f64, -3.0..3.0f64, -3.0..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scalar_is_trace_of_ricci(n in 3usize..8, kind in 0u8..3, (w, w1, w2) in jet()) {
        let c = curvature_from_jet(n, &fiber(n, kind), 0.0, &solitonlab_core::Jet::new(w, w1, w2, 0.0));
        let trace = c.ric_rr + (n - 1) as f64 * c.ric_tan;
        prop_assert!((c.scalar - trace).abs() <= 1e-12 * (1.0 + c.scalar.abs()));
    }

    #[test]
    fn schouten_trace_and_sigma_k(n in 3usize..8, kind in 0u8..3, (w, w1, w2) in jet()) {
        let c = curvature_from_jet(n, &fiber(n, kind), 0.0, &solitonlab_core::Jet::new(w, w1, w2, 0.0));
        let nf = n as f64;
        let trace = c.mu_r + (nf - 1.0) * c.mu_t;
        prop_assert!((trace - c.scalar / (2.0 * (nf - 1.0))).abs() <= 1e-12 * (1.0 + c.scalar.abs()));
        let mut spectrum = vec![c.mu_t; n - 1];
        spectrum.push(c.mu_r);
        for k in 1..=n {
            let e = common::elementary_symmetric(&spectrum, k);
            prop_assert!((c.sigma[k - 1] - e).abs() <= 1e-10 * (1.0 + e.abs()), "k={} {} vs {}", k, c.sigma[k - 1], e);
        }
    }

    #[test]
    fn curvature_scales_under_homothety(n in 3usize..6, a in 0.3..4.0f64, r in 0.2..2.9f64) {
        let g1 = RadialGrid::uniform(0.0, PI, 65).unwrap();
        let g2 = RadialGrid::uniform(0.0, a * PI, 65).unwrap();
        let m1 = WarpedMetric::new(n, RadialProfile::elementary(g1, &Elementary::sin()).unwrap(), fiber(n, 0)).unwrap();
        let w2 = Elementary::term(Basis::Sin, a, 1.0 / a, 0.0);
        let m2 = WarpedMetric::new(n, RadialProfile::elementary(g2, &w2).unwrap(), fiber(n, 0)).unwrap();
        let (c1, c2) = (geometry::curvature(&m1, r).unwrap(), geometry::curvature(&m2, a * r).unwrap());
        prop_assert!((c2.scalar * a * a - c1.scalar).abs() < 1e-10 * c1.scalar.abs());
        prop_assert!((c2.ric_tan * a * a - c1.ric_tan).abs() < 1e-10 * (1.0 + c1.ric_tan.abs()));
    }

    #[test]
    fn residual_magnitudes_scale_with_a(a in -10.0..10.0f64, b in -100.0..100.0f64, amp in 0.1..2.0f64) {
        let g = RadialGrid::uniform(0.0, PI, 129).unwrap();
        let m = WarpedMetric::new(4, RadialProfile::elementary(g.clone(), &Elementary::sin()).unwrap(), fiber(4, 0)).unwrap();
        let f = RadialProfile::elementary(g, &Elementary::cos().scaled(-1.0).plus(Elementary::quadratic(amp))).unwrap();
        let base = verify::conformal_residual(&m, &f).unwrap();
        let rep = verify::conformal_residual(&m, &f.affine(a, b)).unwrap();
        let scale = base.radial_sup.max(base.tangential_sup);
        for (x, y) in rep.radial.iter().zip(&base.radial).chain(rep.tangential.iter().zip(&base.tangential)) {
            prop_assert!((x - a.abs() * y).abs() <= 1e-12 * (1.0 + a.abs()) * scale);
        }
    }

    #[test]
    fn k1_step_matches_yamabe(n in 3usize..7, lambda in -2.0..2.0f64, (w, w1, _) in jet()) {
        let y = yamabe_rhs(n, lambda, 1.0, w, w1).unwrap();
        let k = k_yamabe_step(n, 1, lambda / (2.0 * (n - 1) as f64), 1.0, w, w1, 0.0).unwrap();
        prop_assert!((y - k).abs() <= 1e-10 * (1.0 + y.abs()));
    }

    #[test]
    fn k_step_hits_sigma_target(n in 3usize..7, k in 1usize..4, lambda in -1.0..1.0f64, (w, w1, _) in jet()) {
        prop_assume!(k <= n);
        if let Ok(w2) = k_yamabe_step(n, k, lambda, 1.0, w, w1, 0.0) {
            let c = curvature_from_jet(n, &fiber(n, 0), 1.0, &solitonlab_core::Jet::new(w, w1, w2, 0.0));
            let target = lambda + w1 / (2.0 * (n - 1) as f64);
            prop_assert!((c.sigma[k - 1] - target).abs() <= 1e-8 * (1.0 + target.abs()), "{} vs {}", c.sigma[k - 1], target);
        }
    }

    #[test]
    fn chart_inversion_round_trips(r in 0.05..2.95f64) {
        let g = RadialGrid::uniform(0.0, 3.0, 257).unwrap();
        let m = WarpedMetric::new(3, RadialProfile::elementary(g, &Elementary::sinh()).unwrap(), fiber(3, 0)).unwrap();
        let chart = charts::chart_case2(&m).unwrap();
        let t = chart.t_of_r(r).unwrap();
        prop_assert!((chart.r_of_t(t).unwrap() - r).abs() < 1e-10);
        // closed form of the punctured chart for the hyperbolic warp
        prop_assert!((t - 2.0 * (r / 2.0).tanh()).abs() < 1e-8);
    }

    #[test]
    fn sphere_volumes(n in 3usize..7) {
        let g = RadialGrid::uniform(0.0, PI, 1025).unwrap();
        let m = WarpedMetric::new(n, RadialProfile::elementary(g, &Elementary::sin()).unwrap(), fiber(n, 0)).unwrap();
        let v = identities::volume(&CompactRotMetric::new(m).unwrap()).value;
        let exact = identities::omega(n + 1);
        prop_assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn numbers_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
    }
}
