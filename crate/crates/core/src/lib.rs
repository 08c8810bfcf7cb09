//! Numerical engine for conformal gradient solitons on warped products.
//!
//! A conformal gradient soliton is a Riemannian manifold carrying a function
//! `f` whose Hessian is a pointwise multiple of the metric. Away from critical
//! points such a manifold is a warped product `dr^2 + f'(r)^2 g_fiber`, and the
//! number of critical points (0, 1 or 2) decides whether it is conformal to a
//! product, to flat space or to the round sphere.
//!
//! The crate is organized by task:
//!
//! * [`profile`] radial functions with derivatives, critical points, normalization
//! * [`geometry`] Christoffels, Hessians, Ricci, scalar, Schouten and `σ_k` curvature
//! * [`verify`] soliton residuals, the divergence identity and case classification
//! * [`charts`] conformal normal forms built by quadrature and monotone inversion
//! * [`ode`] shooting for rotationally symmetric Yamabe and k-Yamabe solitons
//! * [`identities`] integral identities on compact rotationally symmetric metrics
//! * [`io`] CSV formats shared with the command-line front end

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charts;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod io;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod roots;
pub mod verify;

pub use error::{Result, SolitonError};
pub use geometry::{CurvatureReport, FiberDescriptor, FiberKind, WarpedMetric};
pub use profile::{Elementary, Jet, RadialGrid, RadialProfile, StencilOrder};
