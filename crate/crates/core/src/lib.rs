//! # riccilab
//!
//! A numerical laboratory for the optimal-transport characterization of
//! variable Ricci lower bounds on two-dimensional model surfaces.
//!
//! A lower bound `Ric_x ≥ -K_x` by a continuous field `K` is equivalent to the
//! entropy along every Wasserstein geodesic satisfying
//!
//! ```text
//! Ent(μ_t) ≤ (1-t) Ent(μ_0) + t Ent(μ_1)
//!           + t(1-t)/2 ∫ K(B_x(ρ(x, F(x)))) ρ(x, F(x))² dμ_0(x)
//! ```
//!
//! where `F` is the optimal transport map and `K(D) = sup_D K`. This crate
//! evaluates every ingredient on concrete surfaces of revolution and checks
//! the inequality, its supporting volume-distortion comparison, a converse
//! small-ball probe and the resulting volume-growth bound.
//!
//! ## Modules
//!
//! | Module | Contents |
//! |---|---|
//! | [`geometry`] | model surfaces, geodesics, curvature fields, volumes |
//! | [`comparison`] | `S(r;k)`, the scalar convexity gap, distortion bounds |
//! | [`jacobi`] | Jacobi fields, distortion coefficients `v_t`, radial Jacobians |
//! | [`transport`] | exact and entropic discrete OT, radial monotone maps, interpolation |
//! | [`entropy`] | entropy, the convexity checker, the curvature probe |
//! | [`growth`] | volume growth bounds |
//! | [`cli`] | configuration, experiment runner and report emission |
//!
//! Data-parallel sweeps go through [`par::Execution`]; the `parallel` feature
//! (on by default) backs it with rayon.

#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod comparison;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod growth;
pub mod jacobi;
pub mod ode;
pub mod par;
pub mod presets;
pub mod quad;
pub mod suite;
pub mod transport;
pub mod validation;

pub use error::{Error, Result};
pub use geometry::{CurvatureField, GeodesicSegment, ManifoldModel, Point, Tangent};
