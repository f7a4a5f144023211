//! Uniformly convex functions on finite dyadic grids.
//!
//! Functions are tabulated on finite supports in `ℝ^d`, `d ≤ 3`, with `+∞`
//! off the support. On top of that representation the crate computes moduli
//! of uniform convexity, convex envelopes, separated dyadic trees, slice
//! derivations and the dentability index, sublevel-set renormings and
//! difference-of-convex approximations.

mod error;
pub mod domain;
pub mod geometry;
pub mod envelope;
pub mod lp;
pub mod moduli;
pub mod transforms;
pub mod trees;
pub mod renorming;
pub mod dentability;
pub mod dc_approx;
pub mod swc;
pub mod fixtures;

pub use domain::{
    estimate_varpi, eval_norm, make_dyadic_grid, midpoint_pairs, DyadicGrid, ExtReal, FunctionSpec, NormSpec, PseudometricSpec,
    Support, TabFunc, Varpi,
};
pub use error::{Error, Result};
