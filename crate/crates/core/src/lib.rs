//! Extrapolation-regularized balancing weights.
//!
//! Estimates per-unit weights that balance a source sample against a target
//! point while softly penalizing negative weights, the mechanism behind
//! extrapolation in linear smoothers. Alongside the solver the crate
//! provides the classical implied-weight baselines (ridge/OLS, IPW,
//! augmented and doubly robust forms), Hölder-continuity error bounds with
//! a reflection-based empirical variant, scalar diagnostics, synthetic
//! data generators, and a (γ, λ) sensitivity-sweep engine with CSV and SVG
//! emission.

pub mod bounds;
pub mod data;
pub mod dgp;
pub mod diagnostics;
pub mod error;
pub mod implied;
pub mod io;
pub mod scale;
pub mod seed;
pub mod sensitivity;
pub mod simplex;
pub mod solver;
mod svg;

pub use data::{
    Dataset, HolderParams, PExtrap, PImbalance, ProblemConfig, Provenance, SolverConfig,
    TargetSpec, WeightVector,
};
pub use error::{Error, Result};
pub use solver::{objective, solve, solve_closed_form_ridge_path, ObjectiveBreakdown, SolveResult};
