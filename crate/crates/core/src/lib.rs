//! Compliance-aware many-objective routing for unmanned aerial vehicles.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`geo`] ingests tagged map features into a local metric frame.
//! 2. [`starmap`] perturbs the map many times and fits per-node Bernoulli and
//!    Gaussian parameters for the `over` and `distance` relations.
//! 3. [`cola`] parses rule programs ("constitutions") and [`inference`]
//!    grounds them against the fitted relations, producing the probability
//!    that a point satisfies every rule.
//! 4. [`router`] searches a Pareto set of smooth 3D paths over the objective
//!    fields built by [`objectives`], and [`mission`] decides clearance,
//!    explains it over parameter settings and picks the best setting.
//!
//! Data-parallel loops go through [`par`], which falls back to plain
//! iteration when the `parallel` feature is disabled.

// Negated comparisons are used on purpose so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cola;
pub mod error;
pub mod geo;
pub mod inference;
pub mod mission;
pub mod objectives;
pub mod par;
pub mod router;
pub mod starmap;

pub use error::{Error, Result};
