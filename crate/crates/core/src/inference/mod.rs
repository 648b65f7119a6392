//! Probabilistic inference over grounded constitutions.
//!
//! A constitution is grounded at a point into Bernoulli facts (from `over`
//! layers) and interval variables (continuous terms cut at every threshold the
//! program compares them against). Satisfying assignments are enumerated
//! exhaustively and their weights summed.

mod count;
mod field;
mod ground;
mod normal;
mod setting;

pub use count::{
    enumerate_models, enumerate_models_with_limit, probability, wmc, Assignment, ModelSet,
    DEFAULT_BIT_LIMIT,
};
pub use field::{probability_field, probability_field_for};
pub use ground::{
    ground_at, BernoulliFact, Definition, GExpr, GroundProgram, Grounder, IntervalVar, Query,
    POINT_MASS_STD,
};
pub use normal::{normal_interval, std_normal_cdf};
pub use setting::MissionSetting;
