//! The constitutional language: rule programs mixing mission parameters,
//! continuous facts, probabilistic spatial relations and objectives.
//!
//! ```text
//! star_map("./environments/example.star").
//! parameter {regular_license, special_license}.
//! take_off_mass ~ normal(20.0, 1.0).
//! field line_of_sight if day and distance(pilot) < 100.
//! field objective airspace.
//! path objective energy("./models/energy.py").
//! ```
//!
//! Precedence is `not` > `and` > `or`; `#` starts a comment; every
//! statement ends with `.`. `normal(mean, std)` takes a standard deviation.

mod ast;
mod lexer;
mod parser;
mod print;
mod validate;

pub use ast::*;
pub use parser::parse;
pub use print::{expr as print_expr, print};
pub use validate::{validate, Diagnostic};

/// Constitutions shipped with the crate.
pub mod bundled {
    /// Small license/time-of-day example with a continuous take-off mass.
    pub const EXAMPLE: &str = include_str!("../../constitutions/example.cola");
    /// Urban airspace rules with altitude bands and government buffers.
    /// Rule names are made consistent (`mid_flight_limitations`).
    pub const URBAN: &str = include_str!("../../constitutions/urban.cola");
    /// The urban rules with their original, inconsistent rule names.
    pub const URBAN_AS_PUBLISHED: &str =
        include_str!("../../constitutions/urban_as_published.cola");
    /// Rules for the small synthetic scenario used in end-to-end runs.
    pub const DESK: &str = include_str!("../../constitutions/desk.cola");
}
