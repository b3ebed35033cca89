//! Query answering over existential rules through dyadic decompositions.
//!
//! The pipeline: [`parser`] reads facts, rules and queries; [`analysis`]
//! computes affected positions and variable kinds; [`recognizers`] decides
//! class membership; [`decomposition`] builds a dyadic pair; [`chase`] and
//! [`query`] give a reference reasoner; [`qa`] answers queries by completing
//! the database with the head-ground half and delegating to a reasoner for
//! the other half.

pub mod analysis;
pub mod chase;
pub mod cli;
pub mod decomposition;
pub mod model;
pub mod parser;
pub mod qa;
pub mod query;
pub mod recognizers;
