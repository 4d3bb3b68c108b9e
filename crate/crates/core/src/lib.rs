//! Fuzzy object-oriented dynamic networks: fuzzy objects and classes, the
//! relations between them, and the exploiters and modifiers that derive new
//! knowledge from them.

pub mod cli;
pub mod document;
pub mod dot;
pub mod dsl;
pub mod error;
pub mod evaluator;
pub mod exploiters;
pub mod expr;
pub mod fixtures;
pub mod fuzzy;
pub mod model;
pub mod modifiers;
pub mod network;

pub use error::{Error, Result};
pub use fuzzy::{Degree, FuzzySet, TNorm};
pub use network::Network;
