//! Values, weighted payoffs and belief-measure diagnostics for finite POMDPs
//! under history-dependent evaluations.

pub mod chain;
pub mod error;
pub mod evaluations;
pub mod instances;
pub mod measures;
pub mod model;
pub mod reproduce;
pub mod scenario;
pub mod sim;
pub mod strategies;
pub mod tree;
pub mod values;

pub use error::{Error, Result};
pub use evaluations::{Evaluation, EvaluationSpec, IrregularityReport};
pub use model::{Belief, ObservedHistory, Play, Pomdp};
pub use reproduce::RunRecord;
pub use scenario::Scenario;
pub use strategies::{StationaryStrategy, Strategy, Transducer};
