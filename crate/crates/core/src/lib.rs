//! Decision engine for quasi-isometry of tubular groups.
//!
//! Pipeline: [`model::parse_graph`] → [`psets::TubularGroup::analyze`] →
//! [`search::search`], with every quantity kept exact.

pub mod feasibility;
pub mod model;
pub mod number;
pub mod pattern;
pub mod psets;
pub mod search;
pub mod strategies;

#[cfg(test)]
mod testdata;

pub use feasibility::{
    build_system, solve, solve_pinned, Assignment, Constraint, ConstraintSystem, Convention, NegativeCycle, Provenance,
    Sign, Solution, Var, VarKind,
};
pub use model::{parse_graph, validate, Diagnostic, GraphOfGroups, ModelError, Severity, ValidationReport};
pub use number::{parse_rational, LogValue, Rational};
pub use pattern::{EdgePattern, Gram, Moebius, PatternError, ProjectiveSlope};
pub use psets::{AnalysisError, MaxSlope, PsetClass, TubularGroup, TypeRef};
pub use search::{
    search, Decision, Exhaustion, Prefilter, ResourceLimit, SearchOptions, SearchStats, Verdict, Witness,
};
pub use strategies::{Comparison, Extension, Match, Strategy, StrategyChoice, StrategySet, Terminal, TypeBijection};
