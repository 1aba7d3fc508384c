//! Numeric tolerances shared across the toolkit.
//!
//! Every feasibility, integrality and flow-positivity check in the crate goes
//! through these values so that the solver, the evaluator and the validators
//! cannot drift apart.

/// Constraint feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Integrality tolerance for binary variables.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Positivity threshold for arc flows and diversion-digraph membership.
pub const FLOW_EPS: f64 = 1e-9;

/// Default absolute gap at which branch and bound declares optimality.
pub const DEFAULT_GAP_TOL: f64 = 1e-6;
