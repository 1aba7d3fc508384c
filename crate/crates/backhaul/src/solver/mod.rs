//! LP and MILP solving: built-in simplex and branch-and-bound, an external
//! backend adapter, and an exact column-generation bound for node-arc LP
//! relaxations that are too wide to tableau directly.

mod branch_bound;
mod colgen;
mod external;
mod simplex;

pub use branch_bound::solve_milp;
pub use colgen::{node_arc_lp_bound, NodeArcVariant};
pub use external::{solve_external, BackendConfig, ModelFormat};
pub use simplex::{SimplexEngine, SimplexError};

/// Coarse engine counters: (solves, pivots, refactors, build ms, pivot ms,
/// refactor ms). Profiling aid for the examples.
pub fn stats() -> (u64, u64, u64, u64, u64, u64) {
    use simplex::*;
    use std::sync::atomic::Ordering;
    (
        STAT_SOLVES.load(Ordering::Relaxed),
        STAT_PIVOTS.load(Ordering::Relaxed),
        STAT_REFACTORS.load(Ordering::Relaxed),
        STAT_BUILD_NS.load(Ordering::Relaxed) / 1_000_000,
        STAT_PIVOT_NS.load(Ordering::Relaxed) / 1_000_000,
        STAT_REFACTOR_NS.load(Ordering::Relaxed) / 1_000_000,
    )
}

use crate::mip::{Assignment, MilpModel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("model contains binary variables; solve them with solve_milp or pass relax_integrality")]
    IntegralityNotRelaxed,
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("backend command template must contain {{model}} and {{solution}} placeholders")]
    BackendTemplate,
    #[error("failed to launch backend: {0}")]
    BackendLaunch(String),
    #[error("backend exited with failure: {0}")]
    BackendRun(String),
    #[error("cannot parse backend solution line {line:?}: {reason}")]
    BackendParse { line: String, reason: String },
    #[error("backend solution violates {constraint} by {amount}")]
    SolutionIntegrity { constraint: String, amount: f64 },
    #[error("column generation failed to converge after {0} rounds")]
    PricingStalled(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of an LP relaxation solve.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Meaningful when status is Optimal.
    pub objective: f64,
    pub values: Assignment,
    pub iterations: u64,
}

/// Solve the LP relaxation of a model with the built-in two-phase simplex.
///
/// With `relax_integrality` binaries are treated as continuous within their
/// bounds; without it the model must already be purely continuous.
pub fn solve_lp(model: &MilpModel, relax_integrality: bool) -> Result<LpSolution, SolverError> {
    if !relax_integrality && simplex::has_binaries(model) {
        return Err(SolverError::IntegralityNotRelaxed);
    }
    solve_lp_with_bounds(model, &[])
}

/// LP relaxation with per-column bound overrides (branching support).
pub fn solve_lp_with_bounds(
    model: &MilpModel,
    overrides: &[(usize, f64, f64)],
) -> Result<LpSolution, SolverError> {
    let mut engine = SimplexEngine::from_model(model, overrides);
    let outcome = engine.solve()?;
    let status = match outcome {
        simplex::Outcome::Optimal => LpStatus::Optimal,
        simplex::Outcome::Infeasible => LpStatus::Infeasible,
        simplex::Outcome::Unbounded => LpStatus::Unbounded,
    };
    let (objective, values) = if status == LpStatus::Optimal {
        let vals = engine.values();
        let objective = model
            .objective()
            .iter()
            .map(|&(v, c)| c * vals[v.index()])
            .sum();
        (objective, Assignment::from_dense(vals))
    } else {
        (f64::NEG_INFINITY, Assignment::empty(model))
    };
    Ok(LpSolution {
        status,
        objective,
        values,
        iterations: engine.iterations(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Proven optimal within the gap tolerance.
    Optimal,
    /// An incumbent exists but optimality was not proven; reported by
    /// adapters that cannot certify bounds.
    Feasible,
    Infeasible,
    /// Stopped on the node or time limit.
    NodeLimit,
}

/// Result of a MILP solve.
#[derive(Debug, Clone)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Best integer-feasible assignment found, if any.
    pub incumbent: Option<Assignment>,
    /// Objective of the incumbent (negative infinity when none exists).
    pub objective: f64,
    /// Best proven upper bound on the optimum.
    pub best_bound: f64,
    pub nodes_explored: u64,
}

/// Options for the built-in branch and bound.
#[derive(Debug, Clone, Copy)]
pub struct MilpOptions {
    pub node_limit: Option<u64>,
    pub time_limit: Option<std::time::Duration>,
    /// Absolute gap at which a node (or the search) is considered closed.
    pub gap_tolerance: f64,
    /// Open nodes explored concurrently per round. With 1 the search is
    /// bit-deterministic including node counts; with more, the objective and
    /// bound still match the single-threaded result but the node count may
    /// differ.
    pub threads: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            node_limit: None,
            time_limit: None,
            gap_tolerance: crate::constants::DEFAULT_GAP_TOL,
            threads: 1,
        }
    }
}

impl MilpOptions {
    /// Default options with every available core enabled.
    pub fn parallel() -> Self {
        MilpOptions {
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            ..Default::default()
        }
    }
}

/// Anything that can solve a MILP; lets callers swap the built-in solver for
/// an external backend.
pub trait MilpSolve {
    fn solve(&self, model: &MilpModel) -> Result<MilpResult, SolverError>;
}

/// The built-in branch-and-bound behind the [`MilpSolve`] trait.
#[derive(Debug, Clone, Copy, Default)]
pub struct Builtin(pub MilpOptions);

impl MilpSolve for Builtin {
    fn solve(&self, model: &MilpModel) -> Result<MilpResult, SolverError> {
        solve_milp(model, &self.0)
    }
}

/// An external backend behind the [`MilpSolve`] trait.
pub struct External {
    pub config: BackendConfig,
    pub workdir: std::path::PathBuf,
}

impl MilpSolve for External {
    fn solve(&self, model: &MilpModel) -> Result<MilpResult, SolverError> {
        solve_external(model, &self.config, &self.workdir)
    }
}
