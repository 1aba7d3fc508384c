//! Restricted-diversion screening heuristic.
//!
//! Phase 1 scores every triple `(i, j, k)` with a pseudo profit: the profit
//! of hauling the (i, j) demand over the two-leg path i -> k -> j, plus the
//! margin of directly serving the (i, k) and (k, j) demands when they fit
//! alongside. Triples scoring nonnegative are kept, every other diversion is
//! fixed to zero, and the shrunken model is solved. Phase 2 fixes the phase-1
//! route and acceptances, restores the full diversion set and re-solves to
//! exploit residual capacity, then decodes (with negative-flow repair) into a
//! feasible solution.

use crate::analysis::{decode_solution, AnalysisError};
use crate::formulations::{
    build_enhanced_triples, build_restricted_triples, fix_route_and_requests, FormulationError,
};
use crate::instance::{triple_set, Instance};
use crate::oracle::BpmpSolution;
use crate::solver::{MilpSolve, MilpStatus, SolverError};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("no route from node 1 to the depot fits the distance limit")]
    Infeasible,
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("phase {phase} solve ended with status {status:?} and no incumbent")]
    NoIncumbent { phase: u8, status: MilpStatus },
}

/// Pseudo profit of serving the pair demand (i, j) via the two-leg detour
/// through k, with direct (i, k) and (k, j) demands piggybacked when the
/// capacity allows. Pair demands aggregate every request on the pair.
pub fn pseudo_profit(inst: &Instance, triple: (usize, usize, usize)) -> f64 {
    let (i, j, k) = triple;
    let p = &inst.params;
    let w_ij = inst.pair_weight(i, j);
    let w_ik = inst.pair_weight(i, k);
    let w_kj = inst.pair_weight(k, j);
    let legs = inst.distance(i, k) + inst.distance(k, j);
    let mut score = p.revenue_rate * inst.distance(i, j) * w_ij
        - p.cost_rate * legs * (p.vehicle_weight + w_ij);
    if w_ij + w_ik <= p.capacity {
        score += (p.revenue_rate - p.cost_rate) * inst.distance(i, k) * w_ik;
    }
    if w_ij + w_kj <= p.capacity {
        score += (p.revenue_rate - p.cost_rate) * inst.distance(k, j) * w_kj;
    }
    score
}

/// Triples whose pseudo profit is nonnegative (zero included).
pub fn attractive_triples(inst: &Instance) -> BTreeSet<(usize, usize, usize)> {
    triple_set(inst.n)
        .into_iter()
        .filter(|&t| pseudo_profit(inst, t) >= 0.0)
        .collect()
}

/// Run the two-phase heuristic with the given MILP solver. The result is
/// always feasible for the original instance.
pub fn run_heuristic(
    inst: &Instance,
    milp: &dyn MilpSolve,
) -> Result<BpmpSolution, HeuristicError> {
    let restricted = build_restricted_triples(inst, &attractive_triples(inst))?;
    let phase1 = milp.solve(&restricted.model)?;
    if phase1.status == MilpStatus::Infeasible {
        return Err(HeuristicError::Infeasible);
    }
    let Some(asg) = phase1.incumbent else {
        return Err(HeuristicError::NoIncumbent { phase: 1, status: phase1.status });
    };
    let first = decode_solution(inst, &restricted, &asg)?;
    let route_arcs: Vec<(usize, usize)> =
        first.route.windows(2).map(|w| (w[0], w[1])).collect();
    let accepted: Vec<usize> = first.accepted.iter().copied().collect();

    let full = build_enhanced_triples(inst)?;
    let fixed = fix_route_and_requests(inst, &full, &route_arcs, &accepted)?;
    let phase2 = milp.solve(&fixed.model)?;
    let Some(asg) = phase2.incumbent else {
        return Err(HeuristicError::NoIncumbent { phase: 2, status: phase2.status });
    };
    Ok(decode_solution(inst, &fixed, &asg)?)
}
