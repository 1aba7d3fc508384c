//! Best-first branch and bound over LP relaxations.
//!
//! Nodes are ordered by their parent LP bound. Each popped node is explored
//! by a budgeted depth-first dive: the branching variable is fixed to its
//! rounded value first, the opposite child waits on the dive's own stack,
//! and once the dive budget is spent the remaining frames spill back into
//! the global queue. The dives surface integer-feasible incumbents early
//! even when the relaxation bound is flat.
//!
//! Branching picks the most fractional binary within the highest
//! branch-priority class, ties to the lowest column index.
//!
//! With `threads = 1` the search is fully deterministic including the node
//! count. With more threads, each round pops a fixed batch of nodes, dives
//! them in parallel against the round-start incumbent and merges results in
//! batch order, so the outcome is still reproducible run to run; the node
//! count may differ from the single-threaded one because incumbent updates
//! land later, but the objective and bound are the same.

use super::{solve_lp_with_bounds, LpStatus, MilpOptions, MilpResult, MilpStatus, SolverError};
use crate::constants::INTEGRALITY_TOL;
use crate::mip::{Assignment, MilpModel, VarKind, VarRef};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

/// LP solves spent inside one dive before spilling back to best-first.
const DIVE_BUDGET: u64 = 64;

struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on bound; FIFO on ties for determinism.
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Most fractional binary within the highest priority class that has any
/// fractional variable; `None` when the point is integer-feasible.
fn branching_variable(model: &MilpModel, values: &[f64]) -> Option<usize> {
    let mut best: Option<(i32, f64, usize)> = None;
    for (var, def) in model.vars() {
        if def.kind != VarKind::Binary {
            continue;
        }
        let v = values[var.index()];
        let frac = (v - v.round()).abs();
        if frac <= INTEGRALITY_TOL {
            continue;
        }
        let prio = model.branch_priority(var);
        let dist = (v - 0.5).abs();
        let better = match best {
            None => true,
            Some((bp, bd, bi)) => {
                prio > bp
                    || (prio == bp
                        && (dist < bd - 1e-12 || (dist <= bd + 1e-12 && var.index() < bi)))
            }
        };
        if better {
            best = Some((prio, dist, var.index()));
        }
    }
    best.map(|(_, _, idx)| idx)
}

struct DiveOutcome {
    incumbent: Option<(f64, Assignment)>,
    spills: Vec<(f64, Vec<(usize, f64, f64)>)>,
    explored: u64,
    unbounded: bool,
    error: Option<SolverError>,
}

/// Depth-first dive from one frame, pruning against `cutoff`. Frames beyond
/// the budget are returned as spills.
fn dive(
    model: &MilpModel,
    gap: f64,
    cutoff_start: f64,
    root_bound: f64,
    root_fixings: Vec<(usize, f64, f64)>,
) -> DiveOutcome {
    let mut out = DiveOutcome {
        incumbent: None,
        spills: Vec::new(),
        explored: 0,
        unbounded: false,
        error: None,
    };
    let mut cutoff = cutoff_start;
    let mut stack: Vec<(f64, Vec<(usize, f64, f64)>)> = vec![(root_bound, root_fixings)];
    while let Some((bound, fixings)) = stack.pop() {
        if bound <= cutoff + gap {
            continue;
        }
        if out.explored >= DIVE_BUDGET {
            out.spills.push((bound, fixings));
            continue;
        }
        out.explored += 1;
        let lp = match solve_lp_with_bounds(model, &fixings) {
            Ok(lp) => lp,
            Err(e) => {
                out.error = Some(e);
                return out;
            }
        };
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                out.unbounded = true;
                return out;
            }
            LpStatus::Optimal => {}
        }
        if lp.objective <= cutoff + gap {
            continue;
        }
        let values: Vec<f64> = (0..model.num_vars())
            .map(|j| lp.values.get(VarRef::from_index(j)).unwrap())
            .collect();
        match branching_variable(model, &values) {
            None => {
                if lp.objective > cutoff {
                    cutoff = lp.objective;
                    out.incumbent = Some((lp.objective, lp.values));
                }
            }
            Some(col) => {
                let v = values[col];
                // Bias dives toward activating structure: a fractional
                // variable is pushed up first unless it is nearly zero.
                let round = if v >= 0.2 { 1.0 } else { 0.0 };
                let mut dive_side = fixings.clone();
                dive_side.push((col, round, round));
                let mut other_side = fixings;
                other_side.push((col, 1.0 - round, 1.0 - round));
                stack.push((lp.objective, other_side));
                stack.push((lp.objective, dive_side));
            }
        }
    }
    out
}

pub fn solve_milp(model: &MilpModel, opts: &MilpOptions) -> Result<MilpResult, SolverError> {
    let started = Instant::now();
    let gap = opts.gap_tolerance;
    let threads = opts.threads.max(1);
    let mut incumbent: Option<Assignment> = None;
    let mut incumbent_obj = f64::NEG_INFINITY;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut nodes_explored: u64 = 0;
    let mut seq: u64 = 0;
    let mut limit_hit = false;

    heap.push(Node { bound: f64::INFINITY, seq: 0, fixings: Vec::new() });
    loop {
        // Assemble this round's batch in heap order.
        let mut batch: Vec<Node> = Vec::with_capacity(threads);
        while batch.len() < threads {
            let Some(node) = heap.pop() else { break };
            if node.bound <= incumbent_obj + gap {
                // Best-first order: everything below is dominated too.
                heap.clear();
                break;
            }
            batch.push(node);
        }
        if batch.is_empty() {
            break;
        }
        if let Some(limit) = opts.node_limit {
            if nodes_explored >= limit {
                for node in batch {
                    heap.push(node);
                }
                limit_hit = true;
                break;
            }
        }
        if let Some(limit) = opts.time_limit {
            if started.elapsed() >= limit {
                for node in batch {
                    heap.push(node);
                }
                limit_hit = true;
                break;
            }
        }

        let cutoff = incumbent_obj;
        let outcomes: Vec<DiveOutcome> = if batch.len() == 1 {
            let node = batch.pop().unwrap();
            vec![dive(model, gap, cutoff, node.bound, node.fixings)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = batch
                    .drain(..)
                    .map(|node| {
                        scope.spawn(move || dive(model, gap, cutoff, node.bound, node.fixings))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("dive panicked")).collect()
            })
        };
        // Merge in batch order for reproducibility.
        for out in outcomes {
            if let Some(e) = out.error {
                return Err(e);
            }
            if out.unbounded {
                return Err(SolverError::Unbounded);
            }
            nodes_explored += out.explored;
            if let Some((obj, asg)) = out.incumbent {
                if obj > incumbent_obj {
                    incumbent_obj = obj;
                    incumbent = Some(asg);
                }
            }
            for (bound, fixings) in out.spills {
                if bound > incumbent_obj + gap {
                    seq += 1;
                    heap.push(Node { bound, seq, fixings });
                }
            }
        }
    }

    let open_bound = heap.peek().map(|n| n.bound).unwrap_or(f64::NEG_INFINITY);
    let best_bound = incumbent_obj.max(open_bound);
    let status = if limit_hit {
        MilpStatus::NodeLimit
    } else if incumbent.is_some() {
        MilpStatus::Optimal
    } else {
        MilpStatus::Infeasible
    };
    Ok(MilpResult {
        status,
        incumbent,
        objective: incumbent_obj,
        best_bound,
        nodes_explored,
    })
}
