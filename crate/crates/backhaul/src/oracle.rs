//! Exhaustive-search reference solver for small instances.
//!
//! Enumerates every simple route from node 1 to node `n` within the distance
//! limit and, per route, finds the exact profit-maximizing request subset by
//! depth-first search with a sum-of-remaining-gains bound. Cargo rides the
//! vehicle, so an accepted request occupies every route arc between its
//! origin and destination; revenue is paid on the direct distance while the
//! carrying cost accrues along the route.
//!
//! Ground truth for the MILP solvers, at the cost of scaling only to a
//! handful of interior nodes.

use crate::instance::{validate_instance, Instance};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Hard cap on the per-route request subset search.
const MAX_ROUTE_REQUESTS: usize = 25;

/// A decoded answer: the route driven, the requests served and what the trip
/// earns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SolutionJson", try_from = "SolutionJson")]
pub struct BpmpSolution {
    /// Visited nodes in order, starting at 1 and ending at `n`.
    pub route: Vec<usize>,
    /// Ids of accepted requests.
    pub accepted: BTreeSet<usize>,
    /// Total profit: revenue minus carrying cost minus vehicle cost.
    pub profit: f64,
    /// Tons carried on each route arc.
    pub arc_loads: BTreeMap<(usize, usize), f64>,
    /// Positive diversion values, present when decoded from a triples model.
    pub diversions: Option<BTreeMap<(usize, usize, usize), f64>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct ArcLoadJson {
    from: usize,
    to: usize,
    tons: f64,
}

#[derive(Serialize, Deserialize, Clone)]
struct DiversionJson {
    from: usize,
    to: usize,
    via: usize,
    tons: f64,
}

/// JSON mirror of [`BpmpSolution`] with arc and triple keys flattened into
/// records.
#[derive(Serialize, Deserialize, Clone)]
pub struct SolutionJson {
    route: Vec<usize>,
    accepted: Vec<usize>,
    profit: f64,
    arc_loads: Vec<ArcLoadJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diversions: Option<Vec<DiversionJson>>,
}

impl From<BpmpSolution> for SolutionJson {
    fn from(s: BpmpSolution) -> Self {
        SolutionJson {
            route: s.route,
            accepted: s.accepted.into_iter().collect(),
            profit: s.profit,
            arc_loads: s
                .arc_loads
                .into_iter()
                .map(|((from, to), tons)| ArcLoadJson { from, to, tons })
                .collect(),
            diversions: s.diversions.map(|d| {
                d.into_iter()
                    .map(|((from, to, via), tons)| DiversionJson { from, to, via, tons })
                    .collect()
            }),
        }
    }
}

impl TryFrom<SolutionJson> for BpmpSolution {
    type Error = String;

    fn try_from(s: SolutionJson) -> Result<Self, String> {
        Ok(BpmpSolution {
            route: s.route,
            accepted: s.accepted.into_iter().collect(),
            profit: s.profit,
            arc_loads: s
                .arc_loads
                .into_iter()
                .map(|a| ((a.from, a.to), a.tons))
                .collect(),
            diversions: s.diversions.map(|d| {
                d.into_iter()
                    .map(|x| ((x.from, x.to, x.via), x.tons))
                    .collect()
            }),
        })
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {interior} interior nodes; the exhaustive limit is {limit}")]
    TooLarge { interior: usize, limit: usize },
    #[error("route carries {count} candidate requests; the subset search is capped at {MAX_ROUTE_REQUESTS}")]
    TooManyRequests { count: usize },
    #[error("no route from node 1 to the depot fits the distance limit")]
    Infeasible,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Search limits for [`solve_exact`].
#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    /// Maximum number of interior nodes (`n - 2`).
    pub max_interior: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_interior: 6 }
    }
}

/// Total distance of a route given as a node sequence.
pub fn route_length(inst: &Instance, route: &[usize]) -> f64 {
    route.windows(2).map(|w| inst.distance(w[0], w[1])).sum()
}

/// Route distance from the stop at `from_pos` to the stop at `to_pos`.
fn segment_length(inst: &Instance, route: &[usize], from_pos: usize, to_pos: usize) -> f64 {
    route[from_pos..=to_pos]
        .windows(2)
        .map(|w| inst.distance(w[0], w[1]))
        .sum()
}

/// Tons on each route arc when the given requests ride the route.
pub fn cover_loads(
    inst: &Instance,
    route: &[usize],
    accepted: &BTreeSet<usize>,
) -> BTreeMap<(usize, usize), f64> {
    let pos: BTreeMap<usize, usize> = route.iter().enumerate().map(|(p, &v)| (v, p)).collect();
    let mut loads: BTreeMap<(usize, usize), f64> = route
        .windows(2)
        .map(|w| ((w[0], w[1]), 0.0))
        .collect();
    for &id in accepted {
        let r = &inst.requests[id];
        let (po, pt) = (pos[&r.origin], pos[&r.destination]);
        for w in route[po..=pt].windows(2) {
            *loads.get_mut(&(w[0], w[1])).unwrap() += r.weight;
        }
    }
    loads
}

/// Lazily enumerate all simple routes 1 -> n with total distance within the
/// limit, in lexicographic order. Partial routes are pruned with the exact
/// shortest remaining distance to the depot.
pub fn enumerate_routes(inst: &Instance) -> RouteIter<'_> {
    let n = inst.n;
    // Shortest distance to the depot over the arc set, by Bellman-Ford on
    // reversed arcs; a valid lower bound for any route completion.
    let mut to_depot = vec![f64::INFINITY; n + 1];
    to_depot[n] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for i in 1..n {
            for j in 2..=n {
                if i != j && to_depot[j].is_finite() {
                    let cand = inst.distance(i, j) + to_depot[j];
                    if cand < to_depot[i] {
                        to_depot[i] = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    RouteIter {
        inst,
        to_depot,
        route: vec![1],
        next_child: vec![2],
        dist: 0.0,
        exhausted: n < 2,
    }
}

/// Iterator state for the route search; see [`enumerate_routes`].
pub struct RouteIter<'a> {
    inst: &'a Instance,
    to_depot: Vec<f64>,
    route: Vec<usize>,
    next_child: Vec<usize>,
    dist: f64,
    exhausted: bool,
}

impl Iterator for RouteIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.exhausted {
            return None;
        }
        let n = self.inst.n;
        let limit = self.inst.params.distance_limit + 1e-9;
        loop {
            let depth = self.route.len() - 1;
            let node = self.route[depth];
            let mut advanced = false;
            let mut child = self.next_child[depth];
            while child <= n {
                let candidate = child;
                child += 1;
                if self.route.contains(&candidate) {
                    continue;
                }
                let step = self.dist + self.inst.distance(node, candidate);
                if candidate == n {
                    if step <= limit {
                        self.next_child[depth] = child;
                        let mut full = self.route.clone();
                        full.push(n);
                        return Some(full);
                    }
                } else if step + self.to_depot[candidate] <= limit {
                    self.next_child[depth] = child;
                    self.dist = step;
                    self.route.push(candidate);
                    self.next_child.push(2);
                    advanced = true;
                    break;
                }
            }
            if advanced {
                continue;
            }
            // Subtree exhausted: backtrack.
            if depth == 0 {
                self.exhausted = true;
                return None;
            }
            self.route.pop();
            self.next_child.pop();
            let parent = self.route[depth - 1];
            self.dist -= self.inst.distance(parent, node);
        }
    }
}

/// Exact profit-maximizing request subset for a fixed route.
///
/// Candidates are the requests whose endpoints appear on the route in order
/// and whose net gain (revenue minus carrying cost along the route) is
/// positive; zero-gain requests are never accepted, which keeps optimal
/// acceptance sets minimal. Among remaining profit ties the first subset in
/// include-first depth-first order over ascending ids wins, so outputs are
/// stable.
pub fn best_requests_for_route(
    inst: &Instance,
    route: &[usize],
) -> Result<(BTreeSet<usize>, f64), OracleError> {
    let p = &inst.params;
    let pos: BTreeMap<usize, usize> = route.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let base = -p.cost_rate * p.vehicle_weight * route_length(inst, route);

    struct Candidate {
        id: usize,
        gain: f64,
        from_pos: usize,
        to_pos: usize,
        weight: f64,
    }
    let mut candidates = Vec::new();
    for r in &inst.requests {
        let (Some(&po), Some(&pt)) = (pos.get(&r.origin), pos.get(&r.destination)) else {
            continue;
        };
        if po >= pt {
            continue;
        }
        let gain = p.revenue_rate * inst.request_distance(r) * r.weight
            - p.cost_rate * r.weight * segment_length(inst, route, po, pt);
        if gain > 0.0 {
            candidates.push(Candidate { id: r.id, gain, from_pos: po, to_pos: pt, weight: r.weight });
        }
    }
    if candidates.len() > MAX_ROUTE_REQUESTS {
        return Err(OracleError::TooManyRequests { count: candidates.len() });
    }

    // Remaining possible gain from candidate idx onward, for pruning.
    let mut suffix = vec![0.0; candidates.len() + 1];
    for idx in (0..candidates.len()).rev() {
        suffix[idx] = suffix[idx + 1] + candidates[idx].gain;
    }

    let capacity = p.capacity + 1e-9;
    let mut loads = vec![0.0; route.len().saturating_sub(1)];
    let mut chosen: Vec<usize> = Vec::new();
    let mut best_set: Vec<usize> = Vec::new();
    let mut best_gain = 0.0;

    fn search(
        idx: usize,
        gain: f64,
        candidates: &[Candidate],
        suffix: &[f64],
        capacity: f64,
        loads: &mut Vec<f64>,
        chosen: &mut Vec<usize>,
        best_set: &mut Vec<usize>,
        best_gain: &mut f64,
    ) {
        if gain + suffix[idx] <= *best_gain + 1e-12 {
            return;
        }
        if idx == candidates.len() {
            if gain > *best_gain + 1e-12 {
                *best_gain = gain;
                *best_set = chosen.clone();
            }
            return;
        }
        let c = &candidates[idx];
        let fits = (c.from_pos..c.to_pos).all(|a| loads[a] + c.weight <= capacity);
        if fits {
            for a in c.from_pos..c.to_pos {
                loads[a] += c.weight;
            }
            chosen.push(c.id);
            search(idx + 1, gain + c.gain, candidates, suffix, capacity, loads, chosen, best_set, best_gain);
            chosen.pop();
            for a in c.from_pos..c.to_pos {
                loads[a] -= c.weight;
            }
        }
        search(idx + 1, gain, candidates, suffix, capacity, loads, chosen, best_set, best_gain);
    }

    search(
        0,
        0.0,
        &candidates,
        &suffix,
        capacity,
        &mut loads,
        &mut chosen,
        &mut best_set,
        &mut best_gain,
    );

    Ok((best_set.into_iter().collect(), base + best_gain))
}

/// Global optimum by full enumeration: every feasible route crossed with its
/// exact request selection. Ties go to the lexicographically smallest route
/// (the enumeration order) and then to the stable per-route subset choice.
pub fn solve_exact(inst: &Instance, limits: OracleLimits) -> Result<BpmpSolution, OracleError> {
    let report = validate_instance(inst);
    if !report.is_valid() {
        return Err(OracleError::InvalidInstance(report.errors.join("; ")));
    }
    let interior = inst.n.saturating_sub(2);
    if interior > limits.max_interior {
        return Err(OracleError::TooLarge { interior, limit: limits.max_interior });
    }
    let mut best: Option<(Vec<usize>, BTreeSet<usize>, f64)> = None;
    for route in enumerate_routes(inst) {
        let (accepted, profit) = best_requests_for_route(inst, &route)?;
        match &best {
            Some((_, _, incumbent)) if profit <= *incumbent => {}
            _ => best = Some((route, accepted, profit)),
        }
    }
    let (route, accepted, profit) = best.ok_or(OracleError::Infeasible)?;
    let arc_loads = cover_loads(inst, &route, &accepted);
    Ok(BpmpSolution { route, accepted, profit, arc_loads, diversions: None })
}
