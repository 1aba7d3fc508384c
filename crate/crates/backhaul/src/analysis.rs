//! Solution decoding and the diversion-flow algebra.
//!
//! The triples kinds describe cargo movement implicitly: a diversion value
//! `u(i,j,k)` moves flow bound from i to j onto the legs (i,k) and (k,j).
//! This module derives per-arc flows from diversion values, builds the
//! diversion digraph (arcs as nodes, diversions as parent-child edges),
//! checks it for cycles, repairs negative arc flows, and decodes solver
//! assignments of any formulation into a [`BpmpSolution`]. Profit is always
//! recomputed from first principles rather than trusted from a solver
//! objective.

use crate::constants::{FLOW_EPS, INTEGRALITY_TOL};
use crate::formulations::{BuiltModel, FormulationKind};
use crate::instance::{arc_set, Instance};
use crate::mip::Assignment;
use crate::oracle::{cover_loads, route_length, BpmpSolution};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type Diversions = BTreeMap<(usize, usize, usize), f64>;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("diversion digraph contains a cycle: {0:?}")]
    CyclicDiversions(Vec<(usize, usize)>),
    #[error("assignment is not integer-feasible at {0}")]
    NotIntegral(String),
    #[error("routing variables do not describe a simple route: {0}")]
    RouteDecode(String),
    #[error("accepted request {id} endpoints are not on the route in order")]
    OrderInconsistent { id: usize },
    #[error("assignment is missing a value for {0}")]
    MissingValue(String),
    #[error("negative-flow repair could not drive arc ({0},{1}) nonnegative")]
    RepairStuck(usize, usize),
}

/// Arc flows induced by acceptance values `y` (indexed by request id) and
/// diversion values `u`: the accepted weight between the arc's endpoints,
/// plus diversions feeding the arc, minus diversions draining it.
pub fn arc_flows_from_triples(
    inst: &Instance,
    y: &[f64],
    u: &Diversions,
) -> BTreeMap<(usize, usize), f64> {
    let mut flows: BTreeMap<(usize, usize), f64> = arc_set(inst.n)
        .expect("n >= 2")
        .into_iter()
        .map(|arc| (arc, 0.0))
        .collect();
    for r in &inst.requests {
        *flows.get_mut(&(r.origin, r.destination)).unwrap() += r.weight * y[r.id];
    }
    for (&(i, j, k), &v) in u {
        *flows.get_mut(&(i, k)).unwrap() += v;
        *flows.get_mut(&(k, j)).unwrap() += v;
        *flows.get_mut(&(i, j)).unwrap() -= v;
    }
    flows
}

/// The diversion digraph of a triples solution. Arc `(i,j)` becomes a node as
/// soon as any diversion touching its flow-accounting row is positive; each
/// positive `u(i,j,k)` contributes the edges `[i,j] -> [i,k]` and
/// `[i,j] -> [k,j]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiversionDigraph {
    pub nodes: BTreeSet<(usize, usize)>,
    pub children: BTreeMap<(usize, usize), BTreeSet<(usize, usize)>>,
}

impl DiversionDigraph {
    pub fn out_degree(&self, node: (usize, usize)) -> usize {
        self.children.get(&node).map_or(0, |c| c.len())
    }

    /// Nodes with no outgoing edge.
    pub fn leaves(&self) -> BTreeSet<(usize, usize)> {
        self.nodes
            .iter()
            .copied()
            .filter(|&n| self.out_degree(n) == 0)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn build_diversion_digraph(u: &Diversions) -> DiversionDigraph {
    let mut g = DiversionDigraph::default();
    for (&(i, j, k), &v) in u {
        if v > FLOW_EPS {
            g.nodes.insert((i, j));
            g.nodes.insert((i, k));
            g.nodes.insert((k, j));
            let entry = g.children.entry((i, j)).or_default();
            entry.insert((i, k));
            entry.insert((k, j));
        }
    }
    g
}

/// Topological order (parents before children) when the digraph is acyclic;
/// otherwise a witness cycle as a node list.
pub fn check_acyclic(
    g: &DiversionDigraph,
) -> Result<Vec<(usize, usize)>, Vec<(usize, usize)>> {
    let mut indegree: BTreeMap<(usize, usize), usize> =
        g.nodes.iter().map(|&n| (n, 0)).collect();
    for children in g.children.values() {
        for &c in children {
            *indegree.get_mut(&c).unwrap() += 1;
        }
    }
    let mut ready: Vec<(usize, usize)> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    let mut order = Vec::with_capacity(g.nodes.len());
    while let Some(node) = ready.pop() {
        order.push(node);
        if let Some(children) = g.children.get(&node) {
            for &c in children {
                let d = indegree.get_mut(&c).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(c);
                }
            }
        }
    }
    if order.len() == g.nodes.len() {
        return Ok(order);
    }
    // Strip dead ends from the residual graph so every surviving node keeps
    // a surviving child, then walk until a node repeats.
    let mut remaining: BTreeSet<_> = g
        .nodes
        .iter()
        .copied()
        .filter(|n| !order.contains(n))
        .collect();
    loop {
        let dead: Vec<_> = remaining
            .iter()
            .copied()
            .filter(|n| {
                g.children
                    .get(n)
                    .map_or(true, |c| c.iter().all(|x| !remaining.contains(x)))
            })
            .collect();
        if dead.is_empty() {
            break;
        }
        for n in dead {
            remaining.remove(&n);
        }
    }
    let start = *remaining.iter().next().unwrap();
    let mut path = vec![start];
    loop {
        let cur = *path.last().unwrap();
        let next = g.children[&cur]
            .iter()
            .copied()
            .find(|c| remaining.contains(c))
            .expect("residual node keeps a residual child");
        if let Some(pos) = path.iter().position(|&p| p == next) {
            path.drain(..pos);
            return Err(path);
        }
        path.push(next);
    }
}

/// Drive every arc flow up to at least `-FLOW_EPS` by shrinking diversions.
///
/// Processes digraph nodes in topological order; at a node with negative
/// flow, each positive diversion `u(i,j,k)` (ascending k) is reduced by
/// `min(u, -flow)`, which raises the flow on (i,j) and lowers it on the legs
/// (i,k) and (k,j). Acyclicity guarantees the cascade stops at leaves. On
/// triangle-inequality instances the recomputed profit never decreases, and
/// it is unchanged when every shrunk diversion has `d(i,k) + d(k,j) = d(i,j)`.
pub fn repair_negative_flows(
    inst: &Instance,
    y: &[f64],
    u: &Diversions,
) -> Result<Diversions, AnalysisError> {
    let digraph = build_diversion_digraph(u);
    let order = check_acyclic(&digraph).map_err(AnalysisError::CyclicDiversions)?;
    let mut u = u.clone();
    let mut flows = arc_flows_from_triples(inst, y, &u);
    for (i, j) in order {
        while flows[&(i, j)] < -FLOW_EPS {
            let key = u
                .range((i, j, 0)..(i, j, usize::MAX))
                .find(|(_, &v)| v > FLOW_EPS)
                .map(|(&k, _)| k);
            let Some((_, _, k)) = key else {
                return Err(AnalysisError::RepairStuck(i, j));
            };
            let value = u[&(i, j, k)];
            let delta = value.min(-flows[&(i, j)]);
            u.insert((i, j, k), value - delta);
            *flows.get_mut(&(i, j)).unwrap() += delta;
            *flows.get_mut(&(i, k)).unwrap() -= delta;
            *flows.get_mut(&(k, j)).unwrap() -= delta;
        }
    }
    u.retain(|_, v| *v > 0.0);
    Ok(u)
}

/// Profit of a decoded solution from first principles: revenue on accepted
/// requests' direct distances, carrying cost on the recorded arc loads,
/// vehicle cost on the route length.
pub fn profit(inst: &Instance, sol: &BpmpSolution) -> f64 {
    let p = &inst.params;
    let revenue: f64 = sol
        .accepted
        .iter()
        .map(|&id| {
            let r = &inst.requests[id];
            p.revenue_rate * inst.request_distance(r) * r.weight
        })
        .sum();
    let carry: f64 = sol
        .arc_loads
        .iter()
        .map(|(&(i, j), &load)| p.cost_rate * inst.distance(i, j) * load)
        .sum();
    revenue + (-carry) - p.cost_rate * p.vehicle_weight * route_length(inst, &sol.route)
}

/// The profit objective rewritten over acceptances, diversions and routing:
/// `(p - c) sum d w y  -  c sum (d_ik + d_kj - d_ij) u  -  c v sum d x`.
/// Agrees with the direct form whenever the arc flows are derived from
/// `(y, u)` by [`arc_flows_from_triples`].
pub fn alt_profit(
    inst: &Instance,
    y: &[f64],
    u: &Diversions,
    x: &BTreeMap<(usize, usize), f64>,
) -> f64 {
    let p = &inst.params;
    let margin: f64 = inst
        .requests
        .iter()
        .map(|r| (p.revenue_rate - p.cost_rate) * inst.request_distance(r) * r.weight * y[r.id])
        .sum();
    let detours: f64 = u
        .iter()
        .map(|(&(i, j, k), &v)| {
            p.cost_rate * (inst.distance(i, k) + inst.distance(k, j) - inst.distance(i, j)) * v
        })
        .sum();
    let vehicle: f64 = x
        .iter()
        .map(|(&(i, j), &v)| p.cost_rate * p.vehicle_weight * inst.distance(i, j) * v)
        .sum();
    margin - detours - vehicle
}

/// Every positive diversion must ride the route in order: i before k before
/// j. Returns one message per violation.
pub fn check_diversion_ordering(
    route: &[usize],
    u: &Diversions,
    threshold: f64,
) -> Vec<String> {
    let pos: BTreeMap<usize, usize> = route.iter().enumerate().map(|(p, &v)| (v, p)).collect();
    let mut out = Vec::new();
    for (&(i, j, k), &v) in u {
        if v <= threshold {
            continue;
        }
        match (pos.get(&i), pos.get(&k), pos.get(&j)) {
            (Some(pi), Some(pk), Some(pj)) if pi < pk && pk < pj => {}
            _ => out.push(format!(
                "diversion ({i},{j},{k}) = {v} is not ordered along the route"
            )),
        }
    }
    out
}

fn read(asg: &Assignment, built: &BuiltModel, var: crate::mip::VarRef) -> Result<f64, AnalysisError> {
    asg.get(var)
        .ok_or_else(|| AnalysisError::MissingValue(built.model.var(var).name.clone()))
}

/// Walk the routing variables from node 1 and return the visited sequence.
fn route_from_assignment(
    built: &BuiltModel,
    asg: &Assignment,
) -> Result<Vec<usize>, AnalysisError> {
    let n = built.map.seq.len();
    let mut on: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut active = 0usize;
    for (&(i, j), &x) in &built.map.route {
        let v = read(asg, built, x)?;
        if v >= 0.5 {
            on.entry(i).or_default().push(j);
            active += 1;
        }
    }
    let mut route = vec![1];
    let mut cur = 1;
    while cur != n {
        let succ = on.get(&cur).cloned().unwrap_or_default();
        match succ.as_slice() {
            [next] => {
                if route.contains(next) {
                    return Err(AnalysisError::RouteDecode(format!(
                        "node {next} visited twice"
                    )));
                }
                route.push(*next);
                cur = *next;
            }
            [] => {
                return Err(AnalysisError::RouteDecode(format!(
                    "no active arc leaves node {cur}"
                )))
            }
            _ => {
                return Err(AnalysisError::RouteDecode(format!(
                    "route branches at node {cur}"
                )))
            }
        }
    }
    if active != route.len() - 1 {
        return Err(AnalysisError::RouteDecode(
            "active routing arcs exist off the walked route".to_string(),
        ));
    }
    Ok(route)
}

/// Decode an integer-feasible assignment into a [`BpmpSolution`].
///
/// The route is read from the routing variables, acceptances from `y >= 0.5`.
/// For triples kinds the diversion values are repaired first and the arc
/// loads recomputed from the flow algebra; for node-arc kinds the loads come
/// from the commodity variables. Profit is recomputed, never copied.
pub fn decode_solution(
    inst: &Instance,
    built: &BuiltModel,
    asg: &Assignment,
) -> Result<BpmpSolution, AnalysisError> {
    for (var, def) in built.model.vars() {
        if def.kind == crate::mip::VarKind::Binary {
            let v = read(asg, built, var)?;
            if (v - v.round()).abs() > INTEGRALITY_TOL {
                return Err(AnalysisError::NotIntegral(def.name.clone()));
            }
        }
    }
    let route = route_from_assignment(built, asg)?;
    let pos: BTreeMap<usize, usize> = route.iter().enumerate().map(|(p, &v)| (v, p)).collect();

    let mut accepted = BTreeSet::new();
    for (&id, &y) in &built.map.accept {
        if read(asg, built, y)? >= 0.5 {
            accepted.insert(id);
        }
    }
    for &id in &accepted {
        let r = &inst.requests[id];
        match (pos.get(&r.origin), pos.get(&r.destination)) {
            (Some(po), Some(pt)) if po < pt => {}
            _ => return Err(AnalysisError::OrderInconsistent { id }),
        }
    }

    let route_arcs: Vec<(usize, usize)> = route.windows(2).map(|w| (w[0], w[1])).collect();
    let mut diversions = None;
    let arc_loads: BTreeMap<(usize, usize), f64> = match built.kind {
        FormulationKind::Triples | FormulationKind::EnhancedTriples => {
            let mut u = Diversions::new();
            for (&t, &var) in &built.map.diversion {
                let v = read(asg, built, var)?;
                if v > FLOW_EPS {
                    u.insert(t, v);
                }
            }
            let mut y = vec![0.0; inst.requests.len()];
            for &id in &accepted {
                y[id] = 1.0;
            }
            let repaired = repair_negative_flows(inst, &y, &u)?;
            let flows = arc_flows_from_triples(inst, &y, &repaired);
            diversions = Some(repaired);
            route_arcs
                .iter()
                .map(|arc| (*arc, flows[arc].max(0.0)))
                .collect()
        }
        FormulationKind::NodeArc | FormulationKind::EnhancedNodeArc => {
            let mut loads: BTreeMap<(usize, usize), f64> =
                route_arcs.iter().map(|&arc| (arc, 0.0)).collect();
            for (&(id, i, j), &z) in &built.map.request_arc {
                if read(asg, built, z)? >= 0.5 {
                    if let Some(slot) = loads.get_mut(&(i, j)) {
                        *slot += inst.requests[id].weight;
                    }
                }
            }
            loads
        }
    };

    let mut sol = BpmpSolution {
        route,
        accepted,
        profit: 0.0,
        arc_loads,
        diversions,
    };
    sol.profit = profit(inst, &sol);
    Ok(sol)
}

/// Encode a combinatorial solution as a total assignment for `built`.
///
/// Requests ride the route between their endpoints: node-arc kinds set the
/// commodity variables along the segment, triples kinds chain diversions
/// toward the destination (`u(q_t, dest, q_{t+1})` for each inner stop).
/// Sequence variables take route positions; off-route nodes park at `n - 1`,
/// which satisfies both subtour eliminations.
pub fn encode_solution(inst: &Instance, built: &BuiltModel, sol: &BpmpSolution) -> Assignment {
    let n = inst.n;
    let mut asg = Assignment::empty(&built.model);
    let pos: BTreeMap<usize, usize> =
        sol.route.iter().enumerate().map(|(p, &v)| (v, p)).collect();
    for (&arc, &x) in &built.map.route {
        let on = sol
            .route
            .windows(2)
            .any(|w| (w[0], w[1]) == arc);
        asg.set(x, if on { 1.0 } else { 0.0 });
    }
    for (&id, &y) in &built.map.accept {
        asg.set(y, if sol.accepted.contains(&id) { 1.0 } else { 0.0 });
    }
    for (&node, &s) in &built.map.seq {
        let v = pos
            .get(&node)
            .map(|&p| p as f64)
            .unwrap_or((n - 1) as f64);
        asg.set(s, v);
    }
    let loads = cover_loads(inst, &sol.route, &sol.accepted);
    for (&arc, &t) in &built.map.flow {
        asg.set(t, loads.get(&arc).copied().unwrap_or(0.0));
    }
    match built.kind {
        FormulationKind::NodeArc | FormulationKind::EnhancedNodeArc => {
            for &id in &sol.accepted {
                let r = &inst.requests[id];
                let (po, pt) = (pos[&r.origin], pos[&r.destination]);
                for w in sol.route[po..=pt].windows(2) {
                    asg.set(built.map.request_arc[&(id, w[0], w[1])], 1.0);
                }
            }
        }
        FormulationKind::Triples | FormulationKind::EnhancedTriples => {
            let mut u = Diversions::new();
            for &id in &sol.accepted {
                let r = &inst.requests[id];
                let (po, pt) = (pos[&r.origin], pos[&r.destination]);
                let segment = &sol.route[po..=pt];
                for t in 0..segment.len().saturating_sub(2) {
                    *u.entry((segment[t], r.destination, segment[t + 1]))
                        .or_insert(0.0) += r.weight;
                }
            }
            for (t, v) in u {
                asg.set(built.map.diversion[&t], v);
            }
        }
    }
    asg.fill_missing(0.0);
    asg
}

/// Check a decoded solution against the instance: route shape, distance
/// limit, per-arc capacity, acceptance ordering, load and profit
/// recomputation. Empty report means valid.
pub fn validate_solution(inst: &Instance, sol: &BpmpSolution) -> crate::instance::ValidationReport {
    let mut report = crate::instance::ValidationReport::default();
    let n = inst.n;
    let route = &sol.route;
    if route.first() != Some(&1) || route.last() != Some(&n) {
        report
            .errors
            .push("route must start at node 1 and end at the depot".to_string());
        return report;
    }
    let mut seen = BTreeSet::new();
    for &v in route {
        if !seen.insert(v) {
            report.errors.push(format!("route visits node {v} twice"));
        }
        if v < 1 || v > n {
            report.errors.push(format!("route node {v} out of range"));
        }
    }
    let len = route_length(inst, route);
    if len > inst.params.distance_limit + 1e-6 {
        report.errors.push(format!(
            "route length {len} exceeds the distance limit {}",
            inst.params.distance_limit
        ));
    }
    let pos: BTreeMap<usize, usize> = route.iter().enumerate().map(|(p, &v)| (v, p)).collect();
    for &id in &sol.accepted {
        let Some(r) = inst.requests.get(id) else {
            report.errors.push(format!("accepted request {id} does not exist"));
            continue;
        };
        match (pos.get(&r.origin), pos.get(&r.destination)) {
            (Some(po), Some(pt)) if po < pt => {}
            _ => report.errors.push(format!(
                "accepted request {id} endpoints are not on the route in order"
            )),
        }
    }
    if !report.errors.is_empty() {
        return report;
    }
    let expect = cover_loads(inst, route, &sol.accepted);
    for (&(i, j), &load) in &sol.arc_loads {
        if !expect.contains_key(&(i, j)) {
            report
                .errors
                .push(format!("arc load recorded for off-route arc ({i},{j})"));
            continue;
        }
        if load > inst.params.capacity + 1e-9 {
            report.errors.push(format!(
                "load {load} on arc ({i},{j}) exceeds capacity {}",
                inst.params.capacity
            ));
        }
        if (load - expect[&(i, j)]).abs() > 1e-6 {
            report.errors.push(format!(
                "load {load} on arc ({i},{j}) disagrees with the accepted requests ({})",
                expect[&(i, j)]
            ));
        }
    }
    let recomputed = profit(
        inst,
        &BpmpSolution {
            route: sol.route.clone(),
            accepted: sol.accepted.clone(),
            profit: 0.0,
            arc_loads: expect,
            diversions: None,
        },
    );
    if (recomputed - sol.profit).abs() > 1e-6 {
        report.errors.push(format!(
            "recorded profit {} disagrees with recomputation {recomputed}",
            sol.profit
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn all_ones(inst: &Instance) -> Vec<f64> {
        vec![1.0; inst.requests.len()]
    }

    #[test]
    fn reference_flows_match_table() {
        let t4 = fixtures::four_node_line();
        let (_, u) = fixtures::four_node_reference();
        let flows = arc_flows_from_triples(&t4, &all_ones(&t4), &u);
        for ((i, j), expect) in fixtures::four_node_reference_flows() {
            assert!(
                (flows[&(i, j)] - expect).abs() < 1e-12,
                "arc ({i},{j}): {} vs {expect}",
                flows[&(i, j)]
            );
        }
    }

    #[test]
    fn alternative_diversions_same_flows() {
        let t4 = fixtures::four_node_line();
        let y = all_ones(&t4);
        let reference = arc_flows_from_triples(&t4, &y, &fixtures::four_node_reference().1);
        let alternative =
            arc_flows_from_triples(&t4, &y, &fixtures::four_node_alternative_diversions());
        for (arc, v) in &reference {
            assert!((alternative[arc] - v).abs() < 1e-12, "arc {arc:?}");
        }
    }

    #[test]
    fn zero_everything_zero_flows() {
        let t4 = fixtures::four_node_line();
        let flows = arc_flows_from_triples(&t4, &vec![0.0; 6], &Diversions::new());
        assert!(flows.values().all(|&v| v == 0.0));
    }

    #[test]
    fn digraph_of_reference_solution() {
        let (_, u) = fixtures::four_node_reference();
        let g = build_diversion_digraph(&u);
        assert_eq!(g.nodes.len(), 6);
        let expect_children = |from: (usize, usize), to: &[(usize, usize)]| {
            assert_eq!(
                g.children[&from],
                to.iter().copied().collect::<BTreeSet<_>>()
            );
        };
        expect_children((1, 3), &[(1, 2), (2, 3)]);
        expect_children((1, 4), &[(1, 2), (2, 4)]);
        expect_children((2, 4), &[(2, 3), (3, 4)]);
        assert_eq!(
            g.leaves(),
            [(1, 2), (2, 3), (3, 4)].into_iter().collect::<BTreeSet<_>>()
        );
        assert!(check_acyclic(&g).is_ok());
    }

    #[test]
    fn empty_digraph_is_acyclic() {
        let g = build_diversion_digraph(&Diversions::new());
        assert!(g.is_empty());
        assert_eq!(check_acyclic(&g).unwrap(), vec![]);
    }

    #[test]
    fn cycle_detected_with_witness() {
        // u(i,j,k), u(i,k,l), u(i,l,j) all positive forms a directed cycle
        // [i,j] -> [i,k] -> [i,l] -> [i,j] on nodes 1..=5 with i=1.
        let mut u = Diversions::new();
        u.insert((1, 2, 3), 0.5); // [1,2] -> [1,3], [3,2]
        u.insert((1, 3, 4), 0.5); // [1,3] -> [1,4], [4,3]
        u.insert((1, 4, 2), 0.5); // [1,4] -> [1,2], [2,4]
        let g = build_diversion_digraph(&u);
        let cycle = check_acyclic(&g).unwrap_err();
        assert_eq!(cycle.len(), 3);
        for node in [(1, 2), (1, 3), (1, 4)] {
            assert!(cycle.contains(&node), "{cycle:?}");
        }
    }

    #[test]
    fn repair_single_step() {
        // Accept only request (1,4) with weight 0.2 but divert 0.3 away from
        // the pair: flow on (1,4) goes to -0.1 and one shrink fixes it.
        let t4 = fixtures::four_node_line();
        let mut y = vec![0.0; 6];
        y[2] = 1.0; // request (1,4)
        let mut u = Diversions::new();
        u.insert((1, 4, 2), 0.1);
        u.insert((1, 4, 3), 0.2);
        let before = arc_flows_from_triples(&t4, &y, &u);
        assert!((before[&(1, 4)] + 0.1).abs() < 1e-12);

        let repaired = repair_negative_flows(&t4, &y, &u).unwrap();
        assert!(repaired.get(&(1, 4, 2)).is_none(), "shrunk to zero and dropped");
        assert!((repaired[&(1, 4, 3)] - 0.2).abs() < 1e-12);
        let after = arc_flows_from_triples(&t4, &y, &repaired);
        assert!(after.values().all(|&v| v >= -FLOW_EPS));
        assert!((after[&(1, 4)]).abs() < 1e-12);
        assert!((after[&(1, 2)] - (before[&(1, 2)] - 0.1)).abs() < 1e-12);
        assert!((after[&(2, 4)] - (before[&(2, 4)] - 0.1)).abs() < 1e-12);

        // Collinear nodes: the shrunk diversion has d(1,2)+d(2,4) = d(1,4),
        // so the profit is unchanged.
        let x: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let before_profit = alt_profit(&t4, &y, &u, &x);
        let after_profit = alt_profit(&t4, &y, &repaired, &x);
        assert!((before_profit - after_profit).abs() < 1e-12);
    }

    #[test]
    fn repair_no_op_when_nonnegative() {
        let t4 = fixtures::four_node_line();
        let (_, u) = fixtures::four_node_reference();
        let repaired = repair_negative_flows(&t4, &all_ones(&t4), &u).unwrap();
        assert_eq!(repaired, u);
    }

    #[test]
    fn repair_cascades_through_children() {
        // Stack two diversions so that repairing (1,5) drives (1,4) negative
        // as well; the topological order settles both.
        let mut inst = fixtures::four_node_line();
        inst.n = 5;
        inst.dist = vec![vec![0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                inst.dist[i][j] = (i as f64 - j as f64).abs();
            }
        }
        inst.requests = vec![crate::instance::Request {
            id: 0,
            origin: 1,
            destination: 5,
            weight: 0.2,
        }];
        let y = vec![1.0];
        let mut u = Diversions::new();
        u.insert((1, 5, 4), 0.5); // flow(1,5) = 0.2 - 0.5 = -0.3
        u.insert((1, 4, 2), 0.5); // feeds (1,4): 0.5 - 0.5 = 0, child of [1,5] repair
        let before = arc_flows_from_triples(&inst, &y, &u);
        assert!(before[&(1, 5)] < 0.0);
        let repaired = repair_negative_flows(&inst, &y, &u).unwrap();
        let after = arc_flows_from_triples(&inst, &y, &repaired);
        assert!(
            after.values().all(|&v| v >= -FLOW_EPS),
            "flows {after:?} diversions {repaired:?}"
        );
    }

    #[test]
    fn repair_rejects_cycles() {
        let inst = fixtures::full_request_instance(5);
        let mut u = Diversions::new();
        u.insert((1, 2, 3), 0.5);
        u.insert((1, 3, 4), 0.5);
        u.insert((1, 4, 2), 0.5);
        let y = vec![0.0; inst.requests.len()];
        assert!(matches!(
            repair_negative_flows(&inst, &y, &u),
            Err(AnalysisError::CyclicDiversions(_))
        ));
    }

    #[test]
    fn profit_and_alt_profit_agree_on_reference() {
        let t4 = fixtures::four_node_line();
        let (route, u) = fixtures::four_node_reference();
        let y = all_ones(&t4);
        let x: BTreeMap<(usize, usize), f64> =
            route.windows(2).map(|w| ((w[0], w[1]), 1.0)).collect();
        let alt = alt_profit(&t4, &y, &u, &x);
        assert!((alt - 0.2).abs() < 1e-12, "{alt}");

        let sol = crate::oracle::solve_exact(&t4, Default::default()).unwrap();
        assert!((profit(&t4, &sol) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn identity_on_random_samples() {
        // Objective identity: the direct form over derived flows equals the
        // diversion form, for arbitrary (y, u, x).
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [4usize, 5, 6] {
            let inst = fixtures::full_request_instance(n);
            for _ in 0..20 {
                let y: Vec<f64> = (0..inst.requests.len()).map(|_| rng.gen()).collect();
                let mut u = Diversions::new();
                for t in crate::instance::triple_set(n) {
                    if rng.gen_bool(0.3) {
                        u.insert(t, rng.gen::<f64>() * 2.0);
                    }
                }
                let x: BTreeMap<(usize, usize), f64> = crate::instance::arc_set(n)
                    .unwrap()
                    .into_iter()
                    .map(|a| (a, if rng.gen_bool(0.4) { 1.0 } else { 0.0 }))
                    .collect();
                let flows = arc_flows_from_triples(&inst, &y, &u);
                let p = &inst.params;
                let direct: f64 = inst
                    .requests
                    .iter()
                    .map(|r| p.revenue_rate * inst.request_distance(r) * r.weight * y[r.id])
                    .sum::<f64>()
                    - flows
                        .iter()
                        .map(|(&(i, j), &f)| p.cost_rate * inst.distance(i, j) * f)
                        .sum::<f64>()
                    - x.iter()
                        .map(|(&(i, j), &v)| {
                            p.cost_rate * p.vehicle_weight * inst.distance(i, j) * v
                        })
                        .sum::<f64>();
                let alt = alt_profit(&inst, &y, &u, &x);
                assert!((direct - alt).abs() < 1e-9, "direct {direct} alt {alt}");
            }
        }
    }

    #[test]
    fn validate_accepts_oracle_output() {
        let t4 = fixtures::four_node_line();
        let sol = crate::oracle::solve_exact(&t4, Default::default()).unwrap();
        let report = validate_solution(&t4, &sol);
        assert!(report.is_valid(), "{:?}", report.errors);
    }

    #[test]
    fn validate_rejects_bad_ordering_and_distance() {
        let t4 = fixtures::four_node_line();
        let mut sol = crate::oracle::solve_exact(&t4, Default::default()).unwrap();
        sol.route = vec![1, 3, 2, 4]; // request (2,3) now rides backwards
        let report = validate_solution(&t4, &sol);
        assert!(report
            .errors
            .iter()
            .any(|e| e.contains("not on the route in order")));

        let mut sol = crate::oracle::solve_exact(&t4, Default::default()).unwrap();
        sol.route = vec![1, 3, 2, 4];
        sol.accepted.clear();
        sol.arc_loads.clear();
        sol.profit = -0.5;
        let mut tight = t4.clone();
        tight.params.distance_limit = 4.0; // route length 5 exceeds it
        let report = validate_solution(&tight, &sol);
        assert!(report.errors.iter().any(|e| e.contains("exceeds the distance limit")));
    }

    #[test]
    fn ordering_check_flags_misordered_diversion() {
        let route = vec![1, 2, 3, 4];
        let mut u = Diversions::new();
        u.insert((1, 3, 2), 0.5); // 1 < 2 < 3 along the route: fine
        u.insert((2, 4, 3), 1e-9); // below threshold: ignored
        u.insert((3, 2, 4), 0.5); // needs 3 < 4 < 2: violation
        let violations = check_diversion_ordering(&route, &u, 1e-6);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("(3,2,4)"));
    }
}
