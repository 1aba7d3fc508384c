//! The four MILP formulations of the backhaul problem.
//!
//! All four share the routing skeleton (unit route flow from node 1 to node
//! `n`, distance limit, sequence-based subtour elimination) and the profit
//! objective. They differ in how cargo movement is modeled:
//!
//! * `NodeArc` routes every request as its own commodity with per-arc binary
//!   variables, linked to the route by a big-M row, and caps each arc flow at
//!   the capacity.
//! * `EnhancedNodeArc` drops the node-degree rows and replaces the big-M and
//!   capacity rows with conditional arc-flow rows `theta <= Q x`.
//! * `Triples` replaces the commodity variables with diversion variables
//!   `u_i_j_k` (flow from i to j composed of flow i->k adjoined to flow
//!   k->j) and one flow-accounting row per arc.
//! * `EnhancedTriples` adds node-degree rows and per-node demand cuts, lifts
//!   the subtour elimination rows, bounds the sequence variables, frees the
//!   arc flows and drops the diversion-to-route linking rows.
//!
//! Builders are pure: the same instance always produces byte-identical
//! models.

use crate::instance::{
    arc_set, compute_big_m, triple_set, validate_instance, BigMMode, Instance,
};
use crate::mip::{MilpModel, MipError, Sense, VarRef};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulationKind {
    NodeArc,
    EnhancedNodeArc,
    Triples,
    EnhancedTriples,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 4] = [
        FormulationKind::NodeArc,
        FormulationKind::EnhancedNodeArc,
        FormulationKind::Triples,
        FormulationKind::EnhancedTriples,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulationKind::NodeArc => "node-arc",
            FormulationKind::EnhancedNodeArc => "enhanced-node-arc",
            FormulationKind::Triples => "triples",
            FormulationKind::EnhancedTriples => "enhanced-triples",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "node-arc" | "node_arc" => Some(FormulationKind::NodeArc),
            "enhanced-node-arc" | "enhanced_node_arc" => Some(FormulationKind::EnhancedNodeArc),
            "triples" => Some(FormulationKind::Triples),
            "enhanced-triples" | "enhanced_triples" => Some(FormulationKind::EnhancedTriples),
            _ => None,
        }
    }
}

/// Lookup from model roles to variable handles.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    /// `x` routing variables by arc.
    pub route: BTreeMap<(usize, usize), VarRef>,
    /// `y` acceptance variables by request id.
    pub accept: BTreeMap<usize, VarRef>,
    /// `theta` arc-flow variables by arc.
    pub flow: BTreeMap<(usize, usize), VarRef>,
    /// `s` sequence variables by node.
    pub seq: BTreeMap<usize, VarRef>,
    /// `u` diversion variables by triple (triples kinds only).
    pub diversion: BTreeMap<(usize, usize, usize), VarRef>,
    /// `z` commodity variables by (request id, arc tail, arc head)
    /// (node-arc kinds only).
    pub request_arc: BTreeMap<(usize, usize, usize), VarRef>,
}

/// A formulation instantiated on a concrete instance.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: MilpModel,
    pub map: VarMap,
    pub kind: FormulationKind,
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("triple ({0}, {1}, {2}) is outside the instance's triple set")]
    UnknownTriple(usize, usize, usize),
    #[error("arcs do not form a simple route from node 1 to the depot: {0}")]
    NotARoute(String),
    #[error("request {0} does not lie on the fixed route in order")]
    RequestNotOnRoute(usize),
    #[error(transparent)]
    Mip(#[from] MipError),
}

struct Builder<'a> {
    inst: &'a Instance,
    arcs: Vec<(usize, usize)>,
    model: MilpModel,
    map: VarMap,
}

impl<'a> Builder<'a> {
    /// Register x, y, theta, s and the shared profit objective. `free_flow`
    /// leaves the flow variables unbounded below (enhanced triples only).
    fn new(inst: &'a Instance, free_flow: bool) -> Result<Self, FormulationError> {
        let report = validate_instance(inst);
        if !report.is_valid() {
            return Err(FormulationError::InvalidInstance(report.errors.join("; ")));
        }
        let arcs = arc_set(inst.n).expect("validated n >= 2");
        let mut model = MilpModel::new();
        let mut map = VarMap::default();

        for &(i, j) in &arcs {
            map.route.insert((i, j), model.add_binary(format!("x_{i}_{j}"))?);
        }
        let mut pair_counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for r in &inst.requests {
            *pair_counts.entry((r.origin, r.destination)).or_insert(0) += 1;
        }
        for r in &inst.requests {
            let name = if pair_counts[&(r.origin, r.destination)] == 1 {
                format!("y_{}_{}", r.origin, r.destination)
            } else {
                format!("y_r{}", r.id)
            };
            map.accept.insert(r.id, model.add_binary(name)?);
        }
        let flow_lower = if free_flow { f64::NEG_INFINITY } else { 0.0 };
        for &(i, j) in &arcs {
            let t = model.add_continuous(format!("theta_{i}_{j}"), flow_lower, f64::INFINITY)?;
            map.flow.insert((i, j), t);
        }
        for i in 1..=inst.n {
            let (lo, hi) = if i == 1 { (0.0, 0.0) } else { (0.0, f64::INFINITY) };
            map.seq.insert(i, model.add_continuous(format!("s_{i}"), lo, hi)?);
        }

        let p = &inst.params;
        let mut objective = Vec::new();
        for r in &inst.requests {
            objective.push((
                map.accept[&r.id],
                p.revenue_rate * inst.request_distance(r) * r.weight,
            ));
        }
        for &(i, j) in &arcs {
            objective.push((map.flow[&(i, j)], -p.cost_rate * inst.distance(i, j)));
        }
        for &(i, j) in &arcs {
            objective.push((
                map.route[&(i, j)],
                -p.cost_rate * p.vehicle_weight * inst.distance(i, j),
            ));
        }
        model.set_objective(objective);

        Ok(Builder { inst, arcs, model, map })
    }

    /// Unit route flow: one arc out of the start, one into the depot,
    /// balance at interior nodes.
    fn route_flow(&mut self) {
        let n = self.inst.n;
        let source: Vec<_> = self
            .arcs
            .iter()
            .filter(|&&(i, _)| i == 1)
            .map(|a| (self.map.route[a], 1.0))
            .collect();
        self.model.add_constraint("route_source", source, Sense::Eq, 1.0);
        let sink: Vec<_> = self
            .arcs
            .iter()
            .filter(|&&(_, j)| j == n)
            .map(|a| (self.map.route[a], 1.0))
            .collect();
        self.model.add_constraint("route_sink", sink, Sense::Eq, 1.0);
        for k in 2..n {
            let mut terms = Vec::new();
            for &(i, j) in &self.arcs {
                if j == k {
                    terms.push((self.map.route[&(i, j)], 1.0));
                } else if i == k {
                    terms.push((self.map.route[&(i, j)], -1.0));
                }
            }
            self.model
                .add_constraint(format!("route_balance_{k}"), terms, Sense::Eq, 0.0);
        }
    }

    /// At most one incoming route arc per interior node.
    fn node_degree(&mut self) {
        for k in 2..self.inst.n {
            let terms: Vec<_> = self
                .arcs
                .iter()
                .filter(|&&(_, j)| j == k)
                .map(|a| (self.map.route[a], 1.0))
                .collect();
            self.model
                .add_constraint(format!("node_degree_{k}"), terms, Sense::Le, 1.0);
        }
    }

    fn distance_limit(&mut self) {
        let terms: Vec<_> = self
            .arcs
            .iter()
            .map(|&(i, j)| (self.map.route[&(i, j)], self.inst.distance(i, j)))
            .collect();
        self.model.add_constraint(
            "distance_limit",
            terms,
            Sense::Le,
            self.inst.params.distance_limit,
        );
    }

    /// Sequence-based subtour elimination, one row per arc.
    fn mtz(&mut self) {
        let n = self.inst.n;
        for idx in 0..self.arcs.len() {
            let (i, j) = self.arcs[idx];
            let terms = vec![
                (self.map.seq[&i], 1.0),
                (self.map.seq[&j], -1.0),
                (self.map.route[&(i, j)], (n + 1) as f64),
            ];
            self.model
                .add_constraint(format!("mtz_{i}_{j}"), terms, Sense::Le, n as f64);
        }
    }

    /// Lifted subtour elimination over ordered interior pairs.
    fn lifted_mtz(&mut self) {
        let n = self.inst.n;
        for i in 2..n {
            for j in 2..n {
                if i == j {
                    continue;
                }
                let terms = vec![
                    (self.map.seq[&i], 1.0),
                    (self.map.seq[&j], -1.0),
                    (self.map.route[&(i, j)], (n - 1) as f64),
                    (self.map.route[&(j, i)], (n - 3) as f64),
                ];
                self.model.add_constraint(
                    format!("lifted_mtz_{i}_{j}"),
                    terms,
                    Sense::Le,
                    (n - 2) as f64,
                );
            }
        }
    }

    /// `theta <= Q x` per arc: flow only on arcs the vehicle drives.
    fn conditional_arc_flow(&mut self) {
        let q = self.inst.params.capacity;
        for idx in 0..self.arcs.len() {
            let (i, j) = self.arcs[idx];
            let terms = vec![
                (self.map.flow[&(i, j)], 1.0),
                (self.map.route[&(i, j)], -q),
            ];
            self.model
                .add_constraint(format!("cond_arc_flow_{i}_{j}"), terms, Sense::Le, 0.0);
        }
    }

    /// One binary per (request, arc).
    fn commodity_vars(&mut self) -> Result<(), FormulationError> {
        for r in &self.inst.requests {
            for &(i, j) in &self.arcs {
                let z = self.model.add_binary(format!("z_r{}_{}_{}", r.id, i, j))?;
                self.map.request_arc.insert((r.id, i, j), z);
            }
        }
        Ok(())
    }

    /// Big-M coupling of commodity routing to the vehicle route.
    fn big_m_linking(&mut self, mode: BigMMode) {
        let m_value = compute_big_m(self.inst, mode) as f64;
        for idx in 0..self.arcs.len() {
            let (i, j) = self.arcs[idx];
            let mut terms: Vec<_> = self
                .inst
                .requests
                .iter()
                .map(|r| (self.map.request_arc[&(r.id, i, j)], 1.0))
                .collect();
            terms.push((self.map.route[&(i, j)], -m_value));
            self.model
                .add_constraint(format!("bigm_link_{i}_{j}"), terms, Sense::Le, 0.0);
        }
    }

    /// Per-request unit flow from origin to destination, switched by the
    /// acceptance variable, plus the arc-load definition rows.
    fn commodity_rows(&mut self) {
        for r in &self.inst.requests {
            let mut source: Vec<_> = self
                .arcs
                .iter()
                .filter(|&&(i, _)| i == r.origin)
                .map(|&(i, j)| (self.map.request_arc[&(r.id, i, j)], 1.0))
                .collect();
            source.push((self.map.accept[&r.id], -1.0));
            self.model
                .add_constraint(format!("req_source_r{}", r.id), source, Sense::Eq, 0.0);

            let mut sink: Vec<_> = self
                .arcs
                .iter()
                .filter(|&&(_, j)| j == r.destination)
                .map(|&(i, j)| (self.map.request_arc[&(r.id, i, j)], 1.0))
                .collect();
            sink.push((self.map.accept[&r.id], -1.0));
            self.model
                .add_constraint(format!("req_sink_r{}", r.id), sink, Sense::Eq, 0.0);

            for h in 1..=self.inst.n {
                if h == r.origin || h == r.destination {
                    continue;
                }
                let mut terms = Vec::new();
                for &(i, j) in &self.arcs {
                    if j == h {
                        terms.push((self.map.request_arc[&(r.id, i, j)], 1.0));
                    } else if i == h {
                        terms.push((self.map.request_arc[&(r.id, i, j)], -1.0));
                    }
                }
                self.model.add_constraint(
                    format!("req_balance_r{}_{}", r.id, h),
                    terms,
                    Sense::Eq,
                    0.0,
                );
            }
        }
        for idx in 0..self.arcs.len() {
            let (i, j) = self.arcs[idx];
            let mut terms = vec![(self.map.flow[&(i, j)], 1.0)];
            for r in &self.inst.requests {
                terms.push((self.map.request_arc[&(r.id, i, j)], -r.weight));
            }
            self.model
                .add_constraint(format!("arc_load_{i}_{j}"), terms, Sense::Eq, 0.0);
        }
    }

    fn capacity(&mut self) {
        let q = self.inst.params.capacity;
        for idx in 0..self.arcs.len() {
            let (i, j) = self.arcs[idx];
            let terms = vec![(self.map.flow[&(i, j)], 1.0)];
            self.model
                .add_constraint(format!("capacity_{i}_{j}"), terms, Sense::Le, q);
        }
    }

    /// Diversion variables plus the per-arc flow-accounting rows. Each
    /// `u_(i,j,k)` feeds the legs (i,k) and (k,j) and drains the pair (i,j).
    fn triples_rows(&mut self) -> Result<(), FormulationError> {
        let triples = triple_set(self.inst.n);
        for &(i, j, k) in &triples {
            let u = self
                .model
                .add_continuous(format!("u_{i}_{j}_{k}"), 0.0, f64::INFINITY)?;
            self.map.diversion.insert((i, j, k), u);
        }
        let mut arc_terms: BTreeMap<(usize, usize), Vec<(VarRef, f64)>> = BTreeMap::new();
        for &(i, j, k) in &triples {
            let u = self.map.diversion[&(i, j, k)];
            arc_terms.entry((i, k)).or_default().push((u, -1.0));
            arc_terms.entry((k, j)).or_default().push((u, -1.0));
            arc_terms.entry((i, j)).or_default().push((u, 1.0));
        }
        for idx in 0..self.arcs.len() {
            let (i, j) = self.arcs[idx];
            let mut terms = vec![(self.map.flow[&(i, j)], 1.0)];
            for r in self.inst.requests_between(i, j) {
                terms.push((self.map.accept[&r.id], -r.weight));
            }
            if let Some(extra) = arc_terms.get(&(i, j)) {
                terms.extend_from_slice(extra);
            }
            self.model
                .add_constraint(format!("triples_{i}_{j}"), terms, Sense::Eq, 0.0);
        }
        Ok(())
    }

    /// `u <= Q x` on the first diversion leg.
    fn diversion_route_linking(&mut self) {
        let q = self.inst.params.capacity;
        let entries: Vec<_> = self.map.diversion.iter().map(|(&t, &u)| (t, u)).collect();
        for ((i, j, k), u) in entries {
            let terms = vec![(u, 1.0), (self.map.route[&(i, k)], -q)];
            self.model
                .add_constraint(format!("link_u_{i}_{j}_{k}"), terms, Sense::Le, 0.0);
        }
    }

    /// Accepted weight out of (into) a node cannot exceed the capacity; one
    /// cut per node with at least one incident request in that direction.
    fn demand_cuts(&mut self) {
        let q = self.inst.params.capacity;
        for i in 1..self.inst.n {
            let terms: Vec<_> = self
                .inst
                .requests
                .iter()
                .filter(|r| r.origin == i)
                .map(|r| (self.map.accept[&r.id], r.weight))
                .collect();
            if !terms.is_empty() {
                self.model
                    .add_constraint(format!("demand_out_{i}"), terms, Sense::Le, q);
            }
        }
        for j in 2..=self.inst.n {
            let terms: Vec<_> = self
                .inst
                .requests
                .iter()
                .filter(|r| r.destination == j)
                .map(|r| (self.map.accept[&r.id], r.weight))
                .collect();
            if !terms.is_empty() {
                self.model
                    .add_constraint(format!("demand_in_{j}"), terms, Sense::Le, q);
            }
        }
    }

    /// Branch on routing decisions before acceptance decisions.
    fn prioritize_routing(&mut self) {
        for &x in self.map.route.values() {
            self.model.set_branch_priority(x, 1);
        }
    }

    fn finish(self, kind: FormulationKind) -> BuiltModel {
        BuiltModel { model: self.model, map: self.map, kind }
    }
}

/// Node-arc formulation with an explicit big-M mode.
pub fn build_node_arc_with(
    inst: &Instance,
    big_m: BigMMode,
) -> Result<BuiltModel, FormulationError> {
    let mut b = Builder::new(inst, false)?;
    b.commodity_vars()?;
    b.route_flow();
    b.node_degree();
    b.distance_limit();
    b.mtz();
    b.big_m_linking(big_m);
    b.commodity_rows();
    b.capacity();
    b.prioritize_routing();
    Ok(b.finish(FormulationKind::NodeArc))
}

/// Node-arc formulation with the data-independent big-M.
pub fn build_node_arc(inst: &Instance) -> Result<BuiltModel, FormulationError> {
    build_node_arc_with(inst, BigMMode::DataIndependent)
}

/// Node-arc variant without node-degree, big-M or plain capacity rows;
/// conditional arc-flow rows couple flow to routing instead.
pub fn build_enhanced_node_arc(inst: &Instance) -> Result<BuiltModel, FormulationError> {
    let mut b = Builder::new(inst, false)?;
    b.commodity_vars()?;
    b.route_flow();
    b.distance_limit();
    b.mtz();
    b.commodity_rows();
    b.conditional_arc_flow();
    b.prioritize_routing();
    Ok(b.finish(FormulationKind::EnhancedNodeArc))
}

/// Triples formulation: diversion variables with per-arc flow accounting,
/// nonnegative arc flows, diversion-to-route linking.
pub fn build_triples(inst: &Instance) -> Result<BuiltModel, FormulationError> {
    let mut b = Builder::new(inst, false)?;
    b.route_flow();
    b.distance_limit();
    b.mtz();
    b.conditional_arc_flow();
    b.triples_rows()?;
    b.diversion_route_linking();
    Ok(b.finish(FormulationKind::Triples))
}

/// Enhanced triples formulation: node-degree rows and demand cuts added,
/// subtour elimination lifted, sequence variables boxed to `[1, n]`, arc
/// flows free, diversion-to-route linking dropped.
pub fn build_enhanced_triples(inst: &Instance) -> Result<BuiltModel, FormulationError> {
    let mut b = Builder::new(inst, true)?;
    b.route_flow();
    b.node_degree();
    b.distance_limit();
    b.lifted_mtz();
    b.conditional_arc_flow();
    b.triples_rows()?;
    b.demand_cuts();
    for i in 2..=inst.n {
        let s = b.map.seq[&i];
        b.model.set_bounds(s, 1.0, inst.n as f64)?;
    }
    Ok(b.finish(FormulationKind::EnhancedTriples))
}

pub fn build(inst: &Instance, kind: FormulationKind) -> Result<BuiltModel, FormulationError> {
    match kind {
        FormulationKind::NodeArc => build_node_arc(inst),
        FormulationKind::EnhancedNodeArc => build_enhanced_node_arc(inst),
        FormulationKind::Triples => build_triples(inst),
        FormulationKind::EnhancedTriples => build_enhanced_triples(inst),
    }
}

/// Enhanced triples model with every diversion variable outside `attractive`
/// fixed to zero.
pub fn build_restricted_triples(
    inst: &Instance,
    attractive: &BTreeSet<(usize, usize, usize)>,
) -> Result<BuiltModel, FormulationError> {
    let mut built = build_enhanced_triples(inst)?;
    for &(i, j, k) in attractive {
        if !built.map.diversion.contains_key(&(i, j, k)) {
            return Err(FormulationError::UnknownTriple(i, j, k));
        }
    }
    let to_fix: Vec<VarRef> = built
        .map
        .diversion
        .iter()
        .filter(|(t, _)| !attractive.contains(t))
        .map(|(_, &u)| u)
        .collect();
    for u in to_fix {
        built.model.set_bounds(u, 0.0, 0.0)?;
    }
    Ok(built)
}

/// Order the arcs of a simple 1 -> n route; errors when they do not form one.
pub fn route_from_arcs(
    route_arcs: &[(usize, usize)],
    n: usize,
) -> Result<Vec<usize>, FormulationError> {
    let fail = |reason: String| FormulationError::NotARoute(reason);
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for &(i, j) in route_arcs {
        if !(1..n).contains(&i) || !(2..=n).contains(&j) || i == j {
            return Err(fail(format!("arc ({i},{j}) is outside the arc set")));
        }
        if next.insert(i, j).is_some() {
            return Err(fail(format!("two arcs leave node {i}")));
        }
    }
    let mut order = vec![1];
    let mut cur = 1;
    while cur != n {
        cur = match next.get(&cur) {
            Some(&v) => v,
            None => {
                return Err(fail(format!(
                    "route stops at node {cur} before reaching the depot"
                )))
            }
        };
        if order.contains(&cur) {
            return Err(fail(format!("node {cur} is visited twice")));
        }
        order.push(cur);
    }
    if order.len() != route_arcs.len() + 1 {
        return Err(fail("arcs unreachable from node 1 are present".to_string()));
    }
    Ok(order)
}

/// Copy of `built` with the given routing and acceptance variables fixed to
/// one. All other acceptance variables stay free, so a solve may still add
/// requests that exploit residual capacity along the fixed route.
pub fn fix_route_and_requests(
    inst: &Instance,
    built: &BuiltModel,
    route_arcs: &[(usize, usize)],
    accepted: &[usize],
) -> Result<BuiltModel, FormulationError> {
    let order = route_from_arcs(route_arcs, inst.n)?;
    let position: BTreeMap<usize, usize> =
        order.iter().enumerate().map(|(p, &node)| (node, p)).collect();
    let mut fixed = built.clone();
    for &(i, j) in route_arcs {
        let x = *fixed
            .map
            .route
            .get(&(i, j))
            .ok_or_else(|| FormulationError::NotARoute(format!("arc ({i},{j}) unknown")))?;
        fixed.model.set_bounds(x, 1.0, 1.0)?;
    }
    for &id in accepted {
        let r = inst
            .requests
            .get(id)
            .filter(|r| r.id == id)
            .ok_or(FormulationError::RequestNotOnRoute(id))?;
        match (position.get(&r.origin), position.get(&r.destination)) {
            (Some(po), Some(pt)) if po < pt => {}
            _ => return Err(FormulationError::RequestNotOnRoute(id)),
        }
        let y = fixed.map.accept[&id];
        fixed.model.set_bounds(y, 1.0, 1.0)?;
    }
    Ok(fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mip::model_stats;

    fn names_with_prefix(built: &BuiltModel, prefix: &str) -> usize {
        built
            .model
            .constraints()
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .count()
    }

    #[test]
    fn node_arc_commodity_count() {
        let t4 = fixtures::four_node_line();
        let built = build_node_arc(&t4).unwrap();
        assert_eq!(built.map.request_arc.len(), 6 * 7);
    }

    #[test]
    fn enhanced_node_arc_drops_degree_and_adds_conditional() {
        let t4 = fixtures::four_node_line();
        let built = build_enhanced_node_arc(&t4).unwrap();
        assert_eq!(names_with_prefix(&built, "node_degree"), 0);
        assert_eq!(names_with_prefix(&built, "cond_arc_flow"), 7);
        assert_eq!(names_with_prefix(&built, "bigm_link"), 0);
        assert_eq!(names_with_prefix(&built, "capacity"), 0);
    }

    #[test]
    fn triples_row_counts_four_nodes() {
        let t4 = fixtures::four_node_line();
        let built = build_triples(&t4).unwrap();
        assert_eq!(names_with_prefix(&built, "link_u"), 6);
        assert_eq!(names_with_prefix(&built, "triples_"), 7);
        assert_eq!(built.map.diversion.len(), 6);
    }

    #[test]
    fn enhanced_triples_four_node_constraint_inventory() {
        // The full expansion for a generic four-node instance: 6 routing
        // rows, 2 lifted subtour rows, 1 distance row, 7 flow-accounting
        // rows, 7 conditional arc-flow rows, 6 demand cuts, boxed sequence
        // variables.
        let t4 = fixtures::four_node_line();
        let built = build_enhanced_triples(&t4).unwrap();
        let routing = names_with_prefix(&built, "route_") + names_with_prefix(&built, "node_degree");
        assert_eq!(routing, 6);
        assert_eq!(names_with_prefix(&built, "lifted_mtz"), 2);
        assert_eq!(names_with_prefix(&built, "distance_limit"), 1);
        assert_eq!(names_with_prefix(&built, "triples_"), 7);
        assert_eq!(names_with_prefix(&built, "cond_arc_flow"), 7);
        assert_eq!(
            names_with_prefix(&built, "demand_out") + names_with_prefix(&built, "demand_in"),
            6
        );
        assert_eq!(
            built.model.constraints().len(),
            6 + 2 + 1 + 7 + 7 + 6,
            "no other rows"
        );
        for i in 2..=4 {
            let s = built.model.var(built.map.seq[&i]);
            assert_eq!((s.lower, s.upper), (1.0, 4.0));
        }
        let s1 = built.model.var(built.map.seq[&1]);
        assert_eq!((s1.lower, s1.upper), (0.0, 0.0));
        // Diversions stay nonnegative, flows become free.
        for &u in built.map.diversion.values() {
            assert_eq!(built.model.var(u).lower, 0.0);
        }
        for &f in built.map.flow.values() {
            assert_eq!(built.model.var(f).lower, f64::NEG_INFINITY);
        }
    }

    #[test]
    fn enhanced_sizes_match_closed_forms() {
        for n in [4usize, 10, 20] {
            let inst = fixtures::full_request_instance(n);
            let tri = build_enhanced_triples(&inst).unwrap();
            let st = model_stats(&tri.model);
            assert_eq!(st.binary, 2 * (n * n - 3 * n + 3), "triples binaries n={n}");
            assert_eq!(
                st.constraints,
                3 * n * n - 7 * n + 9,
                "triples constraints n={n}"
            );
            assert_eq!(
                st.continuous,
                (n * n * n + 15 * n) - (6 * n * n + 11),
                "triples continuous n={n}"
            );

            if n <= 10 {
                let na = build_enhanced_node_arc(&inst).unwrap();
                let st = model_stats(&na.model);
                assert_eq!(
                    st.binary,
                    (n.pow(4) + 17 * n * n + 15) - (6 * n.pow(3) + 24 * n),
                    "node-arc binaries n={n}"
                );
                assert_eq!(st.constraints, n.pow(3) - 5 * n + 10, "node-arc rows n={n}");
                assert_eq!(st.continuous, n * n - 2 * n + 3, "node-arc continuous n={n}");
            }
        }
    }

    #[test]
    fn node_arc_ten_node_binary_count() {
        let inst = fixtures::full_request_instance(10);
        let built = build_node_arc(&inst).unwrap();
        assert_eq!(model_stats(&built.model).binary, 5475);
    }

    #[test]
    fn restricted_triples_fixes_unattractive() {
        let t4 = fixtures::four_node_line();
        let mut attractive = BTreeSet::new();
        attractive.insert((1, 3, 2));
        attractive.insert((1, 4, 3));
        let built = build_restricted_triples(&t4, &attractive).unwrap();
        let fixed = built
            .map
            .diversion
            .values()
            .filter(|&&u| built.model.var(u).upper == 0.0)
            .count();
        assert_eq!(fixed, 4);

        let mut bogus = BTreeSet::new();
        bogus.insert((1, 2, 4)); // k = n is never a diversion node
        assert!(matches!(
            build_restricted_triples(&t4, &bogus),
            Err(FormulationError::UnknownTriple(1, 2, 4))
        ));
    }

    #[test]
    fn restriction_to_everything_is_identity() {
        let t4 = fixtures::four_node_line();
        let all: BTreeSet<_> = crate::instance::triple_set(4).into_iter().collect();
        let restricted = build_restricted_triples(&t4, &all).unwrap();
        let plain = build_enhanced_triples(&t4).unwrap();
        assert_eq!(
            crate::mip::emit_lp(&restricted.model),
            crate::mip::emit_lp(&plain.model)
        );
    }

    #[test]
    fn fix_route_validates_path() {
        let t4 = fixtures::four_node_line();
        let built = build_enhanced_triples(&t4).unwrap();
        let fixed =
            fix_route_and_requests(&t4, &built, &[(1, 2), (2, 3), (3, 4)], &[0, 1, 2, 3, 4, 5])
                .unwrap();
        for arc in [(1, 2), (2, 3), (3, 4)] {
            let x = fixed.map.route[&arc];
            assert_eq!(fixed.model.var(x).lower, 1.0);
        }
        // Arcs not touching node 1 are not a route.
        assert!(matches!(
            fix_route_and_requests(&t4, &built, &[(2, 3), (3, 4)], &[]),
            Err(FormulationError::NotARoute(_))
        ));
        // Request (1, 2) does not ride the direct route 1 -> 4.
        assert!(matches!(
            fix_route_and_requests(&t4, &built, &[(1, 4)], &[0]),
            Err(FormulationError::RequestNotOnRoute(0))
        ));
    }

    #[test]
    fn builders_are_deterministic() {
        let t4 = fixtures::four_node_line();
        for kind in FormulationKind::ALL {
            let a = crate::mip::emit_lp(&build(&t4, kind).unwrap().model);
            let b = crate::mip::emit_lp(&build(&t4, kind).unwrap().model);
            assert_eq!(a, b, "{}", kind.name());
        }
    }

    #[test]
    fn invalid_instance_propagates() {
        let mut bad = fixtures::four_node_line();
        bad.dist[0][1] = -1.0;
        assert!(matches!(
            build_enhanced_triples(&bad),
            Err(FormulationError::InvalidInstance(_))
        ));
    }
}
