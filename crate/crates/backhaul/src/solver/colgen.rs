//! Exact LP bound for the node-arc formulations by column generation.
//!
//! The node-arc LP has one binary per (request, arc); at 20 nodes that is
//! over a hundred thousand columns, far too wide for the dense tableau. The
//! LP optimum is unchanged when each request's arc flow is rewritten as a
//! sum of origin-to-destination path flows (cycles only add cost and vanish
//! at an optimum), so the relaxation is solved as a master LP over routing
//! variables plus generated path columns, priced by shortest paths under the
//! current duals. Pricing is exact, so the final objective equals the full
//! LP optimum; tests pin it against the directly solved LP on small
//! instances.

use super::simplex::{Outcome, SimplexEngine};
use super::SolverError;
use crate::instance::{arc_set, compute_big_m, BigMMode, Instance};
use crate::mip::{MilpModel, Sense, VarRef};
use std::collections::{BTreeMap, HashSet};

/// Which node-arc variant's LP relaxation to bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeArcVariant {
    /// Big-M request-to-route linking plus plain per-arc capacity.
    Plain,
    /// Conditional arc-flow coupling, no big-M, no node-degree rows.
    Enhanced,
}

const RC_TOL: f64 = 1e-7;
const MAX_ROUNDS: usize = 600;

struct Master {
    model: MilpModel,
    /// Row indices by role.
    bigm_row: BTreeMap<(usize, usize), usize>,
    cap_row: BTreeMap<(usize, usize), usize>,
    convexity_row: Vec<usize>,
}

fn build_master(inst: &Instance, variant: NodeArcVariant) -> Result<Master, SolverError> {
    let n = inst.n;
    let arcs = arc_set(n).expect("n >= 2");
    let mut model = MilpModel::new();
    let mut x: BTreeMap<(usize, usize), VarRef> = BTreeMap::new();
    for &(i, j) in &arcs {
        let v = model
            .add_continuous(format!("x_{i}_{j}"), 0.0, 1.0)
            .expect("unique");
        x.insert((i, j), v);
    }
    let mut s: BTreeMap<usize, VarRef> = BTreeMap::new();
    for i in 1..=n {
        let (lo, hi) = if i == 1 { (0.0, 0.0) } else { (0.0, f64::INFINITY) };
        s.insert(i, model.add_continuous(format!("s_{i}"), lo, hi).expect("unique"));
    }
    let p = &inst.params;
    model.set_objective(
        arcs.iter()
            .map(|&(i, j)| (x[&(i, j)], -p.cost_rate * p.vehicle_weight * inst.distance(i, j)))
            .collect(),
    );

    let source: Vec<_> = arcs.iter().filter(|&&(i, _)| i == 1).map(|a| (x[a], 1.0)).collect();
    model.add_constraint("route_source", source, Sense::Eq, 1.0);
    let sink: Vec<_> = arcs.iter().filter(|&&(_, j)| j == n).map(|a| (x[a], 1.0)).collect();
    model.add_constraint("route_sink", sink, Sense::Eq, 1.0);
    for k in 2..n {
        let mut terms = Vec::new();
        for &(i, j) in &arcs {
            if j == k {
                terms.push((x[&(i, j)], 1.0));
            } else if i == k {
                terms.push((x[&(i, j)], -1.0));
            }
        }
        model.add_constraint(format!("route_balance_{k}"), terms, Sense::Eq, 0.0);
    }
    if variant == NodeArcVariant::Plain {
        for k in 2..n {
            let terms: Vec<_> = arcs
                .iter()
                .filter(|&&(_, j)| j == k)
                .map(|a| (x[a], 1.0))
                .collect();
            model.add_constraint(format!("node_degree_{k}"), terms, Sense::Le, 1.0);
        }
    }
    model.add_constraint(
        "distance_limit",
        arcs.iter().map(|&(i, j)| (x[&(i, j)], inst.distance(i, j))).collect(),
        Sense::Le,
        p.distance_limit,
    );
    for &(i, j) in &arcs {
        model.add_constraint(
            format!("mtz_{i}_{j}"),
            vec![(s[&i], 1.0), (s[&j], -1.0), (x[&(i, j)], (n + 1) as f64)],
            Sense::Le,
            n as f64,
        );
    }

    let mut bigm_row = BTreeMap::new();
    let mut cap_row = BTreeMap::new();
    match variant {
        NodeArcVariant::Plain => {
            let m_value = compute_big_m(inst, BigMMode::DataIndependent) as f64;
            for &(i, j) in &arcs {
                bigm_row.insert((i, j), model.constraints().len());
                model.add_constraint(
                    format!("bigm_link_{i}_{j}"),
                    vec![(x[&(i, j)], -m_value)],
                    Sense::Le,
                    0.0,
                );
            }
            for &(i, j) in &arcs {
                cap_row.insert((i, j), model.constraints().len());
                model.add_constraint(format!("capacity_{i}_{j}"), vec![], Sense::Le, p.capacity);
            }
        }
        NodeArcVariant::Enhanced => {
            for &(i, j) in &arcs {
                cap_row.insert((i, j), model.constraints().len());
                model.add_constraint(
                    format!("cond_arc_flow_{i}_{j}"),
                    vec![(x[&(i, j)], -p.capacity)],
                    Sense::Le,
                    0.0,
                );
            }
        }
    }
    let mut convexity_row = Vec::with_capacity(inst.requests.len());
    for r in &inst.requests {
        convexity_row.push(model.constraints().len());
        model.add_constraint(format!("accept_r{}", r.id), vec![], Sense::Le, 1.0);
    }
    Ok(Master { model, bigm_row, cap_row, convexity_row })
}

/// Shortest origin-to-destination path over the arc set under nonnegative
/// arc costs (dense `costs[(i-1) * n + (j-1)]`, infinity for non-arcs);
/// returns the node sequence.
fn shortest_path(
    n: usize,
    costs: &[f64],
    from: usize,
    to: usize,
) -> Option<(Vec<usize>, f64)> {
    let mut dist = vec![f64::INFINITY; n + 1];
    let mut pred = vec![0usize; n + 1];
    let mut done = vec![false; n + 1];
    dist[from] = 0.0;
    loop {
        let mut cur = 0;
        let mut best = f64::INFINITY;
        for v in 1..=n {
            if !done[v] && dist[v] < best {
                best = dist[v];
                cur = v;
            }
        }
        if cur == 0 || cur == to {
            break;
        }
        done[cur] = true;
        if cur == n {
            continue; // no arcs leave the depot
        }
        for j in 2..=n {
            if j == cur {
                continue;
            }
            let w = costs[(cur - 1) * n + (j - 1)];
            if !w.is_finite() {
                continue;
            }
            let cand = dist[cur] + w;
            if cand < dist[j] - 1e-15 {
                dist[j] = cand;
                pred[j] = cur;
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = pred[cur];
        path.push(cur);
    }
    path.reverse();
    Some((path, dist[to]))
}

/// Exact LP-relaxation bound of a node-arc formulation, computed by column
/// generation. Returns negative infinity when even the routing LP is
/// infeasible.
pub fn node_arc_lp_bound(inst: &Instance, variant: NodeArcVariant) -> Result<f64, SolverError> {
    let n = inst.n;
    let p = inst.params;
    let master = build_master(inst, variant)?;
    let mut engine = SimplexEngine::from_model(&master.model, &[]);
    match engine.solve()? {
        Outcome::Optimal => {}
        Outcome::Infeasible => return Ok(f64::NEG_INFINITY),
        Outcome::Unbounded => return Err(SolverError::Unbounded),
    }

    let arcs = arc_set(n).expect("n >= 2");
    // Dense per-arc dual prices, refreshed each round.
    let mut bigm_price = vec![0.0f64; n * n];
    let mut cap_price = vec![0.0f64; n * n];
    let mut costs = vec![f64::INFINITY; n * n];
    let mut added: HashSet<(usize, Vec<usize>)> = HashSet::new();
    for round in 0..MAX_ROUNDS {
        let duals = engine.duals();
        for &(i, j) in &arcs {
            let at = (i - 1) * n + (j - 1);
            bigm_price[at] = master
                .bigm_row
                .get(&(i, j))
                .map_or(0.0, |&row| duals[row].max(0.0));
            cap_price[at] = master
                .cap_row
                .get(&(i, j))
                .map_or(0.0, |&row| duals[row].max(0.0));
        }
        let mut grew = false;
        for r in &inst.requests {
            let sigma = duals[master.convexity_row[r.id]].max(0.0);
            for &(i, j) in &arcs {
                let at = (i - 1) * n + (j - 1);
                costs[at] = p.cost_rate * r.weight * inst.distance(i, j)
                    + bigm_price[at]
                    + r.weight * cap_price[at];
            }
            let Some((path, path_cost)) = shortest_path(n, &costs, r.origin, r.destination)
            else {
                continue;
            };
            let revenue = p.revenue_rate * inst.request_distance(r) * r.weight;
            let reduced = revenue - sigma - path_cost;
            if reduced <= RC_TOL {
                continue;
            }
            let key = (r.id, path.clone());
            if !added.insert(key) {
                continue; // duals noise re-priced an existing column
            }
            let length: f64 = path.windows(2).map(|w| inst.distance(w[0], w[1])).sum();
            let objective = r.weight * (p.revenue_rate * inst.request_distance(r) - p.cost_rate * length);
            let mut entries: Vec<(usize, f64)> = vec![(master.convexity_row[r.id], 1.0)];
            for w in path.windows(2) {
                let arc = (w[0], w[1]);
                if let Some(&row) = master.bigm_row.get(&arc) {
                    entries.push((row, 1.0));
                }
                if let Some(&row) = master.cap_row.get(&arc) {
                    entries.push((row, r.weight));
                }
            }
            engine.add_column(objective, &entries, 0.0, f64::INFINITY);
            grew = true;
        }
        if !grew {
            return Ok(engine.objective());
        }
        match engine.reoptimize()? {
            Outcome::Optimal => {}
            Outcome::Infeasible => return Ok(f64::NEG_INFINITY),
            Outcome::Unbounded => return Err(SolverError::Unbounded),
        }
        let _ = round;
    }
    Err(SolverError::PricingStalled(MAX_ROUNDS))
}
