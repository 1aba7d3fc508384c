//! Problem instances: the network, the delivery requests and the economics.
//!
//! A backhaul instance lives on nodes `1..=n` where node 1 is the vehicle's
//! current location and node `n` is the depot. The arc set excludes arcs into
//! node 1 and out of node `n`. Delivery requests are origin/destination/weight
//! records; several requests may share the same node pair. Node indices are
//! 1-based everywhere, matching the JSON interchange format.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Economic parameters of a backhaul trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Revenue rate in dollars per mile per ton.
    #[serde(rename = "p")]
    pub revenue_rate: f64,
    /// Travel cost rate in dollars per mile per ton.
    #[serde(rename = "c")]
    pub cost_rate: f64,
    /// Weight of the empty vehicle in tons.
    #[serde(rename = "v")]
    pub vehicle_weight: f64,
    /// Carrying capacity in tons.
    #[serde(rename = "Q")]
    pub capacity: f64,
    /// Distance limit for the whole trip in miles.
    #[serde(rename = "D")]
    pub distance_limit: f64,
}

impl Parameters {
    /// The default parameter set used by the instance generator.
    pub fn standard() -> Self {
        Parameters {
            revenue_rate: 1.2,
            cost_rate: 1.0,
            vehicle_weight: 5.0,
            capacity: 50.0,
            distance_limit: 1000.0,
        }
    }
}

/// A single delivery request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    /// Position of the request in the instance's request list.
    #[serde(skip)]
    pub id: usize,
    /// Pickup node (1-based). Never the depot.
    #[serde(rename = "from")]
    pub origin: usize,
    /// Dropoff node (1-based). Never the start.
    #[serde(rename = "to")]
    pub destination: usize,
    /// Load weight in tons.
    pub weight: f64,
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    /// Number of nodes; node 1 is the start, node `n` the depot.
    pub n: usize,
    /// Distance matrix in miles, indexed 0-based (`dist[i-1][j-1]` for nodes i, j).
    pub dist: Vec<Vec<f64>>,
    /// Delivery requests on offer.
    pub requests: Vec<Request>,
    /// Economic parameters.
    pub params: Parameters,
}

/// Outcome of checking an instance against its invariants.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("malformed instance file: {0}")]
    Parse(String),
}

impl Instance {
    /// Distance from node `i` to node `j` (1-based).
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i - 1][j - 1]
    }

    /// Direct distance of a request's origin-destination pair.
    #[inline]
    pub fn request_distance(&self, r: &Request) -> f64 {
        self.distance(r.origin, r.destination)
    }

    /// Combined weight of all requests from `i` to `j`; zero when there are none.
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        self.requests
            .iter()
            .filter(|r| r.origin == i && r.destination == j)
            .map(|r| r.weight)
            .sum()
    }

    /// Requests whose origin-destination pair is exactly `(i, j)`.
    pub fn requests_between(&self, i: usize, j: usize) -> impl Iterator<Item = &Request> {
        self.requests
            .iter()
            .filter(move |r| r.origin == i && r.destination == j)
    }

    /// All `(i, j, k)` with `d[i][k] + d[k][j] < d[i][j]`, i.e. places where a
    /// detour beats the direct arc and the triangle inequality fails.
    pub fn triangle_violations(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.n {
            for j in 1..=self.n {
                if i == j {
                    continue;
                }
                for k in 1..=self.n {
                    if k == i || k == j {
                        continue;
                    }
                    if self.distance(i, k) + self.distance(k, j)
                        < self.distance(i, j) - 1e-9
                    {
                        out.push((i, j, k));
                    }
                }
            }
        }
        out
    }

    /// Whether the distance matrix satisfies the triangle inequality. The
    /// profit upper bound and the flow-repair profit guarantees only apply
    /// when this holds.
    pub fn satisfies_triangle(&self) -> bool {
        self.triangle_violations().is_empty()
    }

    /// Parse an instance from its JSON interchange form. Requests heavier than
    /// the vehicle capacity can never be accepted; they are dropped here and
    /// reported in the returned diagnostics.
    pub fn from_json(text: &str) -> Result<(Instance, Vec<String>), InstanceError> {
        let mut inst: Instance =
            serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        for (idx, r) in inst.requests.iter_mut().enumerate() {
            r.id = idx;
        }
        let mut diagnostics = Vec::new();
        inst.requests.retain(|r| {
            if r.weight > inst.params.capacity {
                diagnostics.push(format!(
                    "dropped request ({}, {}): weight {} exceeds capacity {}",
                    r.origin, r.destination, r.weight, inst.params.capacity
                ));
                false
            } else {
                true
            }
        });
        for (idx, r) in inst.requests.iter_mut().enumerate() {
            r.id = idx;
        }
        let report = validate_instance(&inst);
        if !report.is_valid() {
            return Err(InstanceError::Invalid(report.errors.join("; ")));
        }
        Ok((inst, diagnostics))
    }

    /// Serialize to the JSON interchange form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// Check every instance invariant. Structural problems (sizes, signs, request
/// endpoints) are errors; triangle-inequality violations are warnings because
/// the formulations stay valid without it.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = inst.n;
    if n < 2 {
        report.errors.push(format!("need at least 2 nodes, got {n}"));
        return report;
    }
    if inst.dist.len() != n || inst.dist.iter().any(|row| row.len() != n) {
        report
            .errors
            .push(format!("distance matrix must be {n}x{n}"));
        return report;
    }
    for i in 1..=n {
        if inst.distance(i, i) != 0.0 {
            report.errors.push(format!("nonzero self-distance at node {i}"));
        }
        for j in 1..=n {
            let d = inst.distance(i, j);
            if !d.is_finite() || d < 0.0 {
                report.errors.push(format!("negative distance ({i},{j})"));
            }
        }
    }
    for r in &inst.requests {
        if r.origin == r.destination {
            report.errors.push(format!(
                "request {} has equal origin and destination {}",
                r.id, r.origin
            ));
        }
        if r.origin == n {
            report
                .errors
                .push(format!("request {} originates at the depot", r.id));
        }
        if r.destination == 1 {
            report
                .errors
                .push(format!("request {} terminates at the start node", r.id));
        }
        if r.origin < 1 || r.origin > n || r.destination < 1 || r.destination > n {
            report
                .errors
                .push(format!("request {} references nodes outside 1..={n}", r.id));
        }
        if !(r.weight > 0.0) {
            report
                .errors
                .push(format!("request {} has nonpositive weight", r.id));
        }
        if r.weight > inst.params.capacity {
            report.errors.push(format!(
                "request {} weight {} exceeds capacity {}",
                r.id, r.weight, inst.params.capacity
            ));
        }
    }
    let p = &inst.params;
    if p.revenue_rate < 0.0 || p.cost_rate < 0.0 || p.vehicle_weight < 0.0 {
        report.errors.push("rates and vehicle weight must be nonnegative".into());
    }
    if !(p.capacity > 0.0) {
        report.errors.push("capacity must be positive".into());
    }
    if !(p.distance_limit > 0.0) {
        report.errors.push("distance limit must be positive".into());
    }
    if report.errors.is_empty() {
        for (i, j, k) in inst.triangle_violations() {
            report
                .warnings
                .push(format!("triangle inequality violated at ({i},{j},{k})"));
        }
    }
    report
}

/// Ordered arc set: `(i, j)` with `i < n`, `j > 1`, `i != j`, lexicographic.
/// Its size is `n^2 - 3n + 3`.
pub fn arc_set(n: usize) -> Result<Vec<(usize, usize)>, InstanceError> {
    if n < 2 {
        return Err(InstanceError::TooFewNodes(n));
    }
    let mut arcs = Vec::with_capacity((n * n + 3) - 3 * n);
    for i in 1..n {
        for j in 2..=n {
            if i != j {
                arcs.push((i, j));
            }
        }
    }
    Ok(arcs)
}

/// Ordered triple set: `(i, j, k)` with `i != n`, `j not in {1, i}`,
/// `k not in {1, n, i, j}`, lexicographic. Its size is
/// `n^3 - 7n^2 + 17n - 14`; empty for `n < 3` where no diversion is possible.
pub fn triple_set(n: usize) -> Vec<(usize, usize, usize)> {
    let mut triples = Vec::new();
    if n < 3 {
        return triples;
    }
    for i in 1..n {
        for j in 2..=n {
            if j == i {
                continue;
            }
            for k in 2..n {
                if k != i && k != j {
                    triples.push((i, j, k));
                }
            }
        }
    }
    triples
}

/// Upper bound on achievable profit: `(p Q - c Q - c v) D`. Valid whenever
/// the distance matrix satisfies the triangle inequality; callers should
/// confirm via [`validate_instance`] or [`Instance::satisfies_triangle`].
pub fn profit_upper_bound(params: &Parameters) -> f64 {
    (params.revenue_rate * params.capacity
        - params.cost_rate * params.capacity
        - params.cost_rate * params.vehicle_weight)
        * params.distance_limit
}

/// How to derive the big-M constant that couples request routing to the
/// vehicle route in the node-arc formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BigMMode {
    /// `(n^2 - n) / 2`: the number of ordered pairs a single route can serve.
    DataIndependent,
    /// Largest number of requests whose combined weight fits the capacity.
    Knapsack,
}

/// Big-M value for the request-to-route linking constraints.
///
/// The knapsack mode maximizes the count of accepted requests subject to the
/// capacity; for a pure cardinality knapsack taking requests in ascending
/// weight order is exact.
pub fn compute_big_m(inst: &Instance, mode: BigMMode) -> usize {
    match mode {
        BigMMode::DataIndependent => (inst.n * inst.n - inst.n) / 2,
        BigMMode::Knapsack => {
            let mut weights: Vec<f64> = inst.requests.iter().map(|r| r.weight).collect();
            weights.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut total = 0.0;
            let mut count = 0;
            for w in weights {
                if total + w <= inst.params.capacity + 1e-9 {
                    total += w;
                    count += 1;
                } else {
                    break;
                }
            }
            count
        }
    }
}

/// Number of distinct route/request-selection combinations for an instance
/// with `k` intermediate locations: `sum_{r=0..k} P(k,r) * 2^C(r+2,2)`.
pub fn count_solution_space(k: usize) -> BigUint {
    let mut total = BigUint::from(0u32);
    for r in 0..=k {
        // P(k, r) = k! / (k - r)!
        let mut perms = BigUint::from(1u32);
        for v in (k - r + 1)..=k {
            perms *= BigUint::from(v);
        }
        let pairs = (r + 2) * (r + 1) / 2;
        total += perms << pairs;
    }
    total
}
