//! Small instances with known optima, shared by tests, examples and docs.

use crate::instance::{Instance, Parameters, Request};
use std::collections::BTreeMap;

/// Canonical four-node instance: nodes sit on a line at mileposts 0, 1, 2, 3,
/// so `d(i,j) = |i - j|` and every detour along the line costs nothing extra.
/// Six requests, one-ton vehicle capacity. The optimum is the full route
/// `1-2-3-4` accepting everything, with profit 0.2.
pub fn four_node_line() -> Instance {
    let n = 4;
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = (i as f64 - j as f64).abs();
        }
    }
    let weights = [
        (1, 2, 0.4),
        (1, 3, 0.3),
        (1, 4, 0.2),
        (2, 3, 0.3),
        (2, 4, 0.1),
        (3, 4, 0.4),
    ];
    let requests = weights
        .iter()
        .enumerate()
        .map(|(id, &(origin, destination, weight))| Request {
            id,
            origin,
            destination,
            weight,
        })
        .collect();
    Instance {
        n,
        dist,
        requests,
        params: Parameters {
            revenue_rate: 1.2,
            cost_rate: 1.0,
            vehicle_weight: 0.1,
            capacity: 1.0,
            distance_limit: 10.0,
        },
    }
}

/// The reference solution of [`four_node_line`]: route 1-2-3-4, all six
/// requests accepted, diversions `u(1,3,2) = 0.3`, `u(1,4,2) = 0.2`,
/// `u(2,4,3) = 0.3`. Returns `(route, diversions)`.
pub fn four_node_reference() -> (Vec<usize>, BTreeMap<(usize, usize, usize), f64>) {
    let mut u = BTreeMap::new();
    u.insert((1, 3, 2), 0.3);
    u.insert((1, 4, 2), 0.2);
    u.insert((2, 4, 3), 0.3);
    (vec![1, 2, 3, 4], u)
}

/// Alternative diversion values for the same routing and acceptances as
/// [`four_node_reference`]; they induce identical arc flows even though
/// `u(1,4,3)` runs through the off-route arc (1,3).
pub fn four_node_alternative_diversions() -> BTreeMap<(usize, usize, usize), f64> {
    let mut u = BTreeMap::new();
    u.insert((1, 3, 2), 0.5);
    u.insert((1, 4, 3), 0.2);
    u.insert((2, 4, 3), 0.1);
    u
}

/// Arc flows of the reference solution on the route arcs plus the two arcs
/// checked off-route: `(1,2) -> 0.9`, `(2,3) -> 0.9`, `(3,4) -> 0.7`,
/// `(1,3) -> 0`, `(3,2) -> 0`.
pub fn four_node_reference_flows() -> Vec<((usize, usize), f64)> {
    vec![
        ((1, 2), 0.9),
        ((2, 3), 0.9),
        ((3, 4), 0.7),
        ((1, 3), 0.0),
        ((3, 2), 0.0),
    ]
}

/// The optimal solution of [`four_node_line`]'s enhanced triples model as
/// `name value` solution-file lines, the dialect external backends write.
/// Variables left out default to zero.
pub fn four_node_solution_lines() -> String {
    [
        "# optimal solution of the four-node line instance",
        "x_1_2 1",
        "x_2_3 1",
        "x_3_4 1",
        "y_1_2 1",
        "y_1_3 1",
        "y_1_4 1",
        "y_2_3 1",
        "y_2_4 1",
        "y_3_4 1",
        "u_1_3_2 0.3",
        "u_1_4_2 0.2",
        "u_2_4_3 0.3",
        "theta_1_2 0.9",
        "theta_2_3 0.9",
        "theta_3_4 0.7",
        "s_2 1",
        "s_3 2",
        "s_4 3",
    ]
    .join("\n")
}

/// A corrupted variant of [`four_node_solution_lines`]: the flow-accounting
/// rows still balance, but 1.2 tons ride the one-ton arcs (1,2) and (2,3).
pub fn four_node_overloaded_lines() -> String {
    four_node_solution_lines()
        .replace("u_1_3_2 0.3", "u_1_3_2 0.6")
        .replace("theta_1_2 0.9", "theta_1_2 1.2\ntheta_1_3 -0.3")
        .replace("theta_2_3 0.9", "theta_2_3 1.2")
}

/// An instance with one request on every arc, used to pin model sizes against
/// their closed-form counts.
pub fn full_request_instance(n: usize) -> Instance {
    let arcs = crate::instance::arc_set(n).expect("n >= 2");
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = (i as f64 - j as f64).abs();
        }
    }
    let requests = arcs
        .iter()
        .enumerate()
        .map(|(id, &(origin, destination))| Request {
            id,
            origin,
            destination,
            weight: 1.0,
        })
        .collect();
    Instance {
        n,
        dist,
        requests,
        params: Parameters::standard(),
    }
}
