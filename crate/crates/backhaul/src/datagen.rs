//! Seeded instance generation and the orienteering reduction.
//!
//! Generated instances place nodes uniformly in a 700 x 700 mile square,
//! round Euclidean distances to whole miles and close them under shortest
//! paths so the triangle inequality holds exactly. Pair demands are
//! `round(50 * U[0,1], 1)` tons per ordered node pair, with zero-weight
//! draws dropped. The generator is ChaCha8 keyed by the seed, so the same
//! `(n, seed)` always yields byte-identical instances on every platform.

use crate::instance::{arc_set, Instance, Parameters, Request};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("orienteering score at node {0} is positive but the node cannot reach the finish")]
    UnreachableScore(usize),
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
}

/// An orienteering race: visit scored checkpoints between a start and a
/// finish line within the time allowance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpInstance {
    /// Node count; 1 is the start, `n` the finish.
    pub n: usize,
    /// Travel times in hours, `times[i-1][j-1]`.
    pub times: Vec<Vec<f64>>,
    /// Points for visiting each node (indices 0-based; start and finish
    /// score zero).
    pub points: Vec<f64>,
    /// Time allowance in hours.
    pub tmax: f64,
}

/// Generate a seeded random instance with the standard parameters (or the
/// given ones).
pub fn generate_instance(n: usize, seed: u64, params: Option<Parameters>) -> Result<Instance, DatagenError> {
    if n < 2 {
        return Err(DatagenError::TooFewNodes(n));
    }
    let params = params.unwrap_or_else(Parameters::standard);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Node coordinates; re-draw any point that collides with an earlier one
    // after rounding so every distance is a positive whole number.
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(n);
    while points.len() < n {
        let candidate = (rng.gen::<f64>() * 700.0, rng.gen::<f64>() * 700.0);
        let collides = points.iter().any(|p| {
            ((p.0 - candidate.0).powi(2) + (p.1 - candidate.1).powi(2)).sqrt().round() < 1.0
        });
        if !collides {
            points.push(candidate);
        }
    }
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = ((points[i].0 - points[j].0).powi(2)
                    + (points[i].1 - points[j].1).powi(2))
                .sqrt()
                .round();
                dist[i][j] = d;
            }
        }
    }
    // Metric closure: rounding can nick the triangle inequality by a mile,
    // and the profit bound and repair guarantees want it exact.
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }

    let mut requests = Vec::new();
    for (origin, destination) in arc_set(n).expect("n >= 2") {
        let tenths = (rng.gen::<f64>() * 500.0).round();
        let weight = tenths / 10.0;
        if weight > 0.0 {
            requests.push(Request {
                id: requests.len(),
                origin,
                destination,
                weight,
            });
        }
    }
    Ok(Instance { n, dist, requests, params })
}

/// Reduce an orienteering race to a backhaul instance: travel cost vanishes,
/// every checkpoint offers a request to the finish whose revenue equals its
/// score, and capacity admits all of them.
pub fn op_to_bpmp(op: &OpInstance) -> Result<Instance, DatagenError> {
    if op.n < 2 {
        return Err(DatagenError::TooFewNodes(op.n));
    }
    let n = op.n;
    let mut requests = Vec::new();
    let mut total_weight = 0.0;
    for i in 2..n {
        let score = op.points[i - 1];
        if score > 0.0 {
            let to_finish = op.times[i - 1][n - 1];
            if to_finish <= 0.0 {
                return Err(DatagenError::UnreachableScore(i));
            }
            let weight = score / to_finish;
            total_weight += weight;
            requests.push(Request {
                id: requests.len(),
                origin: i,
                destination: n,
                weight,
            });
        }
    }
    Ok(Instance {
        n,
        dist: op.times.clone(),
        requests,
        params: Parameters {
            revenue_rate: 1.0,
            cost_rate: 0.0,
            vehicle_weight: 1.0,
            capacity: if total_weight > 0.0 { total_weight } else { 1.0 },
            distance_limit: op.tmax,
        },
    })
}

/// Best achievable orienteering score by brute force over all simple
/// start-to-finish routes within the time allowance. Reference answer for
/// the reduction; exponential in `n`.
pub fn op_best_score(op: &OpInstance) -> f64 {
    fn explore(
        op: &OpInstance,
        current: usize,
        time: f64,
        visited: &mut Vec<bool>,
        score: f64,
        best: &mut f64,
    ) {
        let n = op.n;
        if current == n {
            if score > *best {
                *best = score;
            }
            return;
        }
        for next in 2..=n {
            if visited[next - 1] || next == current {
                continue;
            }
            let t = time + op.times[current - 1][next - 1];
            if t > op.tmax + 1e-9 {
                continue;
            }
            visited[next - 1] = true;
            explore(op, next, t, visited, score + op.points[next - 1], best);
            visited[next - 1] = false;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut visited = vec![false; op.n];
    visited[0] = true;
    explore(op, 1, 0.0, &mut visited, 0.0, &mut best);
    if best == f64::NEG_INFINITY {
        0.0
    } else {
        best
    }
}

/// Random small orienteering instance for tests and demos.
pub fn random_op(n: usize, seed: u64) -> OpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut times = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                times[i][j] = (rng.gen::<f64>() * 9.0 + 1.0).round();
            }
        }
    }
    // Symmetrize and close under shortest paths so direct times are minimal.
    for i in 0..n {
        for j in (i + 1)..n {
            let t = times[i][j].min(times[j][i]);
            times[i][j] = t;
            times[j][i] = t;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = times[i][k] + times[k][j];
                if via < times[i][j] {
                    times[i][j] = via;
                }
            }
        }
    }
    let mut points = vec![0.0; n];
    for p in points.iter_mut().take(n - 1).skip(1) {
        *p = (rng.gen::<f64>() * 20.0).round();
    }
    let direct = times[0][n - 1];
    let tmax = (direct * (1.5 + rng.gen::<f64>())).round().max(direct);
    OpInstance { n, times, points, tmax }
}
