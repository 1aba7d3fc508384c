//! An orienteering race as a backhaul problem: zero travel cost, one request
//! per scored checkpoint destined for the finish line, revenue equal to the
//! checkpoint score. The optimal backhaul profit equals the best race score.
//!
//!     cargo run --example orienteering_reduction -- [seed]

use backhaul::datagen::{op_best_score, op_to_bpmp, random_op};
use backhaul::oracle::{solve_exact, OracleLimits};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|v| v.parse().unwrap())
        .unwrap_or(4);
    let op = random_op(6, seed);
    println!(
        "race: {} checkpoints, time allowance {} hours",
        op.n - 2,
        op.tmax
    );
    for (i, p) in op.points.iter().enumerate() {
        if *p > 0.0 {
            println!("  checkpoint {} scores {p}", i + 1);
        }
    }
    let brute = op_best_score(&op);
    println!("best race score by brute force: {brute}");

    let inst = op_to_bpmp(&op).expect("reducible");
    println!(
        "\nas a backhaul instance: {} requests, capacity {:.2}",
        inst.requests.len(),
        inst.params.capacity
    );
    match solve_exact(&inst, OracleLimits::default()) {
        Ok(sol) => {
            println!("backhaul optimum: {:.4} on route {:?}", sol.profit, sol.route);
            assert!((sol.profit - brute).abs() < 1e-9);
            println!("matches the race score exactly");
        }
        Err(e) => {
            println!("backhaul side infeasible ({e}); race score is {brute}");
            assert_eq!(brute, 0.0);
        }
    }
}
