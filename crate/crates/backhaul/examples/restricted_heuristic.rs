//! Run the restricted-diversion heuristic and compare it with the exact
//! answer on a small instance.
//!
//!     cargo run --example restricted_heuristic -- [n] [seed]

use backhaul::datagen::generate_instance;
use backhaul::heuristic::{attractive_triples, pseudo_profit, run_heuristic};
use backhaul::instance::triple_set;
use backhaul::oracle::{solve_exact, OracleLimits};
use backhaul::solver::Builtin;
use std::time::Instant;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(6);
    let seed: u64 = args.next().map(|v| v.parse().unwrap()).unwrap_or(5);

    let inst = generate_instance(n, seed, None).expect("n >= 2");
    let all = triple_set(n).len();
    let attractive = attractive_triples(&inst);
    println!(
        "screening: {} of {all} diversions kept ({}%)",
        attractive.len(),
        100 * attractive.len() / all.max(1)
    );
    if let Some(&t) = attractive.iter().next() {
        println!("  e.g. {t:?} scores {:.2}", pseudo_profit(&inst, t));
    }

    let clock = Instant::now();
    let sol = run_heuristic(&inst, &Builtin::default()).expect("feasible instance");
    println!(
        "\nheuristic: profit {:.4} on route {:?} ({} accepted) in {:.2}s",
        sol.profit,
        sol.route,
        sol.accepted.len(),
        clock.elapsed().as_secs_f64()
    );

    if n <= 8 {
        let exact = solve_exact(&inst, OracleLimits::default()).expect("small instance");
        let gap = (exact.profit - sol.profit) / exact.profit.abs().max(1.0);
        println!("exact:     profit {:.4} on route {:?}", exact.profit, exact.route);
        println!("gap: {:.3}%", 100.0 * gap.max(0.0));
    }
}
