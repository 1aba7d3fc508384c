//! Exhaustive search on a small instance: every feasible route is enumerated
//! and paired with its exact request selection.
//!
//!     cargo run --example exact_search -- [n] [seed]

use backhaul::datagen::generate_instance;
use backhaul::oracle::{best_requests_for_route, enumerate_routes, solve_exact, OracleLimits};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(5);
    let seed: u64 = args.next().map(|v| v.parse().unwrap()).unwrap_or(11);

    let inst = generate_instance(n, seed, None).expect("n >= 2");
    println!("routes within the {}-mile limit:", inst.params.distance_limit);
    let mut count = 0;
    for route in enumerate_routes(&inst) {
        let (accepted, profit) = best_requests_for_route(&inst, &route).unwrap();
        println!("  {route:?}: {} requests, profit {profit:.2}", accepted.len());
        count += 1;
    }
    println!("{count} routes in total");

    let best = solve_exact(&inst, OracleLimits::default()).expect("small instance");
    println!(
        "\noptimum: route {:?}, {} accepted, profit {:.2}",
        best.route,
        best.accepted.len(),
        best.profit
    );
    for (&(i, j), load) in &best.arc_loads {
        println!("  arc ({i},{j}) carries {load:.1} tons");
    }
}
