//! Compare the strength of the LP relaxations: the node-arc bound towers
//! over the enhanced-triples bound, which hugs the closed-form profit
//! ceiling `(pQ - cQ - cv) D`.
//!
//!     cargo run --example lp_strength -- [n] [seed]

use backhaul::datagen::generate_instance;
use backhaul::formulations::build_enhanced_triples;
use backhaul::instance::profit_upper_bound;
use backhaul::solver::{node_arc_lp_bound, solve_lp, NodeArcVariant};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(10);
    let seed: u64 = args.next().map(|v| v.parse().unwrap()).unwrap_or(1);

    let inst = generate_instance(n, seed, None).expect("n >= 2");
    let ceiling = profit_upper_bound(&inst.params);
    println!("closed-form profit ceiling: {ceiling:.2}");

    let built = build_enhanced_triples(&inst).unwrap();
    let triples = solve_lp(&built.model, true).unwrap();
    println!("enhanced triples LP bound:  {:.2}", triples.objective);
    assert!(triples.objective <= ceiling + 1e-6);

    let node_arc = node_arc_lp_bound(&inst, NodeArcVariant::Plain).unwrap();
    println!("node-arc LP bound:          {node_arc:.2}");
    let enhanced = node_arc_lp_bound(&inst, NodeArcVariant::Enhanced).unwrap();
    println!("enhanced node-arc LP bound: {enhanced:.2}");

    println!(
        "\nnode-arc over enhanced-triples ratio: {:.1}x",
        node_arc / triples.objective
    );
}
