//! The diversion-flow algebra on the bundled four-node instance: derive arc
//! flows from diversion values, build the diversion digraph, and repair a
//! solution that drives an arc flow negative.
//!
//!     cargo run --example flow_repair

use backhaul::analysis::{
    arc_flows_from_triples, build_diversion_digraph, check_acyclic, repair_negative_flows,
    Diversions,
};
use backhaul::fixtures;

fn main() {
    let inst = fixtures::four_node_line();
    let (route, u) = fixtures::four_node_reference();
    let y = vec![1.0; inst.requests.len()];

    println!("reference solution on route {route:?} with diversions:");
    for (&(i, j, k), &v) in &u {
        println!("  {v:.1} tons from {i} to {j} via {k}");
    }
    let flows = arc_flows_from_triples(&inst, &y, &u);
    println!("\ninduced arc flows:");
    for ((i, j), expect) in fixtures::four_node_reference_flows() {
        println!("  ({i},{j}): {:.1} tons", flows[&(i, j)]);
        assert!((flows[&(i, j)] - expect).abs() < 1e-12);
    }

    let digraph = build_diversion_digraph(&u);
    println!(
        "\ndiversion digraph: {} nodes, leaves {:?}",
        digraph.nodes.len(),
        digraph.leaves()
    );
    assert!(check_acyclic(&digraph).is_ok());

    // Now a broken solution: only the (1,4) request accepted, but 0.3 tons
    // diverted away from the pair against its 0.2-ton demand.
    let mut y = vec![0.0; inst.requests.len()];
    y[2] = 1.0;
    let mut broken = Diversions::new();
    broken.insert((1, 4, 2), 0.1);
    broken.insert((1, 4, 3), 0.2);
    let before = arc_flows_from_triples(&inst, &y, &broken);
    println!("\nbroken solution: flow on (1,4) is {:.1}", before[&(1, 4)]);

    let repaired = repair_negative_flows(&inst, &y, &broken).unwrap();
    let after = arc_flows_from_triples(&inst, &y, &repaired);
    println!("after repair:    flow on (1,4) is {:.1}", after[&(1, 4)]);
    println!("surviving diversions: {repaired:?}");
    assert!(after.values().all(|&v| v >= -1e-9));
}
