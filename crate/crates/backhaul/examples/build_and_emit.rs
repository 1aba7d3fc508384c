//! Build all four formulations of the bundled four-node instance, compare
//! their sizes, and print the smallest one as LP text.
//!
//!     cargo run --example build_and_emit

use backhaul::fixtures;
use backhaul::formulations::{build, FormulationKind};
use backhaul::mip::{emit_lp, model_stats};

fn main() {
    let inst = fixtures::four_node_line();
    println!("four-node line instance: {} requests\n", inst.requests.len());
    println!("{:<22} {:>8} {:>12} {:>12}", "formulation", "binary", "continuous", "rows");
    for kind in FormulationKind::ALL {
        let built = build(&inst, kind).expect("fixture is valid");
        let stats = model_stats(&built.model);
        println!(
            "{:<22} {:>8} {:>12} {:>12}",
            kind.name(),
            stats.binary,
            stats.continuous,
            stats.constraints
        );
    }
    let built = build(&inst, FormulationKind::EnhancedTriples).unwrap();
    println!("\nenhanced triples as LP text:\n");
    println!("{}", emit_lp(&built.model));
}
