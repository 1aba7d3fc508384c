//! Generate seeded random instances and show what the validator says about
//! them.
//!
//!     cargo run --example generate_instances -- [n] [seed]

use backhaul::datagen::generate_instance;
use backhaul::instance::validate_instance;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(10);
    let seed: u64 = args.next().map(|v| v.parse().unwrap()).unwrap_or(7);

    let inst = generate_instance(n, seed, None).expect("n >= 2");
    let report = validate_instance(&inst);
    println!(
        "instance: {} nodes, {} requests, capacity {} tons, distance limit {} miles",
        inst.n,
        inst.requests.len(),
        inst.params.capacity,
        inst.params.distance_limit
    );
    println!(
        "validation: {} errors, {} warnings; triangle inequality holds: {}",
        report.errors.len(),
        report.warnings.len(),
        inst.satisfies_triangle()
    );
    let total: f64 = inst.requests.iter().map(|r| r.weight).sum();
    println!(
        "offered load: {total:.1} tons across {} requests (mean {:.1})",
        inst.requests.len(),
        total / inst.requests.len().max(1) as f64
    );
    println!("{}", inst.to_json());
}
