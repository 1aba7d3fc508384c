//! Drive the external-backend adapter with a stub solver: a shell script
//! that ignores the emitted model and echoes a canned optimal solution. The
//! adapter re-checks whatever comes back, so a corrupted answer is rejected
//! with the violated row named.
//!
//!     cargo run --example external_solver

use backhaul::fixtures;
use backhaul::formulations::build_enhanced_triples;
use backhaul::solver::{solve_external, BackendConfig, ModelFormat, SolverError};
use std::io::Write;

fn main() {
    let inst = fixtures::four_node_line();
    let built = build_enhanced_triples(&inst).unwrap();

    let dir = std::env::temp_dir().join("backhaul-external-demo");
    std::fs::create_dir_all(&dir).unwrap();
    let canned = dir.join("canned.sol");
    std::fs::write(&canned, fixtures::four_node_solution_lines()).unwrap();
    let script = dir.join("stub.sh");
    {
        let mut f = std::fs::File::create(&script).unwrap();
        writeln!(f, "#!/bin/sh").unwrap();
        writeln!(f, "cp {} \"$2\"", canned.display()).unwrap();
    }

    let cfg = BackendConfig {
        command: format!("sh {} {{model}} {{solution}}", script.display()),
        format: ModelFormat::Lp,
    };
    match solve_external(&built.model, &cfg, &dir.join("run")) {
        Ok(result) => println!(
            "stub backend accepted: objective {:.4} (status {:?})",
            result.objective, result.status
        ),
        Err(e) => {
            println!("stub backend unavailable here: {e}");
            return;
        }
    }

    // Same again with an overloaded solution: the adapter must refuse it.
    std::fs::write(&canned, fixtures::four_node_overloaded_lines()).unwrap();
    match solve_external(&built.model, &cfg, &dir.join("run2")) {
        Err(SolverError::SolutionIntegrity { constraint, amount }) => println!(
            "corrupted solution rejected: {constraint} violated by {amount:.2}"
        ),
        other => println!("unexpected outcome: {other:?}"),
    }
}
