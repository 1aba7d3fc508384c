//! Scratch benchmark used during development; prints timings for the solver
//! hot paths. Run with `cargo run --example bench_probe [section]`.

use backhaul::datagen::generate_instance;
use backhaul::formulations::{build, FormulationKind};
use backhaul::solver::{node_arc_lp_bound, solve_lp, solve_milp, MilpOptions, NodeArcVariant};
use std::time::Instant;

fn main() {
    let section = std::env::args().nth(1).unwrap_or_else(|| "all".to_string());
    let opts = MilpOptions {
        gap_tolerance: 1e-8,
        node_limit: std::env::var("BENCH_NL").map_or(Some(2_000_000), |v| Some(v.parse().unwrap())),
        time_limit: std::env::var("BENCH_TL").ok().map(|v| std::time::Duration::from_secs_f64(v.parse().unwrap())),
        threads: std::env::var("BENCH_THREADS").map_or(1, |v| v.parse().unwrap()),
    };

    if section == "all" || section == "milp6" {
        for seed in [1u64, 2, 3] {
            let inst = generate_instance(6, seed, None).unwrap();
            for kind in FormulationKind::ALL {
                let t = Instant::now();
                let built = build(&inst, kind).unwrap();
                match solve_milp(&built.model, &opts) {
                    Ok(r) => eprintln!(
                        "n=6 seed={seed} {}: {:.2}s nodes {} status {:?} obj {:.6}",
                        kind.name(),
                        t.elapsed().as_secs_f64(),
                        r.nodes_explored,
                        r.status,
                        r.objective
                    ),
                    Err(e) => eprintln!("n=6 seed={seed} {}: ERROR {e}", kind.name()),
                }
            }
        }
    }

    if section == "all" || section == "milp10" {
        for n in [10usize, 10, 10] {
            static SEED: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(4);
            let seed = SEED.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            let inst = generate_instance(n, seed, None).unwrap();
            let t = Instant::now();
            let built = build(&inst, FormulationKind::EnhancedTriples).unwrap();
            match solve_milp(&built.model, &opts) {
                Ok(r) => eprintln!(
                    "n={n} seed={seed} enhanced-triples: {:.2}s nodes {} status {:?} obj {:.4}",
                    t.elapsed().as_secs_f64(),
                    r.nodes_explored,
                    r.status,
                    r.objective
                ),
                Err(e) => eprintln!("n={n} enhanced-triples: ERROR {e}"),
            }
            if std::env::var_os("BENCH_STATS").is_some() {
                use backhaul::solver::stats;
                let (solves, pivots, refactors, build_ms, pivot_ms, refactor_ms) = stats();
                eprintln!(
                    "stats: {solves} solves, {pivots} pivots, {refactors} refactors; \
                     build {build_ms}ms pivot {pivot_ms}ms refactor {refactor_ms}ms"
                );
            }
        }
    }

    if section == "all" || section == "lp" {
        for n in [10usize, 20] {
            let inst = generate_instance(n, 3, None).unwrap();
            let t = Instant::now();
            let built = build(&inst, FormulationKind::EnhancedTriples).unwrap();
            match solve_lp(&built.model, true) {
                Ok(lp) => eprintln!(
                    "n={n} enhanced-triples LP: {:.2}s obj {:.4} iters {}",
                    t.elapsed().as_secs_f64(),
                    lp.objective,
                    lp.iterations
                ),
                Err(e) => eprintln!("n={n} triples LP: ERROR {e}"),
            }
            let t = Instant::now();
            match node_arc_lp_bound(&inst, NodeArcVariant::Plain) {
                Ok(v) => eprintln!("n={n} node-arc LP (colgen): {:.2}s obj {v:.4}", t.elapsed().as_secs_f64()),
                Err(e) => eprintln!("n={n} node-arc LP: ERROR {e}"),
            }
            let t = Instant::now();
            match node_arc_lp_bound(&inst, NodeArcVariant::Enhanced) {
                Ok(v) => eprintln!(
                    "n={n} enhanced node-arc LP (colgen): {:.2}s obj {v:.4}",
                    t.elapsed().as_secs_f64()
                ),
                Err(e) => eprintln!("n={n} enhanced node-arc LP: ERROR {e}"),
            }
        }
    }
}

// Profiling totals printed by the milp10 section when BENCH_STATS is set.
