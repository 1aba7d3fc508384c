//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them). Tolerances are
//! pinned in code; reference values come from closed forms, hand-checked
//! walkthroughs and the exhaustive-search oracle.

use backhaul::analysis::{
    alt_profit, arc_flows_from_triples, build_diversion_digraph, check_acyclic,
    check_diversion_ordering, decode_solution, repair_negative_flows, validate_solution,
    Diversions,
};
use backhaul::datagen::{generate_instance, op_best_score, op_to_bpmp, random_op};
use backhaul::fixtures;
use backhaul::formulations::{
    build, build_enhanced_triples, build_node_arc, FormulationKind,
};
use backhaul::instance::{
    arc_set, count_solution_space, profit_upper_bound, Instance, Parameters,
};
use backhaul::mip::model_stats;
use backhaul::oracle::{solve_exact, BpmpSolution, OracleLimits};
use backhaul::solver::{
    node_arc_lp_bound, solve_external, solve_lp, solve_milp, BackendConfig, Builtin,
    MilpOptions, MilpResult, MilpStatus, ModelFormat, NodeArcVariant, SolverError,
};
use std::collections::BTreeSet;

fn exact_options() -> MilpOptions {
    MilpOptions {
        gap_tolerance: 1e-8,
        threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..Default::default()
    }
}

fn small_instances() -> Vec<(usize, u64, Instance)> {
    let mut out = Vec::new();
    for n in [4usize, 5, 6] {
        for seed in 0..20u64 {
            out.push((n, seed, generate_instance(n, seed, None).unwrap()));
        }
    }
    out
}

fn solve_enhanced_triples_exactly(inst: &Instance) -> (MilpResult, BpmpSolution) {
    let built = build_enhanced_triples(inst).unwrap();
    let result = solve_milp(&built.model, &exact_options()).unwrap();
    assert_eq!(result.status, MilpStatus::Optimal);
    let sol = decode_solution(inst, &built, result.incumbent.as_ref().unwrap()).unwrap();
    (result, sol)
}

#[test]
fn c01_counting_goldens() {
    assert_eq!(arc_set(10).unwrap().len(), 73);
    assert_eq!(arc_set(20).unwrap().len(), 343);
    assert_eq!(arc_set(50).unwrap().len(), 2353);
    assert_eq!(count_solution_space(2), 146u32.into());
    println!("criterion 01 PASS: arc counts 73/343/2353 and 146 route-selection combinations");
}

#[test]
fn c02_oracle_milp_equivalence() {
    let opts = exact_options();
    let mut worst: f64 = 0.0;
    for (n, seed, inst) in small_instances() {
        let exact = solve_exact(&inst, OracleLimits::default()).unwrap();
        for kind in FormulationKind::ALL {
            let built = build(&inst, kind).unwrap();
            let result = solve_milp(&built.model, &opts).unwrap();
            assert_eq!(
                result.status,
                MilpStatus::Optimal,
                "n={n} seed={seed} {}",
                kind.name()
            );
            let diff = (result.objective - exact.profit).abs();
            worst = worst.max(diff);
            assert!(
                diff < 1e-6,
                "n={n} seed={seed} {}: solver {} vs oracle {}",
                kind.name(),
                result.objective,
                exact.profit
            );
        }
    }
    println!(
        "criterion 02 PASS: 60 instances x 4 formulations agree with the oracle \
         (worst deviation {worst:.2e})"
    );
}

#[test]
fn c03_profit_ceiling() {
    assert_eq!(profit_upper_bound(&Parameters::standard()), 5000.0);
    let mut worst = f64::NEG_INFINITY;
    for n in [10usize, 20] {
        for seed in 0..10u64 {
            let inst = generate_instance(n, seed, None).unwrap();
            let built = build_enhanced_triples(&inst).unwrap();
            let lp = solve_lp(&built.model, true).unwrap();
            worst = worst.max(lp.objective);
            assert!(
                lp.objective <= 5000.0 + 1e-6,
                "n={n} seed={seed}: relaxation {} above the ceiling",
                lp.objective
            );
        }
    }
    println!(
        "criterion 03 PASS: closed-form ceiling is exactly 5000; every enhanced-triples \
         relaxation stays below it (max {worst:.6})"
    );
}

#[test]
fn c04_lp_strength_ordering() {
    for n in [10usize, 20] {
        let mut strong = 0usize;
        let mut logged = Vec::new();
        for seed in 0..10u64 {
            let inst = generate_instance(n, seed, None).unwrap();
            let built = build_enhanced_triples(&inst).unwrap();
            let triples = solve_lp(&built.model, true).unwrap().objective;
            let node_arc = node_arc_lp_bound(&inst, NodeArcVariant::Plain).unwrap();
            assert!(
                node_arc >= triples - 1e-6,
                "n={n} seed={seed}: node-arc bound {node_arc} below triples bound {triples}"
            );
            if node_arc >= 2.0 * triples {
                strong += 1;
            }
            let enhanced = node_arc_lp_bound(&inst, NodeArcVariant::Enhanced).unwrap();
            logged.push((seed, node_arc / triples, enhanced / triples));
        }
        assert!(
            strong >= 9,
            "n={n}: only {strong}/10 instances had the node-arc bound at least twice \
             the triples bound"
        );
        let ratios: Vec<String> = logged
            .iter()
            .map(|(s, r, e)| format!("seed {s}: {r:.1}x (enhanced {e:.2}x)"))
            .collect();
        println!("criterion 04 [n={n}] ratios: {}", ratios.join(", "));
    }
    println!("criterion 04 PASS: node-arc relaxation at least 2x weaker on >= 9/10 instances per size");
}

#[test]
fn c05_reference_flow_table() {
    let inst = fixtures::four_node_line();
    let (_, u) = fixtures::four_node_reference();
    let y = vec![1.0; inst.requests.len()];
    let flows = arc_flows_from_triples(&inst, &y, &u);
    for ((i, j), expect) in fixtures::four_node_reference_flows() {
        assert!(
            (flows[&(i, j)] - expect).abs() <= 1e-12,
            "arc ({i},{j}): {} vs {expect}",
            flows[&(i, j)]
        );
    }
    println!("criterion 05 PASS: reference diversions reproduce flows (0.9, 0.9, 0.7, 0, 0)");
}

#[test]
fn c06_size_formulas() {
    for n in [4usize, 10, 20] {
        let inst = fixtures::full_request_instance(n);
        let triples = model_stats(&build_enhanced_triples(&inst).unwrap().model);
        assert_eq!(triples.binary, 2 * (n * n + 3) - 6 * n, "triples binaries n={n}");
        assert_eq!(triples.constraints, 3 * n * n + 9 - 7 * n, "triples rows n={n}");
        let node_arc =
            model_stats(&backhaul::formulations::build_enhanced_node_arc(&inst).unwrap().model);
        assert_eq!(
            node_arc.binary,
            (n.pow(4) + 17 * n * n + 15) - (6 * n.pow(3) + 24 * n),
            "node-arc binaries n={n}"
        );
        assert_eq!(node_arc.constraints, n.pow(3) + 10 - 5 * n, "node-arc rows n={n}");
    }
    println!("criterion 06 PASS: model sizes match the closed forms at n = 4, 10, 20");
}

#[test]
fn c07_four_node_inventory() {
    let built = build_enhanced_triples(&fixtures::four_node_line()).unwrap();
    let count = |prefix: &str| {
        built
            .model
            .constraints()
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .count()
    };
    let routing = count("route_") + count("node_degree");
    assert_eq!(routing, 6, "routing rows");
    assert_eq!(count("lifted_mtz"), 2);
    assert_eq!(count("distance_limit"), 1);
    assert_eq!(count("triples_"), 7);
    assert_eq!(count("cond_arc_flow"), 7);
    assert_eq!(count("demand_"), 6);
    assert_eq!(built.model.constraints().len(), 29, "nothing else");
    for i in 2..=4usize {
        let s = built.model.var(built.map.seq[&i]);
        assert_eq!((s.lower, s.upper), (1.0, 4.0), "sequence bounds s_{i}");
    }
    println!(
        "criterion 07 PASS: four-node inventory is 6 routing + 2 lifted subtour + 1 distance \
         + 7 flow accounting + 7 conditional arc-flow + 6 demand cuts, with boxed sequences"
    );
}

#[test]
fn c08_objective_identity() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut samples = 0;
    while samples < 200 {
        let n = 4 + (samples % 4);
        let inst = fixtures::full_request_instance(n);
        let y: Vec<f64> = (0..inst.requests.len()).map(|_| rng.gen()).collect();
        let mut u = Diversions::new();
        for t in backhaul::instance::triple_set(n) {
            if rng.gen_bool(0.3) {
                u.insert(t, rng.gen::<f64>() * 3.0);
            }
        }
        let x: std::collections::BTreeMap<(usize, usize), f64> = arc_set(n)
            .unwrap()
            .into_iter()
            .map(|a| (a, if rng.gen_bool(0.4) { 1.0 } else { 0.0 }))
            .collect();
        let flows = arc_flows_from_triples(&inst, &y, &u);
        let p = &inst.params;
        let direct: f64 = inst
            .requests
            .iter()
            .map(|r| p.revenue_rate * inst.request_distance(r) * r.weight * y[r.id])
            .sum::<f64>()
            - flows
                .iter()
                .map(|(&(i, j), &f)| p.cost_rate * inst.distance(i, j) * f)
                .sum::<f64>()
            - x.iter()
                .map(|(&(i, j), &v)| p.cost_rate * p.vehicle_weight * inst.distance(i, j) * v)
                .sum::<f64>();
        let rewritten = alt_profit(&inst, &y, &u, &x);
        assert!(
            (direct - rewritten).abs() <= 1e-9,
            "sample {samples}: {direct} vs {rewritten}"
        );
        samples += 1;
    }
    println!("criterion 08 PASS: objective identity holds on 200 random samples (1e-9)");
}

#[test]
fn c09_diversion_digraph_suite() {
    // Repair on the collinear fixture: profit must be bit-stable.
    let t4 = fixtures::four_node_line();
    let mut y = vec![0.0; t4.requests.len()];
    y[2] = 1.0;
    let mut u = Diversions::new();
    u.insert((1, 4, 2), 0.1);
    u.insert((1, 4, 3), 0.2);
    let x: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    let before = alt_profit(&t4, &y, &u, &x);
    let repaired = repair_negative_flows(&t4, &y, &u).unwrap();
    let after = alt_profit(&t4, &y, &repaired, &x);
    assert!((before - after).abs() <= 1e-9, "repair changed profit {before} -> {after}");
    let flows = arc_flows_from_triples(&t4, &y, &repaired);
    assert!(flows.values().all(|&v| v >= -1e-9));

    // Every optimal enhanced-triples assignment on the small instance set:
    // acyclic digraph, leaf nodes carry the positive flows, diversions ride
    // the route in order.
    for (n, seed, inst) in small_instances() {
        let built = build_enhanced_triples(&inst).unwrap();
        let result = solve_milp(&built.model, &exact_options()).unwrap();
        let asg = result.incumbent.as_ref().unwrap();
        let mut u = Diversions::new();
        for (&t, &var) in &built.map.diversion {
            let v = asg.get(var).unwrap();
            if v > 1e-9 {
                u.insert(t, v);
            }
        }
        let digraph = build_diversion_digraph(&u);
        let topo = check_acyclic(&digraph);
        assert!(topo.is_ok(), "n={n} seed={seed}: cycle {:?}", topo.unwrap_err());

        let sol = decode_solution(&inst, &built, asg).unwrap();
        let mut yv = vec![0.0; inst.requests.len()];
        for &id in &sol.accepted {
            yv[id] = 1.0;
        }
        let repaired = repair_negative_flows(&inst, &yv, &u).unwrap();
        let flows = arc_flows_from_triples(&inst, &yv, &repaired);
        assert!(
            flows.values().all(|&v| v >= -1e-9),
            "n={n} seed={seed}: negative flow after repair"
        );
        let digraph = build_diversion_digraph(&repaired);
        for &node in &digraph.nodes {
            let leaf = digraph.out_degree(node) == 0;
            let positive = flows[&node] > 1e-9;
            assert_eq!(
                leaf, positive,
                "n={n} seed={seed}: digraph node {node:?} leaf={leaf} positive={positive}"
            );
        }
        let violations = check_diversion_ordering(&sol.route, &repaired, 1e-6);
        assert!(violations.is_empty(), "n={n} seed={seed}: {violations:?}");
    }
    println!(
        "criterion 09 PASS: repair keeps profit and nonnegative flows; optimal assignments \
         are acyclic with leaves carrying the positive flows in route order"
    );
}

#[test]
fn c10_heuristic_quality() {
    let opts = exact_options();
    let mut gaps: Vec<f64> = Vec::new();
    let mut hits = 0usize;
    let mut total = 0usize;

    for (_, _, inst) in small_instances() {
        let exact = solve_exact(&inst, OracleLimits::default()).unwrap();
        let heur = backhaul::heuristic::run_heuristic(&inst, &Builtin(opts)).unwrap();
        assert!(validate_solution(&inst, &heur).is_valid());
        assert!(heur.profit <= exact.profit + 1e-6);
        let gap = ((exact.profit - heur.profit) / exact.profit.abs().max(1.0)).max(0.0);
        gaps.push(gap);
        total += 1;
        if gap <= 1e-9 {
            hits += 1;
        }
    }
    // Ten larger instances drawn from both sizes; the exact references come
    // from the enhanced-triples solver.
    let larger: Vec<(usize, u64)> = vec![
        (8, 0), (8, 1), (8, 2), (8, 3), (8, 4), (8, 5), (8, 6),
        (10, 4), (10, 5), (10, 6),
    ];
    for (n, seed) in larger {
        let inst = generate_instance(n, seed, None).unwrap();
        let (result, _) = solve_enhanced_triples_exactly(&inst);
        let heur = backhaul::heuristic::run_heuristic(&inst, &Builtin(opts)).unwrap();
        assert!(validate_solution(&inst, &heur).is_valid());
        assert!(heur.profit <= result.objective + 1e-6, "n={n} seed={seed}");
        let gap = ((result.objective - heur.profit) / result.objective.abs().max(1.0)).max(0.0);
        println!("criterion 10 [n={n} seed={seed}]: heuristic gap {:.3}%", 100.0 * gap);
        gaps.push(gap);
        total += 1;
        if gap <= 1e-6 {
            hits += 1;
        }
    }

    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = gaps[gaps.len() / 2];
    assert!(median <= 0.02, "median gap {median}");
    assert!(
        hits * 5 >= total * 4,
        "heuristic exact on {hits}/{total} instances, below 80%"
    );
    println!(
        "criterion 10 PASS: median gap {:.3}% and exact optimum on {hits}/{total} instances",
        100.0 * median
    );
}

#[test]
fn c11_orienteering_reduction() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 20 {
        let n = 3 + (seed % 4) as usize; // up to 4 interior checkpoints
        let op = random_op(n.min(6), seed);
        seed += 1;
        let inst = op_to_bpmp(&op).unwrap();
        let best = op_best_score(&op);
        match solve_exact(&inst, OracleLimits::default()) {
            Ok(sol) => assert!(
                (sol.profit - best).abs() < 1e-9,
                "seed {seed}: backhaul {} vs race {best}",
                sol.profit
            ),
            Err(backhaul::oracle::OracleError::Infeasible) => assert_eq!(best, 0.0),
            Err(e) => panic!("seed {seed}: {e}"),
        }
        checked += 1;
    }
    println!("criterion 11 PASS: race scores match backhaul profits on 20 reductions");
}

#[test]
fn c12_external_backend_round_trip() {
    use std::io::Write;
    let inst = fixtures::four_node_line();
    let built = build_enhanced_triples(&inst).unwrap();

    // Subprocess support probe; skip (pass vacuously) when unavailable.
    if std::process::Command::new("sh").arg("-c").arg("true").status().is_err() {
        println!("criterion 12 SKIP: subprocess execution unavailable");
        return;
    }

    let dir = tempfile::tempdir().unwrap();
    let canned = dir.path().join("canned.sol");
    std::fs::write(&canned, fixtures::four_node_solution_lines()).unwrap();
    let script = dir.path().join("stub.sh");
    {
        let mut f = std::fs::File::create(&script).unwrap();
        writeln!(f, "#!/bin/sh").unwrap();
        writeln!(f, "cp {} \"$2\"", canned.display()).unwrap();
    }
    for format in [ModelFormat::Lp, ModelFormat::Mps] {
        let cfg = BackendConfig {
            command: format!("sh {} {{model}} {{solution}}", script.display()),
            format,
        };
        let result = solve_external(&built.model, &cfg, &dir.path().join("run")).unwrap();
        assert_eq!(result.status, MilpStatus::Optimal);
        assert!((result.objective - 0.2).abs() < 1e-9, "{:?}", format);
        let sol = decode_solution(&inst, &built, result.incumbent.as_ref().unwrap()).unwrap();
        assert_eq!(sol.route, vec![1, 2, 3, 4]);
        assert_eq!(sol.accepted, (0..6).collect::<BTreeSet<_>>());
    }

    std::fs::write(&canned, fixtures::four_node_overloaded_lines()).unwrap();
    let cfg = BackendConfig {
        command: format!("sh {} {{model}} {{solution}}", script.display()),
        format: ModelFormat::Lp,
    };
    match solve_external(&built.model, &cfg, &dir.path().join("run2")) {
        Err(SolverError::SolutionIntegrity { constraint, .. }) => {
            assert_eq!(constraint, "cond_arc_flow_1_2");
        }
        other => panic!("corrupted solution not rejected: {other:?}"),
    }
    println!("criterion 12 PASS: stub backend round-trips the optimum and corrupted output is rejected");
}
