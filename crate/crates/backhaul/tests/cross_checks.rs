//! Cross-validation between the exhaustive oracle, the four formulations,
//! the encodings and the builtin solver.

use backhaul::analysis::{decode_solution, encode_solution};
use backhaul::datagen::generate_instance;
use backhaul::fixtures;
use backhaul::formulations::{build, fix_route_and_requests, FormulationKind};
use backhaul::instance::Instance;
use backhaul::mip::evaluate;
use backhaul::oracle::{solve_exact, OracleLimits};
use backhaul::solver::{solve_lp, solve_milp, MilpOptions, MilpStatus};

fn tight() -> MilpOptions {
    MilpOptions { gap_tolerance: 1e-8, ..Default::default() }
}

#[test]
fn oracle_encodings_are_feasible_in_all_formulations() {
    let t4 = fixtures::four_node_line();
    let sol = solve_exact(&t4, OracleLimits::default()).unwrap();
    for kind in FormulationKind::ALL {
        let built = build(&t4, kind).unwrap();
        let asg = encode_solution(&t4, &built, &sol);
        let ev = evaluate(&built.model, &asg).unwrap();
        assert!(
            ev.is_feasible(),
            "{}: violations {:?}",
            kind.name(),
            ev.violations
        );
        assert!(
            (ev.objective - sol.profit).abs() < 1e-9,
            "{}: encoded objective {} vs profit {}",
            kind.name(),
            ev.objective,
            sol.profit
        );
    }
}

#[test]
fn decode_of_encode_is_identity() {
    let t4 = fixtures::four_node_line();
    let sol = solve_exact(&t4, OracleLimits::default()).unwrap();
    for kind in FormulationKind::ALL {
        let built = build(&t4, kind).unwrap();
        let asg = encode_solution(&t4, &built, &sol);
        let back = decode_solution(&t4, &built, &asg).unwrap();
        assert_eq!(back.route, sol.route, "{}", kind.name());
        assert_eq!(back.accepted, sol.accepted, "{}", kind.name());
        assert!((back.profit - sol.profit).abs() < 1e-9, "{}", kind.name());
    }
}

#[test]
fn milp_matches_oracle_on_fixture() {
    let t4 = fixtures::four_node_line();
    let exact = solve_exact(&t4, OracleLimits::default()).unwrap();
    for kind in FormulationKind::ALL {
        let built = build(&t4, kind).unwrap();
        let result = solve_milp(&built.model, &tight()).unwrap();
        assert_eq!(result.status, MilpStatus::Optimal, "{}", kind.name());
        assert!(
            (result.objective - exact.profit).abs() < 1e-6,
            "{}: milp {} vs oracle {}",
            kind.name(),
            result.objective,
            exact.profit
        );
        let decoded =
            decode_solution(&t4, &built, result.incumbent.as_ref().unwrap()).unwrap();
        assert_eq!(decoded.route, vec![1, 2, 3, 4], "{}", kind.name());
        assert_eq!(decoded.accepted.len(), 6, "{}", kind.name());
    }
}

#[test]
fn milp_matches_oracle_on_random_instances() {
    // A slimmer version of the acceptance sweep for quick feedback.
    for n in [4usize, 5] {
        for seed in 0..3u64 {
            let inst = generate_instance(n, seed, None).unwrap();
            let exact = solve_exact(&inst, OracleLimits::default()).unwrap();
            for kind in FormulationKind::ALL {
                let built = build(&inst, kind).unwrap();
                let result = solve_milp(&built.model, &tight()).unwrap();
                assert_eq!(result.status, MilpStatus::Optimal);
                assert!(
                    (result.objective - exact.profit).abs() < 1e-6,
                    "n={n} seed={seed} {}: milp {} vs oracle {}",
                    kind.name(),
                    result.objective,
                    exact.profit
                );
                let lp = solve_lp(&built.model, true).unwrap();
                assert!(
                    lp.objective >= result.objective - 1e-7,
                    "n={n} seed={seed} {}: relaxation {} below optimum {}",
                    kind.name(),
                    lp.objective,
                    result.objective
                );
            }
        }
    }
}

#[test]
fn oracle_encoding_feasible_on_random_instances() {
    for n in [4usize, 5, 6] {
        for seed in 10..14u64 {
            let inst = generate_instance(n, seed, None).unwrap();
            let sol = solve_exact(&inst, OracleLimits::default()).unwrap();
            for kind in FormulationKind::ALL {
                let built = build(&inst, kind).unwrap();
                let asg = encode_solution(&inst, &built, &sol);
                let ev = evaluate(&built.model, &asg).unwrap();
                assert!(
                    ev.is_feasible(),
                    "n={n} seed={seed} {}: {:?}",
                    kind.name(),
                    ev.violations
                );
            }
        }
    }
}

#[test]
fn fixing_the_optimal_route_reaches_the_optimum() {
    let t4 = fixtures::four_node_line();
    let exact = solve_exact(&t4, OracleLimits::default()).unwrap();
    let built = build(&t4, FormulationKind::EnhancedTriples).unwrap();
    let arcs: Vec<(usize, usize)> = exact.route.windows(2).map(|w| (w[0], w[1])).collect();
    let ids: Vec<usize> = exact.accepted.iter().copied().collect();
    let fixed = fix_route_and_requests(&t4, &built, &arcs, &ids).unwrap();
    let result = solve_milp(&fixed.model, &tight()).unwrap();
    assert_eq!(result.status, MilpStatus::Optimal);
    assert!((result.objective - exact.profit).abs() < 1e-9);
}

#[test]
fn fixing_direct_route_without_requests_costs_deadhead() {
    let mut inst = fixtures::four_node_line();
    inst.requests.clear();
    let built = build(&inst, FormulationKind::EnhancedTriples).unwrap();
    let fixed = fix_route_and_requests(&inst, &built, &[(1, 4)], &[]).unwrap();
    let result = solve_milp(&fixed.model, &tight()).unwrap();
    assert_eq!(result.status, MilpStatus::Optimal);
    let expect = -inst.params.cost_rate * inst.params.vehicle_weight * inst.distance(1, 4);
    assert!(
        (result.objective - expect).abs() < 1e-9,
        "objective {} vs {}",
        result.objective,
        expect
    );
}

#[test]
fn reference_assignment_evaluates_cleanly_with_table_flows() {
    // The published four-node walkthrough, keyed in by hand: route and all
    // six acceptances, reference diversions, flows from the worked table.
    let t4 = fixtures::four_node_line();
    let built = build(&t4, FormulationKind::EnhancedTriples).unwrap();
    let mut asg = backhaul::mip::Assignment::empty(&built.model);
    for name in ["x_1_2", "x_2_3", "x_3_4"] {
        asg.set_by_name(&built.model, name, 1.0).unwrap();
    }
    for (i, j) in [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)] {
        asg.set_by_name(&built.model, &format!("y_{i}_{j}"), 1.0).unwrap();
    }
    asg.set_by_name(&built.model, "u_1_3_2", 0.3).unwrap();
    asg.set_by_name(&built.model, "u_1_4_2", 0.2).unwrap();
    asg.set_by_name(&built.model, "u_2_4_3", 0.3).unwrap();
    for ((i, j), flow) in fixtures::four_node_reference_flows() {
        asg.set_by_name(&built.model, &format!("theta_{i}_{j}"), flow).unwrap();
    }
    for (node, s) in [(1, 0.0), (2, 1.0), (3, 2.0), (4, 3.0)] {
        asg.set_by_name(&built.model, &format!("s_{node}"), s).unwrap();
    }
    asg.fill_missing(0.0);
    let ev = evaluate(&built.model, &asg).unwrap();
    assert!(ev.is_feasible(), "{:?}", ev.violations);
    assert!((ev.objective - 0.2).abs() < 1e-9);

    // Forcing the flow on (1,2) over the one-ton capacity must name the
    // conditional arc-flow row for that arc (the flow-accounting equality
    // breaks alongside it).
    let mut over = asg.clone();
    over.set_by_name(&built.model, "theta_1_2", 1.2).unwrap();
    let ev = evaluate(&built.model, &over).unwrap();
    assert!(
        ev.violations.iter().any(|(n, _)| n == "cond_arc_flow_1_2"),
        "{:?}",
        ev.violations
    );
    assert_eq!(ev.violations[0].0, "cond_arc_flow_1_2", "first violation in row order");
}

#[test]
fn node_arc_reference_assignment_with_commodity_paths() {
    // Same walkthrough on the node-arc kinds, with each request's commodity
    // routed along its route segment.
    let t4 = fixtures::four_node_line();
    let exact = solve_exact(&t4, OracleLimits::default()).unwrap();
    for kind in [FormulationKind::NodeArc, FormulationKind::EnhancedNodeArc] {
        let built = build(&t4, kind).unwrap();
        let asg = encode_solution(&t4, &built, &exact);
        let ev = evaluate(&built.model, &asg).unwrap();
        assert!(ev.is_feasible(), "{}: {:?}", kind.name(), ev.violations);
        // Flow on (2,3) stacks requests (1,3), (1,4), (2,3), (2,4).
        let theta = built.model.var_by_name("theta_2_3").unwrap();
        assert!((asg.get(theta).unwrap() - 0.9).abs() < 1e-12);
    }
}

#[test]
fn four_node_solution_space_has_146_points() {
    // Brute-force sanity for the counting formula: enumerate all routes of
    // the four-node instance without a distance limit, and for each route
    // count every subset of orderable pairs.
    let mut inst: Instance = fixtures::four_node_line();
    inst.params.distance_limit = 1e9;
    let mut total: u64 = 0;
    for route in backhaul::oracle::enumerate_routes(&inst) {
        let on_route = |a: usize, b: usize| {
            let pa = route.iter().position(|&v| v == a);
            let pb = route.iter().position(|&v| v == b);
            matches!((pa, pb), (Some(x), Some(y)) if x < y)
        };
        let mut pairs = 0u32;
        for i in 1..=4usize {
            for j in 1..=4usize {
                if i != j && on_route(i, j) {
                    pairs += 1;
                }
            }
        }
        total += 1u64 << pairs;
    }
    assert_eq!(total, 146);
    assert_eq!(
        backhaul::instance::count_solution_space(2),
        num_bigint_from(146)
    );
}

fn num_bigint_from(v: u64) -> num_bigint::BigUint {
    num_bigint::BigUint::from(v)
}
