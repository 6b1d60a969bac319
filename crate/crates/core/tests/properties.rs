use std::collections::HashSet;

use lpstcn::cuts::{rounded_rhs, single_arc_bound};
use lpstcn::driver::{solve, SolveConfig};
use lpstcn::enumeration::{enumerate_gap_columns, GapBudget};
use lpstcn::graph::{check_triangle, generate_instance, partition_layers, table3_fleet, GeneratorParams, OdRecord};
use lpstcn::io::{parse_instance, serialize_instance};
use lpstcn::lp::MipLimits;
use lpstcn::oracle::{enumerate_all_paths, solve_exact};
use lpstcn::pricing::{reduced_cost, run_column_generation};
use lpstcn::solution::{audit_solution, SolveStatus};
use proptest::prelude::*;

fn records() -> impl Strategy<Value = Vec<OdRecord>> {
    prop::collection::vec((1.0..100.0f64, 10.0..2000.0f64), 1..25).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (demand, distance))| OdRecord {
                destination: format!("d{i}"),
                demand,
                distance,
                position: None,
            })
            .collect()
    })
}

fn small_params() -> impl Strategy<Value = GeneratorParams> {
    (1usize..6, 0usize..6, prop_oneof![Just(1000.0), Just(2500.0)]).prop_map(|(n1, n2, area_km)| GeneratorParams {
        n1,
        n2,
        area_km,
        ..GeneratorParams::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_is_disjoint_and_covers(recs in records(), theta in 0.0..1.0f64) {
        if let Ok(p) = partition_layers(&recs, theta) {
            let first: HashSet<_> = p.first.iter().collect();
            let second: HashSet<_> = p.second.iter().collect();
            prop_assert!(first.is_disjoint(&second));
            let all: HashSet<_> = recs.iter().map(|r| &r.destination).collect();
            prop_assert_eq!(first.union(&second).copied().collect::<HashSet<_>>(), all);
        }
    }

    #[test]
    fn second_layer_grows_with_theta(recs in records(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if let (Ok(p), Ok(q)) = (partition_layers(&recs, lo), partition_layers(&recs, hi)) {
            let wide: HashSet<_> = q.second.iter().collect();
            prop_assert!(p.second.iter().all(|d| wide.contains(d)));
        }
    }

    #[test]
    fn generator_is_seeded_and_triangular(seed in 0u64..1000, params in small_params()) {
        let a = generate_instance(seed, &params).unwrap();
        let b = generate_instance(seed, &params).unwrap();
        prop_assert_eq!(serialize_instance(&a), serialize_instance(&b));
        prop_assert!(check_triangle(&a).holds);
    }

    #[test]
    fn json_round_trip(seed in 0u64..1000, params in small_params()) {
        let inst = generate_instance(seed, &params).unwrap();
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn rounded_rhs_covers_demand(demand in 0.0..500.0f64) {
        let qmax = table3_fleet().iter().map(|v| v.capacity).fold(0.0, f64::max);
        let rhs = rounded_rhs(demand, qmax);
        prop_assert_eq!(rhs, rhs.round());
        prop_assert!(rhs * qmax >= demand - 1e-9);
        prop_assert!((rhs - 1.0) * qmax < demand + 1e-9 || rhs == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unbounded_enumeration_is_every_column(seed in 0u64..1000, params in small_params()) {
        let inst = generate_instance(seed, &params).unwrap();
        let all = enumerate_all_paths(&inst).unwrap().len() * inst.fleet().len();
        prop_assert_eq!(enumerate_gap_columns(&inst, &GapBudget::unbounded(&inst)).len(), all);
    }

    #[test]
    fn column_generation_prices_out_every_path(seed in 0u64..1000, params in small_params()) {
        let inst = generate_instance(seed, &params).unwrap();
        let cg = run_column_generation(&inst, 1e-6).unwrap();
        for p in enumerate_all_paths(&inst).unwrap() {
            for k in 0..inst.fleet().len() {
                prop_assert!(reduced_cost(&inst, &p, k, &cg.duals) >= -1e-5);
            }
        }
    }

    #[test]
    fn driver_is_sandwiched_and_matches_oracle(seed in 0u64..1000, params in small_params()) {
        let inst = generate_instance(seed, &params).unwrap();
        let sol = solve(&inst, &SolveConfig::default()).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        audit_solution(&inst, &sol).unwrap();
        let tol = 1e-6 * sol.objective.abs().max(1.0);
        prop_assert!(sol.stats.lb <= sol.objective + tol);
        prop_assert!(sol.objective <= sol.stats.ub + tol);
        let exact = solve_exact(&inst, MipLimits::with_time(60.0)).unwrap();
        prop_assert_eq!(exact.status, SolveStatus::Optimal);
        prop_assert!((exact.objective - sol.objective).abs() <= tol);
    }
}

#[test]
fn replacement_bound_exists_only_for_replaceable_types() {
    let fleet = table3_fleet();
    // The largest type cannot be replaced by anything larger.
    let largest = (0..fleet.len()).max_by(|&a, &b| fleet[a].capacity.total_cmp(&fleet[b].capacity)).unwrap();
    assert_eq!(single_arc_bound(&fleet, largest), None);
}
