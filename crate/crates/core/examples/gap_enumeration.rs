//! How many columns survive the reduced-cost filter compared with the full
//! path-by-type set, on a generated instance.

use lpstcn::enumeration::{enumerate_gap_columns, GapBudget};
use lpstcn::graph::{generate_instance, GeneratorParams};
use lpstcn::lp::{solve_mip, MipLimits};
use lpstcn::master::build_rmp;
use lpstcn::oracle::enumerate_all_paths;
use lpstcn::pricing::run_column_generation;

fn main() {
    let params = GeneratorParams {
        n1: 8,
        n2: 6,
        area_km: 1000.0,
        ..GeneratorParams::default()
    };
    let inst = generate_instance(7, &params).unwrap();
    let cg = run_column_generation(&inst, 1e-6).unwrap();
    let rmp = build_rmp(&inst, &cg.columns).unwrap();
    let ub = solve_mip(&rmp.model, MipLimits::with_time(60.0)).unwrap();
    let budget = GapBudget::new(cg.lower_bound, ub.objective, cg.duals.clone());
    let kept = enumerate_gap_columns(&inst, &budget);
    let full = enumerate_all_paths(&inst).unwrap().len() * inst.fleet().len();
    println!("lb {:.2}  ub {:.2}  gap {:.2}", budget.lb, budget.ub, budget.gap);
    println!("columns with reduced cost below the gap: {} of {full}", kept.len());
}
