//! Valid inequalities and column bounds for the final integer model.

use lpstcn::cuts::{
    fleet_single_arc_bounds, mir_capacity_cuts, multi_arc_upper_bounds, rounded_capacity_cuts, single_arc_upper_bounds,
};
use lpstcn::graph::check_triangle;
use lpstcn::io::parse_instance;
use lpstcn::oracle::enumerate_all_paths;
use lpstcn::master::Column;

fn main() {
    let inst = parse_instance(include_str!("data/t1.json")).unwrap();
    let columns: Vec<Column> = enumerate_all_paths(&inst)
        .unwrap()
        .into_iter()
        .flat_map(|p| (0..inst.fleet().len()).map(move |k| Column::new(p.clone(), k)))
        .collect();

    for cut in rounded_capacity_cuts(&inst, &columns) {
        println!("visits to {} >= {}", inst.vertex(cut.destination).id, cut.rhs);
    }
    for cut in mir_capacity_cuts(&inst, &columns) {
        println!("rounded capacity at {} (divisor {}) >= {}", inst.vertex(cut.destination).id, cut.divisor, cut.rhs);
    }
    println!("triangle inequality holds: {}", check_triangle(&inst).holds);
    println!("multi-arc columns capped at 1: {}", multi_arc_upper_bounds(&inst, &columns).len());
    println!("direct columns capped: {}", single_arc_upper_bounds(&inst, &columns).len());
    // Smallest u per type that a mix of larger types can replace.
    println!("replacement bounds: {:?}", fleet_single_arc_bounds(inst.fleet()));
}
