//! Solve an instance file end to end and print the plan.
//!
//!     cargo run --release --example solve_instance [path/to/instance.json]

use lpstcn::driver::{solve, SolveConfig};
use lpstcn::io::parse_instance;

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).expect("readable instance file"),
        None => include_str!("data/t1.json").to_string(),
    };
    let inst = parse_instance(&text).expect("valid instance");
    let sol = solve(&inst, &SolveConfig::default()).expect("solve");
    print!("{}", sol.describe(&inst));
    let st = &sol.stats;
    println!(
        "lb {:.4}  ub {:.4}  columns generated {}  enumerated {}  nodes {}  {:.3} s",
        st.lb, st.ub, st.columns_generated, st.columns_enumerated, st.nodes_explored, st.wall_time
    );
}
