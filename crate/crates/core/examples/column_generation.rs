//! The lower-bound step on its own: column generation over the restricted
//! master with labeling pricing, then the duals it ends with.

use lpstcn::io::parse_instance;
use lpstcn::pricing::run_column_generation;

fn main() {
    let inst = parse_instance(include_str!("data/t1.json")).unwrap();
    let cg = run_column_generation(&inst, 1e-6).unwrap();
    println!("lower bound {:.6} after {} iterations", cg.lower_bound, cg.iterations);
    for col in &cg.columns {
        println!("  type {} on {}", col.vehicle + 1, col.path.display(&inst));
    }
    // One dual per arc; cross-layer arcs carry none.
    for (a, arc) in inst.arcs().iter().enumerate().filter(|(_, arc)| arc.is_first_layer()) {
        let (t, h) = (&inst.vertex(arc.tail).id, &inst.vertex(arc.head).id);
        println!("  dual on {t}-{h}: {:.4}", cg.duals.pi[a]);
    }
}
