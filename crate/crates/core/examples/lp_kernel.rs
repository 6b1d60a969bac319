//! The bundled LP/MIP kernel used by every step, on a toy knapsack.

use lpstcn::lp::{solve_lp, solve_mip, LinearModel, MipLimits, Sense};

fn main() {
    let mut m = LinearModel::new();
    let items = [(5.0, 12.0), (4.0, 10.0), (3.0, 7.0), (2.0, 3.0)];
    let vars: Vec<_> = items
        .iter()
        .enumerate()
        .map(|(i, &(_, value))| m.add_var(format!("take{i}"), 0.0, 1.0, true, -value))
        .collect();
    let weights = vars.iter().zip(&items).map(|(&v, &(w, _))| (v, w)).collect();
    m.add_constraint("capacity", weights, Sense::Le, 9.0);

    let lp = solve_lp(&m).unwrap();
    println!("relaxation {:.3}, capacity dual {:.3}", -lp.objective, lp.duals[0]);
    let ip = solve_mip(&m, MipLimits::default()).unwrap();
    println!("integer optimum {:.3} after {} nodes", -ip.objective, ip.nodes_explored);
    println!("chosen: {:?}", ip.incumbent.unwrap().iter().map(|x| x.round() as u8).collect::<Vec<_>>());
}
