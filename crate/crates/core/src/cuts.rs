//! Valid inequalities and variable bounds for the final integer model.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::graph::{check_triangle, Instance, VehicleType};
use crate::lp::{solve_mip, LinearModel, MipLimits, MipStatus, Sense};
use crate::master::Column;

/// `sum of y over columns visiting destination >= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCut {
    pub destination: usize,
    /// Indices into the column list the cut was built from.
    pub columns: Vec<usize>,
    pub rhs: f64,
}

/// Vehicles needed to carry `demand` with the largest vehicle type.
pub fn rounded_rhs(demand: f64, max_capacity: f64) -> f64 {
    (demand / max_capacity - 1e-9).ceil().max(0.0)
}

/// One cut per first-layer center with positive demand.
pub fn rounded_capacity_cuts(inst: &Instance, columns: &[Column]) -> Vec<CapacityCut> {
    let q_max = inst.fleet().iter().map(|v| v.capacity).fold(0.0, f64::max);
    inst.first_layer()
        .filter(|&i| inst.demand(i) > 0.0)
        .map(|i| CapacityCut {
            destination: i,
            columns: columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.path.visits(i))
                .map(|(j, _)| j)
                .collect(),
            rhs: rounded_rhs(inst.demand(i), q_max),
        })
        .collect()
}

/// `sum_k g_k Y_k >= rhs` where `Y_k` counts type-`k` vehicles entering a
/// destination; `coefficients[j]` belongs to `columns[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedCut {
    pub destination: usize,
    pub divisor: f64,
    pub columns: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

/// Mixed-integer rounding of `sum_k q_k Y_k >= d` after scaling by `1 / divisor`.
/// Returns per-type coefficients and the right-hand side, or `None` when the
/// scaled demand is integral and rounding adds nothing.
pub fn mir_coefficients(capacities: &[f64], demand: f64, divisor: f64) -> Option<(Vec<f64>, f64)> {
    let beta = demand / divisor;
    let f = beta - beta.floor();
    if f < 1e-6 || f > 1.0 - 1e-6 {
        return None;
    }
    let coeffs = capacities
        .iter()
        .map(|&q| {
            let a = q / divisor;
            let fa = a - a.floor();
            if fa < 1e-9 {
                a.round()
            } else if fa > 1.0 - 1e-9 {
                a.round()
            } else {
                a.floor() + fa.min(f) / f
            }
        })
        .collect();
    Some((coeffs, beta.ceil()))
}

/// Rounding cuts on the vehicle capacity entering each first-layer center,
/// one per center and distinct vehicle capacity used as divisor.
pub fn mir_capacity_cuts(inst: &Instance, columns: &[Column]) -> Vec<RoundedCut> {
    let caps: Vec<f64> = inst.fleet().iter().map(|v| v.capacity).collect();
    let mut out = Vec::new();
    for i in inst.first_layer() {
        let d = inst.demand(i);
        if d <= 0.0 {
            continue;
        }
        let visiting: Vec<usize> = (0..columns.len()).filter(|&j| columns[j].path.visits(i)).collect();
        let mut divisors = caps.clone();
        divisors.dedup();
        for delta in divisors {
            if let Some((g, rhs)) = mir_coefficients(&caps, d, delta) {
                out.push(RoundedCut {
                    destination: i,
                    divisor: delta,
                    coefficients: visiting.iter().map(|&j| g[columns[j].vehicle]).collect(),
                    columns: visiting.clone(),
                    rhs,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundReason {
    /// Paths with two or more arcs carry at most one vehicle.
    MultiArc,
    /// Direct paths of a non-largest type are capped by the replacement bound.
    SingleArc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnBound {
    pub column: usize,
    pub upper: u32,
    pub reason: BoundReason,
}

/// `y <= 1` on every multi-arc column, provided first-layer distances obey
/// the triangle inequality. Otherwise nothing is emitted.
pub fn multi_arc_upper_bounds(inst: &Instance, columns: &[Column]) -> Vec<ColumnBound> {
    if !check_triangle(inst).holds {
        return Vec::new();
    }
    columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.path.num_arcs() >= 2)
        .map(|(j, _)| ColumnBound {
            column: j,
            upper: 1,
            reason: BoundReason::MultiArc,
        })
        .collect()
}

/// `y <= u_k*` on direct columns of every type except the largest.
pub fn single_arc_upper_bounds(inst: &Instance, columns: &[Column]) -> Vec<ColumnBound> {
    let u = fleet_single_arc_bounds(inst.fleet());
    columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.path.num_arcs() == 1)
        .filter_map(|(j, c)| {
            u[c.vehicle].map(|upper| ColumnBound {
                column: j,
                upper,
                reason: BoundReason::SingleArc,
            })
        })
        .collect()
}

/// Search cap on `u` and on each replacement count.
pub const REPLACEMENT_CAP: f64 = 1000.0;

/// Smallest `u >= 1` such that `u` vehicles of type index `k` can be replaced
/// by larger types costing no more and carrying no less. `None` when `k` is
/// the largest type or no replacement exists within the cap.
pub fn single_arc_bound(fleet: &[VehicleType], k: usize) -> Option<u32> {
    if k + 1 >= fleet.len() {
        return None;
    }
    let mut m = LinearModel::new();
    let u = m.add_var("u", 1.0, REPLACEMENT_CAP, true, 1.0);
    let vs: Vec<_> = (k + 1..fleet.len())
        .map(|i| m.add_var(format!("v{}", i + 1), 0.0, REPLACEMENT_CAP, true, 0.0))
        .collect();
    let mut cost: Vec<_> = vs.iter().zip(&fleet[k + 1..]).map(|(&v, t)| (v, t.unit_cost)).collect();
    cost.push((u, -fleet[k].unit_cost));
    m.add_constraint("cost", cost, Sense::Le, 0.0);
    let mut cap: Vec<_> = vs.iter().zip(&fleet[k + 1..]).map(|(&v, t)| (v, t.capacity)).collect();
    cap.push((u, -fleet[k].capacity));
    m.add_constraint("capacity", cap, Sense::Ge, 0.0);
    let res = solve_mip(&m, MipLimits::default()).ok()?;
    if res.status != MipStatus::Optimal {
        return None;
    }
    Some(res.incumbent?[u.0].round() as u32)
}

type FleetKey = Vec<(u64, u64)>;

/// `single_arc_bound` for every type, cached per fleet.
pub fn fleet_single_arc_bounds(fleet: &[VehicleType]) -> Vec<Option<u32>> {
    static CACHE: OnceLock<Mutex<HashMap<FleetKey, Vec<Option<u32>>>>> = OnceLock::new();
    let key: FleetKey = fleet
        .iter()
        .map(|v| (v.capacity.to_bits(), v.unit_cost.to_bits()))
        .collect();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return hit.clone();
    }
    let bounds: Vec<Option<u32>> = (0..fleet.len()).map(|k| single_arc_bound(fleet, k)).collect();
    cache.lock().unwrap().insert(key, bounds.clone());
    bounds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::table3_fleet;
    use crate::graph::tests::t1;
    use crate::pricing::initial_columns;

    #[test]
    fn mir_example() {
        let caps: Vec<f64> = table3_fleet().iter().map(|v| v.capacity).collect();
        let (g, rhs) = mir_coefficients(&caps, 100.0, 65.0).unwrap();
        assert_eq!(rhs, 2.0);
        assert_eq!(g[0], 1.0);
        assert!((g[1] - (1.0 + (25.0 / 65.0) / (35.0 / 65.0))).abs() < 1e-12);
        assert_eq!(g[2], 2.0);
        assert_eq!(g[3], 3.0);
        // Divisor = largest capacity dominates the plain rounded cut.
        let (g, rhs) = mir_coefficients(&caps, 100.0, 175.0).unwrap();
        assert_eq!(rhs, 1.0);
        assert!(g.iter().all(|&c| c <= 1.0 && c > 0.0));
    }

    #[test]
    fn mir_is_valid_by_enumeration() {
        let caps: Vec<f64> = table3_fleet().iter().map(|v| v.capacity).collect();
        for d in [1.0, 37.5, 64.0, 66.0, 100.0, 131.0, 176.0, 351.0, 420.0] {
            for &delta in &caps {
                let Some((g, rhs)) = mir_coefficients(&caps, d, delta) else { continue };
                for y0 in 0..5 {
                    for y1 in 0..5 {
                        for y2 in 0..5 {
                            for y3 in 0..5 {
                                let y = [y0 as f64, y1 as f64, y2 as f64, y3 as f64];
                                let cap: f64 = y.iter().zip(&caps).map(|(a, b)| a * b).sum();
                                if cap >= d {
                                    let lhs: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
                                    assert!(lhs >= rhs - 1e-9, "d={d} delta={delta} y={y:?}");
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(rounded_rhs(100.0, 175.0), 1.0);
        assert_eq!(rounded_rhs(351.0, 175.0), 3.0);
        assert_eq!(rounded_rhs(350.0, 175.0), 2.0);
        assert_eq!(rounded_rhs(0.0, 175.0), 0.0);
    }

    #[test]
    fn table3_replacement_bounds() {
        assert_eq!(fleet_single_arc_bounds(&table3_fleet()), vec![Some(2), Some(3), Some(4), None]);
    }

    #[test]
    fn single_type_fleet_has_no_bound() {
        assert_eq!(single_arc_bound(&table3_fleet()[..1], 0), None);
    }

    #[test]
    fn no_replacement_when_larger_types_cost_too_much() {
        let fleet = vec![
            VehicleType { id: 1, capacity: 10.0, unit_cost: 1.0 },
            VehicleType { id: 2, capacity: 11.0, unit_cost: 100.0 },
        ];
        assert_eq!(single_arc_bound(&fleet, 0), None);
    }

    #[test]
    fn t1_cuts_and_bounds() {
        let inst = t1();
        let mut cols = initial_columns(&inst);
        let a = inst.vertex_by_id("a").unwrap();
        let b = inst.vertex_by_id("b").unwrap();
        cols.push(Column::new(crate::graph::Path::new(&inst, vec![a, b]).unwrap(), 2));
        let cuts = rounded_capacity_cuts(&inst, &cols);
        assert_eq!(cuts.len(), 2);
        assert!(cuts.iter().all(|c| c.rhs == 1.0));
        assert_eq!(cuts[0].columns.len(), 5);
        let multi = multi_arc_upper_bounds(&inst, &cols);
        assert_eq!(multi, vec![ColumnBound { column: 8, upper: 1, reason: BoundReason::MultiArc }]);
        assert_eq!(single_arc_upper_bounds(&inst, &cols).len(), 6);
    }
}
