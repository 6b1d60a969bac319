//! Brute-force reference solver: every feasible path times every vehicle
//! type in one integer model. Shares only the graph types and the LP kernel
//! with the column-generation pipeline.

use std::collections::HashMap;
use std::time::Instant;

use thiserror::Error;

use crate::graph::{Instance, Path, ORIGIN};
use crate::lp::{solve_lp, solve_mip_with_start, LinearModel, LpStatus, MipLimits, MipStatus, ModelError, Sense, VarId};
use crate::master::Column;
use crate::solution::{SolveStats, SolveStatus, Solution};

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("more than {0} feasible paths")]
    SizeGuard(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("relaxation ended with status {0:?}")]
    Lp(LpStatus),
}

/// Every elementary first-layer path from the origin with at most
/// `arc_limit` arcs, in depth-first order.
pub fn enumerate_all_paths(inst: &Instance) -> Result<Vec<Path>, OracleError> {
    enumerate_all_paths_capped(inst, DEFAULT_PATH_CAP)
}

pub fn enumerate_all_paths_capped(inst: &Instance, cap: usize) -> Result<Vec<Path>, OracleError> {
    let mut out = Vec::new();
    let mut stack = Vec::new();
    dfs(inst, ORIGIN, &mut stack, &mut out, cap)?;
    Ok(out)
}

fn dfs(inst: &Instance, v: usize, stack: &mut Vec<usize>, out: &mut Vec<Path>, cap: usize) -> Result<(), OracleError> {
    if stack.len() == inst.arc_limit() {
        return Ok(());
    }
    for &a in inst.out_arcs(v) {
        let arc = inst.arc(a);
        if !arc.is_first_layer() || stack.contains(&arc.head) {
            continue;
        }
        stack.push(arc.head);
        if out.len() == cap {
            return Err(OracleError::SizeGuard(cap));
        }
        out.push(Path::new(inst, stack.clone()).expect("first-layer arcs only"));
        dfs(inst, arc.head, stack, out, cap)?;
        stack.pop();
    }
    Ok(())
}

struct FullModel {
    model: LinearModel,
    columns: Vec<Column>,
    y: Vec<VarId>,
    x: Vec<VarId>,
}

fn full_model(inst: &Instance, paths: &[Path], visit_rows: bool) -> FullModel {
    let mut model = LinearModel::new();
    let arcs = inst.arcs();
    let x: Vec<VarId> = (0..arcs.len())
        .map(|a| {
            let cost = arcs[a].outsource_rate().unwrap_or(0.0) * arcs[a].length;
            model.add_var(format!("x{a}"), 0.0, f64::INFINITY, false, cost)
        })
        .collect();
    let mut columns = Vec::new();
    let mut y = Vec::new();
    for p in paths {
        for (k, vt) in inst.fleet().iter().enumerate() {
            y.push(model.add_var(format!("y{}k{k}", y.len()), 0.0, f64::INFINITY, true, vt.unit_cost * p.length()));
            columns.push(Column::new(p.clone(), k));
        }
    }
    for v in 0..inst.vertices().len() {
        let mut coeffs = Vec::new();
        for (a, arc) in arcs.iter().enumerate() {
            if arc.tail == v {
                coeffs.push((x[a], 1.0));
            } else if arc.head == v {
                coeffs.push((x[a], -1.0));
            }
        }
        let rhs = if v == ORIGIN { inst.total_demand() } else { -inst.demand(v) };
        model.add_constraint(format!("bal{v}"), coeffs, Sense::Eq, rhs);
    }
    for (a, arc) in arcs.iter().enumerate() {
        if !arc.is_first_layer() {
            continue;
        }
        let mut coeffs = vec![(x[a], -1.0)];
        for (j, c) in columns.iter().enumerate() {
            if c.path.uses_arc(a) {
                coeffs.push((y[j], inst.fleet()[c.vehicle].capacity));
            }
        }
        model.add_constraint(format!("cap{a}"), coeffs, Sense::Ge, 0.0);
    }
    // Each center needs at least ceil(d / largest capacity) visits.
    let q_max = inst.fleet().iter().map(|v| v.capacity).fold(0.0, f64::max);
    for i in inst.first_layer().filter(|_| visit_rows) {
        let need = (inst.demand(i) / q_max - 1e-9).ceil();
        if need > 0.0 {
            let coeffs = (0..columns.len()).filter(|&j| columns[j].path.visits(i)).map(|j| (y[j], 1.0)).collect();
            model.add_constraint(format!("visit{i}"), coeffs, Sense::Ge, need);
        }
    }
    FullModel { model, columns, y, x }
}

fn start_vector(fm: &FullModel, plan: &Solution) -> Option<Vec<f64>> {
    if plan.flows.len() != fm.x.len() {
        return None;
    }
    let index: HashMap<(Vec<usize>, usize), usize> =
        fm.columns.iter().enumerate().map(|(j, c)| (c.key(), j)).collect();
    let mut v = vec![0.0; fm.model.num_vars()];
    for (c, n) in &plan.vehicle_plan {
        v[fm.y[*index.get(&c.key())?].0] += *n as f64;
    }
    for (a, &f) in plan.flows.iter().enumerate() {
        v[fm.x[a].0] = f;
    }
    (fm.model.max_violation(&v) <= 1e-6).then_some(v)
}

/// LP relaxation of the full model, without the visit rows.
pub fn full_lp_bound(inst: &Instance) -> Result<f64, OracleError> {
    let paths = enumerate_all_paths(inst)?;
    let fm = full_model(inst, &paths, false);
    let res = solve_lp(&fm.model)?;
    if res.status != LpStatus::Optimal {
        return Err(OracleError::Lp(res.status));
    }
    Ok(res.objective)
}

/// Exact optimum over all paths and vehicle types.
pub fn solve_exact(inst: &Instance, limits: MipLimits) -> Result<Solution, OracleError> {
    solve_exact_from(inst, limits, None)
}

/// As [`solve_exact`], seeded with a known plan. The plan only serves as an
/// initial incumbent; it is dropped if it violates the full model, so a wrong
/// plan cannot make the answer worse.
pub fn solve_exact_from(inst: &Instance, limits: MipLimits, plan: Option<&Solution>) -> Result<Solution, OracleError> {
    let start = Instant::now();
    let paths = enumerate_all_paths(inst)?;
    if paths.len().saturating_mul(inst.fleet().len()) > DEFAULT_PATH_CAP {
        return Err(OracleError::SizeGuard(DEFAULT_PATH_CAP));
    }
    let fm = full_model(inst, &paths, true);
    let seed = plan.and_then(|p| start_vector(&fm, p));
    let res = solve_mip_with_start(&fm.model, limits, seed.as_deref())?;
    let mut stats = SolveStats {
        columns_enumerated: fm.columns.len(),
        final_columns: fm.columns.len(),
        nodes_explored: res.nodes_explored,
        gap: res.gap,
        best_bound: res.best_bound,
        lb: res.best_bound,
        ub: res.objective,
        ..Default::default()
    };
    let status = match res.status {
        MipStatus::Optimal => SolveStatus::Optimal,
        MipStatus::Infeasible | MipStatus::Unbounded => SolveStatus::Infeasible,
        MipStatus::Feasible | MipStatus::TimeLimit => SolveStatus::TimeLimit,
    };
    let Some(vals) = res.incumbent else {
        stats.wall_time = start.elapsed().as_secs_f64();
        return Ok(Solution::empty(inst, status, stats));
    };
    let counts: Vec<u32> = fm.y.iter().map(|v| vals[v.0].round().max(0.0) as u32).collect();
    let flows: Vec<f64> = fm.x.iter().map(|v| vals[v.0].max(0.0)).collect();
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok(Solution::assemble(inst, status, &fm.columns, &counts, flows, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::{t1, t1_raw};
    use crate::graph::{validate_instance, RawArc};
    use crate::solution::audit_solution;

    #[test]
    fn t1_paths() {
        let inst = t1();
        let paths = enumerate_all_paths(&inst).unwrap();
        let shown: Vec<String> = paths.iter().map(|p| p.display(&inst)).collect();
        assert_eq!(shown, ["o-a", "o-a-b", "o-b", "o-b-a"]);
    }

    #[test]
    fn size_guard_trips() {
        assert_eq!(enumerate_all_paths_capped(&t1(), 3), Err(OracleError::SizeGuard(3)));
    }

    #[test]
    fn complete_first_layer_counts() {
        let mut raw = t1_raw();
        raw.nodes.clear();
        raw.arcs.clear();
        let ids = ["a", "b", "c", "d", "e"];
        for id in ids {
            raw.nodes.push(crate::graph::RawNode { id: id.into(), layer: 1, demand: 10.0 });
            raw.arcs.push(RawArc { tail: "o".into(), head: id.into(), length_km: 100.0, outsource_rate: None });
        }
        let star = validate_instance(&raw).unwrap();
        assert_eq!(enumerate_all_paths(&star).unwrap().len(), 5);
        for s in ids {
            for t in ids {
                if s != t {
                    raw.arcs.push(RawArc { tail: s.into(), head: t.into(), length_km: 50.0, outsource_rate: None });
                }
            }
        }
        let full = validate_instance(&raw).unwrap();
        assert_eq!(enumerate_all_paths(&full).unwrap().len(), 85);
    }

    #[test]
    fn t1_exact_optimum() {
        let inst = t1();
        let sol = solve_exact(&inst, MipLimits::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 940.0).abs() < 1e-6);
        audit_solution(&inst, &sol).unwrap();
        assert!((full_lp_bound(&inst).unwrap() - 548.5714285714).abs() < 1e-6);
    }

    #[test]
    fn t1_without_second_layer_demand() {
        let inst = t1();
        let inst = inst.with_demand(inst.vertex_by_id("z").unwrap(), 0.0).unwrap();
        let sol = solve_exact(&inst, MipLimits::default()).unwrap();
        assert!((sol.objective - 752.0).abs() < 1e-6);
    }

    #[test]
    fn zero_demand_gives_empty_plan() {
        let mut inst = t1();
        for v in 1..inst.vertices().len() {
            inst = inst.with_demand(v, 0.0).unwrap();
        }
        let sol = solve_exact(&inst, MipLimits::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.vehicle_plan.is_empty());
    }

    #[test]
    fn single_node_mixed_fleet() {
        let mut raw = t1_raw();
        raw.nodes = vec![crate::graph::RawNode { id: "a".into(), layer: 1, demand: 170.0 }];
        raw.arcs.truncate(1);
        let inst = validate_instance(&raw).unwrap();
        let sol = solve_exact(&inst, MipLimits::default()).unwrap();
        assert!((sol.objective - 750.0).abs() < 1e-6);
    }
}
