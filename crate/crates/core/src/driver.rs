//! End-to-end exact solve: column generation, restricted integer solve for an
//! upper bound, gap enumeration, cuts and bounds, final integer solve.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cuts::{mir_capacity_cuts, multi_arc_upper_bounds, rounded_capacity_cuts, single_arc_upper_bounds};
use crate::enumeration::{enumerate_gap_columns, GapBudget};
use crate::graph::Instance;
use crate::lp::{solve_mip_with_start, BranchRule, MipLimits, MipResult, MipStatus, ModelError, Sense, VarId};
use crate::master::{build_rmp, Column, MasterError, RmpModel};
use crate::pricing::{run_column_generation, CgError};
use crate::solution::{SolveStats, SolveStatus, Solution, StepTimes};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Wall-clock limit per integer solve, seconds.
    pub time_limit_s: f64,
    /// Negativity threshold for pricing.
    pub eps: f64,
    pub use_cuts: bool,
    /// Rounding cuts on the capacity entering each center, stronger than
    /// the plain per-center cuts.
    pub use_mir_cuts: bool,
    pub use_bounds: bool,
    /// Without enumeration the final model only has the generated columns
    /// and the result is flagged as heuristic.
    pub use_enumeration: bool,
    pub arc_limit: Option<usize>,
    /// Branching rule of both integer solves.
    pub branching: BranchRule,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit_s: 300.0,
            eps: 1e-6,
            use_cuts: true,
            use_mir_cuts: true,
            use_bounds: true,
            use_enumeration: true,
            arc_limit: None,
            branching: BranchRule::Reliability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("time limit must be positive, got {0}")]
    BadTimeLimit(f64),
    #[error("arc limit must be at least 1")]
    BadArcLimit,
    #[error(transparent)]
    ColumnGeneration(#[from] CgError),
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The final model with cuts and bounds applied.
#[derive(Debug, Clone)]
pub struct FinalModel {
    pub rmp: RmpModel,
    pub cuts_added: usize,
    pub bounds_tightened: usize,
}

/// Builds the restricted model over `columns` and applies the requested
/// cuts and bounds.
pub fn build_final_model(
    inst: &Instance,
    columns: &[Column],
    use_cuts: bool,
    use_mir_cuts: bool,
    use_bounds: bool,
) -> Result<FinalModel, MasterError> {
    let mut rmp = build_rmp(inst, columns)?;
    let mut cuts_added = 0;
    if use_cuts {
        for cut in rounded_capacity_cuts(inst, columns) {
            let coeffs = cut.columns.iter().map(|&j| (rmp.y_vars[j], 1.0)).collect();
            let name = format!("rcc[{}]", inst.vertex(cut.destination).id);
            rmp.model.add_constraint(name, coeffs, Sense::Ge, cut.rhs);
            cuts_added += 1;
        }
    }
    if use_mir_cuts {
        for cut in mir_capacity_cuts(inst, columns) {
            let coeffs = cut.columns.iter().zip(&cut.coefficients).map(|(&j, &g)| (rmp.y_vars[j], g)).collect();
            let name = format!("mir[{}|{}]", inst.vertex(cut.destination).id, cut.divisor);
            rmp.model.add_constraint(name, coeffs, Sense::Ge, cut.rhs);
            cuts_added += 1;
        }
    }
    let mut bounds_tightened = 0;
    if use_bounds {
        let bounds = multi_arc_upper_bounds(inst, columns)
            .into_iter()
            .chain(single_arc_upper_bounds(inst, columns));
        for b in bounds {
            let var = &mut rmp.model.variables[rmp.y_vars[b.column].0];
            if (b.upper as f64) < var.upper {
                var.upper = b.upper as f64;
                bounds_tightened += 1;
            }
        }
    }
    Ok(FinalModel {
        rmp,
        cuts_added,
        bounds_tightened,
    })
}

/// Adds integer copies of the vehicle count through each first-layer
/// center and along each first-layer arc. The rows restrict nothing, but
/// branching on these counts splits the search far more evenly than
/// branching on single columns.
pub fn add_branching_counters(inst: &Instance, rmp: &mut RmpModel) -> Vec<(VarId, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = inst
        .first_layer()
        .map(|i| {
            let cols = (0..rmp.columns.len()).filter(|&j| rmp.columns[j].path.visits(i)).collect();
            (format!("visits[{}]", inst.vertex(i).id), cols)
        })
        .collect();
    for a in inst.first_layer_arcs() {
        let cols = (0..rmp.columns.len()).filter(|&j| rmp.columns[j].path.uses_arc(a)).collect();
        let arc = inst.arc(a);
        groups.push((format!("trips[{}-{}]", inst.vertex(arc.tail).id, inst.vertex(arc.head).id), cols));
    }
    let mut out = Vec::new();
    for (name, cols) in groups {
        if cols.is_empty() {
            continue;
        }
        let z = rmp.model.add_var(name.clone(), 0.0, f64::INFINITY, true, 0.0);
        let mut coeffs: Vec<(VarId, f64)> = cols.iter().map(|&j| (rmp.y_vars[j], 1.0)).collect();
        coeffs.push((z, -1.0));
        rmp.model.add_constraint(name, coeffs, Sense::Eq, 0.0);
        out.push((z, cols));
    }
    out
}

fn limits(cfg: &SolveConfig) -> MipLimits {
    MipLimits {
        time_limit: Some(Duration::from_secs_f64(cfg.time_limit_s)),
        node_limit: None,
        branching: cfg.branching,
    }
}

/// Runs all five steps and returns the best plan found.
pub fn solve(inst: &Instance, cfg: &SolveConfig) -> Result<Solution, SolveError> {
    if !(cfg.time_limit_s > 0.0) {
        return Err(SolveError::BadTimeLimit(cfg.time_limit_s));
    }
    let owned;
    let inst = match cfg.arc_limit {
        Some(0) => return Err(SolveError::BadArcLimit),
        Some(l) => {
            owned = inst.with_arc_limit(l);
            &owned
        }
        None => inst,
    };
    let start = Instant::now();
    let mut stats = SolveStats::default();
    let mut times = StepTimes::default();

    let t = Instant::now();
    let cg = run_column_generation(inst, cfg.eps)?;
    times.lower_bound = t.elapsed().as_secs_f64();
    stats.lb = cg.lower_bound;
    stats.cg_iterations = cg.iterations;
    stats.columns_generated = cg.columns.len();

    let t = Instant::now();
    let mut ub_rmp = build_rmp(inst, &cg.columns)?;
    add_branching_counters(inst, &mut ub_rmp);
    let ub_res = solve_mip_with_start(&ub_rmp.model, limits(cfg), None)?;
    times.upper_bound = t.elapsed().as_secs_f64();
    stats.ub = if ub_res.has_solution() { ub_res.objective } else { f64::INFINITY };
    stats.nodes_explored += ub_res.nodes_explored;

    let t = Instant::now();
    let mut columns = cg.columns.clone();
    if cfg.use_enumeration {
        let budget = GapBudget::new(stats.lb, stats.ub, cg.duals.clone());
        let mut seen: HashSet<(Vec<usize>, usize)> = columns.iter().map(Column::key).collect();
        let found = enumerate_gap_columns(inst, &budget);
        stats.columns_enumerated = found.len();
        for col in found {
            if seen.insert(col.key()) {
                columns.push(col);
            }
        }
    }
    times.enumeration = t.elapsed().as_secs_f64();
    stats.final_columns = columns.len();

    let t = Instant::now();
    let mut fin = build_final_model(inst, &columns, cfg.use_cuts, cfg.use_mir_cuts, cfg.use_bounds)?;
    let counters = add_branching_counters(inst, &mut fin.rmp);
    stats.cuts_added = fin.cuts_added;
    stats.bounds_tightened = fin.bounds_tightened;
    // The restricted solution carries over: columns keep their indices and
    // flows are the first variables of both models.
    let warm = ub_res.incumbent.as_ref().and_then(|x| {
        let mut v = vec![0.0; fin.rmp.model.num_vars()];
        for (a, var) in ub_rmp.x_vars.iter().enumerate() {
            v[fin.rmp.x_vars[a].0] = x[var.0];
        }
        for (j, var) in ub_rmp.y_vars.iter().enumerate() {
            v[fin.rmp.y_vars[j].0] = x[var.0];
        }
        for (z, visiting) in &counters {
            v[z.0] = visiting.iter().map(|&j| v[fin.rmp.y_vars[j].0]).sum();
        }
        (fin.rmp.model.max_violation(&v) <= 1e-6).then_some(v)
    });
    times.acceleration = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let res = solve_mip_with_start(&fin.rmp.model, limits(cfg), warm.as_deref())?;
    times.final_solve = t.elapsed().as_secs_f64();
    stats.nodes_explored += res.nodes_explored;
    stats.gap = res.gap;
    stats.best_bound = res.best_bound;
    stats.step_times = times;

    let (status, rmp, result): (SolveStatus, &RmpModel, &MipResult) = match res.status {
        MipStatus::Optimal if cfg.use_enumeration => (SolveStatus::Optimal, &fin.rmp, &res),
        MipStatus::Optimal => (SolveStatus::Heuristic, &fin.rmp, &res),
        MipStatus::Feasible | MipStatus::TimeLimit
            if res.has_solution() && !(ub_res.has_solution() && ub_res.objective < res.objective) =>
        {
            (SolveStatus::TimeLimit, &fin.rmp, &res)
        }
        MipStatus::Feasible | MipStatus::TimeLimit if ub_res.has_solution() => (SolveStatus::TimeLimit, &ub_rmp, &ub_res),
        _ => {
            stats.wall_time = start.elapsed().as_secs_f64();
            let status = if res.status == MipStatus::Infeasible {
                SolveStatus::Infeasible
            } else {
                SolveStatus::TimeLimit
            };
            return Ok(Solution::empty(inst, status, stats));
        }
    };
    let x = result.incumbent.as_ref().expect("checked above");
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok(Solution::assemble(
        inst,
        status,
        &rmp.columns,
        &rmp.vehicle_counts(x),
        rmp.flows(x),
        stats,
    ))
}
