//! Solution records and the independent feasibility audit.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Instance, Path, ORIGIN};
use crate::master::Column;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal for the full path set.
    Optimal,
    /// Optimal over a restricted column set only (enumeration disabled).
    Heuristic,
    /// A limit stopped the final solve; the incumbent is returned.
    TimeLimit,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Heuristic => "Heuristic",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::Infeasible => "Infeasible",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CostSplit {
    pub first_layer_transport: f64,
    pub outsourcing: f64,
}

impl CostSplit {
    pub fn total(&self) -> f64 {
        self.first_layer_transport + self.outsourcing
    }
}

/// Seconds spent in each step of the solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepTimes {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub enumeration: f64,
    pub acceleration: f64,
    pub final_solve: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub lb: f64,
    pub ub: f64,
    /// Relative gap of the final integer solve at termination.
    pub gap: f64,
    pub best_bound: f64,
    pub cg_iterations: usize,
    pub columns_generated: usize,
    pub columns_enumerated: usize,
    pub final_columns: usize,
    pub cuts_added: usize,
    pub bounds_tightened: usize,
    pub nodes_explored: usize,
    pub step_times: StepTimes,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Columns with a positive vehicle count.
    pub vehicle_plan: Vec<(Column, u32)>,
    /// Package flow per arc, m³, indexed like `Instance::arcs`.
    pub flows: Vec<f64>,
    pub objective: f64,
    pub cost_split: CostSplit,
    pub stats: SolveStats,
}

impl Solution {
    /// Builds a solution from column counts and arc flows, computing the
    /// objective and its split.
    pub fn assemble(
        inst: &Instance,
        status: SolveStatus,
        columns: &[Column],
        counts: &[u32],
        flows: Vec<f64>,
        stats: SolveStats,
    ) -> Solution {
        let vehicle_plan: Vec<(Column, u32)> = columns
            .iter()
            .zip(counts)
            .filter(|(_, &n)| n > 0)
            .map(|(c, &n)| (c.clone(), n))
            .collect();
        let cost_split = cost_split(inst, &vehicle_plan, &flows);
        Solution {
            status,
            vehicle_plan,
            flows,
            objective: cost_split.total(),
            cost_split,
            stats,
        }
    }

    pub fn empty(inst: &Instance, status: SolveStatus, stats: SolveStats) -> Solution {
        Solution {
            status,
            vehicle_plan: Vec::new(),
            flows: vec![0.0; inst.arcs().len()],
            objective: f64::INFINITY,
            cost_split: CostSplit::default(),
            stats,
        }
    }

    pub fn vehicles_used(&self) -> u32 {
        self.vehicle_plan.iter().map(|(_, n)| n).sum()
    }

    /// Human-readable plan listing.
    pub fn describe(&self, inst: &Instance) -> String {
        let mut out = format!(
            "status {}  objective {:.4}  (transport {:.4}, outsourcing {:.4})\n",
            self.status, self.objective, self.cost_split.first_layer_transport, self.cost_split.outsourcing
        );
        for (col, n) in &self.vehicle_plan {
            out.push_str(&format!(
                "  {n} x type {} on {} ({:.1} km)\n",
                col.vehicle + 1,
                col.path.display(inst),
                col.path.length()
            ));
        }
        for (a, &x) in self.flows.iter().enumerate() {
            if x > 1e-9 && !inst.arc(a).is_first_layer() {
                let arc = inst.arc(a);
                out.push_str(&format!(
                    "  outsource {:.3} m3 {} -> {}\n",
                    x,
                    inst.vertex(arc.tail).id,
                    inst.vertex(arc.head).id
                ));
            }
        }
        out
    }
}

fn cost_split(inst: &Instance, plan: &[(Column, u32)], flows: &[f64]) -> CostSplit {
    let first_layer_transport = plan
        .iter()
        .map(|(c, n)| *n as f64 * inst.fleet()[c.vehicle].unit_cost * c.path.length())
        .sum();
    let outsourcing = inst
        .arcs()
        .iter()
        .zip(flows)
        .filter_map(|(a, &x)| a.outsource_rate().map(|r| r * a.length * x))
        .sum();
    CostSplit {
        first_layer_transport,
        outsourcing,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("flow vector has {0} entries, instance has {1} arcs")]
    FlowLength(usize, usize),
    #[error("negative flow {1} on arc {0}")]
    NegativeFlow(usize, f64),
    #[error("plan column {0} is not a valid path: {1}")]
    BadPath(usize, String),
    #[error("flow conservation violated at {0}: net outflow {1}, expected {2}")]
    Conservation(String, f64, f64),
    #[error("capacity violated on arc {0}: flow {1} > capacity {2}")]
    Capacity(usize, f64, f64),
    #[error("objective {0} does not match recomputed cost {1}")]
    Objective(f64, f64),
    #[error("flows cannot be decomposed into origin paths covering {0}")]
    Decomposition(String),
}

/// Re-derives every constraint of the model from the instance alone:
/// conservation, per-arc capacity, integral positive vehicle counts on valid
/// paths, the objective, and a path decomposition of the flows.
pub fn audit_solution(inst: &Instance, sol: &Solution) -> Result<(), AuditError> {
    let na = inst.arcs().len();
    if sol.flows.len() != na {
        return Err(AuditError::FlowLength(sol.flows.len(), na));
    }
    let scale = inst.total_demand().max(1.0);
    let tol = 1e-6 * scale;
    for (a, &x) in sol.flows.iter().enumerate() {
        if x < -1e-9 || !x.is_finite() {
            return Err(AuditError::NegativeFlow(a, x));
        }
    }

    let mut capacity = vec![0.0; na];
    for (i, (col, n)) in sol.vehicle_plan.iter().enumerate() {
        let rebuilt = Path::new(inst, col.path.nodes().to_vec()).map_err(|e| AuditError::BadPath(i, e.to_string()))?;
        if rebuilt.arcs() != col.path.arcs() || col.vehicle >= inst.fleet().len() || *n == 0 {
            return Err(AuditError::BadPath(i, "arc or vehicle mismatch".into()));
        }
        for &a in rebuilt.arcs() {
            capacity[a] += *n as f64 * inst.fleet()[col.vehicle].capacity;
        }
    }
    for (v, vert) in inst.vertices().iter().enumerate() {
        let out: f64 = inst.out_arcs(v).iter().map(|&a| sol.flows[a]).sum();
        let inn: f64 = inst.in_arcs(v).iter().map(|&a| sol.flows[a]).sum();
        let expected = if v == ORIGIN {
            inst.total_demand()
        } else {
            -vert.demand
        };
        if (out - inn - expected).abs() > tol {
            return Err(AuditError::Conservation(vert.id.clone(), out - inn, expected));
        }
    }
    for a in inst.first_layer_arcs() {
        if sol.flows[a] > capacity[a] + tol {
            return Err(AuditError::Capacity(a, sol.flows[a], capacity[a]));
        }
    }
    let mut transport = 0.0;
    for (col, n) in &sol.vehicle_plan {
        let len: f64 = col.path.arcs().iter().map(|&a| inst.arc(a).length).sum();
        transport += *n as f64 * inst.fleet()[col.vehicle].unit_cost * len;
    }
    let mut outsourcing = 0.0;
    for a in inst.cross_layer_arcs() {
        let arc = inst.arc(a);
        outsourcing += arc.outsource_rate().unwrap_or(0.0) * arc.length * sol.flows[a];
    }
    let recomputed = transport + outsourcing;
    let otol = 1e-6 * recomputed.abs().max(1.0);
    if (recomputed - sol.objective).abs() > otol || (sol.cost_split.total() - sol.objective).abs() > otol {
        return Err(AuditError::Objective(sol.objective, recomputed));
    }
    decompose(inst, &sol.flows, tol)
}

/// Peels origin-to-destination paths off the flow until every demand is met.
fn decompose(inst: &Instance, flows: &[f64], tol: f64) -> Result<(), AuditError> {
    let mut residual = flows.to_vec();
    let nv = inst.vertices().len();
    for v in 1..nv {
        let mut need = inst.demand(v);
        let mut guard = 0;
        while need > tol {
            guard += 1;
            if guard > 10 * inst.arcs().len() + 10 {
                return Err(AuditError::Decomposition(inst.vertex(v).id.clone()));
            }
            let mut pred = vec![usize::MAX; nv];
            let mut seen = vec![false; nv];
            seen[ORIGIN] = true;
            let mut queue = VecDeque::from([ORIGIN]);
            while let Some(u) = queue.pop_front() {
                if u == v {
                    break;
                }
                for &a in inst.out_arcs(u) {
                    let h = inst.arc(a).head;
                    if !seen[h] && residual[a] > 1e-12 {
                        seen[h] = true;
                        pred[h] = a;
                        queue.push_back(h);
                    }
                }
            }
            if !seen[v] {
                return Err(AuditError::Decomposition(inst.vertex(v).id.clone()));
            }
            let mut arcs = Vec::new();
            let mut u = v;
            while u != ORIGIN {
                let a = pred[u];
                arcs.push(a);
                u = inst.arc(a).tail;
            }
            let bottleneck = arcs.iter().map(|&a| residual[a]).fold(need, f64::min);
            for &a in &arcs {
                residual[a] -= bottleneck;
            }
            need -= bottleneck;
        }
    }
    Ok(())
}
