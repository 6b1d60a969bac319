//! Column generation: the labeling pricer and the loop that produces the
//! lower bound.

use std::collections::HashSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Instance, Path, ORIGIN};
use crate::lp::{LpStatus, ModelError, WarmLp};
use crate::master::{build_rmp, extract_duals, Column, DualSolution, MasterError};

/// Reduced cost of `path` for vehicle index `k`: the sum over its arcs of
/// `c_k l_a - q_k pi_a`.
pub fn reduced_cost(inst: &Instance, path: &Path, k: usize, duals: &DualSolution) -> f64 {
    let vt = &inst.fleet()[k];
    path.arcs()
        .iter()
        .map(|&a| vt.unit_cost * inst.arc(a).length - vt.capacity * duals.pi[a])
        .sum()
}

/// Direct paths `(o, i)` for every first-layer center, each with every
/// vehicle type.
pub fn initial_columns(inst: &Instance) -> Vec<Column> {
    let mut cols = Vec::new();
    for v in inst.first_layer() {
        let path = Path::new(inst, vec![v]).expect("validated instances have direct arcs");
        for k in 0..inst.fleet().len() {
            cols.push(Column::new(path.clone(), k));
        }
    }
    cols
}

/// Small fixed-width set of first-layer positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet(Vec<u64>);

impl NodeSet {
    fn with_capacity(n: usize) -> Self {
        NodeSet(vec![0; n.div_ceil(64).max(1)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

/// State of the pricing dynamic program for one partial path.
#[derive(Debug, Clone)]
pub struct Label {
    pub node: usize,
    pub reduced_cost: f64,
    pub length: f64,
    pub num_arcs: usize,
    /// First-layer positions visited so far (see `position` in the pricer).
    pub visited: NodeSet,
    /// Index of the parent label in the arena; `None` at the origin.
    pub predecessor: Option<usize>,
    pub vehicle: usize,
}

impl Label {
    /// Non-strict dominance on node, visited set, reduced cost, length and
    /// arc count.
    pub fn dominates(&self, other: &Label) -> bool {
        self.node == other.node
            && self.visited.is_subset(&other.visited)
            && self.reduced_cost <= other.reduced_cost
            && self.length <= other.length
            && self.num_arcs <= other.num_arcs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PricingOptions {
    pub dominance: bool,
}

impl Default for PricingOptions {
    fn default() -> Self {
        PricingOptions { dominance: true }
    }
}

/// Labels generated and kept by one pricing run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PricingStats {
    pub created: usize,
    pub kept: usize,
}

/// Columns of vehicle `k` with reduced cost below `-eps`.
pub fn price_columns(inst: &Instance, duals: &DualSolution, k: usize, eps: f64) -> Vec<Column> {
    price_columns_with(inst, duals, k, eps, PricingOptions::default()).0
}

pub fn price_columns_with(
    inst: &Instance,
    duals: &DualSolution,
    k: usize,
    eps: f64,
    opts: PricingOptions,
) -> (Vec<Column>, PricingStats) {
    let vt = &inst.fleet()[k];
    let nv = inst.vertices().len();
    let mut position = vec![usize::MAX; nv];
    let mut n1 = 0;
    for v in inst.first_layer() {
        position[v] = n1;
        n1 += 1;
    }

    let mut arena = vec![Label {
        node: ORIGIN,
        reduced_cost: 0.0,
        length: 0.0,
        num_arcs: 0,
        visited: NodeSet::with_capacity(n1),
        predecessor: None,
        vehicle: k,
    }];
    let mut alive = vec![true];
    // Surviving label indices per node, across all depths.
    let mut at_node: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut frontier = vec![0usize];
    let mut stats = PricingStats { created: 1, kept: 1 };

    for _ in 0..inst.arc_limit() {
        let mut next = Vec::new();
        for &li in &frontier {
            if !alive[li] {
                continue;
            }
            let parent = arena[li].clone();
            for &a in inst.out_arcs(parent.node) {
                let arc = inst.arc(a);
                let h = arc.head;
                if !arc.is_first_layer() || parent.visited.contains(position[h]) {
                    continue;
                }
                let mut visited = parent.visited.clone();
                visited.insert(position[h]);
                let cand = Label {
                    node: h,
                    reduced_cost: parent.reduced_cost + vt.unit_cost * arc.length - vt.capacity * duals.pi[a],
                    length: parent.length + arc.length,
                    num_arcs: parent.num_arcs + 1,
                    visited,
                    predecessor: Some(li),
                    vehicle: k,
                };
                stats.created += 1;
                if opts.dominance {
                    if at_node[h].iter().any(|&o| alive[o] && arena[o].dominates(&cand)) {
                        continue;
                    }
                    for &o in &at_node[h] {
                        if alive[o] && cand.dominates(&arena[o]) {
                            alive[o] = false;
                            stats.kept -= 1;
                        }
                    }
                }
                let idx = arena.len();
                arena.push(cand);
                alive.push(true);
                at_node[h].push(idx);
                next.push(idx);
                stats.kept += 1;
            }
        }
        frontier = next;
    }

    let mut cols = Vec::new();
    for (i, lab) in arena.iter().enumerate() {
        if i == 0 || !alive[i] || lab.reduced_cost >= -eps {
            continue;
        }
        let nodes = reconstruct(&arena, i);
        let path = Path::new(inst, nodes).expect("labels extend along first-layer arcs");
        cols.push(Column::new(path, k));
    }
    cols.sort();
    (cols, stats)
}

fn reconstruct(arena: &[Label], mut i: usize) -> Vec<usize> {
    let mut nodes = Vec::new();
    while let Some(p) = arena[i].predecessor {
        nodes.push(arena[i].node);
        i = p;
    }
    nodes.reverse();
    nodes
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub lower_bound: f64,
    pub columns: Vec<Column>,
    pub duals: DualSolution,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CgError {
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("restricted master LP ended with status {0:?}")]
    Lp(LpStatus),
}

/// Solves the LP relaxation over all columns by generating them on demand.
pub fn run_column_generation(inst: &Instance, eps: f64) -> Result<CgOutcome, CgError> {
    let mut rmp = build_rmp(inst, &initial_columns(inst))?;
    let mut seen: HashSet<(Vec<usize>, usize)> = rmp.columns.iter().map(Column::key).collect();
    let mut lp = WarmLp::new(&rmp.model)?;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let res = lp.solve();
        if res.status != LpStatus::Optimal {
            return Err(CgError::Lp(res.status));
        }
        let duals = extract_duals(&rmp, &res)?;
        let found: Vec<Vec<Column>> = (0..inst.fleet().len())
            .into_par_iter()
            .map(|k| price_columns(inst, &duals, k, eps))
            .collect();
        let mut added = 0;
        for col in found.into_iter().flatten() {
            if seen.insert(col.key()) {
                let (_, cost, entries) = rmp.add_column(inst, col)?;
                lp.add_column(cost, 0.0, f64::INFINITY, &entries);
                added += 1;
            }
        }
        if added == 0 {
            return Ok(CgOutcome {
                lower_bound: res.objective,
                columns: rmp.columns,
                duals,
                iterations,
            });
        }
    }
}
