use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use super::model::{LinearModel, ModelError};
use super::simplex::{BasisSnapshot, Simplex, SimplexStatus};
use super::{FEAS_TOL, GAP_TOL, INT_TOL};

/// Variable selection rule at a fractional node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BranchRule {
    /// Largest distance to the nearest integer, ties to the lowest index.
    #[default]
    MostFractional,
    /// Product of the estimated down and up objective gains, learned from
    /// earlier branchings. Unseen variables use the running average.
    Pseudocost,
    /// Pseudocosts, initialised by solving both child relaxations of a few
    /// unseen candidates at each node.
    Reliability,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MipLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    pub branching: BranchRule,
}

impl MipLimits {
    pub fn with_time(secs: f64) -> Self {
        MipLimits {
            time_limit: Some(Duration::from_secs_f64(secs)),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    /// Stopped by the node cap with an incumbent in hand.
    Feasible,
    Infeasible,
    /// Stopped by the clock (or by the node cap before any incumbent).
    TimeLimit,
    /// The continuous relaxation is unbounded.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipResult {
    pub status: MipStatus,
    pub incumbent: Option<Vec<f64>>,
    /// Objective of the incumbent, `+inf` without one.
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
}

impl MipResult {
    pub fn has_solution(&self) -> bool {
        self.incumbent.is_some()
    }

    fn terminal(status: MipStatus, best_bound: f64, nodes: usize) -> Self {
        MipResult {
            status,
            incumbent: None,
            objective: f64::INFINITY,
            best_bound,
            gap: f64::INFINITY,
            nodes_explored: nodes,
        }
    }
}

/// Bound changes of a node, stored as a chain shared with its ancestors.
#[derive(Debug)]
struct Changes {
    entries: Vec<(usize, f64, f64)>,
    parent: Option<Rc<Changes>>,
}

fn apply_changes(list: &Option<Rc<Changes>>, lo: &mut [f64], hi: &mut [f64]) {
    let mut chain = Vec::new();
    let mut cur = list.as_ref();
    while let Some(c) = cur {
        chain.push(c);
        cur = c.parent.as_ref();
    }
    for c in chain.into_iter().rev() {
        for &(j, l, h) in &c.entries {
            lo[j] = lo[j].max(l);
            hi[j] = hi[j].min(h);
        }
    }
}

#[derive(Debug)]
struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    changes: Option<Rc<Changes>>,
    /// Variable, direction (true = up) and fractional distance of the
    /// branching that created this node.
    branched: Option<(usize, bool, f64)>,
    /// Optimal basis of the parent relaxation.
    warm: Option<Rc<BasisSnapshot>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: "greater" means popped first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

fn is_feasible(model: &LinearModel, values: &[f64]) -> bool {
    model.max_violation(values) <= FEAS_TOL
        && model
            .variables
            .iter()
            .zip(values)
            .all(|(v, x)| !v.integer || (x - x.round()).abs() <= INT_TOL)
}

/// Per-variable record of objective gain per unit of rounding.
struct Pseudocosts {
    sum: [Vec<f64>; 2],
    count: [Vec<u32>; 2],
    total: [f64; 2],
    seen: [u32; 2],
}

impl Pseudocosts {
    fn new(n: usize) -> Self {
        Pseudocosts {
            sum: [vec![0.0; n], vec![0.0; n]],
            count: [vec![0; n], vec![0; n]],
            total: [0.0; 2],
            seen: [0; 2],
        }
    }

    fn record(&mut self, j: usize, up: bool, gain: f64) {
        let d = up as usize;
        self.sum[d][j] += gain;
        self.count[d][j] += 1;
        self.total[d] += gain;
        self.seen[d] += 1;
    }

    fn estimate(&self, j: usize, up: bool) -> f64 {
        let d = up as usize;
        if self.count[d][j] > 0 {
            self.sum[d][j] / self.count[d][j] as f64
        } else if self.seen[d] > 0 {
            self.total[d] / self.seen[d] as f64
        } else {
            1.0
        }
    }
}

/// Candidates probed per node and the history length that counts as reliable.
const STRONG_CANDIDATES: usize = 8;
const RELIABLE: u32 = 4;

/// Solves both children of up to `STRONG_CANDIDATES` fractional variables
/// lacking pseudocost history and records the gains. Leaves `lp` back at
/// the node optimum.
#[allow(clippy::too_many_arguments)]
fn strong_branch(
    lp: &mut Simplex,
    x: &[f64],
    obj: f64,
    inc_obj: f64,
    int_vars: &[usize],
    lo: &[f64],
    hi: &[f64],
    pc: &mut Pseudocosts,
) {
    let mut cands: Vec<(f64, usize)> = int_vars
        .iter()
        .filter_map(|&j| {
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            let unseen = pc.count[0][j] < RELIABLE || pc.count[1][j] < RELIABLE;
            (dist > INT_TOL && unseen).then_some((dist, j))
        })
        .collect();
    if cands.is_empty() {
        return;
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    cands.truncate(STRONG_CANDIDATES);
    let snap = lp.snapshot();
    // An infeasible child counts as closing the whole remaining gap.
    let cutoff = if inc_obj.is_finite() { inc_obj - obj } else { obj.abs().max(1.0) };
    for &(_, j) in &cands {
        let f = x[j] - x[j].floor();
        for (up, clo, chi, frac) in [(false, lo[j], x[j].floor(), f), (true, x[j].ceil(), hi[j], 1.0 - f)] {
            lp.set_bounds(j, clo, chi);
            let gain = match lp.solve() {
                SimplexStatus::Optimal => Some((lp.objective() - obj).clamp(0.0, cutoff)),
                SimplexStatus::Infeasible => Some(cutoff),
                _ => None,
            };
            if let Some(g) = gain {
                pc.record(j, up, g / frac);
            }
            lp.restore(&snap);
        }
        lp.set_bounds(j, lo[j], hi[j]);
    }
    lp.restore(&snap);
    lp.solve();
}

fn select_branch(rule: BranchRule, x: &[f64], int_vars: &[usize], pc: &Pseudocosts) -> Option<usize> {
    let mut best = None;
    let mut best_score = 0.0;
    for &j in int_vars {
        let f = x[j] - x[j].floor();
        let dist = f.min(1.0 - f);
        if dist <= INT_TOL {
            continue;
        }
        let score = match rule {
            BranchRule::MostFractional => dist,
            BranchRule::Pseudocost | BranchRule::Reliability => {
                let down = (f * pc.estimate(j, false)).max(1e-6);
                let up = ((1.0 - f) * pc.estimate(j, true)).max(1e-6);
                down * up
            }
        };
        if score > best_score {
            best_score = score;
            best = Some(j);
        }
    }
    best
}

/// Best-first branch-and-bound over LP relaxations.
pub fn solve_mip(model: &LinearModel, limits: MipLimits) -> Result<MipResult, ModelError> {
    solve_mip_with_start(model, limits, None)
}

/// Like [`solve_mip`], seeded with a known solution. The start is ignored
/// unless it is feasible and integral.
pub fn solve_mip_with_start(
    model: &LinearModel,
    limits: MipLimits,
    start: Option<&[f64]>,
) -> Result<MipResult, ModelError> {
    model.validate()?;
    let clock = Instant::now();
    let n = model.num_vars();
    let int_vars: Vec<usize> = (0..n).filter(|&j| model.variables[j].integer).collect();

    let mut base_lo: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let mut base_hi: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    for &j in &int_vars {
        base_lo[j] = (base_lo[j] - INT_TOL).ceil();
        base_hi[j] = (base_hi[j] + INT_TOL).floor();
        if base_lo[j] > base_hi[j] {
            return Ok(MipResult::terminal(MipStatus::Infeasible, f64::INFINITY, 0));
        }
    }
    let mut lp = Simplex::new(model);
    for &j in &int_vars {
        lp.set_bounds(j, base_lo[j], base_hi[j]);
    }
    let mut cur_lo = base_lo.clone();
    let mut cur_hi = base_hi.clone();

    let mut incumbent: Option<Vec<f64>> = None;
    let mut inc_obj = f64::INFINITY;
    if let Some(s) = start {
        if s.len() == n && is_feasible(model, s) {
            let mut v = s.to_vec();
            for &j in &int_vars {
                v[j] = v[j].round();
            }
            inc_obj = model.objective(&v);
            incumbent = Some(v);
        }
    }

    let prune_tol = |inc: f64| GAP_TOL * inc.abs().max(1.0);
    let mut pc = Pseudocosts::new(n);
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
        changes: None,
        branched: None,
        warm: None,
    });
    let mut last_warm: Option<Rc<BasisSnapshot>> = None;
    let mut next_id = 1;
    let mut nodes = 0usize;
    let mut unresolved_bound = f64::INFINITY;
    let mut stopped = None;
    let mut want_lo = base_lo.clone();
    let mut want_hi = base_hi.clone();

    while let Some(node) = heap.peek() {
        if node.bound >= inc_obj - prune_tol(inc_obj) {
            heap.pop();
            continue;
        }
        if let Some(t) = limits.time_limit {
            if clock.elapsed() >= t {
                stopped = Some(MipStatus::TimeLimit);
                break;
            }
        }
        if let Some(cap) = limits.node_limit {
            if nodes >= cap {
                stopped = Some(if incumbent.is_some() {
                    MipStatus::Feasible
                } else {
                    MipStatus::TimeLimit
                });
                break;
            }
        }
        let node = heap.pop().expect("peeked");
        nodes += 1;
        want_lo.copy_from_slice(&base_lo);
        want_hi.copy_from_slice(&base_hi);
        apply_changes(&node.changes, &mut want_lo, &mut want_hi);
        if int_vars.iter().any(|&j| want_lo[j] > want_hi[j]) {
            continue;
        }
        for &j in &int_vars {
            if want_lo[j] != cur_lo[j] || want_hi[j] != cur_hi[j] {
                lp.set_bounds(j, want_lo[j], want_hi[j]);
                cur_lo[j] = want_lo[j];
                cur_hi[j] = want_hi[j];
            }
        }
        // The live basis is the parent's only right after branching on it.
        let live = last_warm.take();
        if let Some(w) = &node.warm {
            if !live.is_some_and(|l| Rc::ptr_eq(&l, w)) {
                lp.restore(w);
            }
        }
        let mut status = lp.solve();
        if status == SimplexStatus::IterationLimit {
            // Retry from a slack basis before giving up on the node.
            lp = Simplex::new(model);
            for &j in &int_vars {
                lp.set_bounds(j, cur_lo[j], cur_hi[j]);
            }
            status = lp.solve();
        }
        match status {
            SimplexStatus::Optimal => {}
            SimplexStatus::Infeasible => continue,
            SimplexStatus::Unbounded if node.id == 0 => {
                return Ok(MipResult::terminal(MipStatus::Unbounded, f64::NEG_INFINITY, nodes));
            }
            SimplexStatus::Unbounded | SimplexStatus::IterationLimit => {
                unresolved_bound = unresolved_bound.min(node.bound);
                continue;
            }
        }
        let obj = lp.objective();
        if let Some((j, up, frac)) = node.branched {
            pc.record(j, up, (obj - node.bound).max(0.0) / frac);
        }
        if obj >= inc_obj - prune_tol(inc_obj) {
            continue;
        }
        let x = lp.primal();
        if limits.branching == BranchRule::Reliability {
            strong_branch(&mut lp, &x, obj, inc_obj, &int_vars, &cur_lo, &cur_hi, &mut pc);
        }

        let Some(j) = select_branch(limits.branching, &x, &int_vars, &pc) else {
            let mut sol = x;
            for &k in &int_vars {
                sol[k] = sol[k].round();
            }
            let o = model.objective(&sol);
            if o < inc_obj {
                inc_obj = o;
                incumbent = Some(sol);
            }
            continue;
        };

        // Rounding heuristics: up, then to nearest.
        let up = |v: f64| (v - INT_TOL).ceil();
        for round in [up as fn(f64) -> f64, f64::round] {
            let mut cand = x.clone();
            for &k in &int_vars {
                cand[k] = round(cand[k]);
            }
            if model.max_violation(&cand) <= FEAS_TOL {
                let o = model.objective(&cand);
                if o < inc_obj - prune_tol(o) {
                    inc_obj = o;
                    incumbent = Some(cand);
                }
            }
        }
        if obj >= inc_obj - prune_tol(inc_obj) {
            continue;
        }

        // Reduced-cost fixing: moving a nonbasic integer variable by `t`
        // raises the bound by at least `t * |d_j|`.
        let mut fixes = Vec::new();
        if inc_obj.is_finite() {
            let slack = inc_obj - obj;
            let d = lp.reduced_costs();
            for &k in &int_vars {
                let (lo, hi) = (cur_lo[k], cur_hi[k]);
                if d[k] > 1e-9 && (x[k] - lo).abs() <= 1e-9 {
                    let cap = lo + (slack / d[k] + 1e-9).floor();
                    if cap < hi {
                        fixes.push((k, lo, cap));
                    }
                } else if d[k] < -1e-9 && (x[k] - hi).abs() <= 1e-9 {
                    let cap = hi - (slack / -d[k] + 1e-9).floor();
                    if cap > lo {
                        fixes.push((k, cap, hi));
                    }
                }
            }
        }
        let parent = if node.id == 0 {
            for &(k, lo, hi) in &fixes {
                base_lo[k] = lo;
                base_hi[k] = hi;
            }
            None
        } else if fixes.is_empty() {
            node.changes.clone()
        } else {
            Some(Rc::new(Changes {
                entries: fixes,
                parent: node.changes.clone(),
            }))
        };

        let warm = Rc::new(lp.snapshot());
        last_warm = Some(warm.clone());
        let v = x[j];
        let f = v - v.floor();
        for (clo, chi, dir, frac) in [(cur_lo[j], v.floor(), false, f), (v.ceil(), cur_hi[j], true, 1.0 - f)] {
            heap.push(Node {
                bound: obj,
                depth: node.depth + 1,
                id: next_id,
                changes: Some(Rc::new(Changes {
                    entries: vec![(j, clo, chi)],
                    parent: parent.clone(),
                })),
                branched: Some((j, dir, frac)),
                warm: Some(warm.clone()),
            });
            next_id += 1;
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(unresolved_bound, f64::min);
    let best_bound = open_bound.min(inc_obj);
    let status = match stopped {
        Some(s) => s,
        None if incumbent.is_none() && unresolved_bound.is_infinite() => MipStatus::Infeasible,
        None if unresolved_bound.is_finite() => {
            if incumbent.is_some() {
                MipStatus::Feasible
            } else {
                MipStatus::TimeLimit
            }
        }
        None => MipStatus::Optimal,
    };
    let gap = relative_gap(inc_obj, best_bound);
    Ok(MipResult {
        status,
        incumbent,
        objective: inc_obj,
        best_bound,
        gap,
        nodes_explored: nodes,
    })
}
