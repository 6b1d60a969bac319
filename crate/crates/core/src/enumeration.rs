//! Enumeration of every column whose reduced cost falls below the gap
//! between the upper and lower bounds. Columns at or above the gap cannot
//! appear in an optimal solution, so the returned set is sufficient.

use rayon::prelude::*;

use crate::graph::{Instance, Path, ORIGIN};
use crate::master::{Column, DualSolution};

/// Bounds and duals at the end of the first two steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GapBudget {
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub duals: DualSolution,
}

impl GapBudget {
    /// Tiny negative gaps from round-off are clamped to zero.
    pub fn new(lb: f64, ub: f64, duals: DualSolution) -> Self {
        let gap = if ub.is_infinite() { f64::INFINITY } else { (ub - lb).max(0.0) };
        GapBudget { lb, ub, gap, duals }
    }

    /// A budget that admits every feasible column.
    pub fn unbounded(inst: &Instance) -> Self {
        GapBudget {
            lb: f64::NEG_INFINITY,
            ub: f64::INFINITY,
            gap: f64::INFINITY,
            duals: DualSolution::zeros(inst),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.gap + 1e-9
    }
}

/// Every feasible column with reduced cost below `budget.threshold()`,
/// sorted by node sequence then vehicle type.
pub fn enumerate_gap_columns(inst: &Instance, budget: &GapBudget) -> Vec<Column> {
    let mut cols: Vec<Column> = (0..inst.fleet().len())
        .into_par_iter()
        .flat_map_iter(|k| enumerate_for_vehicle(inst, budget, k))
        .collect();
    cols.sort();
    cols
}

struct Search<'a> {
    inst: &'a Instance,
    arc_rc: Vec<f64>,
    /// `completion[d][v]`: cheapest reduced cost of at most `d` further arcs
    /// from `v`, ignoring elementarity.
    completion: Vec<Vec<f64>>,
    threshold: f64,
    k: usize,
    stack: Vec<usize>,
    on_path: Vec<bool>,
    out: Vec<Column>,
}

fn enumerate_for_vehicle(inst: &Instance, budget: &GapBudget, k: usize) -> Vec<Column> {
    let vt = &inst.fleet()[k];
    let nv = inst.vertices().len();
    let arc_rc: Vec<f64> = inst
        .arcs()
        .iter()
        .enumerate()
        .map(|(a, arc)| vt.unit_cost * arc.length - vt.capacity * budget.duals.pi[a])
        .collect();
    let limit = inst.arc_limit();
    let mut completion = vec![vec![0.0; nv]; limit + 1];
    for d in 1..=limit {
        for v in 0..nv {
            let mut best = 0.0f64;
            for &a in inst.out_arcs(v) {
                let arc = inst.arc(a);
                if arc.is_first_layer() {
                    best = best.min(arc_rc[a] + completion[d - 1][arc.head]);
                }
            }
            completion[d][v] = best;
        }
    }
    let mut s = Search {
        inst,
        arc_rc,
        completion,
        threshold: budget.threshold(),
        k,
        stack: Vec::with_capacity(limit),
        on_path: vec![false; nv],
        out: Vec::new(),
    };
    s.dfs(ORIGIN, 0.0);
    s.out
}

impl Search<'_> {
    fn dfs(&mut self, v: usize, r: f64) {
        let remaining = self.inst.arc_limit() - self.stack.len();
        if remaining == 0 || r + self.completion[remaining][v] >= self.threshold {
            return;
        }
        for &a in self.inst.out_arcs(v) {
            let arc = self.inst.arc(a);
            let h = arc.head;
            if !arc.is_first_layer() || self.on_path[h] {
                continue;
            }
            let r2 = r + self.arc_rc[a];
            self.stack.push(h);
            self.on_path[h] = true;
            if r2 < self.threshold {
                let path = Path::new(self.inst, self.stack.clone()).expect("dfs follows first-layer arcs");
                self.out.push(Column::new(path, self.k));
            }
            self.dfs(h, r2);
            self.on_path[h] = false;
            self.stack.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::t1;
    use crate::pricing::{reduced_cost, run_column_generation};

    fn brute_force(inst: &Instance, budget: &GapBudget) -> Vec<Column> {
        let firsts: Vec<usize> = inst.first_layer().collect();
        let mut seqs: Vec<Vec<usize>> = firsts.iter().map(|&v| vec![v]).collect();
        let mut frontier = seqs.clone();
        for _ in 1..inst.arc_limit() {
            let mut next = Vec::new();
            for s in &frontier {
                for &v in &firsts {
                    if !s.contains(&v) {
                        let mut t = s.clone();
                        t.push(v);
                        next.push(t);
                    }
                }
            }
            seqs.extend(next.iter().cloned());
            frontier = next;
        }
        let mut out = Vec::new();
        for s in seqs {
            if let Ok(p) = Path::new(inst, s) {
                for k in 0..inst.fleet().len() {
                    if reduced_cost(inst, &p, k, &budget.duals) < budget.threshold() {
                        out.push(Column::new(p.clone(), k));
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn t1_gap_filter_matches_brute_force() {
        let inst = t1();
        let cg = run_column_generation(&inst, 1e-6).unwrap();
        let budget = GapBudget::new(cg.lower_bound, 940.0, cg.duals);
        assert!((budget.gap - 391.428571).abs() < 1e-5);
        assert_eq!(enumerate_gap_columns(&inst, &budget), brute_force(&inst, &budget));
    }

    #[test]
    fn infinite_gap_returns_everything() {
        let inst = t1();
        let all = enumerate_gap_columns(&inst, &GapBudget::unbounded(&inst));
        assert_eq!(all.len(), 16);
    }

    #[test]
    fn negative_gap_is_clamped() {
        let inst = t1();
        let b = GapBudget::new(10.0, 10.0 - 1e-9, DualSolution::zeros(&inst));
        assert_eq!(b.gap, 0.0);
        assert!(enumerate_gap_columns(&inst, &b).is_empty());
    }

    #[test]
    fn random_duals_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let params = crate::graph::GeneratorParams::default();
        for seed in 0..20 {
            let inst = crate::graph::generate_instance(seed, &params).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut d = DualSolution::zeros(&inst);
            for a in inst.first_layer_arcs() {
                d.pi[a] = rng.gen_range(0.0..20.0);
            }
            let b = GapBudget::new(0.0, rng.gen_range(0.0..3000.0), d);
            assert_eq!(enumerate_gap_columns(&inst, &b), brute_force(&inst, &b), "seed {seed}");
        }
    }
}
