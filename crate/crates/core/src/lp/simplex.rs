//! Bounded-variable revised simplex with an explicit dense basis inverse.
//!
//! Every row `i` of the model gets a logical variable `r_i` and the system is
//! kept as `A x - r = 0`, with the row sense encoded in the bounds of `r_i`.
//! Logicals occupy internal indices `0..m`, structurals follow, so columns can
//! be appended without renumbering. Both the primal method (composite phase 1
//! plus phase 2) and the dual method run from whatever basis is current, which
//! is what column generation and branch-and-bound warm starts rely on.

use super::model::{LinearModel, Sense};

const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 100;
const BLAND_AFTER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

enum Phase {
    One,
    Two,
}

enum PrimalOutcome {
    Done,
    Unbounded,
    Infeasible,
    IterationLimit,
}

enum DualOutcome {
    Optimal,
    Infeasible,
    IterationLimit,
    /// Numerical trouble; caller falls back to the primal method.
    Stalled,
}

/// Basis and nonbasic states, enough to restart from a known point.
#[derive(Debug, Clone)]
pub(crate) struct BasisSnapshot {
    basis: Vec<usize>,
    state: Vec<VarState>,
}

#[derive(Debug, Clone)]
pub(crate) struct Simplex {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    x: Vec<f64>,
    /// Row-major `m x m` inverse; row `i` belongs to basis position `i`.
    binv: Vec<f64>,
    updates_since_refactor: usize,
    primal_tol: f64,
    dual_tol: f64,
    pub iterations: usize,
    iteration_cap: usize,
}

impl Simplex {
    pub fn new(model: &LinearModel) -> Self {
        let m = model.num_rows();
        let n = model.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m + n);
        let mut lower = Vec::with_capacity(m + n);
        let mut upper = Vec::with_capacity(m + n);
        let mut cost = vec![0.0; m];
        for (i, row) in model.constraints.iter().enumerate() {
            cols.push(vec![(i, -1.0)]);
            let (lo, hi) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }
        let mut structural: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in model.constraints.iter().enumerate() {
            for &(v, a) in &row.coeffs {
                if a != 0.0 {
                    structural[v.0].push((i, a));
                }
            }
        }
        for (j, var) in model.variables.iter().enumerate() {
            let mut col = std::mem::take(&mut structural[j]);
            merge_duplicates(&mut col);
            cols.push(col);
            lower.push(var.lower);
            upper.push(var.upper);
            cost.push(var.cost);
        }
        let mut s = Simplex {
            m,
            cols,
            cost,
            lower,
            upper,
            state: Vec::new(),
            basis: (0..m).collect(),
            x: vec![0.0; m + n],
            binv: Vec::new(),
            updates_since_refactor: 0,
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            iterations: 0,
            iteration_cap: 0,
        };
        s.state = (0..m + n)
            .map(|j| if j < m { VarState::Basic } else { s.resting_state(j) })
            .collect();
        s.binv = vec![0.0; m * m];
        for i in 0..m {
            s.binv[i * m + i] = -1.0;
        }
        s.refresh_tolerances();
        s
    }

    fn refresh_tolerances(&mut self) {
        let cmax = self.cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        self.dual_tol = 1e-9 * cmax;
        self.iteration_cap = 20_000 + 50 * (self.m + self.cols.len());
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_structural(&self) -> usize {
        self.cols.len() - self.m
    }

    /// Appends a structural column; it enters the problem nonbasic.
    pub fn add_column(&mut self, cost: f64, lower: f64, upper: f64, entries: &[(usize, f64)]) {
        let mut col: Vec<(usize, f64)> = entries.iter().copied().filter(|e| e.1 != 0.0).collect();
        merge_duplicates(&mut col);
        self.cols.push(col);
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.x.push(0.0);
        let j = self.cols.len() - 1;
        let st = self.resting_state(j);
        self.state.push(st);
        self.refresh_tolerances();
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            basis: self.basis.clone(),
            state: self.state.clone(),
        }
    }

    /// Columns added after the snapshot stay nonbasic. Nearby bases are
    /// reached by pivoting in the missing columns; otherwise the inverse is
    /// rebuilt on the next solve.
    pub fn restore(&mut self, snap: &BasisSnapshot) {
        let n = snap.state.len();
        let m = self.m;
        let entering: Vec<usize> = snap.basis.iter().copied().filter(|&j| self.state[j] != VarState::Basic).collect();
        let mut pivoted = self.binv.len() == m * m && entering.len() <= m / 4;
        if pivoted {
            let mut target = vec![false; self.cols.len()];
            for &j in &snap.basis {
                target[j] = true;
            }
            let mut leaving: Vec<usize> = (0..m).filter(|&r| !target[self.basis[r]]).collect();
            for &q in &entering {
                let alpha = self.ftran(q);
                let Some((pos, &r)) = leaving
                    .iter()
                    .enumerate()
                    .max_by(|a, b| alpha[*a.1].abs().total_cmp(&alpha[*b.1].abs()))
                else {
                    pivoted = false;
                    break;
                };
                if alpha[r].abs() < 1e-7 {
                    pivoted = false;
                    break;
                }
                self.pivot_update(r, &alpha);
                let out = self.basis[r];
                self.state[out] = VarState::AtLower;
                self.basis[r] = q;
                self.state[q] = VarState::Basic;
                leaving.swap_remove(pos);
            }
        }
        if !pivoted {
            self.basis.copy_from_slice(&snap.basis);
            self.binv.clear();
        }
        self.state[..n].copy_from_slice(&snap.state);
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        let j = self.m + var;
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn primal(&self) -> Vec<f64> {
        self.x[self.m..].to_vec()
    }

    pub fn objective(&self) -> f64 {
        self.cost
            .iter()
            .zip(&self.x)
            .skip(self.m)
            .map(|(c, x)| c * x)
            .sum()
    }

    /// Row duals `y = c_B B^-1`; for minimization, `>=` rows get `y >= 0`.
    pub fn duals(&self) -> Vec<f64> {
        self.btran_cost()
    }

    /// Reduced costs of the structural variables.
    pub fn reduced_costs(&self) -> Vec<f64> {
        let y = self.btran_cost();
        (self.m..self.cols.len())
            .map(|j| self.cost[j] - self.dot_col(j, &y))
            .collect()
    }

    fn resting_state(&self, j: usize) -> VarState {
        if self.lower[j].is_finite() {
            VarState::AtLower
        } else if self.upper[j].is_finite() {
            VarState::AtUpper
        } else {
            VarState::Free
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::Free | VarState::Basic => 0.0,
        }
    }

    /// Nonbasic states can go stale after bound changes; snap them back.
    fn normalize_nonbasic(&mut self) {
        for j in 0..self.cols.len() {
            let st = self.state[j];
            let fixed = match st {
                VarState::Basic => continue,
                VarState::AtLower if self.lower[j].is_finite() => st,
                VarState::AtUpper if self.upper[j].is_finite() => st,
                VarState::Free if !self.lower[j].is_finite() && !self.upper[j].is_finite() => st,
                _ => self.resting_state(j),
            };
            self.state[j] = fixed;
            self.x[j] = self.nonbasic_value(j);
        }
    }

    fn dot_col(&self, j: usize, v: &[f64]) -> f64 {
        self.cols[j].iter().map(|&(r, a)| a * v[r]).sum()
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let col = &self.cols[j];
        let mut out = vec![0.0; m];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            *o = col.iter().map(|&(r, a)| a * row[r]).sum();
        }
        out
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, &b) in y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
        y
    }

    fn btran_cost(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.btran(&cb)
    }

    fn compute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.cols.len() {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let v = self.x[j];
            if v != 0.0 {
                for &(r, a) in &self.cols[j] {
                    rhs[r] -= a * v;
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(b, r)| b * r).sum();
            self.x[self.basis[i]] = v;
        }
    }

    /// Logical basics are unit columns, so only the block of structural
    /// basics over the rows no logical covers needs inverting. Falls back to
    /// the dense repair path when that block is singular.
    fn refactor(&mut self) {
        let m = self.m;
        let mut logical_pos = vec![usize::MAX; m];
        let mut structural = Vec::new();
        for (c, &j) in self.basis.iter().enumerate() {
            if j < m {
                logical_pos[j] = c;
            } else {
                structural.push(c);
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&i| logical_pos[i] == usize::MAX).collect();
        let s = structural.len();
        if free_rows.len() != s {
            return self.refactor_dense();
        }
        let mut local = vec![usize::MAX; m];
        for (k, &i) in free_rows.iter().enumerate() {
            local[i] = k;
        }
        // Gauss-Jordan on the s x s block, row-major.
        let mut mat = vec![0.0; s * s];
        for (si, &c) in structural.iter().enumerate() {
            for &(r, a) in &self.cols[self.basis[c]] {
                if local[r] != usize::MAX {
                    mat[local[r] * s + si] = a;
                }
            }
        }
        let mut inv = vec![0.0; s * s];
        for k in 0..s {
            inv[k * s + k] = 1.0;
        }
        let mut row_used = vec![false; s];
        let mut pivot_row = vec![0; s];
        for c in 0..s {
            let mut best = usize::MAX;
            let mut best_abs = SINGULAR_TOL;
            for r in 0..s {
                let v = mat[r * s + c].abs();
                if !row_used[r] && v > best_abs {
                    best_abs = v;
                    best = r;
                }
            }
            if best == usize::MAX {
                return self.refactor_dense();
            }
            row_used[best] = true;
            pivot_row[c] = best;
            let p = 1.0 / mat[best * s + c];
            for k in 0..s {
                mat[best * s + k] *= p;
                inv[best * s + k] *= p;
            }
            let prow = mat[best * s..(best + 1) * s].to_vec();
            let pinv = inv[best * s..(best + 1) * s].to_vec();
            for r in 0..s {
                let f = mat[r * s + c];
                if r == best || f == 0.0 {
                    continue;
                }
                for k in 0..s {
                    mat[r * s + k] -= f * prow[k];
                    inv[r * s + k] -= f * pinv[k];
                }
            }
        }
        // Row `si` of the block inverse is `inv[pivot_row[si]]`, over free rows.
        let mut binv = vec![0.0; m * m];
        for (si, &c) in structural.iter().enumerate() {
            let src = &inv[pivot_row[si] * s..(pivot_row[si] + 1) * s];
            for (k, &i) in free_rows.iter().enumerate() {
                binv[c * m + i] = src[k];
            }
        }
        // Logical of row i: x = sum_s A[i,s] x_s - b_i.
        for i in 0..m {
            if logical_pos[i] != usize::MAX {
                binv[logical_pos[i] * m + i] = -1.0;
            }
        }
        for (si, &c) in structural.iter().enumerate() {
            let src = pivot_row[si] * s;
            for &(r, a) in &self.cols[self.basis[c]] {
                let lp = logical_pos[r];
                if lp == usize::MAX {
                    continue;
                }
                for (k, &i) in free_rows.iter().enumerate() {
                    binv[lp * m + i] += a * inv[src + k];
                }
            }
        }
        self.binv = binv;
        self.updates_since_refactor = 0;
    }

    /// Gauss-Jordan inversion. Singular columns are swapped for logicals of
    /// uncovered rows until the basis is nonsingular.
    fn refactor_dense(&mut self) {
        let m = self.m;
        loop {
            let mut mat = vec![0.0; m * m];
            for (c, &j) in self.basis.iter().enumerate() {
                for &(r, a) in &self.cols[j] {
                    mat[r * m + c] = a;
                }
            }
            let mut inv = vec![0.0; m * m];
            for i in 0..m {
                inv[i * m + i] = 1.0;
            }
            let mut row_used = vec![false; m];
            let mut pivot_row = vec![usize::MAX; m];
            let mut singular = Vec::new();
            for c in 0..m {
                let mut best = usize::MAX;
                let mut best_abs = SINGULAR_TOL;
                for r in 0..m {
                    let v = mat[r * m + c].abs();
                    if !row_used[r] && v > best_abs {
                        best_abs = v;
                        best = r;
                    }
                }
                if best == usize::MAX {
                    singular.push(c);
                    continue;
                }
                row_used[best] = true;
                pivot_row[c] = best;
                let p = 1.0 / mat[best * m + c];
                for k in 0..m {
                    mat[best * m + k] *= p;
                    inv[best * m + k] *= p;
                }
                let (prow, pinv) = (mat[best * m..(best + 1) * m].to_vec(), inv[best * m..(best + 1) * m].to_vec());
                for r in 0..m {
                    if r == best {
                        continue;
                    }
                    let f = mat[r * m + c];
                    if f == 0.0 {
                        continue;
                    }
                    for k in 0..m {
                        mat[r * m + k] -= f * prow[k];
                        inv[r * m + k] -= f * pinv[k];
                    }
                }
            }
            if singular.is_empty() {
                let mut binv = vec![0.0; m * m];
                for c in 0..m {
                    let r = pivot_row[c];
                    binv[c * m..(c + 1) * m].copy_from_slice(&inv[r * m..(r + 1) * m]);
                }
                self.binv = binv;
                self.updates_since_refactor = 0;
                return;
            }
            let free_rows = (0..m).filter(|&r| !row_used[r]);
            for (c, r) in singular.into_iter().zip(free_rows) {
                let out = self.basis[c];
                self.state[out] = self.resting_state(out);
                self.x[out] = self.nonbasic_value(out);
                // Logical r is nonbasic here: its row was never covered.
                self.basis[c] = r;
                self.state[r] = VarState::Basic;
            }
        }
    }

    fn pivot_update(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let p = 1.0 / alpha[r];
        for k in 0..m {
            self.binv[r * m + k] *= p;
        }
        let prow = self.binv[r * m..(r + 1) * m].to_vec();
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (b, &pr) in row.iter_mut().zip(&prow) {
                *b -= f * pr;
            }
        }
        self.updates_since_refactor += 1;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - self.primal_tol {
            self.lower[j] - v
        } else if v > self.upper[j] + self.primal_tol {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn primal_infeasible(&self) -> bool {
        self.basis.iter().any(|&j| self.infeasibility(j) > 0.0)
    }

    fn dual_feasible(&self, d: &[f64]) -> bool {
        (0..self.cols.len()).all(|j| match self.state[j] {
            VarState::Basic => true,
            VarState::AtLower => self.lower[j] == self.upper[j] || d[j] >= -self.dual_tol,
            VarState::AtUpper => self.lower[j] == self.upper[j] || d[j] <= self.dual_tol,
            VarState::Free => d[j].abs() <= self.dual_tol,
        })
    }

    fn reduced_all(&self, y: &[f64], cost: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..self.cols.len())
            .map(|j| {
                if self.state[j] == VarState::Basic {
                    0.0
                } else {
                    cost(j) - self.dot_col(j, y)
                }
            })
            .collect()
    }

    pub fn solve(&mut self) -> SimplexStatus {
        self.normalize_nonbasic();
        if self.updates_since_refactor >= REFACTOR_EVERY || self.binv.len() != self.m * self.m {
            self.refactor();
        }
        self.compute_basic_values();
        let start = self.iterations;
        for _round in 0..4 {
            if self.primal_infeasible() {
                let y = self.btran_cost();
                let d = self.reduced_all(&y, |j| self.cost[j]);
                let mut need_phase_one = true;
                if self.dual_feasible(&d) {
                    match self.dual_simplex(start) {
                        DualOutcome::Optimal => need_phase_one = false,
                        DualOutcome::Infeasible => return SimplexStatus::Infeasible,
                        DualOutcome::IterationLimit => return SimplexStatus::IterationLimit,
                        DualOutcome::Stalled => {}
                    }
                }
                if need_phase_one {
                    match self.primal_simplex(Phase::One, start) {
                        PrimalOutcome::Done => {}
                        PrimalOutcome::Infeasible => return SimplexStatus::Infeasible,
                        PrimalOutcome::IterationLimit => return SimplexStatus::IterationLimit,
                        PrimalOutcome::Unbounded => unreachable!("phase one is bounded below"),
                    }
                }
            }
            match self.primal_simplex(Phase::Two, start) {
                PrimalOutcome::Done => {}
                PrimalOutcome::Unbounded => return SimplexStatus::Unbounded,
                PrimalOutcome::IterationLimit => return SimplexStatus::IterationLimit,
                PrimalOutcome::Infeasible => unreachable!("phase two starts feasible"),
            }
            if self.updates_since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            self.compute_basic_values();
            if !self.primal_infeasible() {
                let y = self.btran_cost();
                let d = self.reduced_all(&y, |j| self.cost[j]);
                if self.dual_feasible(&d) {
                    return SimplexStatus::Optimal;
                }
            }
        }
        SimplexStatus::IterationLimit
    }

    fn phase_one_cost(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - self.primal_tol {
            -1.0
        } else if v > self.upper[j] + self.primal_tol {
            1.0
        } else {
            0.0
        }
    }

    fn primal_simplex(&mut self, phase: Phase, start: usize) -> PrimalOutcome {
        let m = self.m;
        let phase_one = matches!(phase, Phase::One);
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations - start > self.iteration_cap {
                return PrimalOutcome::IterationLimit;
            }
            if self.updates_since_refactor >= REFACTOR_EVERY {
                self.refactor();
                self.compute_basic_values();
            }
            let cb: Vec<f64> = if phase_one {
                let cb: Vec<f64> = self.basis.iter().map(|&j| self.phase_one_cost(j)).collect();
                if cb.iter().all(|&c| c == 0.0) {
                    return PrimalOutcome::Done;
                }
                cb
            } else {
                self.basis.iter().map(|&j| self.cost[j]).collect()
            };
            let y = self.btran(&cb);
            let d = if phase_one {
                self.reduced_all(&y, |_| 0.0)
            } else {
                self.reduced_all(&y, |j| self.cost[j])
            };
            let dtol = if phase_one { 1e-9 } else { self.dual_tol };
            let bland = degenerate_run > BLAND_AFTER;

            let mut entering = usize::MAX;
            let mut best = 0.0;
            for j in 0..self.cols.len() {
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let score = match self.state[j] {
                    VarState::Basic => continue,
                    VarState::AtLower if d[j] < -dtol => -d[j],
                    VarState::AtUpper if d[j] > dtol => d[j],
                    VarState::Free if d[j].abs() > dtol => d[j].abs(),
                    _ => continue,
                };
                if bland {
                    entering = j;
                    break;
                }
                if score > best {
                    best = score;
                    entering = j;
                }
            }
            if entering == usize::MAX {
                return if phase_one {
                    PrimalOutcome::Infeasible
                } else {
                    PrimalOutcome::Done
                };
            }
            let q = entering;
            let dir = if d[q] < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);

            // Ratio test. Each candidate is (ratio, position, leaves at upper?).
            let mut cands: Vec<(f64, usize, bool)> = Vec::new();
            let mut theta_max = f64::INFINITY;
            for i in 0..m {
                let a = alpha[i];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.basis[i];
                let delta = -dir * a;
                let v = self.x[j];
                let (lo, hi) = (self.lower[j], self.upper[j]);
                let hit = if delta < 0.0 {
                    if phase_one && v > hi + self.primal_tol {
                        Some((hi, true))
                    } else if v < lo - self.primal_tol {
                        None
                    } else if lo.is_finite() {
                        Some((lo, false))
                    } else {
                        None
                    }
                } else if phase_one && v < lo - self.primal_tol {
                    Some((lo, false))
                } else if v > hi + self.primal_tol {
                    None
                } else if hi.is_finite() {
                    Some((hi, true))
                } else {
                    None
                };
                if let Some((bound, at_upper)) = hit {
                    let gap = (v - bound).abs();
                    let ratio = gap / delta.abs();
                    let relaxed = (gap + self.primal_tol) / delta.abs();
                    theta_max = theta_max.min(relaxed);
                    cands.push((ratio, i, at_upper));
                }
            }
            let flip_range = self.upper[q] - self.lower[q];
            let choice = if bland {
                let min_ratio = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|c| c.0 <= min_ratio + 1e-12)
                    .min_by_key(|c| self.basis[c.1])
                    .copied()
            } else {
                cands
                    .iter()
                    .filter(|c| c.0 <= theta_max)
                    .max_by(|a, b| alpha[a.1].abs().total_cmp(&alpha[b.1].abs()))
                    .copied()
            };
            self.iterations += 1;
            match choice {
                Some((ratio, _, _)) if flip_range <= ratio => {
                    self.bound_flip(q, dir, flip_range, &alpha);
                    degenerate_run = 0;
                }
                None if flip_range.is_finite() => {
                    self.bound_flip(q, dir, flip_range, &alpha);
                    degenerate_run = 0;
                }
                None => return PrimalOutcome::Unbounded,
                Some((ratio, r, at_upper)) => {
                    let theta = ratio.max(0.0);
                    if theta < 1e-12 {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    for i in 0..m {
                        if alpha[i] != 0.0 {
                            let j = self.basis[i];
                            self.x[j] -= dir * theta * alpha[i];
                        }
                    }
                    self.x[q] += dir * theta;
                    let out = self.basis[r];
                    self.state[out] = if at_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[out] = if at_upper {
                        self.upper[out]
                    } else {
                        self.lower[out]
                    };
                    self.basis[r] = q;
                    self.state[q] = VarState::Basic;
                    self.pivot_update(r, &alpha);
                }
            }
        }
    }

    fn bound_flip(&mut self, q: usize, dir: f64, range: f64, alpha: &[f64]) {
        for i in 0..self.m {
            if alpha[i] != 0.0 {
                let j = self.basis[i];
                self.x[j] -= dir * range * alpha[i];
            }
        }
        if dir > 0.0 {
            self.state[q] = VarState::AtUpper;
            self.x[q] = self.upper[q];
        } else {
            self.state[q] = VarState::AtLower;
            self.x[q] = self.lower[q];
        }
    }

    fn dual_simplex(&mut self, start: usize) -> DualOutcome {
        let m = self.m;
        loop {
            if self.iterations - start > self.iteration_cap {
                return DualOutcome::IterationLimit;
            }
            if self.updates_since_refactor >= REFACTOR_EVERY {
                self.refactor();
                self.compute_basic_values();
            }
            let mut r = usize::MAX;
            let mut worst = 0.0;
            for i in 0..m {
                let inf = self.infeasibility(self.basis[i]);
                if inf > worst {
                    worst = inf;
                    r = i;
                }
            }
            if r == usize::MAX {
                return DualOutcome::Optimal;
            }
            let leaving = self.basis[r];
            let below = self.x[leaving] < self.lower[leaving];
            let target = if below {
                self.lower[leaving]
            } else {
                self.upper[leaving]
            };
            let y = self.btran_cost();
            let rho = self.binv[r * m..(r + 1) * m].to_vec();

            let mut cands: Vec<(f64, usize, f64)> = Vec::new();
            let mut theta_max = f64::INFINITY;
            for j in 0..self.cols.len() {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = self.dot_col(j, &rho);
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                // x_r moves by -a * dx_j; it must move towards `target`.
                let ok = match st {
                    VarState::AtLower => (a < 0.0) == below,
                    VarState::AtUpper => (a > 0.0) == below,
                    VarState::Free => true,
                    VarState::Basic => false,
                };
                if !ok {
                    continue;
                }
                let dj = self.cost[j] - self.dot_col(j, &y);
                let dmag = match st {
                    VarState::AtLower => dj.max(0.0),
                    VarState::AtUpper => (-dj).max(0.0),
                    _ => dj.abs(),
                };
                let ratio = dmag / a.abs();
                theta_max = theta_max.min((dmag + self.dual_tol) / a.abs());
                cands.push((ratio, j, a));
            }
            let Some(&(_, q, _)) = cands
                .iter()
                .filter(|c| c.0 <= theta_max)
                .max_by(|a, b| a.2.abs().total_cmp(&b.2.abs()))
            else {
                return DualOutcome::Infeasible;
            };
            let alpha = self.ftran(q);
            if alpha[r].abs() < PIVOT_TOL {
                return DualOutcome::Stalled;
            }
            let step = (self.x[leaving] - target) / alpha[r];
            for i in 0..m {
                if alpha[i] != 0.0 {
                    let j = self.basis[i];
                    self.x[j] -= alpha[i] * step;
                }
            }
            self.x[q] += step;
            self.state[leaving] = if below {
                VarState::AtLower
            } else {
                VarState::AtUpper
            };
            self.x[leaving] = target;
            self.basis[r] = q;
            self.state[q] = VarState::Basic;
            self.pivot_update(r, &alpha);
            self.iterations += 1;
        }
    }
}

fn merge_duplicates(col: &mut Vec<(usize, f64)>) {
    col.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(col.len());
    for &(r, a) in col.iter() {
        match out.last_mut() {
            Some(last) if last.0 == r => last.1 += a,
            _ => out.push((r, a)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    *col = out;
}
