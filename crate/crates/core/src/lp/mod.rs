//! Linear and mixed-integer programming kernel.
//!
//! Dual sign convention (minimization): duals of `>=` rows are `>= 0`, duals
//! of `<=` rows are `<= 0`, equality rows are unrestricted. The reduced cost of
//! variable `j` is `c_j - sum_i y_i a_ij`.

mod mip;
mod model;
pub(crate) mod simplex;

pub use mip::{solve_mip, solve_mip_with_start, BranchRule, MipLimits, MipResult, MipStatus};
pub use model::{Constraint, LinearModel, ModelError, RowId, Sense, VarId, Variable};

use simplex::{Simplex, SimplexStatus};

/// Primal feasibility tolerance promised on returned solutions.
pub const FEAS_TOL: f64 = 1e-7;
/// Integrality tolerance used by branch-and-bound.
pub const INT_TOL: f64 = 1e-6;
/// Relative optimality gap at which branch-and-bound stops.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The simplex hit its pivot cap; treat the result as unknown.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpResult {
    fn from_simplex(status: SimplexStatus, s: &Simplex) -> Self {
        let status = match status {
            SimplexStatus::Optimal => LpStatus::Optimal,
            SimplexStatus::Infeasible => LpStatus::Infeasible,
            SimplexStatus::Unbounded => LpStatus::Unbounded,
            SimplexStatus::IterationLimit => LpStatus::IterationLimit,
        };
        if status == LpStatus::Optimal {
            LpResult {
                status,
                objective: s.objective(),
                primal: s.primal(),
                duals: s.duals(),
                reduced_costs: s.reduced_costs(),
                iterations: s.iterations,
            }
        } else {
            LpResult {
                status,
                objective: match status {
                    LpStatus::Unbounded => f64::NEG_INFINITY,
                    _ => f64::INFINITY,
                },
                primal: Vec::new(),
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                iterations: s.iterations,
            }
        }
    }
}

/// Solves the continuous relaxation of `model` (integrality flags ignored).
pub fn solve_lp(model: &LinearModel) -> Result<LpResult, ModelError> {
    model.validate()?;
    let mut s = Simplex::new(model);
    let status = s.solve();
    Ok(LpResult::from_simplex(status, &s))
}

/// A relaxation that keeps its basis between solves, so that appending
/// columns or tightening bounds re-optimizes from the previous optimum.
#[derive(Debug, Clone)]
pub struct WarmLp {
    inner: Simplex,
}

impl WarmLp {
    pub fn new(model: &LinearModel) -> Result<Self, ModelError> {
        model.validate()?;
        Ok(WarmLp {
            inner: Simplex::new(model),
        })
    }

    /// Appends a variable `lower <= x <= upper` with the given column entries
    /// `(row, coefficient)`.
    pub fn add_column(&mut self, cost: f64, lower: f64, upper: f64, entries: &[(RowId, f64)]) {
        let e: Vec<(usize, f64)> = entries.iter().map(|&(r, a)| (r.0, a)).collect();
        self.inner.add_column(cost, lower, upper, &e);
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.inner.set_bounds(var.0, lower, upper);
    }

    pub fn num_vars(&self) -> usize {
        self.inner.num_structural()
    }

    pub fn num_rows(&self) -> usize {
        self.inner.num_rows()
    }

    pub fn solve(&mut self) -> LpResult {
        let status = self.inner.solve();
        LpResult::from_simplex(status, &self.inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_lower_bound_row() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, false, 1.0);
        m.add_constraint("r", vec![(x, 1.0)], Sense::Ge, 3.0);
        let r = solve_lp(&m).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
        assert!((r.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn le_row_dual_is_nonpositive() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, false, -1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, false, -1.0);
        m.add_constraint("r", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        let r = solve_lp(&m).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-9);
        assert!((r.duals[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, 1.0, false, 1.0);
        m.add_constraint("r", vec![(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, false, -1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, false, 0.0);
        m.add_constraint("r", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variable_and_equalities() {
        // min x + 2y, x free, x + y = 4, x - y = -2 -> x=1, y=3
        let mut m = LinearModel::new();
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, false, 1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, false, 2.0);
        m.add_constraint("a", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
        m.add_constraint("b", vec![(x, 1.0), (y, -1.0)], Sense::Eq, -2.0);
        let r = solve_lp(&m).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.primal[0] - 1.0).abs() < 1e-9);
        assert!((r.primal[1] - 3.0).abs() < 1e-9);
        assert!((r.objective - 7.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_after_adding_column() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, false, 5.0);
        let row = m.add_constraint("r", vec![(x, 1.0)], Sense::Ge, 2.0);
        let mut lp = WarmLp::new(&m).unwrap();
        assert!((lp.solve().objective - 10.0).abs() < 1e-9);
        lp.add_column(1.0, 0.0, f64::INFINITY, &[(row, 1.0)]);
        let r = lp.solve();
        assert!((r.objective - 2.0).abs() < 1e-9);
        lp.set_bounds(VarId(1), 0.0, 0.5);
        let r = lp.solve();
        assert!((r.objective - (0.5 + 7.5)).abs() < 1e-9);
    }
}
