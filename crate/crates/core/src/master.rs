//! Restricted master problem over a set of (path, vehicle type) columns.
//!
//! Rows: one flow-conservation equality per vertex (origin included) and one
//! capacity row `sum_k sum_p q_k y_p^k - x_a >= 0` per first-layer arc.
//! Variables: flows `x_a` for every arc (continuous), then one integer
//! `y_p^k` per column.

use thiserror::Error;

use crate::graph::{Instance, Path};
use crate::lp::{LinearModel, LpResult, LpStatus, RowId, Sense, VarId};

/// A first-layer path served by one vehicle type; one master variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Column {
    pub path: Path,
    /// Index into the fleet (type id minus one).
    pub vehicle: usize,
}

impl Column {
    pub fn new(path: Path, vehicle: usize) -> Self {
        Column { path, vehicle }
    }

    /// Deduplication key: node sequence plus vehicle type.
    pub fn key(&self) -> (Vec<usize>, usize) {
        (self.path.nodes().to_vec(), self.vehicle)
    }

    /// Routing cost of one vehicle on this column, CNY.
    pub fn cost(&self, inst: &Instance) -> f64 {
        inst.fleet()[self.vehicle].unit_cost * self.path.length()
    }

    pub fn capacity(&self, inst: &Instance) -> f64 {
        inst.fleet()[self.vehicle].capacity
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MasterError {
    #[error("column {0} references an arc that is not a first-layer arc of the instance")]
    UnknownArc(usize),
    #[error("column {0} uses vehicle type index {1} outside the fleet")]
    UnknownVehicle(usize, usize),
    #[error("LP relaxation is not optimal ({0:?})")]
    StatusNotOptimal(LpStatus),
}

#[derive(Debug, Clone)]
pub struct RmpModel {
    pub model: LinearModel,
    pub columns: Vec<Column>,
    /// Parallel to `columns`.
    pub y_vars: Vec<VarId>,
    /// Indexed by arc.
    pub x_vars: Vec<VarId>,
    /// Indexed by vertex (origin first).
    pub flow_rows: Vec<RowId>,
    /// Indexed by arc; `None` on cross-layer arcs.
    pub capacity_rows: Vec<Option<RowId>>,
}

/// One dual value per first-layer capacity row, indexed by arc (cross-layer
/// arcs carry 0).
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub pi: Vec<f64>,
}

impl DualSolution {
    pub fn zeros(inst: &Instance) -> Self {
        DualSolution {
            pi: vec![0.0; inst.arcs().len()],
        }
    }
}

fn check_column(inst: &Instance, idx: usize, col: &Column) -> Result<(), MasterError> {
    if col.vehicle >= inst.fleet().len() {
        return Err(MasterError::UnknownVehicle(idx, col.vehicle));
    }
    let mut prev = crate::graph::ORIGIN;
    for (&a, &v) in col.path.arcs().iter().zip(col.path.nodes()) {
        let ok = a < inst.arcs().len() && {
            let arc = inst.arc(a);
            arc.is_first_layer() && arc.tail == prev && arc.head == v
        };
        if !ok {
            return Err(MasterError::UnknownArc(idx));
        }
        prev = v;
    }
    Ok(())
}

impl RmpModel {
    /// Column entries `(row, coefficient)` of a `y` variable.
    pub fn y_entries(&self, inst: &Instance, col: &Column) -> Vec<(RowId, f64)> {
        let q = col.capacity(inst);
        col.path
            .arcs()
            .iter()
            .map(|&a| (self.capacity_rows[a].expect("first-layer arc"), q))
            .collect()
    }

    /// Appends a column; returns its variable, cost and row entries so a
    /// warm-started relaxation can mirror the change.
    pub fn add_column(&mut self, inst: &Instance, col: Column) -> Result<(VarId, f64, Vec<(RowId, f64)>), MasterError> {
        check_column(inst, self.columns.len(), &col)?;
        let cost = col.cost(inst);
        let entries = self.y_entries(inst, &col);
        let var = self.model.add_var(
            format!("y[{}|k{}]", col.path.display(inst), col.vehicle + 1),
            0.0,
            f64::INFINITY,
            true,
            cost,
        );
        for &(row, q) in &entries {
            self.model.constraints[row.0].coeffs.push((var, q));
        }
        self.columns.push(col);
        self.y_vars.push(var);
        Ok((var, cost, entries))
    }

    /// Integer vehicle counts per column from a solution vector.
    pub fn vehicle_counts(&self, values: &[f64]) -> Vec<u32> {
        self.y_vars
            .iter()
            .map(|v| values[v.0].round().max(0.0) as u32)
            .collect()
    }

    pub fn flows(&self, values: &[f64]) -> Vec<f64> {
        self.x_vars.iter().map(|v| values[v.0].max(0.0)).collect()
    }
}

/// Builds the master problem of the given columns.
pub fn build_rmp(inst: &Instance, columns: &[Column]) -> Result<RmpModel, MasterError> {
    let mut model = LinearModel::new();
    let nv = inst.vertices().len();
    let x_vars: Vec<VarId> = inst
        .arcs()
        .iter()
        .map(|a| {
            let cost = a.outsource_rate().map_or(0.0, |rate| rate * a.length);
            model.add_var(
                format!("x[{}>{}]", inst.vertex(a.tail).id, inst.vertex(a.head).id),
                0.0,
                f64::INFINITY,
                false,
                cost,
            )
        })
        .collect();
    let mut flow_rows = Vec::with_capacity(nv);
    for v in 0..nv {
        let mut coeffs: Vec<(VarId, f64)> = inst.out_arcs(v).iter().map(|&a| (x_vars[a], 1.0)).collect();
        coeffs.extend(inst.in_arcs(v).iter().map(|&a| (x_vars[a], -1.0)));
        let rhs = if v == crate::graph::ORIGIN {
            inst.total_demand()
        } else {
            -inst.demand(v)
        };
        flow_rows.push(model.add_constraint(format!("flow[{}]", inst.vertex(v).id), coeffs, Sense::Eq, rhs));
    }
    let capacity_rows = inst
        .arcs()
        .iter()
        .enumerate()
        .map(|(a, arc)| {
            arc.is_first_layer().then(|| {
                model.add_constraint(
                    format!("cap[{}>{}]", inst.vertex(arc.tail).id, inst.vertex(arc.head).id),
                    vec![(x_vars[a], -1.0)],
                    Sense::Ge,
                    0.0,
                )
            })
        })
        .collect();
    let mut rmp = RmpModel {
        model,
        columns: Vec::with_capacity(columns.len()),
        y_vars: Vec::with_capacity(columns.len()),
        x_vars,
        flow_rows,
        capacity_rows,
    };
    for col in columns {
        rmp.add_column(inst, col.clone())?;
    }
    Ok(rmp)
}

/// Reads `pi_a` off the capacity rows of an optimal relaxation.
pub fn extract_duals(rmp: &RmpModel, lp: &LpResult) -> Result<DualSolution, MasterError> {
    if lp.status != LpStatus::Optimal {
        return Err(MasterError::StatusNotOptimal(lp.status));
    }
    let pi = rmp
        .capacity_rows
        .iter()
        .map(|row| match row {
            Some(r) => {
                let y = lp.duals[r.0];
                if y < 0.0 && y > -1e-9 {
                    0.0
                } else {
                    y
                }
            }
            None => 0.0,
        })
        .collect();
    Ok(DualSolution { pi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::t1;
    use crate::lp::solve_lp;

    fn direct_columns(inst: &Instance) -> Vec<Column> {
        let mut cols = Vec::new();
        for v in inst.first_layer() {
            for k in 0..inst.fleet().len() {
                cols.push(Column::new(Path::new(inst, vec![v]).unwrap(), k));
            }
        }
        cols
    }

    #[test]
    fn t1_initial_model_dimensions() {
        let inst = t1();
        let rmp = build_rmp(&inst, &direct_columns(&inst)).unwrap();
        assert_eq!(rmp.y_vars.len(), 8);
        assert_eq!(rmp.x_vars.len(), 6);
        assert_eq!(rmp.flow_rows.len(), 4);
        assert_eq!(rmp.capacity_rows.iter().flatten().count(), 4);
        assert_eq!(rmp.model.num_rows(), 8);
    }

    #[test]
    fn outsourcing_cost_coefficient() {
        let inst = t1();
        let rmp = build_rmp(&inst, &[]).unwrap();
        let a = inst.vertex_by_id("a").unwrap();
        let z = inst.vertex_by_id("z").unwrap();
        let arc = inst.find_arc(a, z).unwrap();
        assert!((rmp.model.variables[rmp.x_vars[arc].0].cost - 12.0).abs() < 1e-12);
    }

    #[test]
    fn flow_rows_balance() {
        let inst = t1();
        let rmp = build_rmp(&inst, &[]).unwrap();
        let total: f64 = rmp.flow_rows.iter().map(|r| rmp.model.constraints[r.0].rhs).sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn empty_column_set_is_infeasible() {
        let inst = t1();
        let rmp = build_rmp(&inst, &[]).unwrap();
        assert_eq!(solve_lp(&rmp.model).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn t1_relaxation_value_and_duals() {
        let inst = t1();
        let rmp = build_rmp(&inst, &direct_columns(&inst)).unwrap();
        let lp = solve_lp(&rmp.model).unwrap();
        let expected = 100.0 * 7.5 * (60.0 + 40.0) / 175.0 + 0.06 * 10.0 * 200.0;
        assert!((lp.objective - expected).abs() < 1e-6, "{}", lp.objective);
        assert!((lp.objective - 548.57).abs() < 0.01);
        let duals = extract_duals(&rmp, &lp).unwrap();
        assert!(duals.pi.iter().all(|&p| p >= 0.0));
        // In-model columns price out nonnegative at an optimum.
        for col in &rmp.columns {
            let r: f64 = col
                .path
                .arcs()
                .iter()
                .map(|&a| inst.fleet()[col.vehicle].unit_cost * inst.arc(a).length - col.capacity(&inst) * duals.pi[a])
                .sum();
            assert!(r >= -1e-6, "{r}");
        }
    }

    #[test]
    fn slack_capacity_has_zero_dual() {
        let inst = t1();
        let mut rmp = build_rmp(&inst, &direct_columns(&inst)).unwrap();
        // Force two type-1 vehicles onto (o,a): 130 m³ of capacity for 60 m³.
        rmp.model.variables[rmp.y_vars[0].0].lower = 2.0;
        let lp = solve_lp(&rmp.model).unwrap();
        let duals = extract_duals(&rmp, &lp).unwrap();
        let a = inst.vertex_by_id("a").unwrap();
        assert_eq!(duals.pi[inst.find_arc(0, a).unwrap()], 0.0);
    }

    #[test]
    fn extract_duals_requires_optimal() {
        let inst = t1();
        let rmp = build_rmp(&inst, &[]).unwrap();
        let lp = solve_lp(&rmp.model).unwrap();
        assert_eq!(
            extract_duals(&rmp, &lp),
            Err(MasterError::StatusNotOptimal(LpStatus::Infeasible))
        );
    }

    #[test]
    fn rejects_foreign_arc() {
        let inst = t1();
        let other = crate::graph::generate_instance(1, &Default::default()).unwrap();
        let v = other.first_layer().last().unwrap();
        let col = Column::new(Path::new(&other, vec![v]).unwrap(), 0);
        assert!(matches!(build_rmp(&inst, &[col]), Err(MasterError::UnknownArc(0))));
    }
}
