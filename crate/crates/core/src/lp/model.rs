use std::fmt::Write as _;

use thiserror::Error;

/// Index of a variable inside a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint row inside a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("variable {0} has inconsistent bounds [{1}, {2}]")]
    InconsistentBounds(String, f64, f64),
    #[error("variable {0} has a non-finite objective coefficient")]
    NonFiniteCost(String),
    #[error("row {row} references undeclared variable {var}")]
    UnknownVariable { row: String, var: usize },
    #[error("row {0} has a non-finite coefficient or right-hand side")]
    NonFiniteRow(String),
}

/// A minimization problem over bounded, optionally integer variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integer: bool,
        cost: f64,
    ) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            integer,
            cost,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> RowId {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        RowId(self.constraints.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .map(|(v, x)| v.cost * x)
            .sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::InconsistentBounds(
                    v.name.clone(),
                    v.lower,
                    v.upper,
                ));
            }
            if !v.cost.is_finite() {
                return Err(ModelError::NonFiniteCost(v.name.clone()));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFiniteRow(c.name.clone()));
            }
            for &(var, a) in &c.coeffs {
                if var.0 >= self.variables.len() {
                    return Err(ModelError::UnknownVariable {
                        row: c.name.clone(),
                        var: var.0,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFiniteRow(c.name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of `values`, integrality ignored.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        let rows = self.constraints.iter().map(|c| c.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// Dumps the model in CPLEX LP text format, for cross-checking with
    /// external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        let name = |i: usize| format!("x{i}");
        for (i, v) in self.variables.iter().enumerate() {
            if v.cost != 0.0 {
                let _ = write!(out, " {:+} {}", v.cost, name(i));
            }
        }
        out.push_str("\nSubject To\n");
        for (r, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " r{r}:");
            if c.coeffs.is_empty() {
                out.push_str(" 0 x0");
            }
            for &(v, a) in &c.coeffs {
                let _ = write!(out, " {:+} {}", a, name(v.0));
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", c.rhs);
        }
        out.push_str("Bounds\n");
        for (i, v) in self.variables.iter().enumerate() {
            let lo = if v.lower.is_finite() {
                v.lower.to_string()
            } else {
                "-inf".into()
            };
            let hi = if v.upper.is_finite() {
                v.upper.to_string()
            } else {
                "+inf".into()
            };
            let _ = writeln!(out, " {lo} <= {} <= {hi}", name(i));
        }
        let ints: Vec<String> = (0..self.variables.len())
            .filter(|&i| self.variables[i].integer)
            .map(name)
            .collect();
        if !ints.is_empty() {
            let _ = writeln!(out, "General\n {}", ints.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_crossed_bounds() {
        let mut m = LinearModel::new();
        m.add_var("x", 2.0, 1.0, false, 0.0);
        assert!(matches!(
            m.validate(),
            Err(ModelError::InconsistentBounds(..))
        ));
    }

    #[test]
    fn validate_rejects_unknown_var() {
        let mut m = LinearModel::new();
        m.add_var("x", 0.0, 1.0, false, 0.0);
        m.add_constraint("r", vec![(VarId(3), 1.0)], Sense::Le, 1.0);
        assert!(matches!(
            m.validate(),
            Err(ModelError::UnknownVariable { var: 3, .. })
        ));
    }

    #[test]
    fn lp_dump_mentions_every_row() {
        let mut m = LinearModel::new();
        let x = m.add_var("x", 0.0, f64::INFINITY, true, 1.0);
        m.add_constraint("r", vec![(x, 65.0)], Sense::Ge, 100.0);
        let text = m.to_lp_format();
        assert!(text.contains("r0: +65 x0 >= 100"));
        assert!(text.contains("General\n x0"));
    }
}
