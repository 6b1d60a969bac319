//! Brute-force references for the LP/MIP kernel: basic-solution enumeration
//! for linear programs and exhaustive search for small integer programs.

use lpstcn::lp::{LinearModel, Sense, VarId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random LP with box-bounded variables that is feasible by construction.
pub fn random_lp(rng: &mut ChaCha8Rng, max_vars: usize, max_rows: usize) -> LinearModel {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let mut model = LinearModel::new();
    let mut point = Vec::with_capacity(n);
    for j in 0..n {
        let hi = rng.gen_range(1.0..10.0);
        let cost = rng.gen_range(-5.0..5.0);
        model.add_var(format!("x{j}"), 0.0, hi, false, cost);
        point.push(rng.gen_range(0.0..hi));
    }
    for i in 0..m {
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((VarId(j), rng.gen_range(-4.0..4.0)));
            }
        }
        let act: f64 = coeffs.iter().map(|&(v, a)| a * point[v.0]).sum();
        let (sense, rhs) = match rng.gen_range(0..3) {
            0 => (Sense::Le, act + rng.gen_range(0.0..3.0)),
            1 => (Sense::Ge, act - rng.gen_range(0.0..3.0)),
            _ => (Sense::Eq, act),
        };
        model.add_constraint(format!("r{i}"), coeffs, sense, rhs);
    }
    model
}

/// A random all-integer program with bounds in `[0, 5]`; may be infeasible.
pub fn random_ip(rng: &mut ChaCha8Rng, max_vars: usize, max_rows: usize) -> LinearModel {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let mut model = LinearModel::new();
    let mut point = Vec::new();
    for j in 0..n {
        let hi = rng.gen_range(1..=5) as f64;
        let cost = rng.gen_range(-6.0..6.0);
        model.add_var(format!("y{j}"), 0.0, hi, true, cost);
        point.push(rng.gen_range(0..=hi as i64) as f64);
    }
    let feasible = rng.gen_bool(0.85);
    for i in 0..m {
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                coeffs.push((VarId(j), rng.gen_range(-6.0..6.0)));
            }
        }
        let act: f64 = coeffs.iter().map(|&(v, a)| a * point[v.0]).sum();
        let slack = if feasible { rng.gen_range(0.0..4.0) } else { rng.gen_range(-4.0..4.0) };
        let (sense, rhs) = if rng.gen_bool(0.5) {
            (Sense::Le, act + slack)
        } else {
            (Sense::Ge, act - slack)
        };
        model.add_constraint(format!("r{i}"), coeffs, sense, rhs);
    }
    model
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum objective over all basic feasible solutions of a box-bounded LP,
/// or `None` when no vertex is feasible.
pub fn vertex_enumeration(model: &LinearModel) -> Option<f64> {
    let n = model.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &model.constraints {
        let mut a = vec![0.0; n];
        for &(v, x) in &c.coeffs {
            a[v.0] += x;
        }
        planes.push((a, c.rhs));
    }
    for (j, v) in model.variables.iter().enumerate() {
        for bound in [v.lower, v.upper] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push((a, bound));
        }
    }
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    fn rec(
        start: usize,
        n: usize,
        planes: &[(Vec<f64>, f64)],
        pick: &mut Vec<usize>,
        model: &LinearModel,
        best: &mut Option<f64>,
    ) {
        if pick.len() == n {
            let a: Vec<Vec<f64>> = pick.iter().map(|&i| planes[i].0.clone()).collect();
            let b: Vec<f64> = pick.iter().map(|&i| planes[i].1).collect();
            if let Some(x) = solve_square(a, b) {
                if model.max_violation(&x) <= 1e-7 {
                    let o = model.objective(&x);
                    if best.map_or(true, |b| o < b) {
                        *best = Some(o);
                    }
                }
            }
            return;
        }
        for i in start..planes.len() {
            if planes.len() - i < n - pick.len() {
                break;
            }
            pick.push(i);
            rec(i + 1, n, planes, pick, model, best);
            pick.pop();
        }
    }
    rec(0, n, &planes, &mut pick, model, &mut best);
    best
}

/// Exhaustive search over all integer points in the box, with row-range
/// pruning. Returns the optimal objective or `None` when infeasible.
pub fn exhaustive_ip(model: &LinearModel) -> Option<f64> {
    let n = model.num_vars();
    let lo: Vec<i64> = model.variables.iter().map(|v| v.lower.ceil() as i64).collect();
    let hi: Vec<i64> = model.variables.iter().map(|v| v.upper.floor() as i64).collect();
    let mut dense = vec![vec![0.0; n]; model.num_rows()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.coeffs {
            dense[i][v.0] += a;
        }
    }
    let mut x = vec![0.0; n];
    let mut best: Option<f64> = None;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        j: usize,
        x: &mut Vec<f64>,
        lo: &[i64],
        hi: &[i64],
        dense: &[Vec<f64>],
        model: &LinearModel,
        best: &mut Option<f64>,
    ) {
        let n = x.len();
        // Prune rows that can no longer be satisfied by the free tail.
        for (row, c) in dense.iter().zip(&model.constraints) {
            let mut min_act = 0.0;
            let mut max_act = 0.0;
            for k in 0..n {
                if k < j {
                    min_act += row[k] * x[k];
                    max_act += row[k] * x[k];
                } else {
                    let (a, b) = (row[k] * lo[k] as f64, row[k] * hi[k] as f64);
                    min_act += a.min(b);
                    max_act += a.max(b);
                }
            }
            let dead = match c.sense {
                Sense::Le => min_act > c.rhs + 1e-9,
                Sense::Ge => max_act < c.rhs - 1e-9,
                Sense::Eq => min_act > c.rhs + 1e-9 || max_act < c.rhs - 1e-9,
            };
            if dead {
                return;
            }
        }
        if j == n {
            if model.max_violation(x) <= 1e-9 {
                let o = model.objective(x);
                if best.map_or(true, |b| o < b) {
                    *best = Some(o);
                }
            }
            return;
        }
        for v in lo[j]..=hi[j] {
            x[j] = v as f64;
            rec(j + 1, x, lo, hi, dense, model, best);
        }
        x[j] = 0.0;
    }
    rec(0, &mut x, &lo, &hi, &dense, model, &mut best);
    best
}

/// Checks an optimal LP result for primal feasibility, dual sign
/// conventions, strong duality and complementary slackness.
pub fn check_lp_certificate(model: &LinearModel, r: &lpstcn::lp::LpResult) -> Result<(), String> {
    let x = &r.primal;
    let viol = model.max_violation(x);
    if viol > 1e-7 {
        return Err(format!("primal violation {viol:e}"));
    }
    let mut dual_obj = 0.0;
    for (i, c) in model.constraints.iter().enumerate() {
        let y = r.duals[i];
        match c.sense {
            Sense::Ge if y < -1e-9 => return Err(format!("row {i}: >= dual {y} < 0")),
            Sense::Le if y > 1e-9 => return Err(format!("row {i}: <= dual {y} > 0")),
            _ => {}
        }
        if y.abs() > 1e-7 && (c.activity(x) - c.rhs).abs() > 1e-6 {
            return Err(format!("row {i}: dual {y} on a slack row"));
        }
        dual_obj += y * c.rhs;
    }
    for (j, v) in model.variables.iter().enumerate() {
        let d = r.reduced_costs[j];
        if d > 1e-7 {
            if (x[j] - v.lower).abs() > 1e-6 {
                return Err(format!("var {j}: d={d} but x={} off its lower bound", x[j]));
            }
            dual_obj += d * v.lower;
        } else if d < -1e-7 {
            if (x[j] - v.upper).abs() > 1e-6 {
                return Err(format!("var {j}: d={d} but x={} off its upper bound", x[j]));
            }
            dual_obj += d * v.upper;
        } else if d.abs() * x[j].abs() > 1e-6 {
            return Err(format!("var {j}: d*x = {}", d * x[j]));
        }
    }
    let scale = r.objective.abs().max(1.0);
    if (dual_obj - r.objective).abs() > 1e-6 * scale {
        return Err(format!(
            "duality gap: primal {} dual {}",
            r.objective, dual_obj
        ));
    }
    Ok(())
}
