//! Instance files, solution output, CSV run records and the batch
//! harnesses (layer-threshold sweep, ablation bench, driver/oracle compare).

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::driver::{solve, SolveConfig};
use crate::graph::{
    generate_instance, instance_from_records, partition_layers, GeneratorParams, Instance, OdRecord, RawInstance,
    ValidationErrors,
};
use crate::lp::{BranchRule, MipLimits};
use crate::oracle::solve_exact;
use crate::solution::{SolveStatus, Solution};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("invalid instance: {0}")]
    Invalid(#[from] ValidationErrors),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses and validates an instance in the JSON schema.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| IoError::Schema {
        line: e.line(),
        column: e.column(),
        // serde_json appends the position itself; keep only the message.
        message: e.to_string().rsplit_once(" at line ").map_or_else(|| e.to_string(), |(m, _)| m.to_string()),
    })?;
    Ok(crate::graph::validate_instance(&raw)?)
}

/// Pretty-printed JSON with a trailing newline. Parsing the output and
/// serializing again reproduces it byte for byte.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&inst.to_raw()).expect("raw instances always serialize");
    s.push('\n');
    s
}

pub fn branch_rule_name(rule: BranchRule) -> &'static str {
    match rule {
        BranchRule::MostFractional => "most-fractional",
        BranchRule::Pseudocost => "pseudocost",
        BranchRule::Reliability => "reliability",
    }
}

/// Plan, flows and statistics as a JSON document.
pub fn solution_json(inst: &Instance, sol: &Solution) -> Value {
    let vehicles: Vec<Value> = sol
        .vehicle_plan
        .iter()
        .map(|(c, n)| {
            json!({
                "path": c.path.nodes().iter().map(|&v| inst.vertex(v).id.clone()).collect::<Vec<_>>(),
                "vehicle_type": inst.fleet()[c.vehicle].id,
                "count": n,
                "length_km": c.path.length(),
            })
        })
        .collect();
    let flows: Vec<Value> = inst
        .arcs()
        .iter()
        .zip(&sol.flows)
        .filter(|(_, &x)| x > 1e-9)
        .map(|(a, &x)| {
            json!({
                "tail": inst.vertex(a.tail).id,
                "head": inst.vertex(a.head).id,
                "amount": x,
                "outsourced": !a.is_first_layer(),
            })
        })
        .collect();
    json!({
        "status": sol.status.to_string(),
        "objective": sol.objective,
        "cost_split": sol.cost_split,
        "vehicles": vehicles,
        "flows": flows,
        "stats": sol.stats,
    })
}

/// One solve, flattened for CSV. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub seed: Option<u64>,
    pub variant: String,
    pub time_limit_s: f64,
    pub eps: f64,
    pub use_cuts: bool,
    pub use_mir_cuts: bool,
    pub use_bounds: bool,
    pub use_enumeration: bool,
    pub arc_limit: Option<usize>,
    pub branching: String,
    pub status: String,
    pub objective: f64,
    pub lb: f64,
    pub ub: f64,
    pub gap: f64,
    pub time_lower_bound: f64,
    pub time_upper_bound: f64,
    pub time_enumeration: f64,
    pub time_acceleration: f64,
    pub time_final_solve: f64,
    pub wall_time: f64,
    pub cg_iterations: usize,
    pub columns_generated: usize,
    pub columns_enumerated: usize,
    pub final_columns: usize,
    pub cuts_added: usize,
    pub bounds_tightened: usize,
    pub nodes_explored: usize,
}

pub const RUN_RECORD_HEADER: [&str; 29] = [
    "instance",
    "seed",
    "variant",
    "time_limit_s",
    "eps",
    "use_cuts",
    "use_mir_cuts",
    "use_bounds",
    "use_enumeration",
    "arc_limit",
    "branching",
    "status",
    "objective",
    "lb",
    "ub",
    "gap",
    "time_lower_bound",
    "time_upper_bound",
    "time_enumeration",
    "time_acceleration",
    "time_final_solve",
    "wall_time",
    "cg_iterations",
    "columns_generated",
    "columns_enumerated",
    "final_columns",
    "cuts_added",
    "bounds_tightened",
    "nodes_explored",
];

impl RunRecord {
    fn echo(instance: &str, seed: Option<u64>, variant: &str, cfg: &SolveConfig, status: String) -> Self {
        RunRecord {
            instance: instance.to_string(),
            seed,
            variant: variant.to_string(),
            time_limit_s: cfg.time_limit_s,
            eps: cfg.eps,
            use_cuts: cfg.use_cuts,
            use_mir_cuts: cfg.use_mir_cuts,
            use_bounds: cfg.use_bounds,
            use_enumeration: cfg.use_enumeration,
            arc_limit: cfg.arc_limit,
            branching: branch_rule_name(cfg.branching).to_string(),
            status,
            objective: f64::NAN,
            lb: f64::NAN,
            ub: f64::NAN,
            gap: f64::NAN,
            time_lower_bound: 0.0,
            time_upper_bound: 0.0,
            time_enumeration: 0.0,
            time_acceleration: 0.0,
            time_final_solve: 0.0,
            wall_time: 0.0,
            cg_iterations: 0,
            columns_generated: 0,
            columns_enumerated: 0,
            final_columns: 0,
            cuts_added: 0,
            bounds_tightened: 0,
            nodes_explored: 0,
        }
    }

    pub fn new(instance: &str, seed: Option<u64>, variant: &str, cfg: &SolveConfig, sol: &Solution) -> Self {
        let st = &sol.stats;
        RunRecord {
            objective: sol.objective,
            lb: st.lb,
            ub: st.ub,
            gap: st.gap,
            time_lower_bound: st.step_times.lower_bound,
            time_upper_bound: st.step_times.upper_bound,
            time_enumeration: st.step_times.enumeration,
            time_acceleration: st.step_times.acceleration,
            time_final_solve: st.step_times.final_solve,
            wall_time: st.wall_time,
            cg_iterations: st.cg_iterations,
            columns_generated: st.columns_generated,
            columns_enumerated: st.columns_enumerated,
            final_columns: st.final_columns,
            cuts_added: st.cuts_added,
            bounds_tightened: st.bounds_tightened,
            nodes_explored: st.nodes_explored,
            ..Self::echo(instance, seed, variant, cfg, sol.status.to_string())
        }
    }

    /// A row for a solve that raised an error; numeric results are NaN.
    pub fn failed(instance: &str, seed: Option<u64>, variant: &str, cfg: &SolveConfig, err: &str) -> Self {
        Self::echo(instance, seed, variant, cfg, format!("Error: {err}"))
    }
}

/// Header first, then one row per record in the given order.
pub fn write_run_records<W: Write>(out: W, records: &[RunRecord]) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RUN_RECORD_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub n1: usize,
    pub n2: usize,
    pub status: String,
    pub objective: f64,
    pub first_layer_transport: f64,
    pub outsourcing: f64,
    pub wall_time: f64,
}

pub const SWEEP_HEADER: [&str; 8] = [
    "theta",
    "n1",
    "n2",
    "status",
    "objective",
    "first_layer_transport",
    "outsourcing",
    "wall_time",
];

/// Instance for one layer threshold over fixed geometry.
pub fn threshold_instance(
    origin: (f64, f64),
    records: &[OdRecord],
    theta: f64,
    params: &GeneratorParams,
) -> Result<Instance, String> {
    let part = partition_layers(records, theta).map_err(|e| e.to_string())?;
    instance_from_records(origin, records, &part, params).map_err(|e| e.to_string())
}

/// Solves one instance per threshold. A failing threshold yields a row with
/// an error status and NaN costs; the sweep carries on.
pub fn sweep_theta(
    origin: (f64, f64),
    records: &[OdRecord],
    thetas: &[f64],
    params: &GeneratorParams,
    cfg: &SolveConfig,
) -> Vec<SweepRow> {
    thetas
        .par_iter()
        .map(|&theta| {
            let failed = |status: String, n1: usize, n2: usize| SweepRow {
                theta,
                n1,
                n2,
                status,
                objective: f64::NAN,
                first_layer_transport: f64::NAN,
                outsourcing: f64::NAN,
                wall_time: 0.0,
            };
            if !(0.0..1.0).contains(&theta) {
                return failed(format!("Error: theta {theta} outside [0, 1)"), 0, 0);
            }
            let inst = match threshold_instance(origin, records, theta, params) {
                Ok(i) => i,
                Err(e) => return failed(format!("Error: {e}"), 0, 0),
            };
            let (n1, n2) = (inst.first_layer().count(), inst.second_layer().count());
            match solve(&inst, cfg) {
                Ok(sol) => SweepRow {
                    theta,
                    n1,
                    n2,
                    status: sol.status.to_string(),
                    objective: sol.objective,
                    first_layer_transport: sol.cost_split.first_layer_transport,
                    outsourcing: sol.cost_split.outsourcing,
                    wall_time: sol.stats.wall_time,
                },
                Err(e) => failed(format!("Error: {e}"), n1, n2),
            }
        })
        .collect()
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// The cut and bound toggles compared by the ablation bench.
pub fn ablation_variants(base: &SolveConfig) -> Vec<(&'static str, SolveConfig)> {
    let with = |cuts: bool, bounds: bool| SolveConfig {
        use_cuts: cuts,
        use_mir_cuts: cuts,
        use_bounds: bounds,
        ..base.clone()
    };
    vec![
        ("full", with(true, true)),
        ("no-cuts", with(false, true)),
        ("no-bounds", with(true, false)),
        ("plain", with(false, false)),
    ]
}

pub fn generated_instance_name(seed: u64, params: &GeneratorParams) -> String {
    match params.theta {
        Some(t) => format!("gen-s{seed}-n{}-t{t}", params.n1 + params.n2),
        None => format!("gen-s{seed}-v{}x{}", params.n1, params.n2),
    }
}

/// Generates `batch` instances from consecutive seeds and solves each under
/// every variant. Rows come out grouped by seed, then variant.
pub fn bench(
    first_seed: u64,
    batch: usize,
    params: &GeneratorParams,
    variants: &[(&str, SolveConfig)],
) -> Vec<RunRecord> {
    let seeds: Vec<u64> = (first_seed..first_seed + batch as u64).collect();
    seeds
        .par_iter()
        .flat_map_iter(|&seed| {
            let name = generated_instance_name(seed, params);
            let inst = generate_instance(seed, params);
            variants
                .iter()
                .map(|(variant, cfg)| match &inst {
                    Err(e) => RunRecord::failed(&name, Some(seed), variant, cfg, &e.to_string()),
                    Ok(inst) => match solve(inst, cfg) {
                        Ok(sol) => RunRecord::new(&name, Some(seed), variant, cfg, &sol),
                        Err(e) => RunRecord::failed(&name, Some(seed), variant, cfg, &e.to_string()),
                    },
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Driver and oracle results side by side.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub driver: Solution,
    pub oracle: Solution,
    /// `|driver - oracle| / max(1, |oracle|)`; zero when both are infeasible.
    pub relative_difference: f64,
}

pub const COMPARE_TOL: f64 = 1e-6;

impl Comparison {
    /// Both sides proved optimality (or infeasibility), so the objectives
    /// are comparable.
    pub fn conclusive(&self) -> bool {
        let done = |s: SolveStatus| matches!(s, SolveStatus::Optimal | SolveStatus::Infeasible);
        done(self.driver.status) && done(self.oracle.status)
    }

    pub fn agrees(&self) -> bool {
        self.relative_difference <= COMPARE_TOL
    }
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("driver: {0}")]
    Driver(#[from] crate::driver::SolveError),
    #[error("oracle: {0}")]
    Oracle(#[from] crate::oracle::OracleError),
}

pub fn relative_difference(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() && a.signum() == b.signum() {
        0.0
    } else {
        (a - b).abs() / b.abs().max(1.0)
    }
}

/// Solves `inst` with the driver and with the full-enumeration oracle; the
/// oracle gets the same time limit and branching rule.
pub fn compare(inst: &Instance, cfg: &SolveConfig) -> Result<Comparison, CompareError> {
    let driver = solve(inst, cfg)?;
    let limits = MipLimits {
        branching: cfg.branching,
        ..MipLimits::with_time(cfg.time_limit_s)
    };
    let oracle_inst = match cfg.arc_limit {
        Some(l) if l > 0 => inst.with_arc_limit(l),
        _ => inst.clone(),
    };
    let oracle = solve_exact(&oracle_inst, limits)?;
    let relative_difference = relative_difference(driver.objective, oracle.objective);
    Ok(Comparison {
        driver,
        oracle,
        relative_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::t1;

    #[test]
    fn t1_round_trip_is_byte_identical() {
        let text = serialize_instance(&t1());
        let again = serialize_instance(&parse_instance(&text).unwrap());
        assert_eq!(text, again);
    }

    #[test]
    fn missing_fleet_is_named() {
        let mut v: Value = serde_json::from_str(&serialize_instance(&t1())).unwrap();
        v.as_object_mut().unwrap().remove("fleet");
        let err = parse_instance(&v.to_string()).unwrap_err();
        assert!(matches!(err, IoError::Schema { .. }));
        assert!(err.to_string().contains("fleet"), "{err}");
    }

    #[test]
    fn cross_layer_arc_needs_rate() {
        let text = serialize_instance(&t1());
        let mut v: Value = serde_json::from_str(&text).unwrap();
        for arc in v["arcs"].as_array_mut().unwrap() {
            if arc["head"] == "z" {
                arc.as_object_mut().unwrap().remove("outsource_rate");
            }
        }
        let err = parse_instance(&v.to_string()).unwrap_err();
        assert!(matches!(err, IoError::Invalid(_)), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_instance("{\n  \"origin\": \"o\",\n  oops\n}") {
            Err(IoError::Schema { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_sweep_writes_header_only() {
        let mut buf = Vec::new();
        write_sweep(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SWEEP_HEADER.join(",") + "\n");
    }

    #[test]
    fn run_record_columns_follow_header() {
        let cfg = SolveConfig::default();
        let sol = solve(&t1(), &cfg).unwrap();
        let rec = RunRecord::new("t1", None, "full", &cfg, &sol);
        let mut buf = Vec::new();
        write_run_records(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RUN_RECORD_HEADER.join(","));
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), RUN_RECORD_HEADER.len());
        assert_eq!(cells[1], "");
        assert_eq!(cells[11], "Optimal");
        assert!((cells[12].parse::<f64>().unwrap() - 940.0).abs() < 1e-6);
    }

    #[test]
    fn t1_compare_agrees() {
        let c = compare(&t1(), &SolveConfig::default()).unwrap();
        assert!(c.conclusive() && c.agrees());
    }
}
