//! Command-line front end: solve, generate, oracle, compare, sweep, bench.
//!
//! Exit codes: 0 ok, 1 usage, 2 infeasible or invalid instance,
//! 3 driver/oracle mismatch, 4 time limit.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use lpstcn::driver::{solve, SolveConfig};
use lpstcn::graph::{generate_instance, random_od_records, GeneratorParams, Instance};
use lpstcn::io::{
    ablation_variants, bench, compare, parse_instance, serialize_instance, solution_json, sweep_theta,
    write_run_records, write_sweep, RunRecord,
};
use lpstcn::lp::{BranchRule, MipLimits};
use lpstcn::oracle::solve_exact;
use lpstcn::solution::{SolveStatus, Solution};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_TIME_LIMIT: u8 = 4;

#[derive(Parser)]
#[command(name = "lpstcn", version, about = "Exact solver for two-layer package shipment on a transit center network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the plan as JSON
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write a one-row CSV run record here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a random Euclidean instance as JSON
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        /// Output file; stdout when omitted
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve by enumerating every path and vehicle type
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = SolveConfig::default().time_limit_s)]
        time_limit_s: f64,
        #[arg(long, value_enum, default_value_t = Branching::Reliability)]
        branching: Branching,
    },
    /// Solve with both the driver and the oracle; exit 3 if they disagree
    Compare {
        instance: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Solve one instance per layer threshold over fixed geometry
    Sweep {
        /// Comma-separated thresholds in [0, 1)
        #[arg(long, value_delimiter = ',', default_values_t = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4])]
        thetas: Vec<f64>,
        /// Number of destinations in the record set
        #[arg(long, default_value_t = 30)]
        destinations: usize,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a batch of generated instances, one CSV row per solve
    Bench {
        #[arg(long, default_value_t = 10)]
        batch: usize,
        /// Run every cut/bound combination instead of the given config only
        #[arg(long)]
        ablation: bool,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Branching {
    MostFractional,
    Pseudocost,
    Reliability,
}

impl From<Branching> for BranchRule {
    fn from(b: Branching) -> Self {
        match b {
            Branching::MostFractional => BranchRule::MostFractional,
            Branching::Pseudocost => BranchRule::Pseudocost,
            Branching::Reliability => BranchRule::Reliability,
        }
    }
}

/// One flag per `SolveConfig` field.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = SolveConfig::default().time_limit_s)]
    time_limit_s: f64,
    #[arg(long, default_value_t = SolveConfig::default().eps)]
    eps: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    use_cuts: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    use_mir_cuts: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    use_bounds: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    use_enumeration: bool,
    /// Overrides the instance's own arc limit
    #[arg(long)]
    arc_limit: Option<usize>,
    #[arg(long, value_enum, default_value_t = Branching::Reliability)]
    branching: Branching,
}

impl ConfigArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            time_limit_s: self.time_limit_s,
            eps: self.eps,
            use_cuts: self.use_cuts,
            use_mir_cuts: self.use_mir_cuts,
            use_bounds: self.use_bounds,
            use_enumeration: self.use_enumeration,
            arc_limit: self.arc_limit,
            branching: self.branching.into(),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = GeneratorParams::default().n1)]
    n1: usize,
    #[arg(long, default_value_t = GeneratorParams::default().n2)]
    n2: usize,
    /// Derive the layers from a share threshold instead of n1/n2
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = GeneratorParams::default().area_km)]
    area_km: f64,
    #[arg(long, default_value_t = GeneratorParams::default().first_layer_radius_km)]
    first_layer_radius_km: f64,
    #[arg(long, default_value_t = GeneratorParams::default().second_layer_fanin)]
    second_layer_fanin: usize,
    #[arg(long, default_value_t = GeneratorParams::default().outsource_rate)]
    outsource_rate: f64,
    #[arg(long, default_value_t = GeneratorParams::default().demand_range.0)]
    demand_min: f64,
    #[arg(long, default_value_t = GeneratorParams::default().demand_range.1)]
    demand_max: f64,
    #[arg(long = "max-arcs", default_value_t = GeneratorParams::default().arc_limit)]
    max_arcs: usize,
}

impl GenArgs {
    fn params(&self) -> GeneratorParams {
        GeneratorParams {
            n1: self.n1,
            n2: self.n2,
            theta: self.theta,
            area_km: self.area_km,
            first_layer_radius_km: self.first_layer_radius_km,
            second_layer_fanin: self.second_layer_fanin,
            outsource_rate: self.outsource_rate,
            demand_range: (self.demand_min, self.demand_max),
            arc_limit: self.max_arcs,
            ..GeneratorParams::default()
        }
    }
}

/// An error message plus the exit code to leave with.
struct Failure(u8, String);

fn usage(msg: impl ToString) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| Failure(EXIT_INFEASIBLE, format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<(), String>) -> Result<(), Failure> {
    match output {
        Some(p) => {
            let mut f = fs::File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            write(&mut f).map_err(usage)
        }
        None => match write(&mut io::stdout().lock()) {
            // A closed pipe (`| head`) is not an error.
            Err(e) if e.contains("Broken pipe") => Ok(()),
            r => r.map_err(usage),
        },
    }
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal | SolveStatus::Heuristic => 0,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::TimeLimit => EXIT_TIME_LIMIT,
    }
}

fn print_solution(inst: &Instance, sol: &Solution) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(&solution_json(inst, sol)).map_err(usage)?;
    emit(None, |w| writeln!(w, "{text}").map_err(|e| e.to_string()))
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Solve { instance, config, csv } => {
            let inst = load(&instance)?;
            let cfg = config.config();
            let sol = solve(&inst, &cfg).map_err(usage)?;
            print_solution(&inst, &sol)?;
            if let Some(path) = csv {
                let name = instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let rec = RunRecord::new(&name, None, "config", &cfg, &sol);
                emit(Some(&path), |w| write_run_records(w, &[rec]).map_err(|e| e.to_string()))?;
            }
            Ok(status_code(sol.status))
        }
        Command::Generate { gen, output } => {
            let inst = generate_instance(gen.seed, &gen.params()).map_err(usage)?;
            let text = serialize_instance(&inst);
            emit(output.as_deref(), |w| w.write_all(text.as_bytes()).map_err(|e| e.to_string()))?;
            Ok(0)
        }
        Command::Oracle { instance, time_limit_s, branching } => {
            let inst = load(&instance)?;
            if !(time_limit_s > 0.0) {
                return Err(usage(format!("time limit must be positive, got {time_limit_s}")));
            }
            let limits = MipLimits {
                branching: branching.into(),
                ..MipLimits::with_time(time_limit_s)
            };
            let sol = solve_exact(&inst, limits).map_err(usage)?;
            print_solution(&inst, &sol)?;
            Ok(status_code(sol.status))
        }
        Command::Compare { instance, config } => {
            let inst = load(&instance)?;
            let c = compare(&inst, &config.config()).map_err(usage)?;
            println!(
                "driver {} {} | oracle {} {} | relative difference {:e}",
                c.driver.status, c.driver.objective, c.oracle.status, c.oracle.objective, c.relative_difference
            );
            Ok(if c.agrees() { 0 } else { EXIT_MISMATCH })
        }
        Command::Sweep { thetas, destinations, gen, config, output } => {
            let params = gen.params();
            let (origin, records) = random_od_records(gen.seed, destinations, &params);
            let rows = sweep_theta(origin, &records, &thetas, &params, &config.config());
            emit(output.as_deref(), |w| write_sweep(w, &rows).map_err(|e| e.to_string()))?;
            Ok(0)
        }
        Command::Bench { batch, ablation, gen, config, output } => {
            let cfg = config.config();
            let variants = if ablation {
                ablation_variants(&cfg)
            } else {
                vec![("config", cfg)]
            };
            let rows = bench(gen.seed, batch, &gen.params(), &variants);
            emit(output.as_deref(), |w| write_run_records(w, &rows).map_err(|e| e.to_string()))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
