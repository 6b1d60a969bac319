//! Layer-threshold sweep over one set of positioned destinations, as CSV.
//!
//!     cargo run --release --example theta_sweep > sweep.csv

use lpstcn::driver::SolveConfig;
use lpstcn::graph::{random_od_records, GeneratorParams};
use lpstcn::io::{sweep_theta, write_sweep};

fn main() {
    let params = GeneratorParams::default();
    let (origin, records) = random_od_records(3, 16, &params);
    let cfg = SolveConfig {
        time_limit_s: 60.0,
        ..SolveConfig::default()
    };
    let rows = sweep_theta(origin, &records, &[0.9, 0.8, 0.7, 0.6, 0.5, 0.4], &params, &cfg);
    write_sweep(std::io::stdout().lock(), &rows).unwrap();
}
