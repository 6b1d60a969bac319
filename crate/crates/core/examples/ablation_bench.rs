//! Cut and bound ablation over a small generated batch, as CSV run records.

use lpstcn::driver::SolveConfig;
use lpstcn::graph::GeneratorParams;
use lpstcn::io::{ablation_variants, bench, write_run_records};

fn main() {
    let params = GeneratorParams {
        n1: 8,
        n2: 10,
        ..GeneratorParams::default()
    };
    let variants = ablation_variants(&SolveConfig::default());
    let rows = bench(0, 4, &params, &variants);
    write_run_records(std::io::stdout().lock(), &rows).unwrap();
}
