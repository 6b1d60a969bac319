//! Driver against the brute-force oracle on a handful of generated instances.

use lpstcn::driver::SolveConfig;
use lpstcn::graph::{generate_instance, GeneratorParams};
use lpstcn::io::compare;

fn main() {
    for seed in 0..5 {
        let params = GeneratorParams {
            n1: 6,
            n2: 4,
            area_km: 1000.0,
            ..GeneratorParams::default()
        };
        let inst = generate_instance(seed, &params).unwrap();
        let c = compare(&inst, &SolveConfig::default()).unwrap();
        println!(
            "seed {seed}: driver {:.4} ({:.3} s)  oracle {:.4} ({:.3} s)  {}",
            c.driver.objective,
            c.driver.stats.wall_time,
            c.oracle.objective,
            c.oracle.stats.wall_time,
            if c.agrees() { "agree" } else { "MISMATCH" }
        );
    }
}
