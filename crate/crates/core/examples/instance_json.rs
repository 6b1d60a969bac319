//! Generate an instance, write it in the JSON schema and read it back.

use lpstcn::graph::{check_triangle, generate_instance, GeneratorParams};
use lpstcn::io::{parse_instance, serialize_instance};

fn main() {
    let inst = generate_instance(42, &GeneratorParams::default()).unwrap();
    let text = serialize_instance(&inst);
    let back = parse_instance(&text).unwrap();
    assert_eq!(serialize_instance(&back), text);
    println!(
        "{} first-layer and {} second-layer centers, {} arcs, total demand {:.2} m3, triangle inequality {}",
        back.first_layer().count(),
        back.second_layer().count(),
        back.arcs().len(),
        back.total_demand(),
        check_triangle(&back).holds
    );
    // A broken document reports where it went wrong.
    if let Err(e) = parse_instance(&text.replacen("\"fleet\"", "\"vehicles\"", 1)) {
        println!("{e}");
    }
}
