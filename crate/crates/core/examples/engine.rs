//! Simulates the bundled engine controller on its scripted scenario.

use automode::frontend::parse_str;
use automode::sim::{simulate, SimOptions};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/");
    let src = std::fs::read_to_string(format!("{dir}engine.amd")).unwrap();
    let p = parse_str(&src).unwrap_or_else(|d| panic!("{}", automode::diag::render(&d)));
    let inputs = std::fs::read_to_string(format!("{dir}engine_inputs.csv")).unwrap();
    let trace = simulate(&p, None, &inputs, 50, SimOptions::default()).unwrap();
    print!("{}", trace.to_csv());
}
