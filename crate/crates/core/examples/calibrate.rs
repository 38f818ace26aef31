//! Recomputes the shipped noise parameters in `src/sim/params.rs`.

use qshield::sim::{calibrate_baseline, calibrate_crosstalk, BASELINE_TARGET};

fn main() {
    let p_base = calibrate_baseline(BASELINE_TARGET).expect("baseline target is attainable");
    let (lambda_cx, gamma) = calibrate_crosstalk(p_base).expect("plateau target is attainable");
    println!("pub const SHIPPED_P_BASE: f64 = {p_base:?};");
    println!("pub const SHIPPED_LAMBDA_CX: f64 = {lambda_cx:?};");
    println!("pub const SHIPPED_LAMBDA_XY: f64 = SHIPPED_LAMBDA_CX / 4.0;");
    println!("pub const SHIPPED_GAMMA: f64 = {gamma:?};");
}
