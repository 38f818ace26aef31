// Regenerate with `cargo run --release -p qshield-core --example calibrate`.

pub const SHIPPED_P_BASE: f64 = 0.018890800005079367;
pub const SHIPPED_LAMBDA_CX: f64 = 0.03;
pub const SHIPPED_LAMBDA_XY: f64 = SHIPPED_LAMBDA_CX / 4.0;
pub const SHIPPED_GAMMA: f64 = 0.0035;
