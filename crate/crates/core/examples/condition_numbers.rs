//! Atomic condition numbers at a few well-known dangerous inputs.

use perturbe::condnum::DEFAULT_THRESHOLD;
use perturbe::{condition_of, AtomicOp};

fn main() -> perturbe::Result<()> {
    let cases = [
        (AtomicOp::Sub, 0.19999999999999993, Some(0.2)),
        (AtomicOp::Add, 1.0, Some(-0.9999999999)),
        (AtomicOp::Sin, std::f64::consts::PI, None),
        (AtomicOp::Tan, 1.5707963267948966, None),
        (AtomicOp::Log, 1.0000001, None),
        (AtomicOp::Exp, 700.0, None),
        (AtomicOp::Pow, 1.0000001, Some(1e9)),
        (AtomicOp::Mul, 3.0, Some(7.0)),
    ];
    for (op, x, y) in cases {
        let c = condition_of(op, x, y)?;
        let right = c.right.map(|r| format!("{r:e}")).unwrap_or_else(|| "-".into());
        let mark = if c.exceeds(DEFAULT_THRESHOLD) { "dangerous" } else { "" };
        println!("{op:<5} x={x:<22?} y={:<14} left {:<12e} right {right:<12} {mark}", format!("{y:?}"), c.left);
    }
    Ok(())
}
