//! Evaluate a user formula with let-bindings, then check it against the
//! oracle. The quadratic root below cancels badly for b >> 4ac.

use perturbe::dsl::{self, bindings};
use perturbe::{ground_truth_error, OracleConfig, PerturbationPolicy};

const NAIVE: &str = "
let d = sqrt(b * b - 4 * a * c)
(d - b) / (2 * a)
";

const STABLE: &str = "
let d = sqrt(b * b - 4 * a * c)
(2 * c) / (neg(b) - d)
";

fn main() -> perturbe::Result<()> {
    let b = bindings([("a", 1.0), ("b", 1e8), ("c", 1.0)]);
    for (name, text) in [("naive", NAIVE), ("stable", STABLE)] {
        let program = dsl::parse(text)?;
        let r = dsl::eval_tracked(&program, &b, &PerturbationPolicy::default(), 1e-3)?;
        let gt = ground_truth_error(&program, &b, &OracleConfig::default(), r.res_original)?;
        println!(
            "{name:<7} root {:<24?} detector err_rel {:<10.3e} oracle err_rel {:<10.3e} significant {}",
            r.res_original, r.err_rel, gt.err_rel, r.significant
        );
    }
    Ok(())
}
