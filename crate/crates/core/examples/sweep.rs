//! Sweep ULP-spaced inputs around the cancellation point and test for a
//! trend on each side.

use perturbe::bench::{run_sweep, SweepMetric, SweepSpec};
use perturbe::dsl;
use perturbe::PerturbationPolicy;

fn main() -> perturbe::Result<()> {
    let program = dsl::parse("cos(x) - 0.2")?;
    let spec = SweepSpec {
        points_per_side: 200,
        ..SweepSpec::around(1.3694384060045659)
    };
    let sweep = run_sweep(&program, &spec, &PerturbationPolicy::default(), 1e-3, 0)?;
    let (left, right) = sweep.trends(SweepMetric::ErrRel, 0.05)?;
    println!("left:  S = {:>6}  p = {:.2e}  {:?}", left.s, left.p_value, left.direction);
    println!("right: S = {:>6}  p = {:.2e}  {:?}", right.s, right.p_value, right.direction);
    let near = sweep.left(SweepMetric::ErrRel);
    println!("err_rel at the far left {:e}, next to the center {:e}", near[0], near[near.len() - 1]);
    Ok(())
}
