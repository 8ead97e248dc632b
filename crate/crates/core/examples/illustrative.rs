//! Step through `cos(x) - 0.2 + 10` in both lanes and print what each
//! operation saw.

use perturbe::metrics::DEFAULT_SIGNIFICANCE;
use perturbe::{AtomicOp, ErrorReport, PerturbationPolicy, Shadow};

fn main() -> perturbe::Result<()> {
    let x = 1.3694384060045659;
    let mut sh = Shadow::new(PerturbationPolicy::default())?;

    let c = sh.apply(AtomicOp::Cos, sh.track(x)?, None)?;
    let d = sh.apply(AtomicOp::Sub, c, Some(sh.track(0.2)?))?;
    let s = sh.apply(AtomicOp::Add, d, Some(sh.track(10.0)?))?;

    for (label, pair) in [("cos(x)", c), ("cos(x) - 0.2", d), ("... + 10", s)] {
        let r = ErrorReport::from_lanes(pair, Default::default(), DEFAULT_SIGNIFICANCE);
        println!(
            "{label:<14} original {:<24?} perturbed {:<24?} err_ulp {:e}",
            pair.original, pair.perturbed, r.err_ulp
        );
    }
    for e in &sh.log().events {
        println!("op #{} {} condition {:e} perturbed {:?}", e.op_index, e.op, e.condition.max(), e.perturbed_operand);
    }
    let report = sh.finish(s, DEFAULT_SIGNIFICANCE);
    println!("final: significant = {}, injections = {}", report.significant, report.injections);
    Ok(())
}
