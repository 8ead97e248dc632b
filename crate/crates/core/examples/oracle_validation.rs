//! Compare detector verdicts with the extended-precision oracle over the
//! built-in corpus.

use perturbe::bench::run_corpus;
use perturbe::{OracleConfig, PerturbationPolicy};

fn main() -> perturbe::Result<()> {
    let outcomes = run_corpus(&PerturbationPolicy::default(), &OracleConfig::default(), 1e-3, 0)?;
    for o in &outcomes {
        println!(
            "{:<16} {:<9?} detector {:<10.3e} oracle {:<10.3e} {}",
            o.name,
            o.kind,
            o.detector.err_rel,
            o.oracle.err_rel,
            if o.as_expected() { "ok" } else { "MISMATCH" }
        );
    }
    let agree = outcomes.iter().filter(|o| o.agree()).count();
    println!("{agree}/{} verdicts agree", outcomes.len());
    Ok(())
}
