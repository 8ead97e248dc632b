//! A small version of the near-singular experiment: detector error against
//! oracle error over generated systems.
//!
//! `cargo run --release --example linear_experiment -- 40 100` runs 40
//! systems of size 100.

use perturbe::bench::{run_linear_experiment, LinearConfig};

fn main() -> perturbe::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("a count"));
    let cfg = LinearConfig {
        count: args.next().unwrap_or(12),
        n: args.next().unwrap_or(40),
        ..LinearConfig::default()
    };
    let e = run_linear_experiment(&cfg, 0)?;
    for r in &e.rows {
        println!(
            "{:>3} severity {:<6e} kappa {:<10.3e} detector {:<10.3e} oracle {:.3e}",
            r.index,
            r.severity,
            r.kappa.unwrap_or(f64::NAN),
            r.detector.map_or(f64::NAN, |d| d.err_rel),
            r.oracle_err_rel.unwrap_or(f64::NAN)
        );
    }
    println!("spearman {:?} pearson {:?}", e.spearman, e.pearson);
    println!(
        "seconds: plain {:.3} detector {:.3} oracle {:.3}",
        e.plain_secs,
        e.detector_secs,
        e.oracle_secs.unwrap_or(0.0)
    );
    Ok(())
}
