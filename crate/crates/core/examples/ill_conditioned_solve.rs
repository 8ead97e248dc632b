//! A 2x2 system whose solution jumps when the right-hand side moves by 1e-4,
//! solved in plain binary64 and in both detector lanes.

use perturbe::bench::VectorError;
use perturbe::linalg::{self, Matrix, Norm};
use perturbe::{Binary64, PerturbationPolicy, Shadow};

fn main() -> perturbe::Result<()> {
    let a = Matrix::from_rows(vec![vec![1.0001, 1.0], vec![1.0, 1.0]])?;
    println!("kappa_1(A) = {:e}", linalg::matrix_condition_number(&a, Norm::One)?);
    for b in [[2.0001, 2.0], [2.0, 2.0]] {
        let x = linalg::solve(&mut Binary64::new(), &a, &b)?;
        println!("b = {b:?} -> x = {x:?}");
    }

    // A nearly singular 6x6 system through the detector.
    let a = linalg::gen_near_singular(6, 7, 1e-3)?;
    let b = a.mul_vec(&[1.0; 6]);
    let mut sh = Shadow::new(PerturbationPolicy::default())?;
    let x = linalg::solve(&mut sh, &a, &b)?;
    let (orig, pert): (Vec<f64>, Vec<f64>) = x.iter().map(|p| (p.original, p.perturbed)).unzip();
    let e = VectorError::between(&orig, &pert);
    println!(
        "near-singular 6x6: kappa {:e}, injections {}, lane err_rel {:e}",
        linalg::matrix_condition_number(&a, Norm::One)?,
        sh.log().injections,
        e.err_rel
    );
    Ok(())
}
