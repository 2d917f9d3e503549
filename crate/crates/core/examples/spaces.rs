//! Semi-inner product spaces: Euclidean, weighted with a singular Gram
//! matrix, and finite-horizon truncations of sequences.

use robustbound::prelude::*;

fn main() -> Result<()> {
    let euclid = Space::euclidean(Field::Complex, 2);
    let x = euclid.vector(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)])?;
    println!("{euclid}: ‖x‖ = {:.4}", x.norm());

    let weighted = Space::weighted_diag(Field::Real, &[1.0, 0.0, 4.0])?;
    let v = weighted.real_vector(&[1.0, 100.0, 0.5])?;
    println!("{weighted}: ‖v‖ = {:.4} (the middle coordinate is invisible)", v.norm());
    println!("  null basis has {} vector(s)", weighted.null_basis().len());

    let truncated = Space::truncated(Field::Real, 8, 3);
    let s = truncated.real_vector(&[1.0, 1.0, 1.0, 9.0, 9.0, 9.0, 9.0, 9.0])?;
    let r = truncated.real_vector(&[1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0])?;
    println!("{truncated}: ‖s‖ = {:.4}, ⟨s, r⟩ = {}", s.norm(), s.sip(&r)?);
    Ok(())
}
