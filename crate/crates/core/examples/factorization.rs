//! Hermitian 2×2 forms: definiteness, indefinite factorization and the
//! quadratic constraint value of a pair.

use robustbound::prelude::*;

fn main() -> Result<()> {
    let m = HermitianForm2::new(1.0, Complex64::new(0.5, -0.25), -2.0);
    println!("M = {m}");
    println!("eigenvalues {:?}, {:?}", m.eigenvalues(), m.definiteness());

    let f = m.factor_indefinite()?;
    let [[p11, p12], [p21, p22]] = f.p.entries().map(|row| row.map(|z| z + Complex64::new(0.0, 0.0)));
    println!("P = [[{p11:.4}, {p12:.4}], [{p21:.4}, {p22:.4}]]");
    let [[a, b], [_, d]] = f.reconstruct().entries();
    println!("P* J P = [[{a:.4}, {b:.4}], [.., {d:.4}]]");
    println!("κ = ‖P⁻¹ J P‖ = {:.6}", f.kappa());

    let space = Space::euclidean(Field::Complex, 2);
    let xi = PairVector::new(space.real_vector(&[1.0, 0.0])?, space.real_vector(&[0.3, 0.4])?)?;
    println!("qc(M, ξ) = {:.6}", m.qc_eval(&xi)?);

    let semidefinite = HermitianForm2::diag(1.0, 0.0);
    println!(
        "factoring {semidefinite}: {}",
        semidefinite.factor_indefinite().unwrap_err()
    );
    Ok(())
}
