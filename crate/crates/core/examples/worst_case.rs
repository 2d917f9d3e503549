//! A gain-2 G against the unit-sector constraint: find a probe that
//! violates the ε-family condition and build loop signals whose gain
//! exceeds any requested bound.

use robustbound::certify::EpsGrid;
use robustbound::prelude::*;

fn main() -> Result<()> {
    let tol = Tolerance::DEFAULT;
    let space = Space::euclidean(Field::Real, 2);
    let g = Relation::real_gain(&space, 2.0);
    let m = HermitianForm2::diag(1.0, -1.0);
    let xi = space.real_vector(&[0.6, 0.8])?;

    let r = construct_worst_case(&g, &m, 0.1, &xi, &tol)?;
    println!(
        "ε = 0.1: guaranteed ratio {:.4}, achieved {:.4}",
        r.guaranteed_ratio, r.achieved_ratio
    );
    println!("  ‖u‖ = {:.4}, ‖y‖ = {:.4}", r.witness.u_norm(), r.witness.y_norm());

    for target in [10.0, 100.0, 1000.0] {
        match defeat_gain(&g, &m, target, std::slice::from_ref(&xi), &EpsGrid::default(), &tol)? {
            DefeatOutcome::Success(r) => {
                println!(
                    "target {target}: defeated at ε = {}, ratio {:.2}",
                    r.eps, r.achieved_ratio
                )
            }
            other => println!("target {target}: {other:?}"),
        }
    }

    let contractive = Relation::real_gain(&space, 0.5);
    let out = defeat_gain(&contractive, &m, 10.0, &[xi], &EpsGrid::default(), &tol)?;
    println!("gain 0.5: {out:?}");
    Ok(())
}
