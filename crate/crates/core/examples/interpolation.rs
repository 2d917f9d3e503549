//! Extend a single pair (e, y) satisfying the M-constraint to a linear map
//! Φ that satisfies it everywhere, then close a defeating loop with it.

use robustbound::certify::EpsGrid;
use robustbound::interpolate::{break_item_iii, extend, verify_interpolant, BreakMode};
use robustbound::prelude::*;

fn main() -> Result<()> {
    let tol = Tolerance::DEFAULT;
    let space = Space::euclidean(Field::Real, 3);
    let m = HermitianForm2::diag(1.0, -1.0);

    let e = space.real_vector(&[1.0, 0.0, 0.0])?;
    let y = space.real_vector(&[0.0, 0.6, 0.0])?;
    let interp = extend(&space, &m, &e, &y, &tol)?;
    println!("case: {}", interp.case.tag());
    if let Some(a) = interp.relation.matrix() {
        println!("Φ = {}", a.map(|z| z.re));
    }
    let samples: Vec<_> = (0..3).map(|j| space.basis(j)).collect();
    println!("{:?}", verify_interpolant(&interp, &m, &samples, &tol)?);

    let g = Relation::real_gain(&space, 2.0);
    let xi = space.real_vector(&[0.6, 0.8, 0.0])?;
    if let DefeatOutcome::Success(r) = defeat_gain(&g, &m, 50.0, &[xi], &EpsGrid::default(), &tol)? {
        let broken = break_item_iii(&g, &m, &r.witness, BreakMode::Linear, &tol)?;
        println!(
            "closed loop with linear Φ: ratio {:.3}, flags {:?}",
            broken.witness.gain_ratio(),
            broken.witness.flags
        );
    }
    Ok(())
}
