//! Certify a loop of two gain-½ elements: map the small-gain condition to
//! (M, N), check G on probes, bound the closed-loop gain and confirm it on
//! solved loops.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustbound::certify::{check_condition_i, gain_bound, search_condition_i, verify_item_iii, EpsGrid};
use robustbound::classic::to_mn;
use robustbound::prelude::*;

fn main() -> Result<()> {
    let tol = Tolerance::DEFAULT;
    let space = Space::euclidean(Field::Real, 3);
    let mapping = to_mn(&ClassicSpec::small_gain(0.5, 0.5))?;
    println!("M = {}\nN = {}", mapping.m, mapping.n);

    let g = Relation::scaled_identity(&space, Complex64::new(0.5, 0.0))?;
    let phi = Relation::pointwise(&space, Pointwise::Sector { a: -0.5, b: 0.5 });

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let probes: Vec<_> = (0..50).filter_map(|_| space.random_unit(&mut rng)).collect();
    let check = check_condition_i(&g, &mapping.n, &mapping.m, &probes, &tol)?;
    println!("condition on G: {check:?}");

    let bound = gain_bound(&mapping.m, &mapping.n)?;
    println!(
        "η = {}, r = {}, q = {}, γ = {}",
        bound.eta, bound.r, bound.q, bound.gamma
    );

    let inputs: Vec<_> = (0..20)
        .map(|_| PairVector::new(space.random_vector(&mut rng), space.random_vector(&mut rng)))
        .collect::<Result<_>>()?;
    let report = verify_item_iii(&mapping.m, &g, &phi, &probes, &inputs, &bound, &tol)?;
    println!(
        "worst observed ‖y‖/‖u‖ = {:.4} ≤ γ: {}",
        report.max_ratio, report.all_within
    );

    // without a prescribed N, search the family −M − εP*P
    let found = search_condition_i(&g, &mapping.m, &probes, &EpsGrid::default(), &tol)?;
    println!("searched N: {found:?}");
    Ok(())
}
