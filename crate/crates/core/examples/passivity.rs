//! Classical passivity as a special case: build (M, N), fit the strictness
//! of a stable filter and recover the closed-loop bound.

use robustbound::classic::{recover_theorem4, to_mn, ClassicSpec};
use robustbound::l2e::random_bank;
use robustbound::prelude::*;

fn main() -> Result<()> {
    let spec = ClassicSpec::passivity(0.1, 1.0, 0.5, 0.0);
    let mapping = to_mn(&spec)?;
    println!(
        "N = {}\nM = {}\nM + N is {:?}",
        mapping.n, mapping.m, mapping.definiteness
    );
    println!("γ = {:.6}", mapping.gain_bound()?.gamma);

    let boundary = to_mn(&ClassicSpec::passivity(0.0, 1.0, 0.5, 0.0))?;
    println!("ε₁ = δ₂ = 0: admissible = {}", boundary.is_admissible());

    let g = CausalOperator::scalar_state_space(0.5, 1.0, 1.0, 1.0);
    let phi = CausalOperator::StaticNl {
        map: Pointwise::Saturation { level: 1.0 },
    };
    let probes: Vec<Signal> = random_bank(20, 32, Field::Real, 3)
        .into_iter()
        .map(|(a, _)| a)
        .collect();
    let fitted = ClassicSpec::passivity(0.0, 0.2, 0.0, 1.0);
    let report = recover_theorem4(&fitted, &g, &phi, &probes, &[8, 16, 32], &Tolerance::DEFAULT)?;
    println!(
        "violations: {}, bound: {:?}",
        report.violations.len(),
        report.bound.map(|b| b.gamma)
    );
    Ok(())
}
