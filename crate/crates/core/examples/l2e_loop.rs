//! Discrete-time loop over truncated signals: a delayed gain of ½ against a
//! static gain of ½, simulated over a bank of inputs and compared with the
//! certified bound at every horizon.

use robustbound::classic::{to_mn, ClassicSpec};
use robustbound::l2e::{random_bank, signal_to_csv};
use robustbound::prelude::*;

fn main() -> Result<()> {
    let g = CausalOperator::delayed_gain(0.5);
    let phi = CausalOperator::Gain { k: 0.5 };
    let mapping = to_mn(&ClassicSpec::small_gain(0.5, 0.5))?;

    let bank = random_bank(50, 64, Field::Real, 11);
    let horizons: Vec<usize> = (1..=64).collect();
    let report = empirical_gain(
        &g,
        &phi,
        &bank,
        &horizons,
        Some((&mapping.m, &mapping.n)),
        &Tolerance::DEFAULT,
    )?;
    println!(
        "max ‖y‖_T/‖u‖_T = {:.4}, certified γ = {:?}, within: {:?}",
        report.max_ratio, report.certified_gamma, report.within_certified
    );

    let (u1, u2) = &bank[0];
    let sol = solve_loop(&g, &phi, u1, u2)?;
    let y1 = Signal::from_vector(&sol.witness.y1);
    print!("first samples of y1:\n{}", signal_to_csv(&y1.resized(4)));
    Ok(())
}
