//! Certification of feedback interconnections through quadratic (conic)
//! constraints on relations over semi-inner product spaces.
//!
//! The loop under study is the positive-feedback interconnection
//!
//! ```text
//! e1 = u1 + y2     y2 = Φ e2
//! e2 = u2 + y1     y1 = G e1
//! ```
//!
//! where `G` and `Φ` are arbitrary relations. A 2×2 Hermitian form `M`
//! describes the admissible `Φ` (through `⟨(ξ, Φξ), M (ξ, Φξ)⟩ ≥ 0`) and a
//! second form `N` with `M + N ≺ 0` describes `G` (through
//! `⟨(Gξ, ξ), N (Gξ, ξ)⟩ ≥ 0`). When both hold the closed loop satisfies
//! `‖y‖ ≤ γ‖u‖` with an explicit `γ` ([`certify::gain_bound`]). When the
//! condition on `G` fails, [`worstcase`] builds signals defeating any
//! claimed gain, and [`interpolate`] turns them into a linear `Φ` that
//! realizes the violation.
//!
//! Module map:
//!
//! - [`space`]: semi-inner product spaces, vectors, and the `V²` algebra.
//! - [`quadform`]: 2×2 Hermitian forms, definiteness, `M = P*JP`.
//! - [`relation`]: relations on `V`, loop witnesses, `R_uy` membership.
//! - [`certify`]: the sufficiency side and the gain bound.
//! - [`worstcase`]: worst-case signal construction.
//! - [`interpolate`]: linear interpolating relations through a pair.
//! - [`classic`]: passivity, small-gain and circle encodings.
//! - [`l2e`]: discrete-time truncated signals and loop simulation.
//! - [`config`]: JSON analysis configs and the command drivers used by the
//!   `robustbound` binary.

pub mod certify;
pub mod classic;
pub mod config;
mod error;
pub mod interpolate;
pub mod l2e;
pub mod quadform;
pub mod relation;
pub mod space;
mod tolerance;
pub mod worstcase;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use tolerance::Tolerance;

pub mod prelude {
    pub use crate::certify::{
        check_condition_i, gain_bound, search_condition_i, verify_item_ii, verify_item_iii, ConditionCheck, GainBound,
        ItemCheck,
    };
    pub use crate::classic::{ClassicKind, ClassicSpec, FeedbackSign};
    pub use crate::interpolate::{break_item_iii, extend, verify_interpolant, Interpolant, InterpolantCase};
    pub use crate::l2e::{empirical_gain, simulate, solve_loop, CausalOperator, Signal};
    pub use crate::quadform::{Definiteness, HermitianForm2, Mat2};
    pub use crate::relation::{assemble_witness, membership_uy, LoopWitness, Pointwise, Relation};
    pub use crate::space::{Field, PairVector, Space, Vector};
    pub use crate::worstcase::{construct_worst_case, defeat_gain, find_violating_xi, DefeatOutcome, WorstCaseResult};
    pub use crate::{Complex64, Error, Result, Tolerance};
}
