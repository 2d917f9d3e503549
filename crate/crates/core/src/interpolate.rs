//! Linear interpolation through a pair: given `(e, y)` with
//! `⟨(e, y), M (e, y)⟩ ≥ 0`, build a linear relation `Φ ∋ (e, y)` satisfying
//! the `M`-constraint on its whole domain.
//!
//! In the general case `x` splits into `x_ey ∈ span{e, y}` and a remainder
//! `x_⊥`. On the span, `Φ` is `‖y‖/‖e‖` times a unitary taking `ê ↦ ŷ` and
//! `ê⊥ ↦ e^{−2iφ} ŷ⊥`, where `M₁₂ = |M₁₂| e^{iφ}`. On the remainder it is
//! multiplication by a scalar `η_dir` with `[1; η_dir]* M [1; η_dir] ≥ 0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::quadform::{Direction, HermitianForm2};
use crate::relation::{LoopFlags, LoopWitness, Relation};
use crate::space::{Field, PairVector, Space, Vector};
use crate::{Error, Result, Tolerance};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Below this value of `‖ŷ − ρê‖` the anchor is treated as aligned.
pub const ALIGNED_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum InterpolantCase {
    /// `‖e‖ = ‖y‖ = 0`: `Φ = {(z, x) : ‖z‖ = ‖x‖ = 0}`.
    DegenerateNullNull,
    /// `‖e‖ = 0 < ‖y‖`: `Φ = {(z, x) : ‖z‖ = 0}`.
    VerticalLine,
    /// `‖y‖ = 0 < ‖e‖`: `Φ = 0`.
    ZeroMap,
    /// `y` parallel to `e`: `Φ = scale · I` with `scale = ρ‖y‖/‖e‖`.
    AlignedScaling { rho: Complex64, scale: Complex64 },
    GeneralRotation {
        rho: Complex64,
        phi: f64,
        eta_dir: Complex64,
        /// `(1 − |ρ|²)⁻¹`.
        conditioning: f64,
    },
}

impl InterpolantCase {
    pub fn tag(&self) -> &'static str {
        match self {
            InterpolantCase::DegenerateNullNull => "degenerate_null_null",
            InterpolantCase::VerticalLine => "vertical_line",
            InterpolantCase::ZeroMap => "zero_map",
            InterpolantCase::AlignedScaling { .. } => "aligned_scaling",
            InterpolantCase::GeneralRotation { .. } => "general_rotation",
        }
    }
}

/// Orthonormal frame of the general case.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub e_hat: Vector,
    pub y_hat: Vector,
    pub e_perp: Vector,
    pub y_perp: Vector,
    /// `‖y‖/‖e‖`.
    pub gain: f64,
    /// `e^{−2iφ}`.
    pub phase: Complex64,
    pub eta_dir: Complex64,
}

impl Frame {
    /// `(x_ey, x_⊥)` with `x_ey` the projection of `x` onto `span{ê, ŷ}`.
    pub fn split(&self, x: &Vector) -> Result<(Vector, Vector)> {
        let space = x.space();
        let a = self.e_hat.sip(x)?;
        let b = self.e_perp.sip(x)?;
        let x_ey = Vector::combination(space, &[(a, &self.e_hat), (b, &self.e_perp)]);
        let x_perp = x - &x_ey;
        Ok((x_ey, x_perp))
    }

    /// `Φx` from the frame formula.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let a = self.e_hat.sip(x)?;
        let b = self.e_perp.sip(x)?;
        let (_, x_perp) = self.split(x)?;
        let g = Complex64::from(self.gain);
        Ok(Vector::combination(
            x.space(),
            &[
                (g * a, &self.y_hat),
                (g * self.phase * b, &self.y_perp),
                (self.eta_dir, &x_perp),
            ],
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    pub case: InterpolantCase,
    pub relation: Relation,
    pub anchor: (Vector, Vector),
    pub frame: Option<Frame>,
}

fn normalized(v: &Vector) -> Vector {
    v.scale_real(1.0 / v.norm())
}

/// Real part of `M` for real spaces, where only `Re M₁₂` affects the form.
fn effective_form(space: &Space, m: &HermitianForm2) -> HermitianForm2 {
    match space.field() {
        Field::Real => HermitianForm2::real(m.m11, m.m12.re, m.m22),
        Field::Complex => *m,
    }
}

/// Linear relation through `(e, y)` satisfying the `M`-constraint.
pub fn extend(space: &Space, m: &HermitianForm2, e: &Vector, y: &Vector, tol: &Tolerance) -> Result<Interpolant> {
    space.sip(e, y)?;
    let m = effective_form(space, m);
    let anchor_pair = PairVector::new(e.clone(), y.clone())?;
    let anchor_value = m.qc_eval(&anchor_pair)?;
    if !tol.nonneg(anchor_value, m.qc_scale(&anchor_pair)) {
        return Err(Error::AnchorViolatesM(anchor_value));
    }
    let anchor = (e.clone(), y.clone());
    let (ne, ny) = (e.norm(), y.norm());
    let entry_slack = tol.slack(m.frobenius());
    let simple = |case, relation| Interpolant {
        case,
        relation,
        anchor: anchor.clone(),
        frame: None,
    };

    if tol.is_null(ne) {
        if tol.is_null(ny) {
            return Ok(simple(
                InterpolantCase::DegenerateNullNull,
                Relation::NullGraph { space: space.clone() },
            ));
        }
        if m.m22 < -entry_slack {
            return Err(Error::CaseAssertionFailed(format!(
                "null e with nonzero y requires M22 >= 0, got {}",
                m.m22
            )));
        }
        return Ok(simple(
            InterpolantCase::VerticalLine,
            Relation::VerticalLine { space: space.clone() },
        ));
    }
    if tol.is_null(ny) {
        if m.m11 < -entry_slack {
            return Err(Error::CaseAssertionFailed(format!(
                "null y with nonzero e requires M11 >= 0, got {}",
                m.m11
            )));
        }
        return Ok(simple(InterpolantCase::ZeroMap, Relation::real_gain(space, 0.0)));
    }

    let e_hat = normalized(e);
    let y_hat = normalized(y);
    let rho = e_hat.sip(&y_hat)?;
    let residual = &y_hat - &(rho * &e_hat);
    if residual.norm() <= ALIGNED_THRESHOLD {
        let scale = rho * (ny / ne);
        return Ok(simple(
            InterpolantCase::AlignedScaling { rho, scale },
            Relation::scaled_identity(space, scale)?,
        ));
    }

    let eta_dir = match m.nonneg_direction() {
        Ok(Direction::Finite(eta)) => eta,
        Ok(Direction::Vertical) | Err(Error::NegDefInput) => {
            return Err(Error::CaseAssertionFailed(
                "M admits no finite direction with [1; eta]* M [1; eta] >= 0".into(),
            ))
        }
        Err(other) => return Err(other),
    };
    let (phi, phase) = if m.m12.norm() > 0.0 {
        (m.m12.arg(), m.m12.conj() / m.m12)
    } else {
        (0.0, ONE)
    };

    let e_perp = {
        let v = &residual - &(e_hat.sip(&residual)? * &e_hat);
        normalized(&v)
    };
    let y_perp = {
        let w = &(rho.conj() * &y_hat) - &e_hat;
        let w = &w - &(y_hat.sip(&w)? * &y_hat);
        normalized(&w)
    };
    let frame = Frame {
        e_hat,
        y_hat,
        e_perp,
        y_perp,
        gain: ny / ne,
        phase,
        eta_dir,
    };
    let n = space.dim();
    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let col = frame.apply(&space.basis(j))?;
        for (i, c) in col.coords().iter().enumerate() {
            matrix[(i, j)] = *c;
        }
    }
    if space.field() == Field::Real {
        matrix.iter_mut().for_each(|c| c.im = 0.0);
    }
    Ok(Interpolant {
        case: InterpolantCase::GeneralRotation {
            rho,
            phi,
            eta_dir,
            conditioning: 1.0 / (1.0 - rho.norm_sqr()),
        },
        relation: Relation::linear_map(space, matrix)?,
        anchor,
        frame: Some(frame),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolantReport {
    pub samples_checked: usize,
    pub out_of_domain: usize,
    /// Minimum of `⟨(x, Φx), M (x, Φx)⟩` over samples and images, `+∞` if
    /// nothing was evaluated.
    pub min_qc: f64,
    pub anchor_contained: bool,
    /// `‖Φe − y‖` for function backings, `0` when the anchor is contained in
    /// a multi-valued relation.
    pub anchor_residual: f64,
    pub linear: bool,
    pub qc_ok: bool,
}

/// Evaluates the constraint on every sample image and on the anchor, and
/// spot-checks linear closure.
pub fn verify_interpolant(
    interp: &Interpolant,
    m: &HermitianForm2,
    samples: &[Vector],
    tol: &Tolerance,
) -> Result<InterpolantReport> {
    let relation = &interp.relation;
    let (e, y) = &interp.anchor;
    let mut min_qc = f64::INFINITY;
    let mut out_of_domain = 0;
    let mut qc_ok = true;
    for x in samples.iter().chain(std::iter::once(e)) {
        let images = relation.apply(x)?;
        if images.is_empty() {
            out_of_domain += 1;
        }
        for image in images {
            let pair = PairVector::new(x.clone(), image)?;
            let v = m.qc_eval(&pair)?;
            min_qc = min_qc.min(v);
            qc_ok &= tol.nonneg(v, m.qc_scale(&pair));
        }
    }
    let anchor_contained = relation.contains(e, y, tol)?;
    let anchor_residual = if relation.is_function() {
        relation.unique_image(e)?.distance(y)?
    } else if anchor_contained {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(InterpolantReport {
        samples_checked: samples.len(),
        out_of_domain,
        min_qc,
        anchor_contained,
        anchor_residual,
        linear: relation.is_linear_closed(20, 0),
        qc_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakMode {
    /// Interpolate by a linear relation.
    Linear,
    /// Use the singleton `{(e₂, y₂)}`.
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrokenLoop {
    pub phi: Relation,
    pub witness: LoopWitness,
    pub interpolant: Option<Interpolant>,
}

/// Closes a witness of (a), (c), (d) with a `Φ` through `(e₂, y₂)`, so
/// that `(u, y)` becomes a genuine closed-loop pair with the same gain.
pub fn break_item_iii(
    g: &Relation,
    m: &HermitianForm2,
    witness: &LoopWitness,
    mode: BreakMode,
    tol: &Tolerance,
) -> Result<BrokenLoop> {
    let flags = witness.evaluate_flags(Some(g), None, tol)?;
    if !flags.covers(&LoopFlags::WITHOUT_PHI) {
        return Err(Error::PreconditionNotMet(format!(
            "witness must satisfy (a), (c), (d); flags {flags:?}"
        )));
    }
    let (e2, y2) = (&witness.e2, &witness.y2);
    let (phi, interpolant) = match mode {
        BreakMode::Linear => {
            let interp = extend(witness.space(), m, e2, y2, tol)?;
            (interp.relation.clone(), Some(interp))
        }
        BreakMode::Unconstrained => {
            let pair = witness.phi_pair();
            let v = m.qc_eval(&pair)?;
            if !tol.nonneg(v, m.qc_scale(&pair)) {
                return Err(Error::AnchorViolatesM(v));
            }
            (Relation::singleton(e2.clone(), y2.clone())?, None)
        }
    };
    let mut closed = witness.clone();
    closed.flags = closed.evaluate_flags(Some(g), Some(&phi), tol)?;
    if closed.flags != LoopFlags::ALL {
        return Err(Error::ConstructionCheckFailed(format!(
            "closed witness flags {:?}",
            closed.flags
        )));
    }
    Ok(BrokenLoop {
        phi,
        witness: closed,
        interpolant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worstcase::construct_worst_case;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: Tolerance = Tolerance::DEFAULT;

    #[test]
    fn identity_for_equal_pair() {
        let s = Space::euclidean(Field::Complex, 3);
        let e = s
            .vector(vec![ONE, Complex64::new(0.0, 2.0), Complex64::from(-1.0)])
            .unwrap();
        let m = HermitianForm2::real(0.0, 0.5, 0.0);
        let i = extend(&s, &m, &e, &e, &TOL).unwrap();
        match i.case {
            InterpolantCase::AlignedScaling { scale, .. } => assert!((scale - ONE).norm() < 1e-12),
            other => panic!("{other:?}"),
        }
        let rep = verify_interpolant(&i, &m, &[], &TOL).unwrap();
        assert!(rep.anchor_residual <= 1e-10);
    }

    #[test]
    fn rotation_in_the_plane() {
        let s = Space::euclidean(Field::Real, 2);
        let e = s.real_vector(&[1.0, 0.0]).unwrap();
        let y = s.real_vector(&[0.0, 1.0]).unwrap();
        let m = HermitianForm2::diag(1.0, -1.0);
        let i = extend(&s, &m, &e, &y, &TOL).unwrap();
        match i.case {
            InterpolantCase::GeneralRotation { rho, phi, eta_dir, .. } => {
                assert_eq!(rho, Complex64::from(0.0));
                assert_eq!(phi, 0.0);
                assert_eq!(eta_dir, Complex64::from(0.0));
            }
            other => panic!("{other:?}"),
        }
        let a = i.relation.matrix().unwrap();
        let expected = [[0.0, -1.0], [1.0, 0.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(a[(r, c)].re, expected[r][c], epsilon = 1e-15);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<Vector> = (0..1000).map(|_| s.random_vector(&mut rng)).collect();
        let rep = verify_interpolant(&i, &m, &samples, &TOL).unwrap();
        assert!(rep.min_qc >= -1e-10 && rep.qc_ok && rep.linear);
        assert!(rep.anchor_residual <= 1e-12);
    }

    #[test]
    fn degenerate_cases() {
        let s = Space::weighted_diag(Field::Real, &[1.0, 0.0]).unwrap();
        let e = s.real_vector(&[0.0, 3.0]).unwrap();
        let y = s.real_vector(&[1.0, 0.0]).unwrap();
        let i = extend(&s, &HermitianForm2::diag(0.0, 1.0), &e, &y, &TOL).unwrap();
        assert_eq!(i.case, InterpolantCase::VerticalLine);
        assert!(i.relation.contains(&e, &y, &TOL).unwrap());

        let null_y = s.real_vector(&[0.0, 5.0]).unwrap();
        let i = extend(&s, &HermitianForm2::diag(-1.0, -1.0), &e, &null_y, &TOL).unwrap();
        assert_eq!(i.case, InterpolantCase::DegenerateNullNull);

        let x = s.real_vector(&[2.0, 0.0]).unwrap();
        let m = HermitianForm2::diag(0.3, -1.0);
        let i = extend(&s, &m, &x, &null_y, &TOL).unwrap();
        assert_eq!(i.case, InterpolantCase::ZeroMap);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let v = s.random_vector(&mut rng);
            let p = PairVector::new(v.clone(), i.relation.unique_image(&v).unwrap()).unwrap();
            assert_abs_diff_eq!(m.qc_eval(&p).unwrap(), 0.3 * v.norm().powi(2), epsilon = 1e-12);
        }

        // M₂₂ < 0 contradicts a null e with nonzero y
        assert!(matches!(
            extend(&s, &HermitianForm2::diag(1.0, -1.0), &e, &y, &TOL),
            Err(Error::AnchorViolatesM(_))
        ));
    }

    #[test]
    fn anchor_violating_m_is_rejected() {
        let s = Space::euclidean(Field::Real, 2);
        let e = s.real_vector(&[1.0, 0.0]).unwrap();
        let y = s.real_vector(&[0.0, 2.0]).unwrap();
        assert!(matches!(
            extend(&s, &HermitianForm2::diag(1.0, -1.0), &e, &y, &TOL),
            Err(Error::AnchorViolatesM(v)) if (v + 3.0).abs() < 1e-12
        ));
    }

    #[test]
    fn proof_identities_on_random_samples() {
        let s = Space::euclidean(Field::Complex, 4);
        let m = HermitianForm2::new(0.4, Complex64::new(0.3, -0.7), -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut done = 0;
        while done < 20 {
            let e = s.random_vector(&mut rng);
            let y = s.random_vector(&mut rng).scale_real(0.3);
            let Ok(i) = extend(&s, &m, &e, &y, &TOL) else { continue };
            let Some(frame) = &i.frame else { continue };
            done += 1;
            let anchor_qc = m.qc_eval(&PairVector::new(e.clone(), y.clone()).unwrap()).unwrap();
            for _ in 0..10 {
                let x = s.random_vector(&mut rng);
                let (x_ey, x_perp) = frame.split(&x).unwrap();
                assert_abs_diff_eq!(
                    x.norm().powi(2),
                    x_ey.norm().powi(2) + x_perp.norm().powi(2),
                    epsilon = 1e-10
                );
                assert!(frame.e_hat.sip(&x_perp).unwrap().norm() < 1e-12);
                assert!(frame.y_hat.sip(&x_perp).unwrap().norm() < 1e-12);
                let img = i.relation.unique_image(&x_ey).unwrap();
                assert_abs_diff_eq!(img.norm(), frame.gain * x_ey.norm(), epsilon = 1e-10);
                let first = m.qc_eval(&PairVector::new(x_ey.clone(), img).unwrap()).unwrap();
                let expected = x_ey.norm().powi(2) / e.norm().powi(2) * anchor_qc;
                assert!((first - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn break_aligned_worst_case() {
        let s = Space::euclidean(Field::Real, 2);
        let g = Relation::real_gain(&s, 2.0);
        let m = HermitianForm2::diag(1.0, -1.0);
        let xi = s.real_vector(&[0.6, 0.8]).unwrap();
        let wc = construct_worst_case(&g, &m, 0.1, &xi, &TOL).unwrap();
        let broken = break_item_iii(&g, &m, &wc.witness, BreakMode::Linear, &TOL).unwrap();
        match broken.interpolant.unwrap().case {
            InterpolantCase::AlignedScaling { scale, .. } => assert_abs_diff_eq!(scale.re, 0.9 / 2.2, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(broken.witness.flags, LoopFlags::ALL);
        assert_abs_diff_eq!(broken.witness.gain_ratio(), 96.2f64.sqrt(), epsilon = 1e-10);

        let single = break_item_iii(&g, &m, &wc.witness, BreakMode::Unconstrained, &TOL).unwrap();
        assert!(matches!(single.phi, Relation::Singleton { .. }));
    }

    #[test]
    fn break_rotating_worst_case() {
        let s = Space::euclidean(Field::Real, 2);
        // a 90° rotation keeps y₁ orthogonal to e₁, so (e₂, y₂) are not parallel
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0].map(Complex64::from));
        let g = Relation::linear_map(&s, rot).unwrap();
        let m = HermitianForm2::diag(1.0, -1.0);
        let xi = s.real_vector(&[1.0, 0.0]).unwrap();
        let wc = construct_worst_case(&g, &m, 0.1, &xi, &TOL).unwrap();
        let broken = break_item_iii(&g, &m, &wc.witness, BreakMode::Linear, &TOL).unwrap();
        assert!(matches!(
            broken.interpolant.unwrap().case,
            InterpolantCase::GeneralRotation { .. }
        ));
        assert_eq!(broken.witness.flags, LoopFlags::ALL);
        assert_abs_diff_eq!(broken.witness.gain_ratio(), wc.achieved_ratio, epsilon = 1e-12);
    }
}
