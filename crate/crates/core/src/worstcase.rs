//! Worst-case signals: when `G` violates the quadratic constraint for
//! `N = −M − εP*P`, build `(u, y, e)` that satisfy the loop equations without
//! `Φ` and the `M`-inequality on `(e₂, y₂)`, yet have `‖y‖/‖u‖` as large as
//! `(1 − εκ)/(εκ)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certify::{eps_family_member, EpsGrid};
use crate::quadform::HermitianForm2;
use crate::relation::{ratio, LoopFlags, LoopWitness, Relation};
use crate::space::{pair_mat_apply, PairVector, Space, Vector};
use crate::{Error, Result, Tolerance};

/// A probe on which `⟨(Gξ, ξ), N (Gξ, ξ)⟩ < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolatingProbe {
    pub xi: Vector,
    pub image: Vector,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseResult {
    pub witness: LoopWitness,
    pub eps: f64,
    /// `‖P⁻¹JP‖₂`.
    pub kappa: f64,
    /// `(1 − εκ)/(εκ)`.
    pub guaranteed_ratio: f64,
    /// `‖y‖/‖u‖`, infinite when `‖u‖ = 0 < ‖y‖`.
    pub achieved_ratio: f64,
    pub xi: Vector,
    /// `⟨(e₂, y₂), M (e₂, y₂)⟩`.
    pub m_value: f64,
    /// `ε(1 − ε²)‖P(y₁, e₁)‖²`, a lower bound for `m_value`.
    pub m_lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstCaseSummary {
    pub eps: f64,
    pub kappa: f64,
    pub guaranteed_ratio: f64,
    pub achieved_ratio: f64,
    pub m_value: f64,
    pub u_norm: f64,
    pub y_norm: f64,
}

impl WorstCaseResult {
    pub fn summary(&self) -> WorstCaseSummary {
        WorstCaseSummary {
            eps: self.eps,
            kappa: self.kappa,
            guaranteed_ratio: self.guaranteed_ratio,
            achieved_ratio: self.achieved_ratio,
            m_value: self.m_value,
            u_norm: self.witness.u_norm(),
            y_norm: self.witness.y_norm(),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::PreconditionNotMet(format!("eps must lie in (0, 1), got {eps}")))
    }
}

fn violation_on(g: &Relation, n: &HermitianForm2, xi: &Vector, tol: &Tolerance) -> Result<Option<ViolatingProbe>> {
    for image in g.apply(xi)? {
        let pair = PairVector::new(image.clone(), xi.clone())?;
        let value = n.qc_eval(&pair)?;
        if value < -tol.slack(n.qc_scale(&pair)) {
            return Ok(Some(ViolatingProbe {
                xi: xi.clone(),
                image,
                value,
            }));
        }
    }
    Ok(None)
}

/// First probe `ξ` (and image `Gξ`) with `⟨(Gξ, ξ), N (Gξ, ξ)⟩ < −tol` for
/// `N = −M − εP*P`.
pub fn find_violating_xi(
    g: &Relation,
    m: &HermitianForm2,
    eps: f64,
    probes: &[Vector],
    tol: &Tolerance,
) -> Result<Option<ViolatingProbe>> {
    m.factor_indefinite()?;
    check_eps(eps)?;
    let n = eps_family_member(m, eps);
    for xi in probes {
        if let Some(v) = violation_on(g, &n, xi, tol)? {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Builds the worst-case tuple from `ξ`, using the first image of `G` that
/// violates the `N`-constraint.
pub fn construct_worst_case(
    g: &Relation,
    m: &HermitianForm2,
    eps: f64,
    xi: &Vector,
    tol: &Tolerance,
) -> Result<WorstCaseResult> {
    let fact = m.factor_indefinite()?;
    check_eps(eps)?;
    let n = eps_family_member(m, eps);
    let image = g
        .apply(xi)?
        .into_iter()
        .find(|y| {
            PairVector::new(y.clone(), xi.clone())
                .and_then(|p| n.qc_eval(&p))
                .map(|v| v < 0.0)
                .unwrap_or(false)
        })
        .ok_or_else(|| Error::PreconditionNotMet("G satisfies the N-constraint at this xi".into()))?;
    construct_from_image(g, m, &fact, eps, xi, image, tol)
}

fn construct_from_image(
    g: &Relation,
    m: &HermitianForm2,
    fact: &crate::quadform::IndefFactorization,
    eps: f64,
    xi: &Vector,
    y1: Vector,
    tol: &Tolerance,
) -> Result<WorstCaseResult> {
    let e1 = xi.clone();
    let z = PairVector::new(y1.clone(), e1.clone())?;
    let s = fact.similarity();
    let kappa = s.spectral_norm();
    let w = pair_mat_apply(s.scale(eps), &z)?;
    let u2 = w.first;
    let u1 = -&w.second;
    let e2 = &y1 + &u2;
    let y2 = &e1 - &u1;
    let mut witness = LoopWitness {
        u1,
        u2,
        y1,
        y2,
        e1,
        e2,
        flags: LoopFlags::default(),
    };
    witness.flags = witness.evaluate_flags(Some(g), None, tol)?;
    if witness.flags != LoopFlags::WITHOUT_PHI {
        return Err(Error::ConstructionCheckFailed(format!(
            "item 1: loop flags {:?} differ from (a), (c), (d)",
            witness.flags
        )));
    }

    let phi_pair = witness.phi_pair();
    let m_value = m.qc_eval(&phi_pair)?;
    let pz = pair_mat_apply(fact.p, &z)?.norm();
    let m_lower_bound = eps * (1.0 - eps * eps) * pz * pz;
    if !tol.nonneg(m_value, m.qc_scale(&phi_pair)) {
        return Err(Error::ConstructionCheckFailed(format!(
            "item 2: M-inequality on (e2, y2) fails with value {m_value:e}"
        )));
    }

    let guaranteed_ratio = (1.0 - eps * kappa) / (eps * kappa);
    let (yn, un) = (witness.y_norm(), witness.u_norm());
    let achieved_ratio = ratio(yn, un);
    if un > 0.0 && yn < guaranteed_ratio * un - tol.slack(guaranteed_ratio * un) {
        return Err(Error::ConstructionCheckFailed(format!(
            "item 3: achieved ratio {achieved_ratio} below guaranteed {guaranteed_ratio}"
        )));
    }
    Ok(WorstCaseResult {
        witness,
        eps,
        kappa,
        guaranteed_ratio,
        achieved_ratio,
        xi: xi.clone(),
        m_value,
        m_lower_bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DefeatOutcome {
    Success(Box<WorstCaseResult>),
    /// No grid point produced a witness beating the target on these probes.
    /// `violations_seen` is false when every grid point found no violating
    /// probe at all.
    CannotDefeat {
        probes_checked: usize,
        violations_seen: bool,
    },
}

impl DefeatOutcome {
    pub fn success(&self) -> Option<&WorstCaseResult> {
        match self {
            DefeatOutcome::Success(r) => Some(r),
            DefeatOutcome::CannotDefeat { .. } => None,
        }
    }
}

/// Scans `ε` over the grid (largest first) and returns the first worst-case
/// tuple whose guaranteed and achieved ratios exceed `target`.
pub fn defeat_gain(
    g: &Relation,
    m: &HermitianForm2,
    target: f64,
    probes: &[Vector],
    grid: &EpsGrid,
    tol: &Tolerance,
) -> Result<DefeatOutcome> {
    if target.is_nan() || target <= 0.0 {
        return Err(Error::PreconditionNotMet(format!(
            "target gain must be positive, got {target}"
        )));
    }
    let fact = m.factor_indefinite()?;
    let kappa = fact.kappa();
    let mut violations_seen = false;
    for eps in grid.iter() {
        let n = eps_family_member(m, eps);
        let guaranteed = (1.0 - eps * kappa) / (eps * kappa);
        for xi in probes {
            let Some(v) = violation_on(g, &n, xi, tol)? else {
                continue;
            };
            violations_seen = true;
            if guaranteed <= target {
                break;
            }
            let r = construct_from_image(g, m, &fact, eps, &v.xi, v.image, tol)?;
            if r.achieved_ratio > target {
                return Ok(DefeatOutcome::Success(Box::new(r)));
            }
        }
    }
    Ok(DefeatOutcome::CannotDefeat {
        probes_checked: probes.len(),
        violations_seen,
    })
}

/// `probes` followed by `count` seeded random unit vectors of `space`.
pub fn augment_probes(space: &Space, probes: &[Vector], count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = probes.to_vec();
    out.extend((0..count).filter_map(|_| space.random_unit(&mut rng)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{check_condition_i, gain_bound};
    use crate::space::Field;
    use crate::Complex64;
    use approx::assert_abs_diff_eq;

    fn setup(gain: f64) -> (Space, Relation, HermitianForm2, Vector) {
        let s = Space::euclidean(Field::Real, 2);
        let g = Relation::real_gain(&s, gain);
        let xi = s.real_vector(&[0.6, 0.8]).unwrap();
        (s, g, HermitianForm2::diag(1.0, -1.0), xi)
    }

    #[test]
    fn find_examples() {
        let (_, g, m, xi) = setup(2.0);
        let v = find_violating_xi(&g, &m, 0.1, std::slice::from_ref(&xi), &Tolerance::DEFAULT)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(v.value, -3.5, epsilon = 1e-12);
        let (_, g, m, xi) = setup(0.5);
        assert!(find_violating_xi(&g, &m, 0.1, &[xi], &Tolerance::DEFAULT)
            .unwrap()
            .is_none());
        assert!(find_violating_xi(&g, &m, 0.1, &[], &Tolerance::DEFAULT)
            .unwrap()
            .is_none());
        assert!(matches!(
            find_violating_xi(&g, &HermitianForm2::diag(1.0, 0.0), 0.1, &[], &Tolerance::DEFAULT),
            Err(Error::NotIndefinite(_))
        ));
    }

    #[test]
    fn construction_values() {
        let (_, g, m, xi) = setup(2.0);
        let r = construct_worst_case(&g, &m, 0.1, &xi, &Tolerance::DEFAULT).unwrap();
        let w = &r.witness;
        for (v, k) in [(&w.u2, 0.2), (&w.u1, 0.1), (&w.e2, 2.2), (&w.y2, 0.9)] {
            assert!(v.distance(&xi.scale_real(k)).unwrap() < 1e-12);
        }
        assert_abs_diff_eq!(r.m_value, 4.03, epsilon = 1e-12);
        assert_abs_diff_eq!(r.kappa, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.guaranteed_ratio, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.achieved_ratio, 96.2f64.sqrt(), epsilon = 1e-10);
        assert_eq!(w.flags, LoopFlags::WITHOUT_PHI);

        let r = construct_worst_case(&g, &m, 0.01, &xi, &Tolerance::DEFAULT).unwrap();
        assert_abs_diff_eq!(r.guaranteed_ratio, 99.0, epsilon = 1e-9);
        assert!(r.achieved_ratio >= 99.0);
    }

    #[test]
    fn complex_passivity_construction() {
        let s = Space::euclidean(Field::Complex, 3);
        let m = HermitianForm2::real(0.0, 0.5, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xi = s.random_unit(&mut rng).unwrap();
        // an output-rotating gain is not passive: Re⟨ξ, iξ⟩ = 0 < ε-margin
        for k in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let g = Relation::scaled_identity(&s, k).unwrap();
            let r = construct_worst_case(&g, &m, 0.1, &xi, &Tolerance::DEFAULT).unwrap();
            assert!(r.m_value >= -1e-10);
            assert!(r.achieved_ratio >= r.guaranteed_ratio - 1e-10);
        }
    }

    #[test]
    fn proof_chain_inequalities() {
        let (_, g, m, xi) = setup(3.0);
        for eps in [0.5, 0.1, 0.01] {
            let r = construct_worst_case(&g, &m, eps, &xi, &Tolerance::DEFAULT).unwrap();
            assert!(r.m_value >= r.m_lower_bound - 1e-9);
            let w = &r.witness;
            assert!(w.u_norm() <= eps * r.kappa * (w.y_norm() + w.u_norm()) + 1e-9);
        }
    }

    #[test]
    fn defeat_examples() {
        let (s, g, m, xi) = setup(2.0);
        let probes = augment_probes(&s, &[xi], 5, 1);
        let out = defeat_gain(&g, &m, 50.0, &probes, &EpsGrid::default(), &Tolerance::DEFAULT).unwrap();
        let r = out.success().unwrap();
        assert!(r.eps <= 1.0 / 51.0 && r.achieved_ratio > 50.0);

        let out = defeat_gain(&g, &m, 0.1, &probes, &EpsGrid::default(), &Tolerance::DEFAULT).unwrap();
        assert_eq!(out.success().unwrap().eps, 0.5);

        let g = Relation::real_gain(&s, 0.5);
        assert_eq!(
            defeat_gain(&g, &m, 3.0, &probes, &EpsGrid::default(), &Tolerance::DEFAULT).unwrap(),
            DefeatOutcome::CannotDefeat {
                probes_checked: 6,
                violations_seen: false
            }
        );
    }

    #[test]
    fn defeat_is_consistent_with_certified_bounds() {
        let (s, g, m, xi) = setup(0.9);
        let probes = augment_probes(&s, &[xi], 5, 2);
        for eps in EpsGrid::default().iter() {
            let n = eps_family_member(&m, eps);
            if check_condition_i(&g, &n, &m, &probes, &Tolerance::DEFAULT)
                .unwrap()
                .passed()
            {
                let gamma = gain_bound(&m, &n).unwrap().gamma;
                let out = defeat_gain(&g, &m, gamma, &probes, &EpsGrid::default(), &Tolerance::DEFAULT).unwrap();
                assert!(out.success().is_none(), "eps {eps} gamma {gamma}");
            }
        }
    }
}
