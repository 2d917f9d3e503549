//! Classical stability statements as `(M, N)` pairs: passivity with input
//! and output strictness, small gain, and conic sectors.
//!
//! `M` always constrains the `Φ` of the positive-feedback loop. A
//! [`FeedbackSign::NegativeFeedback`] spec describes a loop `e₂ = u₂ + y₁`,
//! `e₁ = u₁ − Φ_neg e₂`, so its `Φ` enters here as `−Φ_neg`.

use serde::{Deserialize, Serialize};

use crate::certify::{gain_bound, GainBound};
use crate::l2e::{simulate, truncated_sip, CausalOperator, Signal};
use crate::quadform::{Definiteness, HermitianForm2};
use crate::{Error, Result, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSign {
    PositiveFeedback,
    #[default]
    NegativeFeedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassicKind {
    /// `⟨ξ, Gξ⟩_T ≥ ε₁‖ξ‖²_T + δ₁‖Gξ‖²_T` and the same for `Φ_neg` with
    /// `(ε₂, δ₂)`.
    Passivity {
        eps1: f64,
        delta1: f64,
        eps2: f64,
        delta2: f64,
    },
    /// `‖Gξ‖ ≤ g_g‖ξ‖` and `‖Φξ‖ ≤ g_phi‖ξ‖`.
    SmallGain { g_g: f64, g_phi: f64 },
    /// `Φ` in the sector `[a, b]`; `G` either described by a supplied `n` or
    /// by `N = −M − margin·I`.
    Circle {
        a: f64,
        b: f64,
        #[serde(default)]
        n: Option<HermitianForm2>,
        #[serde(default = "default_circle_margin")]
        margin: f64,
    },
}

fn default_circle_margin() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicSpec {
    pub kind: ClassicKind,
    #[serde(default)]
    pub sign: FeedbackSign,
}

impl ClassicSpec {
    pub fn passivity(eps1: f64, delta1: f64, eps2: f64, delta2: f64) -> Self {
        Self {
            kind: ClassicKind::Passivity {
                eps1,
                delta1,
                eps2,
                delta2,
            },
            sign: FeedbackSign::NegativeFeedback,
        }
    }

    pub fn small_gain(g_g: f64, g_phi: f64) -> Self {
        Self {
            kind: ClassicKind::SmallGain { g_g, g_phi },
            sign: FeedbackSign::PositiveFeedback,
        }
    }

    pub fn circle(a: f64, b: f64) -> Self {
        Self {
            kind: ClassicKind::Circle {
                a,
                b,
                n: None,
                margin: default_circle_margin(),
            },
            sign: FeedbackSign::PositiveFeedback,
        }
    }

    pub fn with_sign(mut self, sign: FeedbackSign) -> Self {
        self.sign = sign;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicMapping {
    pub m: HermitianForm2,
    pub n: HermitianForm2,
    /// Definiteness of `M + N`.
    pub definiteness: Definiteness,
    pub eigenvalues: [f64; 2],
    /// Why the spec fails its admissibility conditions, if it does.
    pub inadmissible: Option<String>,
}

impl ClassicMapping {
    pub fn is_admissible(&self) -> bool {
        self.inadmissible.is_none() && self.definiteness == Definiteness::NegDef
    }

    pub fn require_admissible(&self) -> Result<()> {
        match &self.inadmissible {
            Some(why) => Err(Error::InadmissibleSpec(why.clone())),
            None if self.definiteness != Definiteness::NegDef => Err(Error::NotNegDef {
                definiteness: self.definiteness,
                eigenvalues: self.eigenvalues,
            }),
            None => Ok(()),
        }
    }

    pub fn gain_bound(&self) -> Result<GainBound> {
        gain_bound(&self.m, &self.n)
    }
}

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InadmissibleSpec(format!("non-finite parameter in {values:?}")))
    }
}

/// The `(M, N)` pair of a classical spec. Inadmissible specs still map; the
/// reason is recorded in [`ClassicMapping::inadmissible`].
pub fn to_mn(spec: &ClassicSpec) -> Result<ClassicMapping> {
    let (m, n, inadmissible) = match spec.kind {
        ClassicKind::Passivity {
            eps1,
            delta1,
            eps2,
            delta2,
        } => {
            finite(&[eps1, delta1, eps2, delta2])?;
            let n = HermitianForm2::real(-delta1, 0.5, -eps1);
            let m = HermitianForm2::real(-eps2, -0.5, -delta2);
            let mut why = Vec::new();
            if delta1 + eps2 <= 0.0 {
                why.push(format!("delta1 + eps2 = {} is not positive", delta1 + eps2));
            }
            if delta2 + eps1 <= 0.0 {
                why.push(format!("delta2 + eps1 = {} is not positive", delta2 + eps1));
            }
            (m, n, (!why.is_empty()).then(|| why.join("; ")))
        }
        ClassicKind::SmallGain { g_g, g_phi } => {
            finite(&[g_g, g_phi])?;
            if g_g < 0.0 || g_phi < 0.0 {
                return Err(Error::InadmissibleSpec(format!(
                    "gains must be nonnegative, got ({g_g}, {g_phi})"
                )));
            }
            let n = HermitianForm2::diag(-1.0, g_g * g_g);
            let s = if g_phi == 0.0 {
                1.0 + g_g * g_g
            } else if g_g == 0.0 {
                1.0 / (2.0 * g_phi * g_phi)
            } else {
                g_g / g_phi
            };
            let m = HermitianForm2::diag(g_phi * g_phi, -1.0).scale(s);
            let why = (g_g * g_phi >= 1.0).then(|| format!("g_g * g_phi = {} is not below 1", g_g * g_phi));
            (m, n, why)
        }
        ClassicKind::Circle { a, b, n, margin } => {
            finite(&[a, b, margin])?;
            let (lo, hi) = match spec.sign {
                FeedbackSign::PositiveFeedback => (a, b),
                FeedbackSign::NegativeFeedback => (-b, -a),
            };
            let m = HermitianForm2::real(-lo * hi, 0.5 * (lo + hi), -1.0);
            let n = n.unwrap_or_else(|| -m - HermitianForm2::identity().scale(margin));
            let why = (a >= b).then(|| format!("sector bounds need a < b, got [{a}, {b}]"));
            (m, n, why)
        }
    };
    let sum = m + n;
    Ok(ClassicMapping {
        m,
        n,
        definiteness: sum.definiteness(),
        eigenvalues: sum.eigenvalues(),
        inadmissible,
    })
}

/// Largest `δ` with `Re⟨ξ, Hξ⟩_T ≥ ε‖ξ‖²_T + δ‖Hξ‖²_T` on all probes and
/// horizons, for a fixed `ε`. `None` if no probe has `‖Hξ‖_T > 0`.
pub fn fit_output_strictness(op: &CausalOperator, probes: &[Signal], horizons: &[usize], eps: f64) -> Option<f64> {
    fit(op, probes, horizons, |ip, xx, yy| {
        (yy > 0.0).then(|| (ip - eps * xx) / yy)
    })
}

/// Largest `ε` with `Re⟨ξ, Hξ⟩_T ≥ ε‖ξ‖²_T + δ‖Hξ‖²_T` on all probes and
/// horizons, for a fixed `δ`.
pub fn fit_input_strictness(op: &CausalOperator, probes: &[Signal], horizons: &[usize], delta: f64) -> Option<f64> {
    fit(op, probes, horizons, |ip, xx, yy| {
        (xx > 0.0).then(|| (ip - delta * yy) / xx)
    })
}

fn fit(
    op: &CausalOperator,
    probes: &[Signal],
    horizons: &[usize],
    f: impl Fn(f64, f64, f64) -> Option<f64>,
) -> Option<f64> {
    let mut best: Option<f64> = None;
    for xi in probes {
        let y = simulate(op, xi);
        for &t in horizons {
            let ip = truncated_sip(xi, &y, t).re;
            if let Some(v) = f(ip, xi.norm_to(t).powi(2), y.norm_to(t).powi(2)) {
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PassivitySide {
    G,
    Phi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassivityViolation {
    pub side: PassivitySide,
    pub probe: usize,
    pub horizon: usize,
    /// `Re⟨ξ, Hξ⟩_T − ε‖ξ‖²_T − δ‖Hξ‖²_T`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem4Report {
    pub mapping: ClassicMapping,
    pub violations: Vec<PassivityViolation>,
    pub probes_checked: usize,
    pub horizons_checked: usize,
    /// Present when the inequalities hold on every probe and `M + N ≺ 0`.
    pub bound: Option<GainBound>,
}

/// Checks both truncated passivity inequalities on the probes, maps the
/// spec to `(M, N)` and computes the closed-loop bound.
///
/// `phi` is oriented by `spec.sign`: the negative-feedback `Φ_neg` for
/// [`FeedbackSign::NegativeFeedback`], the positive-feedback `Φ = −Φ_neg`
/// otherwise.
pub fn recover_theorem4(
    spec: &ClassicSpec,
    g: &CausalOperator,
    phi: &CausalOperator,
    probes: &[Signal],
    horizons: &[usize],
    tol: &Tolerance,
) -> Result<Theorem4Report> {
    let ClassicKind::Passivity {
        eps1,
        delta1,
        eps2,
        delta2,
    } = spec.kind
    else {
        return Err(Error::InadmissibleSpec(
            "theorem recovery needs a passivity spec".into(),
        ));
    };
    let phi_neg = match spec.sign {
        FeedbackSign::NegativeFeedback => phi.clone(),
        FeedbackSign::PositiveFeedback => CausalOperator::Series {
            stages: vec![phi.clone(), CausalOperator::Gain { k: -1.0 }],
        },
    };
    let mut violations = Vec::new();
    for (side, op, eps, delta) in [
        (PassivitySide::G, g, eps1, delta1),
        (PassivitySide::Phi, &phi_neg, eps2, delta2),
    ] {
        for (i, xi) in probes.iter().enumerate() {
            let y = simulate(op, xi);
            for &t in horizons {
                let (xx, yy) = (xi.norm_to(t).powi(2), y.norm_to(t).powi(2));
                let slack = truncated_sip(xi, &y, t).re - eps * xx - delta * yy;
                if !tol.nonneg(slack, xx + yy) {
                    violations.push(PassivityViolation {
                        side,
                        probe: i,
                        horizon: t,
                        slack,
                    });
                }
            }
        }
    }
    let mapping = to_mn(spec)?;
    let bound = if violations.is_empty() && mapping.is_admissible() {
        Some(mapping.gain_bound()?)
    } else {
        None
    };
    Ok(Theorem4Report {
        mapping,
        violations,
        probes_checked: probes.len(),
        horizons_checked: horizons.len(),
        bound,
    })
}
