//! Relations on a space `V` (subsets of `V × V`), linear relations, and the
//! consistent signal tuples of the feedback loop.
//!
//! Equality of vectors is always measured in the seminorm of the space, so
//! two vectors whose difference is seminorm-null are interchangeable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::space::{PairVector, Space, Vector};
use crate::{Error, Result, Tolerance};

/// Named pointwise maps, applied coordinate by coordinate. On complex
/// coordinates they act on the modulus and keep the phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pointwise {
    /// `z ↦ z·min(1, level/|z|)`.
    Saturation { level: f64 },
    /// `z ↦ z·max(0, 1 − width/|z|)`.
    Deadzone { width: f64 },
    /// `z ↦ k(|z|)·z` with `k(r) = (a+b)/2 + (b−a)/2·cos r ∈ [a, b]`.
    Sector { a: f64, b: f64 },
}

impl Pointwise {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let r = z.norm();
        match *self {
            Pointwise::Saturation { level } => {
                if r <= level {
                    z
                } else {
                    z * (level / r)
                }
            }
            Pointwise::Deadzone { width } => {
                if r <= width {
                    Complex64::new(0.0, 0.0)
                } else {
                    z * (1.0 - width / r)
                }
            }
            Pointwise::Sector { a, b } => z * (0.5 * (a + b) + 0.5 * (b - a) * r.cos()),
        }
    }

    pub fn is_linear(&self) -> bool {
        match *self {
            Pointwise::Saturation { .. } | Pointwise::Deadzone { .. } => false,
            Pointwise::Sector { a, b } => a == b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Relation {
    /// Finite list of pairs; may be multi-valued.
    SampledGraph {
        space: Space,
        pairs: Vec<(Vector, Vector)>,
    },
    /// `x ↦ A x` on coordinates.
    LinearMap {
        space: Space,
        matrix: DMatrix<Complex64>,
    },
    ScaledIdentity {
        space: Space,
        scale: Complex64,
    },
    StaticNonlinearity {
        space: Space,
        map: Pointwise,
    },
    /// `{(z, x) : ‖z‖ = 0}`.
    VerticalLine {
        space: Space,
    },
    /// `{(z, x) : ‖z‖ = ‖x‖ = 0}`.
    NullGraph {
        space: Space,
    },
    Singleton {
        e: Vector,
        y: Vector,
    },
}

/// A failed closure check: `(α₁x₁ + α₂x₂, α₁y₁ + α₂y₂)` is not in the relation.
#[derive(Debug, Clone)]
pub struct LinearityWitness {
    pub first: (Vector, Vector),
    pub second: (Vector, Vector),
    pub alphas: (Complex64, Complex64),
}

impl Relation {
    pub fn sampled_graph(space: &Space, pairs: Vec<(Vector, Vector)>) -> Result<Self> {
        for (x, y) in &pairs {
            space.sip(x, y)?;
        }
        Ok(Relation::SampledGraph {
            space: space.clone(),
            pairs,
        })
    }

    pub fn linear_map(space: &Space, matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::SpaceMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        if let Some(z) = matrix.iter().find(|z| !space.field().admits(**z)) {
            return Err(Error::FieldMismatch(format!("matrix entry {z} in a real space")));
        }
        Ok(Relation::LinearMap {
            space: space.clone(),
            matrix,
        })
    }

    pub fn scaled_identity(space: &Space, scale: Complex64) -> Result<Self> {
        if !space.field().admits(scale) {
            return Err(Error::FieldMismatch(format!("scale {scale} in a real space")));
        }
        Ok(Relation::ScaledIdentity {
            space: space.clone(),
            scale,
        })
    }

    pub fn real_gain(space: &Space, k: f64) -> Self {
        Relation::ScaledIdentity {
            space: space.clone(),
            scale: Complex64::from(k),
        }
    }

    pub fn pointwise(space: &Space, map: Pointwise) -> Self {
        Relation::StaticNonlinearity {
            space: space.clone(),
            map,
        }
    }

    pub fn singleton(e: Vector, y: Vector) -> Result<Self> {
        e.space().sip(&e, &y)?;
        Ok(Relation::Singleton { e, y })
    }

    pub fn space(&self) -> &Space {
        match self {
            Relation::SampledGraph { space, .. }
            | Relation::LinearMap { space, .. }
            | Relation::ScaledIdentity { space, .. }
            | Relation::StaticNonlinearity { space, .. }
            | Relation::VerticalLine { space }
            | Relation::NullGraph { space } => space,
            Relation::Singleton { e, .. } => e.space(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Relation::SampledGraph { .. } => "sampled_graph",
            Relation::LinearMap { .. } => "linear_map",
            Relation::ScaledIdentity { .. } => "scaled_identity",
            Relation::StaticNonlinearity { .. } => "static_nonlinearity",
            Relation::VerticalLine { .. } => "vertical_line",
            Relation::NullGraph { .. } => "null_graph",
            Relation::Singleton { .. } => "singleton",
        }
    }

    /// Single-valued relations with domain `V`.
    pub fn is_function(&self) -> bool {
        matches!(
            self,
            Relation::LinearMap { .. } | Relation::ScaledIdentity { .. } | Relation::StaticNonlinearity { .. }
        )
    }

    /// Coordinate matrix for linear function backings.
    pub fn matrix(&self) -> Option<DMatrix<Complex64>> {
        match self {
            Relation::LinearMap { matrix, .. } => Some(matrix.clone()),
            Relation::ScaledIdentity { space, scale } => {
                let n = space.dim();
                Some(DMatrix::from_diagonal_element(n, n, *scale))
            }
            _ => None,
        }
    }

    fn eval_function(&self, x: &Vector) -> Option<Vector> {
        match self {
            Relation::LinearMap { space, matrix } => {
                let v = matrix * DVector::from_column_slice(x.coords());
                Some(
                    space
                        .vector(v.iter().cloned().collect())
                        .expect("matrix preserves field and dimension"),
                )
            }
            Relation::ScaledIdentity { scale, .. } => Some(*scale * x),
            Relation::StaticNonlinearity { map, .. } => Some(x.map(|z| map.eval(z))),
            _ => None,
        }
    }

    /// Images of `x`. Empty means `x ∉ dom(R)`. For [`Relation::VerticalLine`]
    /// and [`Relation::NullGraph`] the image set is infinite; the returned
    /// list is the zero vector followed by a spanning set of it (the standard
    /// basis, respectively a basis of the seminorm null space).
    pub fn apply(&self, x: &Vector) -> Result<Vec<Vector>> {
        let space = self.space();
        space.sip(x, x)?;
        let tol = Tolerance::DEFAULT;
        if let Some(y) = self.eval_function(x) {
            return Ok(vec![y]);
        }
        Ok(match self {
            Relation::SampledGraph { pairs, .. } => pairs
                .iter()
                .filter(|(a, _)| {
                    a.distance(x)
                        .map(|d| d <= tol.slack(a.norm().max(x.norm())))
                        .unwrap_or(false)
                })
                .map(|(_, b)| b.clone())
                .collect(),
            Relation::Singleton { e, y } => {
                if e.distance(x)? <= tol.slack(e.norm().max(x.norm())) {
                    vec![y.clone()]
                } else {
                    Vec::new()
                }
            }
            Relation::VerticalLine { .. } => {
                if tol.is_null(x.norm()) {
                    std::iter::once(space.zeros())
                        .chain((0..space.dim()).map(|j| space.basis(j)))
                        .collect()
                } else {
                    Vec::new()
                }
            }
            Relation::NullGraph { .. } => {
                if tol.is_null(x.norm()) {
                    std::iter::once(space.zeros()).chain(space.null_basis()).collect()
                } else {
                    Vec::new()
                }
            }
            _ => unreachable!("function backings handled above"),
        })
    }

    /// The image of `x` when there is exactly one.
    pub fn unique_image(&self, x: &Vector) -> Result<Vector> {
        let mut images = self.apply(x)?;
        match images.len() {
            0 => Err(Error::DomainViolation),
            1 => Ok(images.pop().expect("one image")),
            n => Err(Error::AmbiguousImage(n)),
        }
    }

    /// `(x, y) ∈ R`, with equality measured in the seminorm.
    pub fn contains(&self, x: &Vector, y: &Vector, tol: &Tolerance) -> Result<bool> {
        let space = self.space();
        space.sip(x, y)?;
        if let Some(fx) = self.eval_function(x) {
            return Ok(fx.distance(y)? <= tol.slack(fx.norm().max(y.norm())));
        }
        let near = |a: &Vector, b: &Vector| -> bool {
            a.distance(b)
                .map(|d| d <= tol.slack(a.norm().max(b.norm())))
                .unwrap_or(false)
        };
        Ok(match self {
            Relation::SampledGraph { pairs, .. } => pairs.iter().any(|(a, b)| near(a, x) && near(b, y)),
            Relation::Singleton { e, y: ye } => near(e, x) && near(ye, y),
            Relation::VerticalLine { .. } => tol.is_null(x.norm()),
            Relation::NullGraph { .. } => tol.is_null(x.norm()) && tol.is_null(y.norm()),
            _ => unreachable!("function backings handled above"),
        })
    }

    /// Whether the relation is closed under linear combinations of its pairs.
    /// Analytic backings are decided by kind; sampled graphs are tested on
    /// `trials` random combinations of stored pairs.
    pub fn is_linear_closed(&self, trials: usize, seed: u64) -> bool {
        let tol = Tolerance::DEFAULT;
        match self {
            Relation::LinearMap { .. }
            | Relation::ScaledIdentity { .. }
            | Relation::VerticalLine { .. }
            | Relation::NullGraph { .. } => true,
            Relation::StaticNonlinearity { map, .. } => map.is_linear(),
            Relation::Singleton { e, y } => tol.is_null(e.norm()) && tol.is_null(y.norm()),
            Relation::SampledGraph { .. } => self.linearity_witness(trials, seed).is_none(),
        }
    }

    /// Random search for a violation of linear closure. Function backings
    /// draw their own input pairs; sampled graphs combine stored pairs.
    pub fn linearity_witness(&self, trials: usize, seed: u64) -> Option<LinearityWitness> {
        let tol = Tolerance::DEFAULT;
        let space = self.space().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let (p1, p2) = match self {
                Relation::SampledGraph { pairs, .. } => {
                    if pairs.is_empty() {
                        return None;
                    }
                    let i = rng.random_range(0..pairs.len());
                    let j = rng.random_range(0..pairs.len());
                    (pairs[i].clone(), pairs[j].clone())
                }
                Relation::Singleton { e, y } => ((e.clone(), y.clone()), (e.clone(), y.clone())),
                _ if self.is_function() => {
                    let x1 = space.random_vector(&mut rng).scale_real(3.0);
                    let x2 = space.random_vector(&mut rng).scale_real(3.0);
                    let y1 = self.eval_function(&x1)?;
                    let y2 = self.eval_function(&x2)?;
                    ((x1, y1), (x2, y2))
                }
                _ => return None,
            };
            let a1 = space.random_scalar(&mut rng);
            let a2 = space.random_scalar(&mut rng);
            let x = Vector::combination(&space, &[(a1, &p1.0), (a2, &p2.0)]);
            let y = Vector::combination(&space, &[(a1, &p1.1), (a2, &p2.1)]);
            if !self.contains(&x, &y, &tol).unwrap_or(false) {
                return Some(LinearityWitness {
                    first: p1,
                    second: p2,
                    alphas: (a1, a2),
                });
            }
        }
        None
    }
}

/// Which of the loop equations a witness satisfies:
/// (a) `e₁ = u₁ + y₂`, (b) `y₂ = Φe₂`, (c) `e₂ = u₂ + y₁`, (d) `y₁ = Ge₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoopFlags {
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub d: bool,
}

impl LoopFlags {
    pub const ALL: LoopFlags = LoopFlags {
        a: true,
        b: true,
        c: true,
        d: true,
    };
    /// Equations (a), (c), (d): the loop with `Φ` removed.
    pub const WITHOUT_PHI: LoopFlags = LoopFlags {
        a: true,
        b: false,
        c: true,
        d: true,
    };

    pub fn covers(&self, other: &LoopFlags) -> bool {
        (self.a || !other.a) && (self.b || !other.b) && (self.c || !other.c) && (self.d || !other.d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopWitness {
    pub u1: Vector,
    pub u2: Vector,
    pub y1: Vector,
    pub y2: Vector,
    pub e1: Vector,
    pub e2: Vector,
    pub flags: LoopFlags,
}

impl LoopWitness {
    pub fn space(&self) -> &Space {
        self.u1.space()
    }

    /// `‖u‖ = √(‖u₁‖² + ‖u₂‖²)`.
    pub fn u_norm(&self) -> f64 {
        self.u1.norm().hypot(self.u2.norm())
    }

    pub fn y_norm(&self) -> f64 {
        self.y1.norm().hypot(self.y2.norm())
    }

    pub fn e_norm(&self) -> f64 {
        self.e1.norm().hypot(self.e2.norm())
    }

    /// `‖y‖ / ‖u‖`, infinite when `‖u‖ = 0 < ‖y‖`.
    pub fn gain_ratio(&self) -> f64 {
        ratio(self.y_norm(), self.u_norm())
    }

    pub fn u_pair(&self) -> PairVector {
        PairVector {
            first: self.u1.clone(),
            second: self.u2.clone(),
        }
    }

    pub fn y_pair(&self) -> PairVector {
        PairVector {
            first: self.y1.clone(),
            second: self.y2.clone(),
        }
    }

    /// `(e₂, y₂)`, the pair constrained by `M`.
    pub fn phi_pair(&self) -> PairVector {
        PairVector {
            first: self.e2.clone(),
            second: self.y2.clone(),
        }
    }

    /// Seminorm residuals of (a) and (c).
    pub fn summing_residuals(&self) -> (f64, f64) {
        let ra = (&self.e1 - &(&self.u1 + &self.y2)).norm();
        let rc = (&self.e2 - &(&self.u2 + &self.y1)).norm();
        (ra, rc)
    }

    /// Re-evaluates all four flags against the given relations.
    pub fn evaluate_flags(&self, g: Option<&Relation>, phi: Option<&Relation>, tol: &Tolerance) -> Result<LoopFlags> {
        let (ra, rc) = self.summing_residuals();
        let sa = tol.slack(self.e1.norm().max(self.u1.norm()).max(self.y2.norm()));
        let sc = tol.slack(self.e2.norm().max(self.u2.norm()).max(self.y1.norm()));
        Ok(LoopFlags {
            a: ra <= sa,
            b: match phi {
                Some(p) => p.contains(&self.e2, &self.y2, tol)?,
                None => false,
            },
            c: rc <= sc,
            d: match g {
                Some(g) => g.contains(&self.e1, &self.y1, tol)?,
                None => false,
            },
        })
    }
}

pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Builds `y₁ = Ge₁`, `e₂ = u₂ + y₁` and either `y₂ = Φe₂` or, without `Φ`,
/// `y₂ = e₁ − u₁`. The flags record exactly the equations that hold.
pub fn assemble_witness(
    g: &Relation,
    phi: Option<&Relation>,
    u1: &Vector,
    u2: &Vector,
    e1: &Vector,
    tol: &Tolerance,
) -> Result<LoopWitness> {
    let space = g.space();
    space.sip(u1, u2)?;
    space.sip(e1, e1)?;
    let y1 = g.unique_image(e1)?;
    let e2 = u2 + &y1;
    let y2 = match phi {
        Some(p) => p.unique_image(&e2)?,
        None => e1 - u1,
    };
    let mut w = LoopWitness {
        u1: u1.clone(),
        u2: u2.clone(),
        y1,
        y2,
        e1: e1.clone(),
        e2,
        flags: LoopFlags::default(),
    };
    w.flags = w.evaluate_flags(Some(g), phi, tol)?;
    Ok(w)
}

/// `(u, y) ∈ R_uy`: the error signals are forced to `e₁ = u₁ + y₂`,
/// `e₂ = u₂ + y₁`, and membership reduces to `y₁ ∈ Ge₁`, `y₂ ∈ Φe₂`.
pub fn membership_uy(g: &Relation, phi: &Relation, u: &PairVector, y: &PairVector, tol: &Tolerance) -> Result<bool> {
    let e1 = u.first.try_add(&y.second)?;
    let e2 = u.second.try_add(&y.first)?;
    Ok(g.contains(&e1, &y.first, tol)? && phi.contains(&e2, &y.second, tol)?)
}
