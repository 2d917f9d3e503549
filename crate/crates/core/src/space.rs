//! Semi-inner product spaces over ℝ or ℂ, their vectors, and the augmented
//! space `V²` with its overloaded matrix action and inner product.
//!
//! Inner products are conjugate-linear in the first argument and linear in
//! the second: `⟨x, a·y + b·z⟩ = a⟨x, y⟩ + b⟨x, z⟩`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::quadform::Mat2;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn admits(self, value: Complex64) -> bool {
        match self {
            Field::Real => value.im == 0.0,
            Field::Complex => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceKind {
    /// `F^dim` with the standard inner product.
    Euclidean { dim: usize },
    /// `F^n` with `⟨x, y⟩ = x* W y` for a Hermitian PSD (possibly singular) `W`.
    Weighted { gram: DMatrix<Complex64> },
    /// Stored signals of `len` samples with `channels` values per sample
    /// (time-major layout); only samples `t < horizon` enter the product.
    TruncatedSignal {
        len: usize,
        horizon: usize,
        channels: usize,
    },
}

#[derive(Debug, PartialEq)]
struct SpaceInner {
    field: Field,
    kind: SpaceKind,
}

/// A finite-dimensional semi-inner product space. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Space(Arc<SpaceInner>);

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Space {
    pub fn euclidean(field: Field, dim: usize) -> Self {
        Self::from_parts(field, SpaceKind::Euclidean { dim })
    }

    /// Weighted space; `gram` must be Hermitian and positive semidefinite,
    /// and real when `field` is real.
    pub fn weighted(field: Field, gram: DMatrix<Complex64>) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::InvalidSpace("gram matrix must be square".into()));
        }
        let n = gram.nrows();
        let scale = gram.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        for i in 0..n {
            for j in 0..n {
                let a = gram[(i, j)];
                if (a - gram[(j, i)].conj()).norm() > 1e-12 * scale {
                    return Err(Error::NonHermitian(format!("gram[{i}][{j}] != conj(gram[{j}][{i}])")));
                }
                if !field.admits(a) {
                    return Err(Error::FieldMismatch(format!("gram[{i}][{j}] = {a}")));
                }
            }
        }
        let eig = gram.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if n > 0 && min < -1e-10 * scale {
            return Err(Error::InvalidSpace(format!(
                "gram matrix is not PSD (eigenvalue {min:e})"
            )));
        }
        Ok(Self::from_parts(field, SpaceKind::Weighted { gram }))
    }

    /// Weighted space with a diagonal gram matrix.
    pub fn weighted_diag(field: Field, weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidSpace(format!("negative or non-finite weight {w}")));
        }
        let n = weights.len();
        let gram = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::from(weights[i]) } else { ZERO });
        Ok(Self::from_parts(field, SpaceKind::Weighted { gram }))
    }

    /// Single-channel truncated signal space.
    pub fn truncated(field: Field, len: usize, horizon: usize) -> Self {
        Self::truncated_multi(field, len, horizon, 1)
    }

    pub fn truncated_multi(field: Field, len: usize, horizon: usize, channels: usize) -> Self {
        Self::from_parts(
            field,
            SpaceKind::TruncatedSignal {
                len,
                horizon,
                channels: channels.max(1),
            },
        )
    }

    fn from_parts(field: Field, kind: SpaceKind) -> Self {
        Space(Arc::new(SpaceInner { field, kind }))
    }

    /// Same stored length with a different truncation horizon. Other kinds are
    /// returned unchanged.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        match self.0.kind {
            SpaceKind::TruncatedSignal { len, channels, .. } => {
                Self::truncated_multi(self.field(), len, horizon, channels)
            }
            _ => self.clone(),
        }
    }

    pub fn field(&self) -> Field {
        self.0.field
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.0.kind
    }

    /// Number of stored coordinates.
    pub fn dim(&self) -> usize {
        match &self.0.kind {
            SpaceKind::Euclidean { dim } => *dim,
            SpaceKind::Weighted { gram } => gram.nrows(),
            SpaceKind::TruncatedSignal { len, channels, .. } => len * channels,
        }
    }

    pub(crate) fn sip_coords(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        match &self.0.kind {
            SpaceKind::Euclidean { .. } => x.iter().zip(y).map(|(a, b)| a.conj() * b).sum(),
            SpaceKind::Weighted { gram } => {
                let n = gram.nrows();
                let mut acc = ZERO;
                for i in 0..n {
                    if x[i] == ZERO {
                        continue;
                    }
                    let row: Complex64 = (0..n).map(|j| gram[(i, j)] * y[j]).sum();
                    acc += x[i].conj() * row;
                }
                acc
            }
            SpaceKind::TruncatedSignal { len, horizon, channels } => {
                let stop = (*horizon).min(*len) * channels;
                x[..stop].iter().zip(&y[..stop]).map(|(a, b)| a.conj() * b).sum()
            }
        }
    }

    fn check(&self, v: &Vector) -> Result<()> {
        if v.space != *self {
            return Err(Error::SpaceMismatch {
                expected: self.dim(),
                got: v.space.dim(),
            });
        }
        Ok(())
    }

    /// `⟨x, y⟩`.
    pub fn sip(&self, x: &Vector, y: &Vector) -> Result<Complex64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.sip_coords(&x.coords, &y.coords))
    }

    /// `‖x‖ = √⟨x, x⟩`.
    pub fn seminorm(&self, x: &Vector) -> Result<f64> {
        self.check(x)?;
        Ok(self.sip_coords(&x.coords, &x.coords).re.max(0.0).sqrt())
    }

    pub fn vector(&self, coords: Vec<Complex64>) -> Result<Vector> {
        if coords.len() != self.dim() {
            return Err(Error::SpaceMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        if let Some(c) = coords.iter().find(|c| !self.field().admits(**c)) {
            return Err(Error::FieldMismatch(format!("coordinate {c} in a real space")));
        }
        Ok(Vector {
            space: self.clone(),
            coords,
        })
    }

    pub fn real_vector(&self, coords: &[f64]) -> Result<Vector> {
        self.vector(coords.iter().map(|&c| Complex64::from(c)).collect())
    }

    pub fn zeros(&self) -> Vector {
        Vector {
            space: self.clone(),
            coords: vec![ZERO; self.dim()],
        }
    }

    /// Standard coordinate vector `e_j`.
    pub fn basis(&self, j: usize) -> Vector {
        let mut v = self.zeros();
        v.coords[j] = ONE;
        v
    }

    /// A basis of the seminorm null space `{x : ‖x‖ = 0}`.
    pub fn null_basis(&self) -> Vec<Vector> {
        match &self.0.kind {
            SpaceKind::Euclidean { .. } => Vec::new(),
            SpaceKind::TruncatedSignal { len, horizon, channels } => ((*horizon).min(*len) * channels..len * channels)
                .map(|j| self.basis(j))
                .collect(),
            SpaceKind::Weighted { gram } => {
                let scale = gram.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
                let columns: Vec<Vec<Complex64>> = if self.field() == Field::Real {
                    let eig = gram.map(|z| z.re).symmetric_eigen();
                    null_columns(eig.eigenvalues.as_slice(), scale, |k| {
                        eig.eigenvectors.column(k).iter().map(|&r| Complex64::from(r)).collect()
                    })
                } else {
                    let eig = gram.clone().symmetric_eigen();
                    null_columns(eig.eigenvalues.as_slice(), scale, |k| {
                        eig.eigenvectors.column(k).iter().cloned().collect()
                    })
                };
                columns
                    .into_iter()
                    .map(|coords| Vector {
                        space: self.clone(),
                        coords,
                    })
                    .collect()
            }
        }
    }

    /// Vector with independent standard normal coordinates (real and
    /// imaginary parts for complex spaces).
    pub fn random_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let complex = self.field() == Field::Complex;
        let coords = (0..self.dim())
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
                Complex64::new(re, im)
            })
            .collect();
        Vector {
            space: self.clone(),
            coords,
        }
    }

    /// Random vector normalized to unit seminorm; `None` if the draw is null.
    pub fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vector> {
        let v = self.random_vector(rng);
        let n = self.seminorm(&v).ok()?;
        (n > 1e-12).then(|| v.scale_real(1.0 / n))
    }

    /// Random scalar from the field (standard normal parts).
    pub fn random_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if self.field() == Field::Complex {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        Complex64::new(re, im)
    }
}

fn null_columns(eigenvalues: &[f64], scale: f64, column: impl Fn(usize) -> Vec<Complex64>) -> Vec<Vec<Complex64>> {
    eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| **l <= 1e-10 * scale)
        .map(|(k, _)| column(k))
        .collect()
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let field = match self.field() {
            Field::Real => "R",
            Field::Complex => "C",
        };
        match &self.0.kind {
            SpaceKind::Euclidean { dim } => write!(f, "{field}^{dim}"),
            SpaceKind::Weighted { gram } => write!(f, "{field}^{} (weighted)", gram.nrows()),
            SpaceKind::TruncatedSignal { len, horizon, channels } => {
                write!(f, "l2e {field}^{channels} (len {len}, truncated at {horizon})")
            }
        }
    }
}

/// An element of a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    space: Space,
    coords: Vec<Complex64>,
}

impl Vector {
    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<Complex64> {
        self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.space.sip_coords(&self.coords, &self.coords).re.max(0.0).sqrt()
    }

    pub fn sip(&self, other: &Vector) -> Result<Complex64> {
        self.space.sip(self, other)
    }

    pub fn try_add(&self, other: &Vector) -> Result<Vector> {
        self.space.check(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Vector) -> Result<Vector> {
        self.space.check(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// Scalar multiple; errors if a complex scalar is applied in a real space.
    pub fn try_scale(&self, a: Complex64) -> Result<Vector> {
        if !self.space.field().admits(a) {
            return Err(Error::FieldMismatch(format!("scalar {a} in a real space")));
        }
        Ok(self.map(|c| a * c))
    }

    pub fn scale_real(&self, a: f64) -> Vector {
        self.map(|c| c * a)
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &Vector) -> Result<f64> {
        Ok(self.try_sub(other)?.norm())
    }

    pub(crate) fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Vector {
        Vector {
            space: self.space.clone(),
            coords: self.coords.iter().map(|&c| f(c)).collect(),
        }
    }

    fn zip_with(&self, other: &Vector, f: impl Fn(Complex64, Complex64) -> Complex64) -> Vector {
        Vector {
            space: self.space.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Linear combination `Σ aᵢ vᵢ` without field checks (internal use where
    /// the scalars are known to be admissible).
    pub(crate) fn combination(space: &Space, terms: &[(Complex64, &Vector)]) -> Vector {
        let mut coords = vec![ZERO; space.dim()];
        for (a, v) in terms {
            for (c, x) in coords.iter_mut().zip(&v.coords) {
                *c += a * x;
            }
        }
        Vector {
            space: space.clone(),
            coords,
        }
    }
}

// Operator forms panic on mismatched spaces; use the `try_*` methods when the
// operands are not known to share a space.
impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.try_add(rhs).expect("vector addition across spaces")
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.try_sub(rhs).expect("vector subtraction across spaces")
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.map(|c| -c)
    }
}

impl Mul<&Vector> for Complex64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.map(|c| self * c)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scale_real(self)
    }
}

/// An element `(ξ₁, ξ₂)` of `V²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairVector {
    pub first: Vector,
    pub second: Vector,
}

impl PairVector {
    pub fn new(first: Vector, second: Vector) -> Result<Self> {
        first.space.check(&second)?;
        Ok(Self { first, second })
    }

    pub fn space(&self) -> &Space {
        &self.first.space
    }

    /// `‖ξ‖² = ‖ξ₁‖² + ‖ξ₂‖²`, square-rooted.
    pub fn norm(&self) -> f64 {
        (self.first.norm().powi(2) + self.second.norm().powi(2)).sqrt()
    }
}

/// `Nξ = (N₁₁ξ₁ + N₁₂ξ₂, N₂₁ξ₁ + N₂₂ξ₂)`.
pub fn pair_mat_apply(n: impl Into<Mat2>, xi: &PairVector) -> Result<PairVector> {
    let n = n.into();
    let field = xi.space().field();
    if let Some(e) = n.entries().iter().flatten().find(|e| !field.admits(**e)) {
        return Err(Error::FieldMismatch(format!(
            "matrix entry {e} applied in a real space"
        )));
    }
    let s = xi.space();
    let [[a, b], [c, d]] = n.entries();
    Ok(PairVector {
        first: Vector::combination(s, &[(a, &xi.first), (b, &xi.second)]),
        second: Vector::combination(s, &[(c, &xi.first), (d, &xi.second)]),
    })
}

/// `⟨ξ, ζ⟩ = ⟨ξ₁, ζ₁⟩ + ⟨ξ₂, ζ₂⟩`.
pub fn pair_sip(xi: &PairVector, zeta: &PairVector) -> Result<Complex64> {
    let s = xi.space();
    Ok(s.sip(&xi.first, &zeta.first)? + s.sip(&xi.second, &zeta.second)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::HermitianForm2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sip_examples() {
        let e = Space::euclidean(Field::Real, 2);
        let x = e.real_vector(&[1.0, 0.0]).unwrap();
        let y = e.real_vector(&[0.0, 1.0]).unwrap();
        assert_eq!(e.sip(&x, &y).unwrap(), ZERO);

        let w = Space::weighted_diag(Field::Real, &[1.0, 0.0]).unwrap();
        let v = w.real_vector(&[0.0, 5.0]).unwrap();
        assert_eq!(w.sip(&v, &v).unwrap(), ZERO);

        let t = Space::truncated(Field::Real, 4, 2);
        let s = t.real_vector(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.sip(&s, &s).unwrap(), c(5.0, 0.0));
    }

    #[test]
    fn seminorm_examples() {
        let e = Space::euclidean(Field::Real, 2);
        assert_eq!(e.seminorm(&e.real_vector(&[3.0, 4.0]).unwrap()).unwrap(), 5.0);
        let w = Space::weighted_diag(Field::Real, &[1.0, 0.0]).unwrap();
        assert_eq!(w.seminorm(&w.real_vector(&[0.0, 7.0]).unwrap()).unwrap(), 0.0);
        let t = Space::truncated(Field::Real, 3, 1);
        assert_eq!(t.seminorm(&t.real_vector(&[2.0, 9.0, 9.0]).unwrap()).unwrap(), 2.0);
    }

    #[test]
    fn linear_in_second_argument() {
        let s = Space::euclidean(Field::Complex, 1);
        let x = s.vector(vec![c(0.0, 1.0)]).unwrap();
        let y = s.vector(vec![c(1.0, 0.0)]).unwrap();
        // ⟨i, 1⟩ = conj(i)·1 = −i
        assert_eq!(s.sip(&x, &y).unwrap(), c(0.0, -1.0));
        assert_eq!(s.sip(&y, &x).unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn mismatched_spaces_error() {
        let a = Space::euclidean(Field::Real, 2);
        let b = Space::euclidean(Field::Real, 3);
        let err = a.sip(&a.zeros(), &b.zeros()).unwrap_err();
        assert!(matches!(err, Error::SpaceMismatch { .. }));
        assert!(a.vector(vec![ZERO; 3]).is_err());
        assert!(matches!(
            a.vector(vec![c(0.0, 1.0), ZERO]),
            Err(Error::FieldMismatch(_))
        ));
        // structurally equal spaces are the same space
        let a2 = Space::euclidean(Field::Real, 2);
        assert!(a.sip(&a.zeros(), &a2.zeros()).is_ok());
    }

    #[test]
    fn weighted_rejects_indefinite_gram() {
        let g = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), ZERO, ZERO, c(-1.0, 0.0)]);
        assert!(Space::weighted(Field::Real, g).is_err());
        let g = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), ZERO, c(1.0, 0.0)]);
        assert!(matches!(Space::weighted(Field::Real, g), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn pair_mat_apply_examples() {
        let s = Space::euclidean(Field::Real, 2);
        let a = s.real_vector(&[1.0, 2.0]).unwrap();
        let b = s.real_vector(&[-3.0, 0.5]).unwrap();
        let xi = PairVector::new(a.clone(), b.clone()).unwrap();
        assert_eq!(pair_mat_apply(Mat2::identity(), &xi).unwrap(), xi);

        let d = HermitianForm2::diag(1.0, -1.0);
        let xx = PairVector::new(a.clone(), a.clone()).unwrap();
        let out = pair_mat_apply(d, &xx).unwrap();
        assert_eq!(out.first, a);
        assert_eq!(out.second, -&a);

        let swap = HermitianForm2::real(0.0, 1.0, 0.0);
        let out = pair_mat_apply(swap, &xi).unwrap();
        assert_eq!(out.first, b);
        assert_eq!(out.second, a);

        let cplx = HermitianForm2::new(0.0, c(0.0, 1.0), 0.0);
        assert!(matches!(pair_mat_apply(cplx, &xi), Err(Error::FieldMismatch(_))));
    }

    #[test]
    fn pair_sip_examples() {
        let s = Space::euclidean(Field::Real, 2);
        let v = |a, b| s.real_vector(&[a, b]).unwrap();
        let xi = PairVector::new(v(1.0, 0.0), v(0.0, 1.0)).unwrap();
        assert_eq!(pair_sip(&xi, &xi).unwrap(), c(2.0, 0.0));
        let z1 = PairVector::new(v(1.0, 0.0), v(0.0, 0.0)).unwrap();
        let z2 = PairVector::new(v(0.0, 0.0), v(0.0, 1.0)).unwrap();
        assert_eq!(pair_sip(&z1, &z2).unwrap(), ZERO);

        let w = Space::weighted_diag(Field::Real, &[1.0, 0.0]).unwrap();
        let n = w.real_vector(&[0.0, 1.0]).unwrap();
        let xi = PairVector::new(n.clone(), n).unwrap();
        assert_eq!(pair_sip(&xi, &xi).unwrap(), ZERO);
    }

    #[test]
    fn null_basis_is_null() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = {
            let l = DMatrix::from_fn(4, 2, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            &l * l.adjoint()
        };
        let w = Space::weighted(Field::Complex, g).unwrap();
        let nb = w.null_basis();
        assert_eq!(nb.len(), 2);
        for v in &nb {
            assert!(v.norm() < 1e-7);
            assert!(v.coords().iter().map(|c| c.norm_sqr()).sum::<f64>() > 0.5);
        }
        let t = Space::truncated(Field::Real, 5, 3);
        assert_eq!(t.null_basis().len(), 2);
        assert!(Space::euclidean(Field::Real, 3).null_basis().is_empty());
    }
}
