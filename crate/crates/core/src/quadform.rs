//! 2×2 Hermitian forms over ℝ or ℂ: definiteness, the indefinite
//! factorization `M = P*JP`, and quadratic constraints on pair vectors.
//!
//! Everything is closed form; no iterative eigensolver is involved.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::space::{pair_mat_apply, pair_sip, PairVector};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Multiplier used by the large-η branch of [`HermitianForm2::nonneg_direction`].
pub const LARGE_ETA_FACTOR: f64 = 4.0;

/// General 2×2 matrix over ℂ, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    /// `J = diag(1, −1)`.
    pub fn j() -> Self {
        Mat2([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn real(rows: [[f64; 2]; 2]) -> Self {
        Mat2(rows.map(|r| r.map(Complex64::from)))
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Mat2([[a, ZERO], [ZERO, b]])
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Mat2([[a.conj(), c.conj()], [b.conj(), d.conj()]])
    }

    pub fn det(&self) -> Complex64 {
        let [[a, b], [c, d]] = self.0;
        a * d - b * c
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() <= f64::EPSILON * self.frobenius().powi(2) || det == ZERO {
            return None;
        }
        let [[a, b], [c, d]] = self.0;
        Some(Mat2([[d / det, -b / det], [-c / det, a / det]]))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let gram = self.adjoint() * *self;
        let h = HermitianForm2::new(gram.0[0][0].re, gram.0[0][1], gram.0[1][1].re);
        h.eigenvalues()[1].max(0.0).sqrt()
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let [[a, b], [c, d]] = self.0;
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().flatten().all(|z| z.im == 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2(self.0.map(|r| r.map(|z| z * s)))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = self.0;
        let b = rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self.0;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] -= rhs.0[i][j];
            }
        }
        Mat2(out)
    }
}

impl From<HermitianForm2> for Mat2 {
    fn from(h: HermitianForm2) -> Self {
        h.to_mat2()
    }
}

impl From<&HermitianForm2> for Mat2 {
    fn from(h: &HermitianForm2) -> Self {
        h.to_mat2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    NegDef,
    NegSemi,
    Indef,
    PosSemi,
    PosDef,
}

/// A 2×2 Hermitian matrix `[[m11, m12], [conj(m12), m22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianForm2 {
    pub m11: f64,
    pub m12: Complex64,
    pub m22: f64,
}

/// A nonnegative direction `[1; η]` of a form, or the vertical direction
/// `[0; 1]` when no finite `η` works.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    Finite(Complex64),
    Vertical,
}

/// `M = P* J P` with `J = diag(1, −1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndefFactorization {
    pub p: Mat2,
}

impl IndefFactorization {
    pub fn reconstruct(&self) -> Mat2 {
        self.p.adjoint() * Mat2::j() * self.p
    }

    /// `P⁻¹ J P`.
    pub fn similarity(&self) -> Mat2 {
        let pinv = self.p.inverse().expect("factor P is invertible by construction");
        pinv * Mat2::j() * self.p
    }

    /// `P* P` as a Hermitian form.
    pub fn gram(&self) -> HermitianForm2 {
        let g = self.p.adjoint() * self.p;
        HermitianForm2::new(g.0[0][0].re, g.0[0][1], g.0[1][1].re)
    }

    /// `κ = ‖P⁻¹ J P‖₂`.
    pub fn kappa(&self) -> f64 {
        self.similarity().spectral_norm()
    }
}

impl HermitianForm2 {
    pub fn new(m11: f64, m12: Complex64, m22: f64) -> Self {
        Self { m11, m12, m22 }
    }

    pub fn real(m11: f64, m12: f64, m22: f64) -> Self {
        Self::new(m11, Complex64::from(m12), m22)
    }

    pub fn diag(m11: f64, m22: f64) -> Self {
        Self::real(m11, 0.0, m22)
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    /// Builds a form from a full matrix, rejecting non-Hermitian input.
    pub fn from_entries(e: [[Complex64; 2]; 2], tol: f64) -> Result<Self> {
        let scale = 1.0 + Mat2(e).frobenius();
        if e[0][0].im.abs() > tol * scale || e[1][1].im.abs() > tol * scale {
            return Err(Error::NonHermitian("diagonal entries must be real".into()));
        }
        if (e[0][1] - e[1][0].conj()).norm() > tol * scale {
            return Err(Error::NonHermitian(format!(
                "off-diagonal entries {} and {} are not conjugate",
                e[0][1], e[1][0]
            )));
        }
        Ok(Self::new(e[0][0].re, (e[0][1] + e[1][0].conj()) * 0.5, e[1][1].re))
    }

    pub fn m21(&self) -> Complex64 {
        self.m12.conj()
    }

    pub fn to_mat2(&self) -> Mat2 {
        Mat2([
            [Complex64::from(self.m11), self.m12],
            [self.m21(), Complex64::from(self.m22)],
        ])
    }

    pub fn is_real(&self) -> bool {
        self.m12.im == 0.0
    }

    pub fn frobenius(&self) -> f64 {
        (self.m11 * self.m11 + 2.0 * self.m12.norm_sqr() + self.m22 * self.m22).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m22 * s)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12.norm_sqr()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.m11 + self.m22);
        let h = (0.5 * (self.m11 - self.m22)).hypot(self.m12.norm());
        let det = self.det();
        // recover the small-magnitude root from the product to avoid cancellation
        if mean >= 0.0 {
            let hi = mean + h;
            let lo = if hi != 0.0 { det / hi } else { mean - h };
            [lo.min(hi), hi]
        } else {
            let lo = mean - h;
            let hi = det / lo;
            [lo, hi.max(lo)]
        }
    }

    /// Unit eigenvector of the largest eigenvalue.
    fn top_eigenvector(&self, lambda: f64) -> [Complex64; 2] {
        let v = if self.m11 >= self.m22 {
            [Complex64::from(lambda - self.m22), self.m21()]
        } else {
            [self.m12, Complex64::from(lambda - self.m11)]
        };
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if n == 0.0 {
            [ONE, ZERO]
        } else {
            [v[0] / n, v[1] / n]
        }
    }

    /// Ascending eigenvalues with a unitary matrix whose columns are the
    /// matching eigenvectors.
    pub fn eigen(&self) -> ([f64; 2], Mat2) {
        let vals = self.eigenvalues();
        let top = self.top_eigenvector(vals[1]);
        let low = [-top[1].conj(), top[0].conj()];
        (vals, Mat2([[low[0], top[0]], [low[1], top[1]]]))
    }

    /// Eigenvalues below `−threshold` count as negative, above as positive,
    /// where `threshold = 1e−10·(1 + ‖A‖_F)`.
    pub fn definiteness_threshold(&self) -> f64 {
        1e-10 * (1.0 + self.frobenius())
    }

    pub fn definiteness(&self) -> Definiteness {
        let [lo, hi] = self.eigenvalues();
        let t = self.definiteness_threshold();
        let sign = |l: f64| {
            if l < -t {
                -1
            } else if l > t {
                1
            } else {
                0
            }
        };
        match (sign(lo), sign(hi)) {
            (-1, -1) => Definiteness::NegDef,
            (-1, 0) => Definiteness::NegSemi,
            (-1, 1) => Definiteness::Indef,
            (0, 1) | (0, 0) => Definiteness::PosSemi,
            _ => Definiteness::PosDef,
        }
    }

    /// The largest `η > 0` with `A ⪯ −ηI`.
    pub fn neg_def_margin(&self) -> Result<f64> {
        match self.definiteness() {
            Definiteness::NegDef => Ok(-self.eigenvalues()[1]),
            d => Err(Error::NotNegDef {
                definiteness: d,
                eigenvalues: self.eigenvalues(),
            }),
        }
    }

    /// `P` with `P* J P = M`, built from the eigendecomposition
    /// `M = U diag(λ₊, −λ₋) U*` as `P = diag(√λ₊, √λ₋) U*`.
    pub fn factor_indefinite(&self) -> Result<IndefFactorization> {
        let d = self.definiteness();
        if d != Definiteness::Indef {
            return Err(Error::NotIndefinite(d));
        }
        let ([neg, pos], u) = self.eigen();
        let (sp, sn) = (pos.sqrt(), (-neg).sqrt());
        let uh = u.adjoint();
        // row 0 of U* is the λ₊ eigenvector (column 1 of U)
        let p = Mat2([[uh.0[1][0] * sp, uh.0[1][1] * sp], [uh.0[0][0] * sn, uh.0[0][1] * sn]]);
        Ok(IndefFactorization { p })
    }

    /// `[1; η]* M [1; η] = M₁₁ + 2 Re(M₁₂ η) + M₂₂ |η|²`.
    pub fn direction_value(&self, eta: Complex64) -> f64 {
        self.m11 + 2.0 * (self.m12 * eta).re + self.m22 * eta.norm_sqr()
    }

    /// `v* M v` for `v ∈ F²`.
    pub fn quad(&self, v: [Complex64; 2]) -> f64 {
        self.m11 * v[0].norm_sqr() + 2.0 * (v[0].conj() * self.m12 * v[1]).re + self.m22 * v[1].norm_sqr()
    }

    /// Some `η` with `[1; η]* M [1; η] ≥ 0`, taken from the top eigenvector.
    pub fn nonneg_direction(&self) -> Result<Direction> {
        if self.definiteness() == Definiteness::NegDef {
            return Err(Error::NegDefInput);
        }
        let [_, hi] = self.eigenvalues();
        let v = self.top_eigenvector(hi);
        if v[0].norm() > 1e-8 {
            let eta = v[1] / v[0];
            let eta = if self.is_real() { Complex64::from(eta.re) } else { eta };
            if self.direction_value(eta) >= 0.0 {
                return Ok(Direction::Finite(eta));
            }
        }
        if self.m11 >= 0.0 {
            return Ok(Direction::Finite(ZERO));
        }
        if self.m22 > self.definiteness_threshold() {
            // large-η branch: align the phase so Re(M₁₂ η) ≥ 0, then take
            // |η| past the positive root of M₂₂t² − 2|M₁₂|t − |M₁₁|
            let (a, b, c) = (self.m11.abs(), self.m12.norm(), self.m22);
            let root = (b + (b * b + c * a).sqrt()) / c;
            let t = (LARGE_ETA_FACTOR * (1.0 + b + a) / c).max(2.0 * root);
            let phase = if b > 0.0 { self.m12.conj() / b } else { ONE };
            return Ok(Direction::Finite(phase * t));
        }
        Ok(Direction::Vertical)
    }

    /// `⟨ξ, Aξ⟩` in `V²` (always real for Hermitian `A`).
    pub fn qc_eval(&self, xi: &PairVector) -> Result<f64> {
        let image = pair_mat_apply(*self, xi)?;
        Ok(pair_sip(xi, &image)?.re)
    }

    /// Natural magnitude of `qc_eval` on `ξ`, used to scale tolerances.
    pub fn qc_scale(&self, xi: &PairVector) -> f64 {
        self.frobenius() * (xi.first.norm().powi(2) + xi.second.norm().powi(2))
    }
}

impl Add for HermitianForm2 {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self::new(self.m11 + r.m11, self.m12 + r.m12, self.m22 + r.m22)
    }
}

impl Sub for HermitianForm2 {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        Self::new(self.m11 - r.m11, self.m12 - r.m12, self.m22 - r.m22)
    }
}

impl Neg for HermitianForm2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.m11, -self.m12, -self.m22)
    }
}

impl fmt::Display for HermitianForm2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // adding 0.0 turns -0.0 into 0.0
        let off = |z: Complex64| {
            if z.im == 0.0 {
                format!("{}", z.re + 0.0)
            } else {
                format!("{}{:+}i", z.re + 0.0, z.im + 0.0)
            }
        };
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m11 + 0.0,
            off(self.m12),
            off(self.m21()),
            self.m22 + 0.0
        )
    }
}
