//! Fixed-size complex 3×3 kernel.
//!
//! Everything in the crate lives on a three-level Hilbert space, so matrices
//! are plain `[[C64; 3]; 3]` values with closed-form inverse and the
//! structural predicates (hermiticity, projector, involution) the solution
//! builders assert on their outputs.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tolerances;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexVec3(pub [C64; 3]);

impl ComplexVec3 {
    pub fn new(a: C64, b: C64, c: C64) -> Self {
        Self([a, b, c])
    }

    pub fn from_real(a: f64, b: f64, c: f64) -> Self {
        Self([C64::from(a), C64::from(b), C64::from(c)])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest component modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    /// Outer product `|self⟩⟨other|`.
    pub fn outer(&self, other: &Self) -> ComplexMat3 {
        let mut m = ComplexMat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i] * other.0[j].conj();
            }
        }
        m
    }
}

impl Index<usize> for ComplexVec3 {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMat3(pub [[C64; 3]; 3]);

impl Default for ComplexMat3 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl ComplexMat3 {
    pub const fn zeros() -> Self {
        Self([[ZERO; 3]; 3])
    }

    pub const fn identity() -> Self {
        Self([[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]])
    }

    pub fn diag(d: [C64; 3]) -> Self {
        let mut m = Self::zeros();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = v;
        }
        m
    }

    pub fn diag_real(a: f64, b: f64, c: f64) -> Self {
        Self::diag([a.into(), b.into(), c.into()])
    }

    pub fn from_real_rows(rows: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = rows[i][j].into();
            }
        }
        m
    }

    /// |k⟩⟨k| for a zero-based level index.
    pub fn basis_projector(k: usize) -> Self {
        let mut m = Self::zeros();
        m.0[k][k] = ONE;
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|x| *x *= s);
        m
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::from(s))
    }

    /// Induced ∞-norm (largest absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .map(|row| row.iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn determinant(&self) -> C64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// ‖M − M†‖∞
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).norm_inf()
    }

    /// ‖M² − M‖∞
    pub fn idempotency_defect(&self) -> f64 {
        (*self * *self - *self).norm_inf()
    }

    /// ‖M² − I‖∞
    pub fn involution_defect(&self) -> f64 {
        (*self * *self - Self::identity()).norm_inf()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol && self.idempotency_defect() < tol
    }

    pub fn is_involution(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol && self.involution_defect() < tol
    }

    /// Column `k` as a vector.
    pub fn column(&self, k: usize) -> ComplexVec3 {
        ComplexVec3([self.0[0][k], self.0[1][k], self.0[2][k]])
    }
}

impl Index<(usize, usize)> for ComplexMat3 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Add for ComplexMat3 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ComplexMat3 {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for ComplexMat3 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl Neg for ComplexMat3 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_real(-1.0)
    }
}

impl Mul for ComplexMat3 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        m
    }
}

impl Mul<ComplexVec3> for ComplexMat3 {
    type Output = ComplexVec3;
    fn mul(self, v: ComplexVec3) -> ComplexVec3 {
        let a = &self.0;
        let mut out = [ZERO; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = a[i][0] * v.0[0] + a[i][1] * v.0[1] + a[i][2] * v.0[2];
        }
        ComplexVec3(out)
    }
}

impl Mul<C64> for ComplexMat3 {
    type Output = Self;
    fn mul(self, s: C64) -> Self {
        self.scale(s)
    }
}

impl Mul<ComplexMat3> for C64 {
    type Output = ComplexMat3;
    fn mul(self, m: ComplexMat3) -> ComplexMat3 {
        m.scale(self)
    }
}

/// P = |v⟩⟨v| / ⟨v|v⟩.
pub fn projector_from_vector(v: &ComplexVec3) -> Result<ComplexMat3> {
    let scale = v.max_abs();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::ZeroVector);
    }
    let u = v.scale(C64::from(1.0 / scale));
    let n = u.norm_sqr();
    if n < tolerances::ZERO_VECTOR_NORM_SQR {
        return Err(Error::ZeroVector);
    }
    Ok(u.outer(&u).scale_real(1.0 / n))
}

/// M = 2P − I.
pub fn involution_from_projector(p: &ComplexMat3) -> Result<ComplexMat3> {
    if !p.is_finite() || !p.is_projector(tolerances::PROJECTOR_CHECK) {
        return Err(Error::NotAProjector {
            defect: p.hermiticity_defect().max(p.idempotency_defect()),
        });
    }
    Ok(p.scale_real(2.0) - ComplexMat3::identity())
}

/// Closed-form adjugate inverse, rejected when ‖m‖∞‖m⁻¹‖∞ exceeds the cap.
pub fn inverse3(m: &ComplexMat3) -> Result<ComplexMat3> {
    let a = &m.0;
    let det = m.determinant();
    let mnorm = m.norm_inf();
    if !(det.norm() > 0.0) || !det.is_finite() || !m.is_finite() {
        return Err(Error::SingularMatrix {
            condition: f64::INFINITY,
        });
    }
    let mut adj = ComplexMat3::zeros();
    // adj[j][i] = cofactor(i, j)
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            adj.0[j][i] = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
        }
    }
    let inv = adj.scale(det.inv());
    let cond = mnorm * inv.norm_inf();
    if !cond.is_finite() || cond > tolerances::CONDITION_CAP {
        return Err(Error::SingularMatrix { condition: cond });
    }
    Ok(inv)
}

/// [a, b] = ab − ba.
pub fn commutator(a: &ComplexMat3, b: &ComplexMat3) -> ComplexMat3 {
    *a * *b - *b * *a
}
