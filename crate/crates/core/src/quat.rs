//! Quaternion scalars and vectors with the one-norm calculus used by the controllers.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, AddAssign, Deref, DerefMut, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// `w + x·i + y·j + z·k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 4]", into = "[T; 4]")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> From<[T; 4]> for Quaternion<T> {
    fn from(c: [T; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }
}

impl<T: Scalar> From<Quaternion<T>> for [T; 4] {
    fn from(q: Quaternion<T>) -> Self {
        q.to_array()
    }
}

impl<T: Scalar> Quaternion<T> {
    #[inline]
    pub const fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn zero() -> Self {
        Self::real(T::zero())
    }

    pub fn one() -> Self {
        Self::real(T::one())
    }

    pub fn i() -> Self {
        Self::new(T::zero(), T::one(), T::zero(), T::zero())
    }

    pub fn j() -> Self {
        Self::new(T::zero(), T::zero(), T::one(), T::zero())
    }

    pub fn k() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn real(w: T) -> Self {
        Self::new(w, T::zero(), T::zero(), T::zero())
    }

    /// Builds from `f64` literals, convenient for presets and tests.
    pub fn from_f64(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self::new(T::lit(w), T::lit(x), T::lit(y), T::lit(z))
    }

    #[inline]
    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    #[inline]
    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.w), f(self.x), f(self.y), f(self.z))
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        self.map(|c| c * s)
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Euclidean modulus `|q| = sqrt(q q*)`.
    #[inline]
    pub fn modulus(self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// `|w| + |x| + |y| + |z|`.
    #[inline]
    pub fn one_norm(self) -> T {
        self.w.abs() + self.x.abs() + self.y.abs() + self.z.abs()
    }

    /// Component-wise sign with `sign(0) = 0`.
    #[inline]
    pub fn sign(self) -> Self {
        self.map(T::signum3)
    }

    /// Bracket power `[q]^r = sgn(q)·‖q‖₁^r`. This is not quaternion exponentiation.
    pub fn pow_r(self, r: T) -> Result<Self> {
        if !(r > T::zero()) {
            return Err(Error::NonPositiveExponent(r.to_f64_lossy()));
        }
        Ok(self.pow_r_unchecked(r))
    }

    /// [`Quaternion::pow_r`] for callers that validated `r > 0` up front.
    #[inline]
    pub(crate) fn pow_r_unchecked(self, r: T) -> Self {
        let n = self.one_norm();
        if n == T::zero() {
            return Self::zero();
        }
        self.sign().scale(n.powf(r))
    }

    /// Number of nonzero components.
    pub fn support(self) -> usize {
        self.to_array().iter().filter(|c| **c != T::zero()).count()
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    pub fn cd_split(self) -> CayleyDickson<T> {
        CayleyDickson {
            first: Complex::new(self.w, self.x),
            second: Complex::new(self.y, self.z),
        }
    }

    pub fn cd_join(p: CayleyDickson<T>) -> Self {
        Self::new(p.first.re, p.first.im, p.second.re, p.second.im)
    }
}

impl<T: Scalar> Add for Quaternion<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Quaternion<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Neg for Quaternion<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.map(|c| -c)
    }
}

impl<T: Scalar> AddAssign for Quaternion<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Quaternion<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

/// Hamilton product.
impl<T: Scalar> Mul for Quaternion<T> {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let a = self;
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl<T: Scalar> fmt::Display for Quaternion<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sgn = |v: T| if v < T::zero() { '-' } else { '+' };
        write!(
            f,
            "{}{}{}i{}{}j{}{}k",
            self.w,
            sgn(self.x),
            self.x.abs(),
            sgn(self.y),
            self.y.abs(),
            sgn(self.z),
            self.z.abs()
        )
    }
}

/// `q = first + second·j` with complex `first = w + x·i`, `second = y + z·i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CayleyDickson<T> {
    pub first: Complex<T>,
    pub second: Complex<T>,
}

impl<T: Scalar> CayleyDickson<T> {
    pub fn new(first: Complex<T>, second: Complex<T>) -> Self {
        Self { first, second }
    }

    /// Pair product `(a₁b₁ − a₂·conj(b₂), a₁b₂ + a₂·conj(b₁))`, equal to the Hamilton product.
    pub fn mul(self, b: Self) -> Self {
        let (a1, a2) = (self.first, self.second);
        Self::new(a1 * b.first - a2 * b.second.conj(), a1 * b.second + a2 * b.first.conj())
    }

    /// The isomorphic complex matrix `[[A₁, A₂], [−conj(A₂), conj(A₁)]]`.
    pub fn matrix(self) -> [[Complex<T>; 2]; 2] {
        [
            [self.first, self.second],
            [-self.second.conj(), self.first.conj()],
        ]
    }

    /// Inverse of [`CayleyDickson::matrix`], reading the first row.
    pub fn from_matrix(m: [[Complex<T>; 2]; 2]) -> Self {
        Self::new(m[0][0], m[0][1])
    }
}

/// Plain 2×2 complex matrix product.
pub fn complex_matmul<T: Scalar>(a: [[Complex<T>; 2]; 2], b: [[Complex<T>; 2]; 2]) -> [[Complex<T>; 2]; 2] {
    let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// Fixed-length vector of quaternions, one per neuron.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct QVector<T> {
    elems: Vec<Quaternion<T>>,
}

impl<T: Scalar> QVector<T> {
    pub fn new(elems: Vec<Quaternion<T>>) -> Self {
        Self { elems }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![Quaternion::zero(); n])
    }

    pub fn into_inner(self) -> Vec<Quaternion<T>> {
        self.elems
    }

    pub fn as_slice(&self) -> &[Quaternion<T>] {
        &self.elems
    }

    /// `Σ_p ‖v_p‖₁`, summed in ascending index order.
    pub fn one_norm(&self) -> T {
        one_norm(&self.elems)
    }

    pub fn sign(&self) -> Self {
        self.elems.iter().map(|q| q.sign()).collect()
    }

    pub fn pow_r(&self, r: T) -> Result<Self> {
        self.elems.iter().map(|q| q.pow_r(r)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.elems.iter().all(|q| q.is_finite())
    }

    /// Element-wise `self − other`.
    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(self.iter().zip(other.iter()).map(|(a, b)| *a - *b).collect())
    }

    /// Element-wise `self + other`.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(self.iter().zip(other.iter()).map(|(a, b)| *a + *b).collect())
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.iter()
            .zip(other.iter())
            .flat_map(|(a, b)| (*a - *b).to_array())
            .fold(T::zero(), |m, c| m.max(c.abs()))
    }
}

pub(crate) fn one_norm<T: Scalar>(v: &[Quaternion<T>]) -> T {
    v.iter().fold(T::zero(), |s, q| s + q.one_norm())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}

impl<T> Deref for QVector<T> {
    type Target = [Quaternion<T>];
    fn deref(&self) -> &Self::Target {
        &self.elems
    }
}

impl<T> DerefMut for QVector<T> {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.elems
    }
}

impl<T> Index<usize> for QVector<T> {
    type Output = Quaternion<T>;
    fn index(&self, i: usize) -> &Quaternion<T> {
        &self.elems[i]
    }
}

impl<T> IndexMut<usize> for QVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut Quaternion<T> {
        &mut self.elems[i]
    }
}

impl<T> FromIterator<Quaternion<T>> for QVector<T> {
    fn from_iter<I: IntoIterator<Item = Quaternion<T>>>(iter: I) -> Self {
        Self { elems: iter.into_iter().collect() }
    }
}

impl<T> From<Vec<Quaternion<T>>> for QVector<T> {
    fn from(elems: Vec<Quaternion<T>>) -> Self {
        Self { elems }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Q = Quaternion<f64>;

    fn q(w: f64, x: f64, y: f64, z: f64) -> Q {
        Q::new(w, x, y, z)
    }

    fn quat() -> impl Strategy<Value = Q> {
        prop::array::uniform4(-1.0f64..1.0).prop_map(Q::from)
    }

    #[test]
    fn multiplication_table() {
        let (i, j, k) = (Q::i(), Q::j(), Q::k());
        assert_eq!(i * j, k);
        assert_eq!(j * i, -k);
        assert_eq!(j * k, i);
        assert_eq!(k * j, -i);
        assert_eq!(k * i, j);
        assert_eq!(i * k, -j);
        assert_eq!(i * i, -Q::one());
        assert_eq!(i * j * k, -Q::one());
    }

    #[test]
    fn norms() {
        let a = q(1.0, -2.0, 3.0, -4.0);
        assert_eq!(a.one_norm(), 10.0);
        assert!((a.modulus() - 30f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.conj().conj(), a);
    }

    #[test]
    fn sign_of_mixed_and_zero() {
        assert_eq!(q(1.0, -2.0, 0.0, 4.0).sign(), q(1.0, -1.0, 0.0, 1.0));
        assert_eq!(Q::zero().sign(), Q::zero());
    }

    #[test]
    fn bracket_power() {
        let p = q(0.0, 3.0, 0.0, 0.0).pow_r(0.5).unwrap();
        assert!((p.x - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.support(), 1);
        assert_eq!(Q::zero().pow_r(0.3).unwrap(), Q::zero());
        assert!(matches!(Q::one().pow_r(0.0), Err(Error::NonPositiveExponent(_))));
        assert!(matches!(Q::one().pow_r(-1.0), Err(Error::NonPositiveExponent(_))));
        let unit = q(0.25, -0.25, 0.25, -0.25);
        assert_eq!(unit.pow_r(1.7).unwrap(), unit.sign());
    }

    #[test]
    fn vector_lifts() {
        let v = QVector::new(vec![q(1.0, 1.0, 0.0, 0.0), q(0.0, 0.0, 1.0, -1.0)]);
        assert_eq!(v.one_norm(), 4.0);
        assert_eq!(QVector::<f64>::zeros(3).sign(), QVector::zeros(3));
        assert!(matches!(
            v.try_sub(&QVector::zeros(3)),
            Err(Error::LengthMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn cd_split_by_definition() {
        let p = q(1.0, 2.0, 3.0, 4.0).cd_split();
        assert_eq!(p.first, Complex::new(1.0, 2.0));
        assert_eq!(p.second, Complex::new(3.0, 4.0));
    }

    #[test]
    fn f32_instantiation() {
        let a = Quaternion::<f32>::i() * Quaternion::j();
        assert_eq!(a, Quaternion::k());
        assert_eq!(Quaternion::<f32>::from_f64(1.0, -2.0, 3.0, -4.0).one_norm(), 10.0);
    }

    #[test]
    fn serde_as_four_array() {
        let a = q(1.5, -2.0, 0.25, 3.0);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[1.5,-2.0,0.25,3.0]");
        assert_eq!(serde_json::from_str::<Q>(&s).unwrap(), a);
    }

    proptest! {
        #[test]
        fn hamilton_matches_matrix_representation(a in quat(), b in quat()) {
            let m = complex_matmul(a.cd_split().matrix(), b.cd_split().matrix());
            let viam = Q::cd_join(CayleyDickson::from_matrix(m));
            prop_assert!((a * b).max_abs_diff_q(viam) < 1e-15);
        }

        #[test]
        fn modulus_is_multiplicative(a in quat(), b in quat()) {
            prop_assert!(((a * b).modulus() - a.modulus() * b.modulus()).abs() < 1e-14);
        }

        #[test]
        fn sign_norm_counts_support(a in quat(), mask in 0u8..16) {
            let m = a.to_array();
            let masked = Q::new(
                if mask & 1 == 0 { 0.0 } else { m[0] },
                if mask & 2 == 0 { 0.0 } else { m[1] },
                if mask & 4 == 0 { 0.0 } else { m[2] },
                if mask & 8 == 0 { 0.0 } else { m[3] },
            );
            prop_assert_eq!(masked.sign().one_norm(), masked.support() as f64);
        }

        #[test]
        fn pow_one_is_sign_times_norm(a in quat()) {
            let direct = a.sign().scale(a.one_norm());
            prop_assert!(a.pow_r(1.0).unwrap().max_abs_diff_q(direct) <= 1e-15);
        }

        #[test]
        fn vec_pow_is_elementwise(v in prop::collection::vec(quat(), 1..8), r in 0.05f64..3.0) {
            let v = QVector::new(v);
            let lifted = v.pow_r(r).unwrap();
            for (p, e) in lifted.iter().zip(v.iter()) {
                prop_assert_eq!(*p, e.pow_r(r).unwrap());
            }
        }

        #[test]
        fn cd_round_trip(a in quat()) {
            prop_assert_eq!(Q::cd_join(a.cd_split()), a);
        }
    }

    impl Q {
        fn max_abs_diff_q(self, o: Q) -> f64 {
            (self - o).to_array().iter().fold(0.0, |m, c| m.max(c.abs()))
        }
    }
}
