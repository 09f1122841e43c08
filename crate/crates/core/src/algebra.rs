//! Lie algebra coordinates.
//!
//! Every algebra handled by this crate has dimension at most six, so an
//! [`AlgebraVector`] stores its coordinates inline and is `Copy`. The basis
//! ordering is fixed per group: `(ω₁, ω₂, ω₃)` for SO(3), `(v₁, v₂, ω)` for
//! SE(2) and `(v₁, v₂, v₃, ω₁, ω₂, ω₃)` for SE(3).

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{DVector, Vector3};

/// Largest algebra dimension among the supported groups.
pub const MAX_DIM: usize = 6;

#[derive(Clone, Copy, PartialEq)]
pub struct AlgebraVector {
    dim: usize,
    coords: [f64; MAX_DIM],
}

impl AlgebraVector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "algebra dimension {dim} exceeds {MAX_DIM}");
        AlgebraVector {
            dim,
            coords: [0.0; MAX_DIM],
        }
    }

    /// The `i`-th canonical basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut out = Self::zeros(dim);
        out.coords[i] = 1.0;
        out
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut out = Self::zeros(values.len());
        out.coords[..values.len()].copy_from_slice(values);
        out
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.coords[i] = f(i);
        }
        out
    }

    pub fn from_vector3(v: &Vector3<f64>) -> Self {
        Self::from_slice(v.as_slice())
    }

    /// Concatenates two 3-vectors, e.g. the `(v, ω)` parts of an se(3) element.
    pub fn from_parts(head: &Vector3<f64>, tail: &Vector3<f64>) -> Self {
        Self::from_slice(&[head.x, head.y, head.z, tail.x, tail.y, tail.z])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.check_dim(other);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    /// `self + scale * other`
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Self {
        self.check_dim(other);
        let mut out = *self;
        for i in 0..self.dim {
            out.coords[i] += scale * other.coords[i];
        }
        out
    }

    /// First three coordinates.
    pub fn head3(&self) -> Vector3<f64> {
        Vector3::new(self.coords[0], self.coords[1], self.coords[2])
    }

    /// Coordinates 3..6.
    pub fn tail3(&self) -> Vector3<f64> {
        Vector3::new(self.coords[3], self.coords[4], self.coords[5])
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(self.as_slice())
    }

    pub fn from_dvector(v: &DVector<f64>) -> Self {
        Self::from_slice(v.as_slice())
    }

    #[inline]
    fn check_dim(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "algebra dimension mismatch");
    }
}

impl fmt::Debug for AlgebraVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for AlgebraVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for AlgebraVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for AlgebraVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.add_scaled(&rhs, 1.0)
    }
}

impl Sub for AlgebraVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.add_scaled(&rhs, -1.0)
    }
}

impl Neg for AlgebraVector {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul<f64> for AlgebraVector {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for x in self.as_mut_slice() {
            *x *= rhs;
        }
        self
    }
}

impl AddAssign for AlgebraVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = self.add_scaled(&rhs, 1.0);
    }
}

impl SubAssign for AlgebraVector {
    fn sub_assign(&mut self, rhs: Self) {
        *self = self.add_scaled(&rhs, -1.0);
    }
}

impl std::iter::Sum for AlgebraVector {
    /// Panics on an empty iterator; callers start from an explicit zero instead.
    fn sum<I: Iterator<Item = Self>>(mut iter: I) -> Self {
        let first = iter.next().expect("sum of an empty algebra iterator");
        iter.fold(first, |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = AlgebraVector::from_slice(&[1.0, 2.0, 3.0]);
        let b = AlgebraVector::basis(3, 1);
        assert_eq!((a - b).as_slice(), &[1.0, 1.0, 3.0]);
        assert_eq!((a * 2.0).as_slice(), &[2.0, 4.0, 6.0]);
        assert_eq!(a.dot(&b), 2.0);
        assert_eq!((-a)[2], -3.0);
        assert!((a.norm() - 14f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn mismatched_dimensions_panic() {
        let _ = AlgebraVector::zeros(3) + AlgebraVector::zeros(6);
    }

    #[test]
    fn parts_roundtrip() {
        let v = Vector3::new(1.0, 2.0, 3.0);
        let w = Vector3::new(4.0, 5.0, 6.0);
        let x = AlgebraVector::from_parts(&v, &w);
        assert_eq!(x.dim(), 6);
        assert_eq!(x.head3(), v);
        assert_eq!(x.tail3(), w);
    }
}
