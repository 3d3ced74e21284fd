use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Values an integrand may return: scalars or fixed-length complex vectors.
///
/// Error control is per component, so a vector integrand converges only when
/// each of its components does.
pub trait QuadValue: Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn dims(&self) -> usize;
    /// Modulus of component `i`.
    fn magnitude(&self, i: usize) -> f64;
    fn is_finite(&self) -> bool {
        (0..self.dims()).all(|i| self.magnitude(i).is_finite())
    }
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn dims(&self) -> usize {
        1
    }
    fn magnitude(&self, _: usize) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn dims(&self) -> usize {
        1
    }
    fn magnitude(&self, _: usize) -> f64 {
        self.norm()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Fixed-length complex vector, used to integrate several related kernels in
/// one adaptive pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVec<const N: usize>(pub [Complex64; N]);

impl<const N: usize> Add for CVec<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for CVec<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for CVec<N> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const N: usize> QuadValue for CVec<N> {
    fn zero() -> Self {
        CVec([Complex64::new(0.0, 0.0); N])
    }
    fn dims(&self) -> usize {
        N
    }
    fn magnitude(&self, i: usize) -> f64 {
        self.0[i].norm()
    }
}
