//! Scalar abstraction shared by every numerical module.
//!
//! The engine is written once over [`Real`] and instantiated for `f32` and
//! `f64`. Complex quantities are `Complex<T>`, and matrices are nalgebra
//! dynamic matrices over `Complex<T>`.

use std::fmt::{Debug, Display};

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by the simulator.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or configuration value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Smallest tolerance that still means something at this precision.
    #[inline]
    fn floor_tol(tol: f64) -> Self {
        let eps = Self::default_epsilon().as_f64();
        Self::lit(tol.max(64.0 * eps))
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;
pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// `e^{jθ}`.
#[inline]
pub fn unit_phasor<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Squared modulus of a complex scalar.
#[inline]
pub fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Squared Euclidean norm of a complex vector.
pub fn norm2<T: Real>(v: &CVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + abs2(*z))
}

/// Real part of `x^H M x` for Hermitian `M`.
pub fn quad_form<T: Real>(m: &CMatrix<T>, x: &CVector<T>) -> T {
    let mx = m * x;
    x.iter()
        .zip(mx.iter())
        .fold(T::zero(), |acc, (a, b)| acc + (a.conj() * b).re)
}

/// Real part of `Tr(A^H B)`, the Frobenius inner product.
pub fn inner<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + (x.conj() * y).re)
}

/// Real trace of a square complex matrix.
pub fn trace_re<T: Real>(m: &CMatrix<T>) -> T {
    (0..m.nrows().min(m.ncols())).fold(T::zero(), |acc, i| acc + m[(i, i)].re)
}

/// `(M + M^H) / 2`.
pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let half = T::lit(0.5);
    (m + m.adjoint()).map(|z| z * half)
}

/// Outer product `x x^H`.
pub fn gram<T: Real>(x: &CVector<T>) -> CMatrix<T> {
    x * x.adjoint()
}

/// Smallest eigenvalue of a Hermitian matrix (0 for an empty matrix).
pub fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    let eig = hermitian_part(m).symmetric_eigenvalues();
    eig.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b))
}

/// Clamped secrecy-style difference `[x]^+`.
#[inline]
pub fn positive_part<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Base-2 logarithm expressed as `ln(x) / ln 2`.
#[inline]
pub fn log2<T: Real>(x: T) -> T {
    x.ln() / T::ln_2()
}
