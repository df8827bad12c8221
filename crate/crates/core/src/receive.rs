//! Closed-form SINR-optimal receive combiner.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::scalar::{CMatrix, CVector, Real, hermitian_part, norm2, real};

/// Interference-plus-noise covariance `ρ H_SI (W+V) H_SI^H + σ_B² I`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceCovariance<T: Real>(pub CMatrix<T>);

impl<T: Real> InterferenceCovariance<T> {
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }
}

/// Norm below which the UL channel is treated as absent.
pub const DEGENERATE_NORM: f64 = 1e-15;

pub fn build_interference_covariance<T: Real>(
    h_si: &CMatrix<T>,
    w: &CMatrix<T>,
    v: &CMatrix<T>,
    rho: T,
    sigma_b2: T,
) -> InterferenceCovariance<T> {
    let n_r = h_si.nrows();
    let mut a = CMatrix::identity(n_r, n_r).map(|z| z * sigma_b2);
    if rho > T::zero() {
        let si = h_si * (w + v) * h_si.adjoint();
        a += si.map(|z| z * rho);
    }
    InterferenceCovariance(hermitian_part(&a))
}

/// `A^{-1} h_UB / ‖A^{-1} h_UB‖`, computed with a Cholesky solve.
pub fn optimal_receive_beamformer<T: Real>(a: &InterferenceCovariance<T>, h_ub: &CVector<T>) -> Result<CVector<T>> {
    if a.0.nrows() != h_ub.len() {
        return Err(Error::Dimension(format!(
            "covariance is {}x{} but channel has {} entries",
            a.0.nrows(),
            a.0.ncols(),
            h_ub.len()
        )));
    }
    if norm2(h_ub).sqrt() < T::lit(DEGENERATE_NORM) {
        return Err(Error::DegenerateChannel("uplink channel is zero"));
    }
    let chol = Cholesky::new(a.0.clone())
        .ok_or_else(|| Error::Dimension("interference covariance is not positive definite".into()))?;
    let x = chol.solve(h_ub);
    let n = norm2(&x).sqrt();
    Ok(x.map(|z| z / real(n)))
}
