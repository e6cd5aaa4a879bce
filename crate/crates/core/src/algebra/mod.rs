//! Exact polynomial vector-field algebra and the small dense linear algebra the
//! rest of the crate builds on.

pub mod matrix;
pub mod poly;
pub mod tensor;

pub use matrix::DenseMatrix;
pub use poly::{Monomial, MultiIndex, PolyVectorField, Polynomial};
pub use tensor::BilinearTensor;

use crate::error::Result;
use crate::scalar::Scalar;

/// Evaluates `f` at `x`.
pub fn eval_field<T: Scalar>(f: &PolyVectorField<T>, x: &[T]) -> Result<Vec<T>> {
    f.eval(x)
}

/// Exact Jacobian of `f` at `x`.
pub fn jacobian<T: Scalar>(f: &PolyVectorField<T>, x: &[T]) -> Result<DenseMatrix<T>> {
    f.jacobian(x)
}

pub fn divergence<T: Scalar>(f: &PolyVectorField<T>, x: &[T]) -> Result<T> {
    f.divergence(x)
}

/// `[X, Y] = (DY) X − (DX) Y`.
pub fn lie_bracket<T: Scalar>(x: &PolyVectorField<T>, y: &PolyVectorField<T>) -> Result<PolyVectorField<T>> {
    x.lie_bracket(y)
}

pub fn check_energy_conserving<T: Scalar>(b: &BilinearTensor<T>) -> bool {
    b.is_energy_conserving()
}

pub fn check_divergence_free<T: Scalar>(b: &BilinearTensor<T>) -> bool {
    b.is_divergence_free()
}
