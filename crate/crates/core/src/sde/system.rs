use crate::scalar::Scalar;

/// An SDE `dx = f(x) dt + Σ_k g_k(x) ∘ dW^k` as seen by the integrator.
///
/// All buffers are caller-provided so that hot loops stay allocation-free.
/// The noise amplitude (for Euler-like systems, `√ε`) is part of `g_k`.
pub trait SdeSystem<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    /// Number of independent Wiener processes `r`.
    fn noise_dim(&self) -> usize;

    /// `out = f(x)`.
    fn drift_into(&self, x: &[T], out: &mut [T]);

    /// `out = ∇f(x)`, row-major `n × n`.
    fn drift_jacobian_into(&self, x: &[T], out: &mut [T]);

    /// `out += Σ_k g_k(x) dW_k`.
    fn add_noise(&self, x: &[T], dw: &[T], out: &mut [T]);

    /// True when every `g_k` is constant, so the tangent flow carries no noise.
    fn additive_noise(&self) -> bool;

    /// `out = Σ_k ∇g_k(x) dW_k`, row-major `n × n`. Only consulted when the
    /// noise is not additive.
    fn noise_jacobian_into(&self, _x: &[T], _dw: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }
}
