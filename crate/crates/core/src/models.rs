//! Model constructors: the Euler-like class, stochastic Lorenz-96, analytic
//! oracle systems, and the lifted projective drift.
//!
//! Lorenz-96 is written with 1-based cyclic indices in the literature
//! (`u_{m+J} = u_m`); everything here is stored 0-based, so coordinate `m`
//! of the literature is index `m - 1`.

use crate::algebra::{BilinearTensor, DenseMatrix, PolyVectorField};
use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, norm, Scalar};
use crate::sde::SdeSystem;

/// Whether a system was built under the strict Euler-like contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Admission {
    /// Energy-conserving, divergence-free drift and negative-definite damping.
    EulerLike,
    /// Oracle or test system; no structural guarantees.
    Permissive,
}

/// `dx = (B(x,x) + εAx) dt + √ε Σ_k X_k dW^k` with constant forcing directions `X_k`.
#[derive(Clone, Debug)]
pub struct EulerLikeSystem<T> {
    tensor: BilinearTensor<T>,
    damping: DenseMatrix<T>,
    forcing: Vec<Vec<T>>,
    eps: T,
    admission: Admission,
    // √ε · [X_1 … X_r], row-major n × r
    noise_matrix: Vec<T>,
}

impl<T: Scalar> EulerLikeSystem<T> {
    /// Strict constructor: rejects anything outside the Euler-like class.
    pub fn new(tensor: BilinearTensor<T>, damping: DenseMatrix<T>, forcing: Vec<Vec<T>>, eps: T) -> Result<Self> {
        let sys = Self::build(tensor, damping, forcing, eps, Admission::EulerLike)?;
        if !sys.tensor.is_energy_conserving() {
            return Err(Error::NotEulerLike(format!(
                "drift is not energy conserving (symmetrized residual {})",
                sys.tensor.energy_residual()
            )));
        }
        if !sys.tensor.is_divergence_free() {
            return Err(Error::NotEulerLike("drift is not divergence free".into()));
        }
        if !sys.damping.is_negative_definite() {
            return Err(Error::NotEulerLike("damping matrix is not negative definite".into()));
        }
        Ok(sys)
    }

    /// Permissive constructor for oracle and test systems. No structural checks.
    pub fn new_permissive(
        tensor: BilinearTensor<T>,
        damping: DenseMatrix<T>,
        forcing: Vec<Vec<T>>,
        eps: T,
    ) -> Result<Self> {
        Self::build(tensor, damping, forcing, eps, Admission::Permissive)
    }

    fn build(
        tensor: BilinearTensor<T>,
        damping: DenseMatrix<T>,
        forcing: Vec<Vec<T>>,
        eps: T,
        admission: Admission,
    ) -> Result<Self> {
        let n = tensor.dim();
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        check_dim(n, damping.rows())?;
        check_dim(n, damping.cols())?;
        if !damping.is_finite() {
            return Err(Error::InvalidArgument("damping entries must be finite".into()));
        }
        for f in &forcing {
            check_dim(n, f.len())?;
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("forcing entries must be finite".into()));
            }
        }
        if !(eps >= T::zero()) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("eps must be finite and non-negative, got {eps}")));
        }
        let noise_matrix = Self::noise_matrix_for(n, &forcing, eps);
        Ok(Self {
            tensor,
            damping,
            forcing,
            eps,
            admission,
            noise_matrix,
        })
    }

    fn noise_matrix_for(n: usize, forcing: &[Vec<T>], eps: T) -> Vec<T> {
        let r = forcing.len();
        let amp = eps.sqrt();
        let mut g = vec![T::zero(); n * r];
        for (k, f) in forcing.iter().enumerate() {
            for (i, &v) in f.iter().enumerate() {
                g[i * r + k] = amp * v;
            }
        }
        g
    }

    /// Copy of this system with a different ε (same structure, same admission).
    pub fn with_eps(&self, eps: T) -> Result<Self> {
        Self::build(
            self.tensor.clone(),
            self.damping.clone(),
            self.forcing.clone(),
            eps,
            self.admission,
        )
    }

    pub fn tensor(&self) -> &BilinearTensor<T> {
        &self.tensor
    }

    pub fn damping(&self) -> &DenseMatrix<T> {
        &self.damping
    }

    pub fn forcing(&self) -> &[Vec<T>] {
        &self.forcing
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn admission(&self) -> Admission {
        self.admission
    }

    pub fn n(&self) -> usize {
        self.tensor.dim()
    }

    /// `X₀ = F(x) + εAx` as a symbolic field.
    pub fn drift_field(&self) -> PolyVectorField<T> {
        let lin = PolyVectorField::linear(&self.damping.scale(self.eps)).expect("square damping");
        self.tensor.to_field().add(&lin).expect("matching dimension")
    }

    /// The forcing directions `X_k` as constant fields (without the `√ε` amplitude).
    pub fn forcing_fields(&self) -> Vec<PolyVectorField<T>> {
        self.forcing.iter().map(|f| PolyVectorField::constant(f)).collect()
    }

    /// `M(x) = ∇F(x) + εA`.
    pub fn linearization(&self, x: &[T]) -> Result<DenseMatrix<T>> {
        check_dim(self.n(), x.len())?;
        let mut m = DenseMatrix::zeros(self.n(), self.n());
        self.drift_jacobian_into(x, m.as_mut_slice());
        Ok(m)
    }
}

impl<T: Scalar> SdeSystem<T> for EulerLikeSystem<T> {
    fn dim(&self) -> usize {
        self.tensor.dim()
    }

    fn noise_dim(&self) -> usize {
        self.forcing.len()
    }

    #[inline]
    fn drift_into(&self, x: &[T], out: &mut [T]) {
        self.tensor.bilinear_into(x, x, out);
        let n = self.n();
        let a = self.damping.as_slice();
        for (l, o) in out.iter_mut().enumerate() {
            let row = &a[l * n..(l + 1) * n];
            let ax = row.iter().zip(x).fold(T::zero(), |acc, (&r, &xi)| acc + r * xi);
            *o = *o + self.eps * ax;
        }
    }

    #[inline]
    fn drift_jacobian_into(&self, x: &[T], out: &mut [T]) {
        for (o, &a) in out.iter_mut().zip(self.damping.as_slice()) {
            *o = self.eps * a;
        }
        self.tensor.add_jacobian_into(x, out);
    }

    #[inline]
    fn add_noise(&self, _x: &[T], dw: &[T], out: &mut [T]) {
        let r = self.forcing.len();
        if r == 0 {
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.noise_matrix[i * r..(i + 1) * r];
            *o = *o + row.iter().zip(dw).fold(T::zero(), |acc, (&g, &w)| acc + g * w);
        }
    }

    fn additive_noise(&self) -> bool {
        true
    }
}

/// Stochastic Lorenz-96 with `J` cyclic sites:
/// `du_m = ((u_{m+1} − u_{m−2}) u_{m−1} − ε u_m) dt + √ε q_m dW^m`.
pub fn make_l96<T: Scalar>(j: usize, eps: T, q: &[T]) -> Result<EulerLikeSystem<T>> {
    if j < 4 {
        return Err(Error::Unsupported(format!("Lorenz-96 needs J >= 4 sites, got {j}")));
    }
    check_dim(j, q.len())?;
    EulerLikeSystem::new(
        l96_tensor(j)?,
        DenseMatrix::identity(j).scale(-T::one()),
        (0..j)
            .map(|m| {
                let mut e = vec![T::zero(); j];
                e[m] = q[m];
                e
            })
            .collect(),
        eps,
    )
}

/// Tensor of `F_ℓ = u_{ℓ+1} u_{ℓ−1} − u_{ℓ−2} u_{ℓ−1}` (indices mod `J`, 0-based).
pub fn l96_tensor<T: Scalar>(j: usize) -> Result<BilinearTensor<T>> {
    let idx = |l: usize, off: isize| ((l as isize + off).rem_euclid(j as isize)) as usize;
    BilinearTensor::from_triplets(
        j,
        (0..j).flat_map(|l| {
            [
                (l, idx(l, 1), idx(l, -1), T::one()),
                (l, idx(l, -2), idx(l, -1), -T::one()),
            ]
        }),
    )
}

/// Ornstein–Uhlenbeck oracle: zero drift tensor, `A = −I`, forcing along every axis.
/// Stationary law is `N(0, ½ I)` for every ε > 0.
pub fn make_ou<T: Scalar>(n: usize, eps: T) -> Result<EulerLikeSystem<T>> {
    EulerLikeSystem::new(
        BilinearTensor::zero(n),
        DenseMatrix::identity(n).scale(-T::one()),
        (0..n)
            .map(|m| {
                let mut e = vec![T::zero(); n];
                e[m] = T::one();
                e
            })
            .collect(),
        eps,
    )
}

/// Deterministic linear flow `dx = A x dt` as a permissive system (ε = 1, no forcing).
pub fn make_linear<T: Scalar>(a: DenseMatrix<T>) -> Result<EulerLikeSystem<T>> {
    let n = a.rows();
    EulerLikeSystem::new_permissive(BilinearTensor::zero(n), a, Vec::new(), T::one())
}

/// Scalar Stratonovich SDE `dx = a x dt + σ x ∘ dW`, solved by `x_t = x_0 exp(a t + σ W_t)`.
/// Its top Lyapunov exponent is `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarMultiplicative<T> {
    pub a: T,
    pub sigma: T,
}

pub fn make_scalar_multiplicative<T: Scalar>(a: T, sigma: T) -> ScalarMultiplicative<T> {
    ScalarMultiplicative { a, sigma }
}

impl<T: Scalar> ScalarMultiplicative<T> {
    /// Closed-form solution along a Wiener path with `W_t = w`.
    pub fn exact(&self, x0: T, t: T, w: T) -> T {
        x0 * (self.a * t + self.sigma * w).exp()
    }

    pub fn top_exponent(&self) -> T {
        self.a
    }
}

impl<T: Scalar> SdeSystem<T> for ScalarMultiplicative<T> {
    fn dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn drift_into(&self, x: &[T], out: &mut [T]) {
        out[0] = self.a * x[0];
    }

    fn drift_jacobian_into(&self, _x: &[T], out: &mut [T]) {
        out[0] = self.a;
    }

    fn add_noise(&self, x: &[T], dw: &[T], out: &mut [T]) {
        out[0] = out[0] + self.sigma * x[0] * dw[0];
    }

    fn additive_noise(&self) -> bool {
        self.sigma == T::zero()
    }

    fn noise_jacobian_into(&self, _x: &[T], dw: &[T], out: &mut [T]) {
        out[0] = self.sigma * dw[0];
    }
}

/// A point `(x, v)` of the sphere bundle `ℝⁿ × S^{n−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveState<T> {
    pub x: Vec<T>,
    pub v: Vec<T>,
}

/// Allowed deviation of `|v|` from one.
pub fn unit_tolerance<T: Scalar>() -> T {
    T::of(1e-12).max(T::epsilon() * T::of(16.0))
}

impl<T: Scalar> ProjectiveState<T> {
    /// Checks `|v| = 1`.
    pub fn new(x: Vec<T>, v: Vec<T>) -> Result<Self> {
        check_dim(x.len(), v.len())?;
        check_unit(&v)?;
        Ok(Self { x, v })
    }

    /// Normalizes `v` first; fails only for the zero vector.
    pub fn normalized(x: Vec<T>, mut v: Vec<T>) -> Result<Self> {
        check_dim(x.len(), v.len())?;
        let nv = norm(&v);
        if nv == T::zero() || !nv.is_finite() {
            return Err(Error::InvalidArgument("tangent direction must be non-zero".into()));
        }
        v.iter_mut().for_each(|c| *c = *c / nv);
        Ok(Self { x, v })
    }
}

pub(crate) fn check_unit<T: Scalar>(v: &[T]) -> Result<()> {
    let nv = norm(v);
    if (nv - T::one()).abs() > unit_tolerance() {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, |v| = {nv}")));
    }
    Ok(())
}

/// Lifted drift on the sphere bundle: `(F(x) + εAx, Π_v M v)` with `M = ∇F(x) + εA`.
pub fn projective_drift<T: Scalar>(sys: &EulerLikeSystem<T>, s: &ProjectiveState<T>) -> Result<(Vec<T>, Vec<T>)> {
    check_dim(sys.n(), s.x.len())?;
    check_dim(sys.n(), s.v.len())?;
    check_unit(&s.v)?;
    let mut dx = vec![T::zero(); sys.n()];
    sys.drift_into(&s.x, &mut dx);
    let m = sys.linearization(&s.x)?;
    let mv = m.matvec(&s.v)?;
    let rayleigh = dot(&s.v, &mv);
    let dv = mv.iter().zip(&s.v).map(|(&a, &b)| a - rayleigh * b).collect();
    Ok((dx, dv))
}

/// The constant matrices `H^k = ∂_{x_k} ∇F`, one per coordinate.
pub fn h_matrices<T: Scalar>(b: &BilinearTensor<T>) -> Vec<DenseMatrix<T>> {
    (0..b.dim()).map(|k| b.second_derivative(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l96_rejects_three_sites() {
        assert!(matches!(make_l96(3, 0.1, &[1.0; 3]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn l96_drift_on_two_adjacent_sites() {
        // u = e_1 + e_2 (1-based) → only F_3 = (u_4 − u_1) u_2 = −1 survives
        let sys = make_l96(5, 0.0, &[1.0; 5]).unwrap();
        let f = sys.tensor().eval(&[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f, vec![0.0, 0.0, -1.0, 0.0, 0.0]);
        let single = sys.tensor().eval(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(single, vec![0.0; 5]);
    }

    #[test]
    fn l96_jacobian_entry() {
        // at u = e_2, ∂F_3/∂u_4 = u_2 = 1
        let sys = make_l96(5, 0.0, &[1.0; 5]).unwrap();
        let j = sys.tensor().jacobian(&[0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(j[(2, 3)], 1.0);
    }

    #[test]
    fn ou_is_isotropic_in_the_projective_fibre() {
        let sys = make_ou(3, 0.2).unwrap();
        let s = ProjectiveState::<f64>::normalized(vec![0.3, -1.0, 2.0], vec![1.0, 2.0, -0.5]).unwrap();
        let (dx, dv) = projective_drift(&sys, &s).unwrap();
        assert!(dv.iter().all(|v| v.abs() < 1e-15));
        for (d, x) in dx.iter().zip(&s.x) {
            assert!((d + 0.2 * x).abs() < 1e-15);
        }
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        let sys = make_ou(2, 0.2).unwrap();
        let s = ProjectiveState { x: vec![0.0, 0.0], v: vec![1.0, 1.0] };
        assert!(projective_drift(&sys, &s).is_err());
    }

    #[test]
    fn eigenvector_of_constant_linearization_is_fixed() {
        let sys = make_linear(DenseMatrix::from_diagonal(&[2.0, -1.0, 0.5])).unwrap();
        let s = ProjectiveState::new(vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let (_, dv) = projective_drift(&sys, &s).unwrap();
        assert_eq!(dv, vec![0.0; 3]);
    }

    #[test]
    fn zero_tensor_gives_zero_h_matrices() {
        let hs = h_matrices(&BilinearTensor::<f64>::zero(3));
        assert_eq!(hs.len(), 3);
        assert!(hs.iter().all(|h| h.max_abs() == 0.0));
    }

    #[test]
    fn strict_constructor_rejects_energy_violation() {
        let b = BilinearTensor::from_triplets(2, [(0, 0, 0, 1.0)]).unwrap();
        let r = EulerLikeSystem::new(b.clone(), DenseMatrix::identity(2).scale(-1.0), vec![], 0.1);
        assert!(matches!(r, Err(Error::NotEulerLike(_))));
        assert!(EulerLikeSystem::new_permissive(b, DenseMatrix::identity(2), vec![], 0.1).is_ok());
    }

    #[test]
    fn eps_copy_keeps_structure() {
        let sys = make_l96(6, 0.1, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let other = sys.with_eps(0.01).unwrap();
        assert_eq!(other.tensor(), sys.tensor());
        assert_eq!(other.eps(), 0.01);
        assert_eq!(other.admission(), Admission::EulerLike);
    }
}
