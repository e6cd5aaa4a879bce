use std::collections::BTreeMap;

use crate::algebra::matrix::DenseMatrix;
use crate::algebra::poly::{Polynomial, PolyVectorField};
use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Coefficients `b[ℓ][j][k]` of the quadratic field `F_ℓ(x) = Σ_{j,k} b[ℓ][j][k] x_j x_k`.
///
/// Storage is sparse and symmetrized in the last two indices, so that
/// `B(x, y) = Σ b[ℓ][j][k] x_j y_k` is the symmetric bilinear form with `B(x, x) = F(x)`.
/// Indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearTensor<T> {
    dim: usize,
    // (ℓ, j, k, b) sorted by (ℓ, j, k), both (j,k) and (k,j) present.
    entries: Vec<(usize, usize, usize, T)>,
}

impl<T: Scalar> BilinearTensor<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Builds the tensor from raw triplets `(ℓ, j, k, value)` meaning
    /// `F_ℓ += value · x_j x_k`. Repeated triplets accumulate.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, usize, T)>) -> Result<Self> {
        let half = T::of(0.5);
        let mut acc: BTreeMap<(usize, usize, usize), T> = BTreeMap::new();
        for (l, j, k, v) in triplets {
            if l >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidArgument(format!(
                    "tensor index ({l}, {j}, {k}) out of range for dimension {dim}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument("tensor entries must be finite".into()));
            }
            if j == k {
                bump(&mut acc, (l, j, k), v);
            } else {
                bump(&mut acc, (l, j, k), v * half);
                bump(&mut acc, (l, k, j), v * half);
            }
        }
        Ok(Self {
            dim,
            entries: acc
                .into_iter()
                .filter(|(_, v)| *v != T::zero())
                .map(|((l, j, k), v)| (l, j, k, v))
                .collect(),
        })
    }

    /// Builds from a dense `n × n × n` array `b[ℓ][j][k]`.
    pub fn from_dense(b: &[Vec<Vec<T>>]) -> Result<Self> {
        let n = b.len();
        let mut trip = Vec::new();
        for (l, bl) in b.iter().enumerate() {
            check_dim(n, bl.len())?;
            for (j, blj) in bl.iter().enumerate() {
                check_dim(n, blj.len())?;
                for (k, &v) in blj.iter().enumerate() {
                    if v != T::zero() {
                        trip.push((l, j, k, v));
                    }
                }
            }
        }
        Self::from_triplets(n, trip)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Symmetrized non-zero entries `(ℓ, j, k, b)`.
    pub fn entries(&self) -> &[(usize, usize, usize, T)] {
        &self.entries
    }

    pub fn get(&self, l: usize, j: usize, k: usize) -> T {
        self.entries
            .binary_search_by(|&(a, b, c, _)| (a, b, c).cmp(&(l, j, k)))
            .map(|i| self.entries[i].3)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn to_dense(&self) -> Vec<Vec<Vec<T>>> {
        let n = self.dim;
        let mut b = vec![vec![vec![T::zero(); n]; n]; n];
        for &(l, j, k, v) in &self.entries {
            b[l][j][k] = v;
        }
        b
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, e| m.max(e.3.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `out = B(x, y)`, unchecked lengths.
    #[inline]
    pub fn bilinear_into(&self, x: &[T], y: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for &(l, j, k, v) in &self.entries {
            out[l] = out[l] + v * x[j] * y[k];
        }
    }

    pub fn bilinear(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        let mut out = vec![T::zero(); self.dim];
        self.bilinear_into(x, y, &mut out);
        Ok(out)
    }

    /// `F(x) = B(x, x)`.
    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        self.bilinear(x, x)
    }

    /// Adds `∇F(x)` (entry `(ℓ, m) = 2 Σ_k b[ℓ][m][k] x_k`) into the row-major `out`.
    #[inline]
    pub fn add_jacobian_into(&self, x: &[T], out: &mut [T]) {
        let n = self.dim;
        let two = T::of(2.0);
        for &(l, j, k, v) in &self.entries {
            out[l * n + j] = out[l * n + j] + two * v * x[k];
        }
    }

    pub fn jacobian(&self, x: &[T]) -> Result<DenseMatrix<T>> {
        check_dim(self.dim, x.len())?;
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        self.add_jacobian_into(x, m.as_mut_slice());
        Ok(m)
    }

    /// Constant matrix `∂_{x_k} ∇F` with entries `b[ℓ][m][k] + b[ℓ][k][m]`.
    pub fn second_derivative(&self, k: usize) -> DenseMatrix<T> {
        let mut h = DenseMatrix::zeros(self.dim, self.dim);
        for &(l, j, kk, v) in &self.entries {
            if kk == k {
                h[(l, j)] = h[(l, j)] + v;
            }
            if j == k {
                h[(l, kk)] = h[(l, kk)] + v;
            }
        }
        h
    }

    /// The drift as a symbolic polynomial vector field.
    pub fn to_field(&self) -> PolyVectorField<T> {
        let n = self.dim;
        let mut comps: Vec<Vec<(Vec<u32>, T)>> = vec![Vec::new(); n];
        for &(l, j, k, v) in &self.entries {
            let mut e = vec![0u32; n];
            e[j] += 1;
            e[k] += 1;
            comps[l].push((e, v));
        }
        PolyVectorField::from_components(comps.into_iter().map(|t| Polynomial::from_terms(n, t)).collect())
            .expect("components have matching dimension")
    }

    /// Default tolerance for the structural checks: a few ulps of the largest entry.
    pub fn roundoff_tolerance(&self) -> T {
        T::epsilon() * T::of(64.0) * self.max_abs()
    }

    /// True iff the full symmetrization of `b` over `(ℓ, j, k)` vanishes, i.e.
    /// `x · B(x, x) ≡ 0` as a polynomial identity.
    pub fn is_energy_conserving(&self) -> bool {
        self.energy_residual() <= self.roundoff_tolerance()
    }

    /// Largest entry of the full symmetrization of `b`.
    pub fn energy_residual(&self) -> T {
        let mut sym: BTreeMap<[usize; 3], T> = BTreeMap::new();
        for &(l, j, k, v) in &self.entries {
            let mut key = [l, j, k];
            key.sort_unstable();
            bump(&mut sym, key, v);
        }
        sym.values().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// True iff `Σ_ℓ (b[ℓ][ℓ][k] + b[ℓ][k][ℓ]) = 0` for every `k`.
    pub fn is_divergence_free(&self) -> bool {
        self.divergence_residual()
            .iter()
            .all(|r| r.abs() <= self.roundoff_tolerance())
    }

    /// Entry `k` is `Σ_ℓ (b[ℓ][ℓ][k] + b[ℓ][k][ℓ])`, the coefficient of `x_k` in `Div F`.
    pub fn divergence_residual(&self) -> Vec<T> {
        let mut c = vec![T::zero(); self.dim];
        for &(l, j, k, v) in &self.entries {
            if j == l {
                c[k] = c[k] + v;
            }
            if k == l {
                c[j] = c[j] + v;
            }
        }
        c
    }
}

fn bump<K: Ord, T: Scalar>(map: &mut BTreeMap<K, T>, key: K, v: T) {
    let e = map.entry(key).or_insert_with(T::zero);
    *e = *e + v;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrization_preserves_the_quadratic_form() {
        let b = BilinearTensor::from_triplets(2, [(0, 0, 1, 3.0), (1, 1, 1, -1.0)]).unwrap();
        assert_eq!(b.get(0, 0, 1), 1.5);
        assert_eq!(b.get(0, 1, 0), 1.5);
        assert_eq!(b.eval(&[2.0, 5.0]).unwrap(), vec![30.0, -25.0]);
    }

    #[test]
    fn single_square_term_is_not_energy_conserving() {
        let b = BilinearTensor::from_triplets(1, [(0, 0, 0, 1.0)]).unwrap();
        assert!(!b.is_energy_conserving());
        assert!(BilinearTensor::<f64>::zero(4).is_energy_conserving());
        assert!(BilinearTensor::<f64>::zero(4).is_divergence_free());
    }

    #[test]
    fn off_diagonal_self_term_breaks_divergence() {
        // F_1 = x_1 x_2 has divergence x_2
        let b = BilinearTensor::from_triplets(2, [(0, 0, 1, 1.0)]).unwrap();
        assert!(!b.is_divergence_free());
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        assert!(BilinearTensor::from_triplets(2, [(0, 2, 1, 1.0)]).is_err());
    }
}
