//! Sparse multivariate polynomials and polynomial vector fields on ℝⁿ.
//!
//! Monomials are keyed by their exponent multi-index and kept sorted
//! lexicographically; zero coefficients are dropped after every operation, so
//! two fields are equal iff their canonical term lists are equal.

use std::collections::BTreeMap;

use crate::algebra::matrix::DenseMatrix;
use crate::error::{check_dim, Result};
use crate::scalar::Scalar;

/// Exponent multi-index of a monomial.
pub type MultiIndex = Vec<u32>;

/// A single term `coeff · x^exps`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial<T> {
    pub coeff: T,
    pub exps: MultiIndex,
}

impl<T: Scalar> Monomial<T> {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.exps
            .iter()
            .zip(x)
            .fold(self.coeff, |acc, (&e, &xi)| match e {
                0 => acc,
                1 => acc * xi,
                _ => acc * xi.powi(e as i32),
            })
    }
}

/// Scalar polynomial in `nvars` variables, canonical sparse form.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: Vec<Monomial<T>>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        Self::from_terms(nvars, [(vec![0; nvars], c)])
    }

    /// Builds a canonical polynomial, merging repeated multi-indices.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (MultiIndex, T)>) -> Self {
        let mut acc: BTreeMap<MultiIndex, T> = BTreeMap::new();
        for (exps, c) in terms {
            assert_eq!(exps.len(), nvars, "multi-index length must equal the number of variables");
            let e = acc.entry(exps).or_insert_with(T::zero);
            *e = *e + c;
        }
        Self {
            nvars,
            terms: acc
                .into_iter()
                .filter(|(_, c)| *c != T::zero())
                .map(|(exps, coeff)| Monomial { coeff, exps })
                .collect(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Monomial<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(Monomial::degree).max()
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms.iter().map(|m| m.eval(x)).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms.iter().chain(&other.terms).map(|m| (m.exps.clone(), m.coeff)),
        )
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|m| (m.exps.clone(), m.coeff * s)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                out.push((exps, a.coeff * b.coeff));
            }
        }
        Self::from_terms(self.nvars, out)
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms.iter().filter(|m| m.exps[var] > 0).map(|m| {
                let mut exps = m.exps.clone();
                let e = exps[var];
                exps[var] -= 1;
                (exps, m.coeff * T::of(e as f64))
            }),
        )
    }

    /// Drops terms with `|coeff| <= tol`. A tolerance of zero keeps everything non-zero.
    pub fn pruned(&self, tol: T) -> Self {
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|m| m.coeff.abs() > tol).cloned().collect(),
        }
    }
}

/// Polynomial vector field `x ↦ (P_1(x), …, P_n(x))` on ℝⁿ, viewed also as the
/// first-order operator `Σ P_ℓ ∂_ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField<T> {
    dim: usize,
    components: Vec<Polynomial<T>>,
}

impl<T: Scalar> PolyVectorField<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            components: vec![Polynomial::zero(dim); dim],
        }
    }

    pub fn from_components(components: Vec<Polynomial<T>>) -> Result<Self> {
        let dim = components.len();
        for c in &components {
            check_dim(dim, c.nvars())?;
        }
        Ok(Self { dim, components })
    }

    /// Constant field `x ↦ c`.
    pub fn constant(c: &[T]) -> Self {
        let n = c.len();
        Self {
            dim: n,
            components: c.iter().map(|&v| Polynomial::constant(n, v)).collect(),
        }
    }

    /// Coordinate field `∂_i` (0-based).
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut c = vec![T::zero(); dim];
        c[i] = T::one();
        Self::constant(&c)
    }

    /// Linear field `x ↦ A x`.
    pub fn linear(a: &DenseMatrix<T>) -> Result<Self> {
        check_dim(a.rows(), a.cols())?;
        let n = a.rows();
        let components = (0..n)
            .map(|l| {
                Polynomial::from_terms(
                    n,
                    (0..n).map(|m| {
                        let mut e = vec![0; n];
                        e[m] = 1;
                        (e, a[(l, m)])
                    }),
                )
            })
            .collect();
        Ok(Self { dim: n, components })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Polynomial<T>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    /// Maximum total degree over components; `None` for the zero field.
    pub fn degree(&self) -> Option<u32> {
        self.components.iter().filter_map(Polynomial::degree).max()
    }

    /// The constant value if every component has degree 0.
    pub fn constant_value(&self) -> Option<Vec<T>> {
        if self.degree().unwrap_or(0) > 0 {
            return None;
        }
        Some(self.components.iter().map(|p| p.terms().first().map_or(T::zero(), |m| m.coeff)).collect())
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, x.len())?;
        Ok(self.components.iter().map(|p| p.eval(x)).collect())
    }

    /// Exact Jacobian `∂P_ℓ/∂x_m` at `x`.
    pub fn jacobian(&self, x: &[T]) -> Result<DenseMatrix<T>> {
        check_dim(self.dim, x.len())?;
        let mut j = DenseMatrix::zeros(self.dim, self.dim);
        for (l, p) in self.components.iter().enumerate() {
            for m in p.terms() {
                for (var, &e) in m.exps.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let mut exps = m.exps.clone();
                    exps[var] -= 1;
                    let d = Monomial {
                        coeff: m.coeff * T::of(e as f64),
                        exps,
                    };
                    j[(l, var)] = j[(l, var)] + d.eval(x);
                }
            }
        }
        Ok(j)
    }

    pub fn divergence(&self, x: &[T]) -> Result<T> {
        Ok(self.jacobian(x)?.trace())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            components: self.components.iter().map(|p| p.scale(s)).collect(),
        }
    }

    /// Applies `self` as a derivation to the polynomial `p`: `Σ_m P_m ∂_m p`.
    fn derive(&self, p: &Polynomial<T>) -> Polynomial<T> {
        self.components
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .fold(Polynomial::zero(self.dim), |acc, (m, c)| {
                let dp = p.partial(m);
                if dp.is_zero() {
                    acc
                } else {
                    acc.add(&c.mul(&dp))
                }
            })
    }

    /// Lie bracket `[X, Y] = (DY) X − (DX) Y`, computed symbolically.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let components = (0..self.dim)
            .map(|l| self.derive(&other.components[l]).add(&other.derive(&self.components[l]).scale(-T::one())))
            .collect();
        Ok(Self { dim: self.dim, components })
    }

    pub fn pruned(&self, tol: T) -> Self {
        Self {
            dim: self.dim,
            components: self.components.iter().map(|p| p.pruned(tol)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_evaluates_to_zero() {
        let f = PolyVectorField::<f64>::zero(3);
        assert_eq!(f.eval(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0; 3]);
        assert!(f.eval(&[1.0]).is_err());
    }

    #[test]
    fn linear_field_jacobian_is_the_matrix() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let f = PolyVectorField::linear(&a).unwrap();
        assert_eq!(f.jacobian(&[7.0, -1.0]).unwrap(), a);
        let c = PolyVectorField::constant(&[1.0, 2.0]);
        assert_eq!(c.jacobian(&[3.0, 4.0]).unwrap(), DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn divergence_of_scalar_damping() {
        let eps = 0.3;
        let f = PolyVectorField::linear(&DenseMatrix::<f64>::identity(5).scale(-eps)).unwrap();
        assert!((f.divergence(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap() + 5.0 * eps).abs() < 1e-15);
        // gradient of x1 x2
        let swap = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let g = PolyVectorField::linear(&swap).unwrap();
        assert_eq!(g.divergence(&[0.4, -0.2]).unwrap(), 0.0);
    }

    #[test]
    fn bracket_with_coordinate_field() {
        // [∂_1, Ax] = A e_1
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let lin = PolyVectorField::linear(&a).unwrap();
        let d1 = PolyVectorField::coordinate(2, 0);
        let b = d1.lie_bracket(&lin).unwrap();
        assert_eq!(b, PolyVectorField::constant(&[1.0, -3.0]));
        assert!(lin.lie_bracket(&lin).unwrap().is_zero());
    }

    #[test]
    fn canonical_form_merges_and_drops_terms() {
        let p = Polynomial::<f64>::from_terms(2, [(vec![1, 0], 2.0), (vec![1, 0], -2.0), (vec![0, 2], 1.0)]);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.partial(1).terms()[0].coeff, 2.0);
    }
}
