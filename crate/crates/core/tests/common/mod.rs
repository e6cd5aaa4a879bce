#![allow(dead_code)]

//! Exact-arithmetic oracles shared by the integration tests.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use eulerlike::Matrix;

/// Square integer matrix, row-major.
pub type IntMat = Vec<BigInt>;

pub fn int_mat(rows: &[&[i64]]) -> IntMat {
    rows.iter().flat_map(|r| r.iter().map(|&v| BigInt::from(v))).collect()
}

pub fn to_dense(m: &IntMat, n: usize) -> Matrix {
    let data: Vec<f64> = m.iter().map(|v| v.to_string().parse::<f64>().unwrap()).collect();
    Matrix::from_row_major(n, n, data).unwrap()
}

pub fn commutator(a: &IntMat, b: &IntMat, n: usize) -> IntMat {
    let mut c = vec![BigInt::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = BigInt::zero();
            for k in 0..n {
                s += &a[i * n + k] * &b[k * n + j];
                s -= &b[i * n + k] * &a[k * n + j];
            }
            c[i * n + j] = s;
        }
    }
    c
}

/// Incremental row echelon form over the rationals.
#[derive(Default)]
pub struct ExactSpan {
    rows: Vec<(usize, Vec<BigRational>)>,
}

impl ExactSpan {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` to the span; returns whether the rank grew.
    pub fn insert(&mut self, v: &[BigInt]) -> bool {
        let mut r: Vec<BigRational> = v.iter().map(|x| BigRational::from_integer(x.clone())).collect();
        for (pivot, row) in &self.rows {
            if r[*pivot].is_zero() {
                continue;
            }
            let f = r[*pivot].clone() / row[*pivot].clone();
            for (a, b) in r.iter_mut().zip(row) {
                *a -= f.clone() * b;
            }
        }
        match r.iter().position(|x| !x.is_zero()) {
            Some(p) => {
                self.rows.push((p, r));
                true
            }
            None => false,
        }
    }
}

/// Dimension of the span of all bracket words of length `<= max_len` in `gens`,
/// enumerated exhaustively: words of length `L` are `[u, w]` for every split
/// `|u| + |w| = L`. Zero words are dropped since they bracket to zero.
pub fn bracket_word_dim(gens: &[IntMat], n: usize, max_len: usize) -> usize {
    let full = n * n - 1;
    let mut span = ExactSpan::default();
    let mut levels: Vec<Vec<IntMat>> = vec![Vec::new()];
    let first: Vec<IntMat> = gens.iter().filter(|g| g.iter().any(|x| !x.is_zero())).cloned().collect();
    for g in &first {
        span.insert(g);
    }
    levels.push(first);
    for len in 2..=max_len {
        let mut words = Vec::new();
        for i in 1..len {
            for u in &levels[i] {
                for w in &levels[len - i] {
                    let c = commutator(u, w, n);
                    if c.iter().all(|x| x.is_zero()) {
                        continue;
                    }
                    if span.rank() < full {
                        span.insert(&c);
                    }
                    words.push(c);
                }
            }
        }
        levels.push(words);
    }
    span.rank()
}

/// Traceless integer matrix with entries in `-2..=2`, from a small LCG.
pub fn random_traceless(n: usize, state: &mut u64) -> IntMat {
    let mut next = || {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 33) % 5) as i64 - 2
    };
    let mut m: Vec<i64> = (0..n * n).map(|_| next()).collect();
    let tr: i64 = (0..n).map(|i| m[i * n + i]).sum();
    m[(n - 1) * n + (n - 1)] -= tr;
    m.into_iter().map(BigInt::from).collect()
}
