mod common;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::{bracket_word_dim, int_mat, random_traceless, to_dense, IntMat};
use eulerlike::algebra::{lie_bracket, BilinearTensor, DenseMatrix, PolyVectorField, Polynomial};
use eulerlike::hormander::{check_sl_generation, lie_closure};
use eulerlike::models::{h_matrices, l96_tensor};
use eulerlike::verify::random_admissible_tensor;
use eulerlike::Matrix;

fn field(dim: usize, terms: &[Vec<(Vec<u32>, i32)>]) -> PolyVectorField<f64> {
    let comps = terms
        .iter()
        .map(|t| Polynomial::from_terms(dim, t.iter().map(|(e, c)| (e.clone(), *c as f64))))
        .collect();
    PolyVectorField::from_components(comps).unwrap()
}

fn arb_field(dim: usize) -> impl Strategy<Value = PolyVectorField<f64>> {
    let term = (prop::collection::vec(0u32..3, dim), -3i32..=3)
        .prop_filter("degree <= 2", |(e, _)| e.iter().sum::<u32>() <= 2);
    prop::collection::vec(prop::collection::vec(term, 0..4), dim).prop_map(move |t| field(dim, &t))
}

fn arb_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, dim)
}

fn mat_from(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_row_major(m.nrows(), m.ncols(), m.transpose().as_slice().to_vec()).unwrap()
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_identity(x in arb_field(3), y in arb_field(3), z in arb_field(3)) {
        let a = lie_bracket(&x, &lie_bracket(&y, &z).unwrap()).unwrap();
        let b = lie_bracket(&y, &lie_bracket(&z, &x).unwrap()).unwrap();
        let c = lie_bracket(&z, &lie_bracket(&x, &y).unwrap()).unwrap();
        prop_assert!(a.add(&b).unwrap().add(&c).unwrap().is_zero());
    }

    #[test]
    fn bracket_is_antisymmetric(x in arb_field(3), y in arb_field(3)) {
        let xy = lie_bracket(&x, &y).unwrap();
        let yx = lie_bracket(&y, &x).unwrap();
        prop_assert!(xy.add(&yx).unwrap().is_zero());
    }

    #[test]
    fn bracket_matches_pointwise_formula(x in arb_field(3), y in arb_field(3), p in arb_point(3)) {
        // [X, Y](p) = DY(p) X(p) − DX(p) Y(p)
        let lhs = lie_bracket(&x, &y).unwrap().eval(&p).unwrap();
        let dy_x = y.jacobian(&p).unwrap().matvec(&x.eval(&p).unwrap()).unwrap();
        let dx_y = x.jacobian(&p).unwrap().matvec(&y.eval(&p).unwrap()).unwrap();
        for i in 0..3 {
            prop_assert!((lhs[i] - (dy_x[i] - dx_y[i])).abs() <= 1e-9 * (1.0 + lhs[i].abs()));
        }
    }

    #[test]
    fn tensor_jacobian_matches_finite_differences(seed in 0u64..1000, p in arb_point(5)) {
        let b = random_admissible_tensor(5, seed).unwrap();
        let jac = b.jacobian(&p).unwrap();
        let h = 1e-6;
        for j in 0..5 {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[j] += h;
            lo[j] -= h;
            let (fh, fl) = (b.eval(&hi).unwrap(), b.eval(&lo).unwrap());
            for i in 0..5 {
                let fd = (fh[i] - fl[i]) / (2.0 * h);
                prop_assert!((fd - jac[(i, j)]).abs() < 1e-7, "({i},{j}): {fd} vs {}", jac[(i, j)]);
            }
        }
    }

    #[test]
    fn admissible_tensors_conserve_energy(seed in 0u64..1000, p in arb_point(4)) {
        let b = random_admissible_tensor(4, seed).unwrap();
        let f = b.eval(&p).unwrap();
        let xf: f64 = p.iter().zip(&f).map(|(a, b)| a * b).sum();
        prop_assert!(xf.abs() < 1e-12);
        prop_assert!(b.to_field().divergence(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closure_is_monotone_and_idempotent(n in 2usize..=6, seed in any::<u64>(), count in 1usize..3) {
        let mut state = seed;
        let gens: Vec<Matrix> = (0..count + 1).map(|_| to_dense(&random_traceless(n, &mut state), n)).collect();
        let small = lie_closure(&gens[..count]).unwrap();
        let large = lie_closure(&gens).unwrap();
        prop_assert!(large.dim >= small.dim);
        let again = lie_closure(&small.basis).unwrap();
        prop_assert_eq!(again.dim, small.dim);
    }

    #[test]
    fn closure_is_conjugation_invariant(n in 2usize..=6, seed in any::<u64>()) {
        let mut state = seed;
        let gens: Vec<Matrix> = (0..2).map(|_| to_dense(&random_traceless(n, &mut state), n)).collect();
        // unit lower-triangular times unit upper-triangular: well conditioned, exactly invertible
        let mut l = DMatrix::<f64>::identity(n, n);
        let mut u = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in 0..i {
                l[(i, j)] = 0.5 * (((state >> (i + 3 * j)) & 3) as f64 - 1.5);
                u[(j, i)] = 0.25 * (((state >> (2 * i + j)) & 3) as f64 - 1.5);
            }
        }
        let p = &l * &u;
        let pinv = p.clone().try_inverse().unwrap();
        let conj: Vec<Matrix> = gens.iter().map(|g| mat_from(&(&p * to_na(g) * &pinv))).collect();
        prop_assert_eq!(lie_closure(&conj).unwrap().dim, lie_closure(&gens).unwrap().dim);
    }
}

fn closure_dim(gens: &[IntMat], n: usize) -> usize {
    let dense: Vec<Matrix> = gens.iter().map(|g| to_dense(g, n)).collect();
    lie_closure(&dense).unwrap().dim
}

#[test]
fn closure_matches_exact_bracket_words_on_named_sets() {
    let e12 = int_mat(&[&[0, 1], &[0, 0]]);
    let e21 = int_mat(&[&[0, 0], &[1, 0]]);
    let h2 = int_mat(&[&[1, 0], &[0, -1]]);
    let cases2: Vec<Vec<IntMat>> = vec![vec![e12.clone()], vec![h2.clone()], vec![e12.clone(), h2.clone()], vec![e12, e21]];
    for gens in &cases2 {
        assert_eq!(closure_dim(gens, 2), bracket_word_dim(gens, 2, 6), "{gens:?}");
    }

    let e = |i: usize, j: usize| {
        let mut m = vec![vec![0i64; 3]; 3];
        m[i][j] = 1;
        m.into_iter().flatten().map(num_bigint::BigInt::from).collect::<IntMat>()
    };
    let so12 = int_mat(&[&[0, 1, 0], &[-1, 0, 0], &[0, 0, 0]]);
    let so23 = int_mat(&[&[0, 0, 0], &[0, 0, 1], &[0, -1, 0]]);
    let d1 = int_mat(&[&[1, 0, 0], &[0, -1, 0], &[0, 0, 0]]);
    let d2 = int_mat(&[&[0, 0, 0], &[0, 1, 0], &[0, 0, -1]]);
    let cases3: Vec<(Vec<IntMat>, usize)> = vec![
        (vec![e(0, 1), e(1, 2)], 3),
        (vec![e(0, 1), e(1, 2), e(2, 0)], 8),
        (vec![so12, so23], 3),
        (vec![d1.clone(), d2], 2),
        (vec![d1, e(0, 1)], 2),
        (vec![e(0, 1), e(1, 0)], 3),
    ];
    for (gens, expected) in &cases3 {
        let oracle = bracket_word_dim(gens, 3, 6);
        assert_eq!(oracle, *expected, "oracle {gens:?}");
        assert_eq!(closure_dim(gens, 3), oracle, "{gens:?}");
    }
}

#[test]
fn closure_matches_exact_bracket_words_on_random_sets() {
    let mut state = 7u64;
    for n in 2..=3 {
        for count in 1..=3 {
            for _ in 0..4 {
                let gens: Vec<IntMat> = (0..count).map(|_| random_traceless(n, &mut state)).collect();
                assert_eq!(closure_dim(&gens, n), bracket_word_dim(&gens, n, 6), "n = {n}, {gens:?}");
            }
        }
    }
}

#[test]
fn cyclic_elementary_generators_give_sl() {
    for n in 3..=8 {
        let gens: Vec<Matrix> = (0..n).map(|i| DenseMatrix::elementary(n, i, (i + 1) % n)).collect();
        assert_eq!(lie_closure(&gens).unwrap().dim, n * n - 1, "n = {n}");
    }
}

#[test]
fn l96_second_derivatives_follow_the_shift_pattern() {
    for j in 5..=9 {
        let b: BilinearTensor<f64> = l96_tensor(j).unwrap();
        let hs = h_matrices(&b);
        let w = |i: isize| i.rem_euclid(j as isize) as usize;
        for (k, h) in hs.iter().enumerate() {
            let k = k as isize;
            let mut expected = DenseMatrix::<f64>::zeros(j, j);
            expected[(w(k + 1), w(k + 2))] += 1.0;
            expected[(w(k - 1), w(k - 2))] += 1.0;
            expected[(w(k + 2), w(k + 1))] -= 1.0;
            expected[(w(k + 1), w(k - 1))] -= 1.0;
            assert_eq!(h, &expected, "J = {j}, k = {k}");
        }
        // H^k_{lm} = H^m_{lk}: mixed second derivatives commute
        for k in 0..j {
            for m in 0..j {
                for l in 0..j {
                    assert_eq!(hs[k][(l, m)], hs[m][(l, k)]);
                }
            }
        }
        assert_relative_eq!(hs.iter().map(|h| h.trace()).sum::<f64>(), 0.0);
    }
}

#[test]
fn l96_generates_sl() {
    for j in 5..=8 {
        let (full, basis) = check_sl_generation(&l96_tensor::<f64>(j).unwrap());
        assert!(full);
        assert_eq!(basis.dim, j * j - 1);
    }
}

#[test]
fn closure_works_in_single_precision() {
    let gens: Vec<DenseMatrix<f32>> = (0..4).map(|i| DenseMatrix::elementary(4, i, (i + 1) % 4)).collect();
    assert_eq!(lie_closure(&gens).unwrap().dim, 15);
    let (full, _) = check_sl_generation(&l96_tensor::<f32>(5).unwrap());
    assert!(full);
}
