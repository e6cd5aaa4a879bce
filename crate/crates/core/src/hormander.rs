//! Spanning certificates for the Euler-like class.
//!
//! Two ingredients are automated: generation of the constant fields `∂_j` by
//! iterated brackets of the forcing directions with the nonlinearity `F`, and
//! the matrix Lie closure of `H^k = ∂_k ∇F` inside `𝔰𝔩(ℝⁿ)`. Together they are a
//! sufficient condition for spanning on the sphere bundle; a negative outcome
//! is reported as inconclusive.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::algebra::{BilinearTensor, DenseMatrix, PolyVectorField};
use crate::error::{Error, Result};
use crate::models::{h_matrices, EulerLikeSystem};
use crate::scalar::{dot, Scalar};

/// Orthonormal basis (Frobenius inner product) of a matrix Lie algebra.
#[derive(Clone, Debug)]
pub struct MatrixLieBasis<T> {
    pub n: usize,
    pub basis: Vec<DenseMatrix<T>>,
    pub dim: usize,
}

impl<T: Scalar> MatrixLieBasis<T> {
    /// `n² − 1`.
    pub fn full_dim(&self) -> usize {
        (self.n * self.n).saturating_sub(1)
    }

    pub fn is_full(&self) -> bool {
        self.n > 0 && self.dim == self.full_dim()
    }
}

/// Incremental orthonormal span with a relative acceptance threshold.
#[derive(Clone, Debug)]
struct Span<T> {
    vecs: Vec<Vec<T>>,
    tol: T,
}

impl<T: Scalar> Span<T> {
    fn new() -> Self {
        Self { vecs: Vec::new(), tol: T::rank_tolerance() }
    }

    /// Residual of `v` after projecting out the span, relative to `|v|`.
    fn residual(&self, v: &[T]) -> Option<Vec<T>> {
        let scale = dot(v, v).sqrt();
        if !(scale > T::zero()) || !scale.is_finite() {
            return None;
        }
        let mut r: Vec<T> = v.iter().map(|&x| x / scale).collect();
        for _ in 0..2 {
            for q in &self.vecs {
                let c = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(ri, &qi)| *ri = *ri - c * qi);
            }
        }
        let rn = dot(&r, &r).sqrt();
        if rn > self.tol {
            r.iter_mut().for_each(|x| *x = *x / rn);
            Some(r)
        } else {
            None
        }
    }

    fn try_insert(&mut self, v: &[T]) -> bool {
        match self.residual(v) {
            Some(q) => {
                self.vecs.push(q);
                true
            }
            None => false,
        }
    }

    fn len(&self) -> usize {
        self.vecs.len()
    }
}

/// Lie algebra generated by `generators` under `[A, B] = AB − BA`.
///
/// Every pair of basis elements is bracketed exactly once; the sweep stops as
/// soon as `n² − 1` directions have been found.
pub fn lie_closure<T: Scalar>(generators: &[DenseMatrix<T>]) -> Result<MatrixLieBasis<T>> {
    let n = generators.first().map_or(0, |g| g.rows());
    let tol = T::rank_tolerance();
    for g in generators {
        if g.rows() != g.cols() {
            return Err(Error::InvalidArgument(format!("generator is {}x{}, expected square", g.rows(), g.cols())));
        }
        if g.rows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: g.rows() });
        }
        let scale = g.frobenius_norm().max(T::one());
        if g.trace().abs() > tol * scale {
            return Err(Error::InvalidArgument(format!("generator has trace {}", g.trace())));
        }
    }
    let full = (n * n).saturating_sub(1);
    let mut span = Span::new();
    for g in generators {
        if span.len() == full {
            break;
        }
        span.try_insert(g.as_slice());
    }
    let mut p = 0;
    while p < span.len() && span.len() < full {
        let a = DenseMatrix::from_row_major(n, n, span.vecs[p].clone())?;
        for q in 0..p {
            let b = DenseMatrix::from_row_major(n, n, span.vecs[q].clone())?;
            let c = a.commutator(&b)?;
            span.try_insert(c.as_slice());
            if span.len() == full {
                break;
            }
        }
        p += 1;
    }
    let basis = span
        .vecs
        .into_iter()
        .map(|v| DenseMatrix::from_row_major(n, n, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixLieBasis { n, dim: basis.len(), basis })
}

/// Whether `Lie(H¹,…,Hⁿ)` is all of `𝔰𝔩(ℝⁿ)`.
pub fn check_sl_generation<T: Scalar>(b: &BilinearTensor<T>) -> (bool, MatrixLieBasis<T>) {
    let n = b.dim();
    let hs = h_matrices(b);
    let basis = lie_closure(&hs).unwrap_or(MatrixLieBasis { n, basis: Vec::new(), dim: 0 });
    let basis = MatrixLieBasis { n, ..basis };
    (n > 1 && basis.is_full(), basis)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Certified,
    Failed,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "certified",
            Verdict::Failed => "failed",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A constant direction and the bracket word that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub word: String,
    pub generation: usize,
    pub direction: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessPoint {
    pub point: Vec<f64>,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubVerdict {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpanReport {
    pub space: String,
    pub achieved_rank: usize,
    pub required_rank: usize,
    pub generations_used: usize,
    pub generation_budget: usize,
    pub witness_points: Vec<WitnessPoint>,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub lie_algebra_dim: Option<usize>,
    pub sub_verdicts: Vec<SubVerdict>,
    pub notes: Vec<String>,
}

impl SpanReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Human-readable certificate.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "span certificate over {}", self.space);
        let _ = writeln!(s, "verdict: {}", self.verdict);
        let _ = writeln!(s, "rank: {} / {}", self.achieved_rank, self.required_rank);
        let _ = writeln!(s, "generations: {} (budget {})", self.generations_used, self.generation_budget);
        if let Some(d) = self.lie_algebra_dim {
            let _ = writeln!(s, "lie closure dim: {d}");
        }
        for sv in &self.sub_verdicts {
            let _ = writeln!(s, "  {}: {} ({})", sv.name, sv.verdict, sv.detail);
        }
        if !self.witnesses.is_empty() {
            let _ = writeln!(s, "witnesses:");
            for w in &self.witnesses {
                let dir: Vec<String> = w.direction.iter().map(|v| format!("{v}")).collect();
                let _ = writeln!(s, "  g{} {} = ({})", w.generation, w.word, dir.join(", "));
            }
        }
        for p in &self.witness_points {
            let _ = writeln!(s, "  rank {} at {:?}", p.rank, p.point);
        }
        for note in &self.notes {
            let _ = writeln!(s, "note: {note}");
        }
        s
    }
}

/// Default bracket budget: `2n` generations.
pub fn default_budget(n: usize) -> usize {
    2 * n
}

struct Found<T> {
    field: PolyVectorField<T>,
    word: String,
}

/// `(c, L)` of an affine field `c + Lx`, flattened.
fn affine_coords<T: Scalar>(f: &PolyVectorField<T>) -> Vec<T> {
    let n = f.dim();
    let origin = vec![T::zero(); n];
    let mut v = f.eval(&origin).expect("dimension");
    v.extend_from_slice(f.jacobian(&origin).expect("dimension").as_slice());
    v
}

fn witness_grid<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    let mut pts = vec![vec![T::zero(); n]];
    pts.push((0..n).map(|i| T::of(1.0 + 0.5 * i as f64)).collect());
    pts.push((0..n).map(|i| T::of(if i % 2 == 0 { -0.7 } else { 1.3 } * (i + 1) as f64)).collect());
    pts
}

/// Constant fields reachable from the forcing directions by brackets with `F`
/// and with each other, keeping fields of degree at most one.
///
/// The damping `εAx` is left out: its brackets with constant fields are the
/// constants `εA e_k`, so a certificate built from `F` alone holds for every ε.
pub fn constant_field_generation<T: Scalar>(sys: &EulerLikeSystem<T>, max_generations: usize) -> SpanReport {
    let n = sys.n();
    let drift = sys.tensor().to_field();
    let tol = T::rank_tolerance();
    let mut affine = Span::new();
    let mut constants = Span::new();
    let mut found: Vec<Found<T>> = Vec::new();
    let mut witnesses = Vec::new();
    let mut frontier = Vec::new();

    let max_amp = sys
        .forcing()
        .iter()
        .flat_map(|f| f.iter().map(|v| v.abs()))
        .fold(T::zero(), T::max);
    for (k, f) in sys.forcing().iter().enumerate() {
        let field = PolyVectorField::constant(f);
        let amp = f.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !(amp > tol * max_amp) {
            continue;
        }
        if affine.try_insert(&affine_coords(&field)) {
            if constants.try_insert(f) {
                witnesses.push(Witness {
                    word: format!("X{}", k + 1),
                    generation: 0,
                    direction: f.iter().map(|v| v.as_f64()).collect(),
                });
            }
            frontier.push(found.len());
            found.push(Found { field, word: format!("X{}", k + 1) });
        }
    }

    let mut generations_used = 0;
    let mut saturated = false;
    if found.is_empty() {
        return finish_report(n, 0, max_generations, Verdict::Failed, witnesses, &constants, vec![
            "no nonzero forcing direction: every bracket vanishes".into(),
        ]);
    }
    while constants.len() < n && generations_used < max_generations {
        generations_used += 1;
        let mut next = Vec::new();
        for &i in &frontier {
            let mut partners: Vec<(String, &PolyVectorField<T>)> = vec![("F".into(), &drift)];
            partners.extend(found.iter().map(|f| (f.word.clone(), &f.field)));
            let mut produced = Vec::new();
            for (pword, p) in partners {
                let br = match found[i].field.lie_bracket(p) {
                    Ok(b) => b.pruned(tol),
                    Err(_) => continue,
                };
                match br.degree() {
                    None => continue,
                    Some(d) if d > 1 => continue,
                    _ => {}
                }
                let coords = affine_coords(&br);
                if !affine.try_insert(&coords) {
                    continue;
                }
                let word = format!("[{},{}]", found[i].word, pword);
                if let Some(c) = br.constant_value() {
                    if constants.try_insert(&c) {
                        witnesses.push(Witness {
                            word: word.clone(),
                            generation: generations_used,
                            direction: c.iter().map(|v| v.as_f64()).collect(),
                        });
                    }
                }
                produced.push(Found { field: br, word });
            }
            for f in produced {
                next.push(found.len());
                found.push(f);
            }
        }
        if next.is_empty() {
            saturated = true;
            break;
        }
        frontier = next;
    }
    let verdict = if constants.len() == n { Verdict::Certified } else { Verdict::Inconclusive };
    let mut notes = Vec::new();
    if verdict == Verdict::Inconclusive {
        notes.push(if saturated {
            "bracket generation saturated before spanning".into()
        } else {
            "generation budget exhausted before spanning".into()
        });
    }
    finish_report(n, generations_used, max_generations, verdict, witnesses, &constants, notes)
}

fn finish_report<T: Scalar>(
    n: usize,
    generations_used: usize,
    budget: usize,
    verdict: Verdict,
    witnesses: Vec<Witness>,
    constants: &Span<T>,
    notes: Vec<String>,
) -> SpanReport {
    let fields: Vec<PolyVectorField<T>> = constants.vecs.iter().map(|c| PolyVectorField::constant(c)).collect();
    let witness_points = witness_grid::<T>(n)
        .into_iter()
        .map(|p| WitnessPoint {
            rank: pointwise_rank(&fields, &p).unwrap_or(0),
            point: p.iter().map(|v| v.as_f64()).collect(),
        })
        .collect::<Vec<_>>();
    let achieved_rank = witness_points.iter().map(|p| p.rank).min().unwrap_or(0);
    let verdict = match verdict {
        Verdict::Certified if achieved_rank != n => Verdict::Inconclusive,
        v => v,
    };
    SpanReport {
        space: format!("R^{n}"),
        achieved_rank,
        required_rank: n,
        generations_used,
        generation_budget: budget,
        witness_points,
        verdict,
        witnesses,
        lie_algebra_dim: None,
        sub_verdicts: Vec::new(),
        notes,
    }
}

/// Sufficient-condition certificate on `ℝⁿ × S^{n−1}`: all `∂_j` are generated
/// and `Lie(H¹,…,Hⁿ) = 𝔰𝔩(ℝⁿ)`.
pub fn projective_span_certificate<T: Scalar>(sys: &EulerLikeSystem<T>, max_generations: usize) -> SpanReport {
    let n = sys.n();
    let base = constant_field_generation(sys, max_generations);
    let (sl, basis) = check_sl_generation(sys.tensor());
    let sl_verdict = if sl { Verdict::Certified } else { Verdict::Inconclusive };
    let verdict = if base.verdict == Verdict::Certified && sl {
        Verdict::Certified
    } else {
        Verdict::Inconclusive
    };
    let mut notes = base.notes.clone();
    notes.push("sufficient condition only: an inconclusive verdict is not a refutation".into());
    notes.push("eps-uniform by construction: H^k and the bracket cascade do not depend on eps".into());
    SpanReport {
        space: format!("R^{n} x S^{}", n.saturating_sub(1)),
        sub_verdicts: vec![
            SubVerdict {
                name: "constant fields".into(),
                verdict: base.verdict,
                detail: format!("rank {} / {}", base.achieved_rank, base.required_rank),
            },
            SubVerdict {
                name: "sl generation".into(),
                verdict: sl_verdict,
                detail: format!("dim {} / {}", basis.dim, basis.full_dim()),
            },
        ],
        lie_algebra_dim: Some(basis.dim),
        verdict,
        notes,
        ..base
    }
}

/// Numeric rank of the fields evaluated at `point`.
pub fn pointwise_rank<T: Scalar>(fields: &[PolyVectorField<T>], point: &[T]) -> Result<usize> {
    if fields.is_empty() {
        return Ok(0);
    }
    let cols = fields.iter().map(|f| f.eval(point)).collect::<Result<Vec<_>>>()?;
    let m = DenseMatrix::from_columns(&cols)?;
    Ok(m.rank(T::rank_tolerance()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_l96, make_ou};

    fn e(n: usize, i: usize, j: usize) -> DenseMatrix<f64> {
        DenseMatrix::elementary(n, i, j)
    }

    #[test]
    fn sl2_from_two_elementary() {
        let b = lie_closure(&[e(2, 0, 1), e(2, 1, 0)]).unwrap();
        assert_eq!(b.dim, 3);
        assert_eq!(lie_closure(&[e(2, 0, 1)]).unwrap().dim, 1);
    }

    #[test]
    fn cyclic_elementary_generate_sl() {
        for n in 3..=8 {
            let gens: Vec<_> = (0..n).map(|i| e(n, i, (i + 1) % n)).collect();
            assert_eq!(lie_closure(&gens).unwrap().dim, n * n - 1, "n = {n}");
        }
    }

    #[test]
    fn closure_rejects_bad_input() {
        let rect = DenseMatrix::<f64>::zeros(2, 3);
        assert!(lie_closure(&[rect]).is_err());
        assert!(lie_closure(&[DenseMatrix::<f64>::identity(2)]).is_err());
        assert!(lie_closure(&[e(2, 0, 1), e(3, 0, 1)]).is_err());
    }

    #[test]
    fn basis_is_orthonormal_and_traceless() {
        let gens: Vec<_> = (0..4).map(|i| e(4, i, (i + 1) % 4)).collect();
        let b = lie_closure(&gens).unwrap();
        for (i, a) in b.basis.iter().enumerate() {
            assert!(a.trace().abs() < 1e-10);
            for (j, c) in b.basis.iter().enumerate() {
                let ip = dot(a.as_slice(), c.as_slice());
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn l96_sl_generation() {
        let (ok, b) = check_sl_generation(&crate::models::l96_tensor::<f64>(5).unwrap());
        assert!(ok);
        assert_eq!(b.dim, 24);
        let (ok, b) = check_sl_generation(&BilinearTensor::<f64>::zero(3));
        assert!(!ok);
        assert_eq!(b.dim, 0);
    }

    #[test]
    fn cascade_from_two_forced_sites() {
        let sys = make_l96(5, 0.01, &[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = constant_field_generation(&sys, default_budget(5));
        assert_eq!(r.verdict, Verdict::Certified);
        assert!(r.generations_used <= 5);
        assert_eq!(r.witnesses.len(), 5);

        let one = make_l96(5, 0.01, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let r = constant_field_generation(&one, default_budget(5));
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.achieved_rank, 1);
    }

    #[test]
    fn fully_forced_is_immediate() {
        let sys = make_l96(6, 0.1, &[1.0; 6]).unwrap();
        let r = constant_field_generation(&sys, 12);
        assert_eq!(r.verdict, Verdict::Certified);
        assert_eq!(r.generations_used, 0);
    }

    #[test]
    fn unforced_fails_outright() {
        let sys = make_l96(5, 0.1, &[0.0; 5]).unwrap();
        assert_eq!(constant_field_generation(&sys, 10).verdict, Verdict::Failed);
    }

    #[test]
    fn projective_certificate() {
        let sys = make_l96(5, 0.01, &[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = projective_span_certificate(&sys, 10);
        assert_eq!(r.verdict, Verdict::Certified);
        assert_eq!(r.lie_algebra_dim, Some(24));
        assert!(r.to_text().contains("certified"));
        assert!(r.to_json().unwrap().contains("\"witnesses\""));

        let ou = make_ou::<f64>(3, 0.1).unwrap();
        let r = projective_span_certificate(&ou, 6);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.lie_algebra_dim, Some(0));
    }

    #[test]
    fn pointwise_rank_cases() {
        let fields: Vec<PolyVectorField<f64>> = (0..4).map(|i| PolyVectorField::coordinate(4, i)).collect();
        assert_eq!(pointwise_rank(&fields, &[0.3, -1.0, 2.0, 0.0]).unwrap(), 4);
        assert_eq!(pointwise_rank::<f64>(&[], &[0.0; 4]).unwrap(), 0);
    }
}
