//! TOML model documents.
//!
//! Indices are 1-based. Integers are accepted wherever a real is expected.
//!
//! ```toml
//! n = 3
//! eps = 0.05
//! damping = [[-1, 0, 0], [0, -1, 0], [0, 0, -1]]   # optional, default −I
//! forcing = [[1, 0, 0], [0, 1, 0]]                  # one row per X_k
//!
//! [[tensor]]           # F_l += value · x_j x_k
//! l = 1
//! j = 2
//! k = 3
//! value = 1.0
//! ```
//!
//! A Lorenz-96 model can be given instead of explicit entries:
//!
//! ```toml
//! eps = 0.01
//! [l96]
//! j = 5
//! q = [1, 1, 0, 0, 0]
//! ```

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::algebra::{BilinearTensor, DenseMatrix};
use crate::error::{Error, Result};
use crate::models::{make_l96, EulerLikeSystem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub(crate) struct Real(pub(crate) f64);

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Real;
            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a number")
            }
            fn visit_f64<E>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    l: usize,
    j: usize,
    k: usize,
    value: Real,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct L96Doc {
    j: usize,
    q: Spanned<Vec<Real>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    n: Option<Spanned<usize>>,
    eps: Spanned<Real>,
    #[serde(default)]
    permissive: bool,
    #[serde(default)]
    tensor: Vec<Spanned<Entry>>,
    damping: Option<Spanned<Vec<Vec<Real>>>>,
    #[serde(default)]
    forcing: Vec<Spanned<Vec<Real>>>,
    l96: Option<Spanned<L96Doc>>,
}

/// Line and column (1-based) of a byte offset.
pub fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |p| before[p + 1..].chars().count()) + 1;
    (line, column)
}

fn at(text: &str, span: Range<usize>, message: impl Into<String>) -> Error {
    let (line, column) = line_column(text, span.start);
    Error::Parse { line, column, message: message.into() }
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<EulerLikeSystem<f64>> {
    let doc: ModelDoc = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        Error::Parse { line, column, message: e.message().trim().to_string() }
    })?;
    let eps = doc.eps.get_ref().0;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(at(text, doc.eps.span(), "eps must be a finite non-negative number"));
    }

    if let Some(l96) = &doc.l96 {
        if !doc.tensor.is_empty() || doc.damping.is_some() || !doc.forcing.is_empty() {
            return Err(at(text, l96.span(), "[l96] cannot be combined with explicit tensor, damping or forcing"));
        }
        let q: Vec<f64> = l96.get_ref().q.get_ref().iter().map(|r| r.0).collect();
        return make_l96(l96.get_ref().j, eps, &q).map_err(|e| at(text, l96.span(), e.to_string()));
    }

    let n = match &doc.n {
        Some(n) => *n.get_ref(),
        None => return Err(Error::Parse { line: 1, column: 1, message: "missing key `n`".into() }),
    };
    if n == 0 {
        return Err(at(text, doc.n.as_ref().expect("checked").span(), "n must be positive"));
    }
    let mut triplets = Vec::with_capacity(doc.tensor.len());
    for e in &doc.tensor {
        let v = e.get_ref();
        for idx in [v.l, v.j, v.k] {
            if idx == 0 || idx > n {
                return Err(at(text, e.span(), format!("index {idx} outside 1..={n}")));
            }
        }
        triplets.push((v.l - 1, v.j - 1, v.k - 1, v.value.0));
    }
    let tensor = BilinearTensor::from_triplets(n, triplets).map_err(|err| Error::Parse {
        line: 1,
        column: 1,
        message: err.to_string(),
    })?;
    let damping = match &doc.damping {
        Some(rows) => {
            let data: Vec<Vec<f64>> = rows.get_ref().iter().map(|r| r.iter().map(|x| x.0).collect()).collect();
            if data.len() != n || data.iter().any(|r| r.len() != n) {
                return Err(at(text, rows.span(), format!("damping must be {n}x{n}")));
            }
            DenseMatrix::from_rows(&data)?
        }
        None => DenseMatrix::identity(n).scale(-1.0),
    };
    let mut forcing = Vec::with_capacity(doc.forcing.len());
    for row in &doc.forcing {
        if row.get_ref().len() != n {
            return Err(at(text, row.span(), format!("forcing vector must have {n} entries")));
        }
        forcing.push(row.get_ref().iter().map(|x| x.0).collect());
    }
    if doc.permissive {
        EulerLikeSystem::new_permissive(tensor, damping, forcing, eps)
    } else {
        EulerLikeSystem::new(tensor, damping, forcing, eps)
    }
}

pub fn load_model(path: &Path) -> Result<EulerLikeSystem<f64>> {
    parse_model(&std::fs::read_to_string(path)?)
}

/// Writes `sys` as an explicit model document (1-based indices, `(j, k)` and
/// `(k, j)` merged). Reals are printed with 17 significant digits.
pub fn write_model(sys: &EulerLikeSystem<f64>) -> String {
    use std::fmt::Write as _;
    let n = sys.n();
    let real = |v: f64| format!("{v:.16e}");
    let mut s = String::new();
    let _ = writeln!(s, "n = {n}");
    let _ = writeln!(s, "eps = {}", real(sys.eps()));
    if sys.admission() == crate::models::Admission::Permissive {
        let _ = writeln!(s, "permissive = true");
    }
    let rows: Vec<String> = (0..n)
        .map(|i| format!("[{}]", (0..n).map(|j| real(sys.damping()[(i, j)])).collect::<Vec<_>>().join(", ")))
        .collect();
    let _ = writeln!(s, "damping = [{}]", rows.join(", "));
    let forcing: Vec<String> = sys
        .forcing()
        .iter()
        .map(|f| format!("[{}]", f.iter().map(|&v| real(v)).collect::<Vec<_>>().join(", ")))
        .collect();
    let _ = writeln!(s, "forcing = [{}]", forcing.join(", "));
    for &(l, j, k, v) in sys.tensor().entries() {
        if j > k {
            continue;
        }
        let value = if j == k { v } else { v + v };
        let _ = write!(s, "\n[[tensor]]\nl = {}\nj = {}\nk = {}\nvalue = {}\n", l + 1, j + 1, k + 1, real(value));
    }
    s
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Fingerprint of a model: hash of its canonical explicit document.
pub fn model_fingerprint(sys: &EulerLikeSystem<f64>) -> String {
    sha256_hex(write_model(sys).as_bytes())
}
