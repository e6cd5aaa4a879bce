//! CSV and JSON outputs.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which round-trips
//! every `f64`. Column order of every table is fixed.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{ExponentEstimate, Measured, Method, Tightness};
use crate::models::ProjectiveState;
use crate::sde::Scheme;

/// A real with 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Optional real; empty when absent.
pub fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// Header line plus rows, comma-separated, newline-terminated.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Thinned projective samples: `t, x1..xn, v1..vn`.
pub fn samples_csv(times: &[f64], states: &[ProjectiveState<f64>]) -> String {
    let n = states.first().map_or(0, |s| s.x.len());
    let mut s = String::from("t");
    for i in 1..=n {
        let _ = write!(s, ",x{i}");
    }
    for i in 1..=n {
        let _ = write!(s, ",v{i}");
    }
    s.push('\n');
    for (t, st) in times.iter().zip(states) {
        s.push_str(&real(*t));
        for v in st.x.iter().chain(&st.v) {
            s.push(',');
            s.push_str(&real(*v));
        }
        s.push('\n');
    }
    s
}

/// Running-average table `t, <name>` per estimator, aligned on the first series' times.
pub fn series_csv(series: &[(&str, &[(f64, f64)])]) -> String {
    let mut header = vec!["t"];
    header.extend(series.iter().map(|(n, _)| *n));
    let len = series.iter().map(|(_, s)| s.len()).min().unwrap_or(0);
    let rows: Vec<Vec<String>> = (0..len)
        .map(|i| {
            let mut r = vec![real(series[0].1[i].0)];
            r.extend(series.iter().map(|(_, s)| real(s[i].1)));
            r
        })
        .collect();
    csv(&header, &rows)
}

/// A final estimate with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub method: Method,
    pub value: f64,
    pub std_error: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub burn_in: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub ensemble_size: usize,
    pub n_batches: usize,
    pub fingerprint: String,
}

impl EstimateRecord {
    pub fn new(e: &ExponentEstimate, dt: f64, scheme: Scheme, seed: u64, ensemble_size: usize, fingerprint: &str) -> Self {
        Self {
            method: e.method,
            value: e.value,
            std_error: e.std_error,
            t_final: e.horizon_t,
            burn_in: e.burn_in_t,
            dt,
            scheme,
            seed,
            ensemble_size,
            n_batches: e.n_batches,
            fingerprint: fingerprint.to_string(),
        }
    }
}

/// One ε of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub eps: f64,
    pub fingerprint: String,
    pub estimates: Vec<EstimateRecord>,
    pub lambda1: Option<f64>,
    pub stderr: Option<f64>,
    pub lambda1_over_eps: Option<f64>,
    pub fisher: Option<Measured>,
    pub tightness: Option<Tightness>,
    pub error: Option<String>,
}

/// Persisted outcome of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub fingerprint: String,
    pub config: serde_json::Value,
    pub cells: Vec<SweepCell>,
    pub warnings: Vec<String>,
    pub wall_clock_s: f64,
    pub code_version: String,
}

pub const SWEEP_COLUMNS: [&str; 6] = ["eps", "lambda1", "stderr", "lambda1_over_eps", "FI", "tightness"];

/// The sweep table; failed cells keep their `eps` and leave the rest empty.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                real(c.eps),
                opt_real(c.lambda1),
                opt_real(c.stderr),
                opt_real(c.lambda1_over_eps),
                opt_real(c.fisher.map(|f| f.value)),
                opt_real(c.tightness.map(|t| t.value)),
            ]
        })
        .collect();
    csv(&SWEEP_COLUMNS, &rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23] {
            assert_eq!(real(v).parse::<f64>().unwrap(), v);
        }
        // cached cells must come back bit-identical
        let v = 0.13161806081390542f64 / 0.1;
        let back: f64 = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn sample_header_and_row() {
        let s = ProjectiveState { x: vec![1.0, 2.0], v: vec![0.0, 1.0] };
        let out = samples_csv(&[0.5], &[s]);
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("t,x1,x2,v1,v2"));
        assert_eq!(lines.next().unwrap().split(',').count(), 5);
    }

    #[test]
    fn failed_cell_leaves_blanks() {
        let c = SweepCell {
            eps: 0.1,
            fingerprint: String::new(),
            estimates: vec![],
            lambda1: None,
            stderr: None,
            lambda1_over_eps: None,
            fisher: None,
            tightness: None,
            error: Some("blow-up".into()),
        };
        let t = sweep_csv(&[c]);
        assert_eq!(t.lines().nth(1).unwrap(), format!("{},,,,,", real(0.1)));
    }
}
