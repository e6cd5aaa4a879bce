//! Fisher information of the stationary density: through the exponent identity
//! and, for low-dimensional states, by a plug-in kernel density estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::exponents::ExponentEstimate;
use crate::models::{EulerLikeSystem, ProjectiveState};
use crate::scalar::Scalar;

/// A derived value with a propagated standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub std_error: f64,
}

/// `FI = n λ₁ / ε − 2 tr A`, with standard error `n σ(λ₁) / ε`.
pub fn fisher_from_exponents<T: Scalar>(l1: &ExponentEstimate, sys: &EulerLikeSystem<T>) -> Result<Measured> {
    let eps = sys.eps().as_f64();
    if eps == 0.0 {
        return Err(Error::InvalidArgument("the Fisher-information identity needs eps > 0".into()));
    }
    let n = sys.n() as f64;
    let tr = sys.damping().trace().as_f64();
    Ok(Measured {
        value: n * (l1.value / eps) - 2.0 * tr,
        std_error: n * (l1.std_error / eps),
    })
}

/// Thinned draws of the projective process with their time stamps.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<T> {
    times: Vec<f64>,
    states: Vec<ProjectiveState<T>>,
    stride: u64,
    total_t: f64,
}

impl<T: Scalar> SampleSet<T> {
    pub fn new(times: Vec<f64>, states: Vec<ProjectiveState<T>>, stride: u64, total_t: f64) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::InvalidArgument("one time stamp per sample is required".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("sample time stamps must be strictly increasing".into()));
        }
        if let Some(first) = states.first() {
            let d = first.x.len();
            if states.iter().any(|s| s.x.len() != d) {
                return Err(Error::InvalidArgument("samples have inconsistent dimension".into()));
            }
        }
        Ok(Self {
            times,
            states,
            stride,
            total_t,
        })
    }

    /// Samples with unit time spacing and no direction component; handy for
    /// externally generated draws.
    pub fn from_points(points: Vec<Vec<T>>) -> Result<Self> {
        let total_t = points.len() as f64;
        let times = (0..points.len()).map(|i| i as f64).collect();
        let states = points.into_iter().map(|x| ProjectiveState { x, v: Vec::new() }).collect();
        Self::new(times, states, 1, total_t)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.x.len())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[ProjectiveState<T>] {
        &self.states
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn total_t(&self) -> f64 {
        self.total_t
    }

    /// First `count` samples.
    pub fn truncated(&self, count: usize) -> Self {
        let c = count.min(self.len());
        Self {
            times: self.times[..c].to_vec(),
            states: self.states[..c].to_vec(),
            stride: self.stride,
            total_t: self.times.get(c.saturating_sub(1)).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Bandwidth {
    /// Scott's rule per coordinate: `σ_i · N^{−1/(d+4)}`.
    Scott,
    Fixed(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PluginOptions {
    pub bandwidth: Bandwidth,
    /// Integration box per coordinate; defaults to the sample range padded by four bandwidths.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Grid cells per bandwidth along each axis.
    pub cells_per_bandwidth: f64,
    /// Relative density floor inside the Fisher integrand.
    pub density_floor: f64,
}

impl Default for PluginOptions {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Scott,
            bounds: None,
            cells_per_bandwidth: 4.0,
            density_floor: 1e-12,
        }
    }
}

const MAX_GRID_CELLS: f64 = 4.0e6;
const KERNEL_RADIUS: f64 = 5.0;

/// Plug-in Fisher information `½ Σ_k ∫ (∂_{X_k} f̂)² / f̂` of the `x`-marginal.
///
/// `f̂` is a product-Gaussian KDE evaluated by linear binning and separable
/// convolution on a regular grid; the integral uses the midpoint rule over the
/// configured box with `f̂` floored at `density_floor · max f̂`.
pub fn estimate_fi_plugin<T: Scalar>(
    samples: &SampleSet<T>,
    directions: &[Vec<f64>],
    options: &PluginOptions,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let d = samples.dim();
    if d == 0 || d > 3 {
        return Err(Error::Unsupported(format!(
            "plug-in Fisher information supports state dimension 1..=3, got {d}"
        )));
    }
    if directions.iter().any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: directions.iter().map(Vec::len).find(|&l| l != d).unwrap_or(0),
        });
    }
    let pts: Vec<Vec<f64>> = samples
        .states()
        .iter()
        .map(|s| s.x.iter().map(|v| v.as_f64()).collect())
        .collect();
    let n = pts.len() as f64;

    let h: Vec<f64> = match &options.bandwidth {
        Bandwidth::Fixed(h) => {
            if h.len() != d || h.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::InvalidArgument("bandwidths must be positive, one per coordinate".into()));
            }
            h.clone()
        }
        Bandwidth::Scott => (0..d)
            .map(|i| {
                let m = pts.iter().map(|p| p[i]).sum::<f64>() / n;
                let var = pts.iter().map(|p| (p[i] - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                var.sqrt() * n.powf(-1.0 / (d as f64 + 4.0))
            })
            .collect(),
    };
    if h.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("degenerate sample spread; bandwidth is zero".into()));
    }

    let bounds: Vec<(f64, f64)> = match &options.bounds {
        Some(b) if b.len() == d => b.clone(),
        Some(_) => return Err(Error::InvalidArgument("one integration interval per coordinate".into())),
        None => (0..d)
            .map(|i| {
                let lo = pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
                (lo - 4.0 * h[i], hi + 4.0 * h[i])
            })
            .collect(),
    };

    // Density grid covers the box plus the kernel support so that binning sees every
    // sample that influences the box.
    let per_axis_cap = MAX_GRID_CELLS.powf(1.0 / d as f64).floor();
    let mut axes = Vec::with_capacity(d);
    for i in 0..d {
        let (lo, hi) = bounds[i];
        if !(hi > lo) {
            return Err(Error::InvalidArgument("empty integration interval".into()));
        }
        let pad = KERNEL_RADIUS * h[i];
        let glo = lo - pad;
        let ghi = hi + pad;
        let mut spacing = h[i] / options.cells_per_bandwidth;
        if (ghi - glo) / spacing > per_axis_cap {
            spacing = (ghi - glo) / per_axis_cap;
        }
        let cells = ((ghi - glo) / spacing).ceil() as usize + 1;
        axes.push(Axis { lo: glo, spacing, cells });
    }
    let grid = Grid::new(axes);

    let counts = grid.bin_linear(&pts);
    // f̂ and its gradient by separable convolution.
    let mut density = counts.clone();
    for (i, &hi) in h.iter().enumerate() {
        density = grid.convolve_axis(&density, i, &gaussian_weights(hi, grid.axes[i].spacing, false));
    }
    let mut gradient = Vec::with_capacity(d);
    for i in 0..d {
        let mut g = counts.clone();
        for (j, &hj) in h.iter().enumerate() {
            g = grid.convolve_axis(&g, j, &gaussian_weights(hj, grid.axes[j].spacing, i == j));
        }
        gradient.push(g);
    }
    let norm = 1.0 / n;
    let peak = density.iter().fold(0.0f64, |m, &v| m.max(v)) * norm;
    let floor = options.density_floor * peak;
    let cell_volume: f64 = grid.axes.iter().map(|a| a.spacing).product();

    let mut fi = 0.0;
    for (idx, &dens) in density.iter().enumerate() {
        let coords = grid.coords(idx);
        if coords.iter().zip(&bounds).any(|(&c, &(lo, hi))| c < lo || c > hi) {
            continue;
        }
        let f = (dens * norm).max(floor);
        if f <= 0.0 {
            continue;
        }
        for dir in directions {
            let dd: f64 = dir.iter().zip(&gradient).map(|(&c, g)| c * g[idx] * norm).sum();
            fi += dd * dd / f;
        }
    }
    let fi = 0.5 * fi * cell_volume;
    assert!(fi >= 0.0, "Fisher information must be non-negative");
    Ok(fi)
}

#[derive(Clone, Copy, Debug)]
struct Axis {
    lo: f64,
    spacing: f64,
    cells: usize,
}

struct Grid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    fn new(axes: Vec<Axis>) -> Self {
        let mut strides = vec![1; axes.len()];
        for i in (0..axes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].cells;
        }
        let len = axes.iter().map(|a| a.cells).product();
        Self { axes, strides, len }
    }

    fn coords(&self, mut idx: usize) -> Vec<f64> {
        self.axes
            .iter()
            .zip(&self.strides)
            .map(|(a, &s)| {
                let k = idx / s;
                idx %= s;
                a.lo + k as f64 * a.spacing
            })
            .collect()
    }

    /// Linear (cloud-in-cell) binning of the points onto grid nodes.
    fn bin_linear(&self, pts: &[Vec<f64>]) -> Vec<f64> {
        let d = self.axes.len();
        let mut out = vec![0.0; self.len];
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        'points: for p in pts {
            for i in 0..d {
                let a = &self.axes[i];
                let u = (p[i] - a.lo) / a.spacing;
                if u < 0.0 || u >= (a.cells - 1) as f64 {
                    continue 'points;
                }
                base[i] = u.floor() as usize;
                frac[i] = u - base[i] as f64;
            }
            for corner in 0..(1usize << d) {
                let mut w = 1.0;
                let mut idx = 0;
                for i in 0..d {
                    let hi = (corner >> i) & 1 == 1;
                    w *= if hi { frac[i] } else { 1.0 - frac[i] };
                    idx += (base[i] + hi as usize) * self.strides[i];
                }
                out[idx] += w;
            }
        }
        out
    }

    /// Discrete convolution along one axis with a symmetric (or antisymmetric) stencil
    /// `weights[m]`, `m = -radius..=radius` stored at `m + radius`.
    fn convolve_axis(&self, data: &[f64], axis: usize, weights: &[f64]) -> Vec<f64> {
        let radius = (weights.len() / 2) as isize;
        let cells = self.axes[axis].cells as isize;
        let stride = self.strides[axis];
        let mut out = vec![0.0; data.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let k = ((idx / stride) % cells as usize) as isize;
            let base = idx as isize - k * stride as isize;
            let lo = (-radius).max(k - (cells - 1));
            let hi = radius.min(k);
            let mut s = 0.0;
            for m in lo..=hi {
                // out(k) = Σ_m data(k − m) w(m): sample at k − m contributes w(m)
                let src = base + (k - m) * stride as isize;
                s += data[src as usize] * weights[(m + radius) as usize];
            }
            *o = s;
        }
        out
    }
}

/// Gaussian kernel `K_h(m·Δ)` (or its derivative) sampled on the grid.
fn gaussian_weights(h: f64, spacing: f64, derivative: bool) -> Vec<f64> {
    let radius = (KERNEL_RADIUS * h / spacing).ceil() as isize;
    let c = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    (-radius..=radius)
        .map(|m| {
            let u = m as f64 * spacing;
            let k = c * (-0.5 * (u / h).powi(2)).exp();
            if derivative {
                -u / (h * h) * k
            } else {
                k
            }
        })
        .collect()
}

/// Empirical `E[exp(γ |x|²)]` with a batch-means error bar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tightness {
    pub value: f64,
    pub std_error: f64,
    pub overflow: bool,
}

/// Mean of `exp(γ |x|²)` over the samples; reports infinity with a flag on overflow.
pub fn tightness_diagnostic<T: Scalar>(samples: &SampleSet<T>, gamma: f64) -> Result<Tightness> {
    tightness_of(samples.states().iter().map(|s| s.x.as_slice()), gamma)
}

pub(crate) fn tightness_of<'a, T: Scalar>(xs: impl Iterator<Item = &'a [T]>, gamma: f64) -> Result<Tightness> {
    let vals: Vec<f64> = xs
        .map(|x| (gamma * x.iter().map(|v| v.as_f64().powi(2)).sum::<f64>()).exp())
        .collect();
    if vals.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Ok(Tightness {
            value: f64::INFINITY,
            std_error: f64::INFINITY,
            overflow: true,
        });
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let nb = 20.min(vals.len());
    let std_error = if nb < 2 {
        f64::INFINITY
    } else {
        let per = vals.len() / nb;
        let means: Vec<f64> = (0..nb)
            .map(|b| {
                let end = if b + 1 == nb { vals.len() } else { (b + 1) * per };
                let chunk = &vals[b * per..end];
                chunk.iter().sum::<f64>() / chunk.len() as f64
            })
            .collect();
        let m = means.iter().sum::<f64>() / nb as f64;
        let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nb as f64 - 1.0);
        (var / nb as f64).sqrt()
    };
    Ok(Tightness {
        value: mean,
        std_error,
        overflow: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_ou;

    #[test]
    fn identity_arithmetic() {
        let sys = make_l96_like(5, 0.01);
        let zero = ExponentEstimate::analytic(0.0);
        assert!((fisher_from_exponents(&zero, &sys).unwrap().value - 10.0).abs() < 1e-12);
        assert!(fisher_from_exponents(&zero, &sys.with_eps(0.0).unwrap()).is_err());
    }

    fn make_l96_like(n: usize, eps: f64) -> EulerLikeSystem<f64> {
        crate::models::make_l96(n, eps, &vec![1.0; n]).unwrap()
    }

    #[test]
    fn ou_identity_with_exact_exponent() {
        for n in 1..5 {
            let eps = 0.05;
            let sys = make_ou(n, eps).unwrap();
            let fi = fisher_from_exponents(&ExponentEstimate::analytic(-eps), &sys).unwrap();
            assert!((fi.value - n as f64).abs() < 1e-12);
        }
        // isotropic case λ₁ = λ_Σ / n gives −tr A
        let sys = make_ou(3, 0.2).unwrap();
        let l1 = ExponentEstimate::analytic(0.2 * -3.0 / 3.0);
        assert!((fisher_from_exponents(&l1, &sys).unwrap().value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn plugin_rejects_bad_input() {
        let empty = SampleSet::<f64>::from_points(vec![]).unwrap();
        assert!(estimate_fi_plugin(&empty, &[], &PluginOptions::default()).is_err());
        let four = SampleSet::from_points(vec![vec![0.0; 4], vec![1.0; 4]]).unwrap();
        assert!(matches!(
            estimate_fi_plugin(&four, &[vec![1.0, 0.0, 0.0, 0.0]], &PluginOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn convolving_a_delta_reproduces_the_stencil() {
        let grid = Grid::new(vec![Axis { lo: 0.0, spacing: 1.0, cells: 9 }]);
        let mut delta = vec![0.0; 9];
        delta[4] = 1.0;
        let w = [1.0, 2.0, 3.0];
        assert_eq!(grid.convolve_axis(&delta, 0, &w), vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        // truncated at the edges instead of wrapping
        delta.iter_mut().for_each(|v| *v = 0.0);
        delta[0] = 1.0;
        assert_eq!(&grid.convolve_axis(&delta, 0, &w)[..3], &[2.0, 3.0, 0.0]);
    }

    #[test]
    fn plugin_recovers_gaussian_fisher_information() {
        // N(0, σ²I) in two dimensions: ½ Σ_i ∫ (∂_i p)² / p = 1/σ²
        let sigma = 0.5;
        let mut stream = crate::sde::NoiseStream::new(11, 0);
        let pts: Vec<Vec<f64>> = (0..200_000)
            .map(|_| crate::sde::gauss_increments(&mut stream, 2, sigma * sigma))
            .collect();
        let samples = SampleSet::from_points(pts).unwrap();
        let dirs = [vec![1.0, 0.0], vec![0.0, 1.0]];
        let fi = estimate_fi_plugin(&samples, &dirs, &PluginOptions::default()).unwrap();
        let exact = 1.0 / (sigma * sigma);
        assert!((fi / exact - 1.0).abs() < 0.1, "fi {fi} vs {exact}");
    }

    #[test]
    fn tightness_at_zero_gamma_is_one() {
        let s = SampleSet::from_points(vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 0.0]]).unwrap();
        assert_eq!(tightness_diagnostic(&s, 0.0).unwrap().value, 1.0);
        let big = SampleSet::from_points(vec![vec![1e3]]).unwrap();
        assert!(tightness_diagnostic(&big, 1.0).unwrap().overflow);
    }

    #[test]
    fn sample_times_must_increase() {
        let st = ProjectiveState { x: vec![0.0], v: vec![] };
        assert!(SampleSet::new(vec![1.0, 1.0], vec![st.clone(), st], 1, 2.0).is_err());
    }
}
