//! Lyapunov-exponent estimators.

use serde::{Deserialize, Serialize};

use crate::algebra::DenseMatrix;
use crate::error::{check_dim, Error, Result};
use crate::estimators::batch::{BatchMeans, BatchStats};
use crate::models::{EulerLikeSystem, ProjectiveState};
use crate::scalar::{norm, Scalar};
use crate::sde::{IntegratorConfig, NoiseStream, SdeSystem, TangentFrame, Trajectory};

/// Default number of batches for batch-means error bars.
pub const DEFAULT_BATCHES: usize = 20;

/// Default burn-in as a fraction of the horizon.
pub const DEFAULT_BURN_IN_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Benettin,
    QrSpectrum,
    FkAverage,
    Analytic,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Benettin => "benettin",
            Self::QrSpectrum => "qr_spectrum",
            Self::FkAverage => "fk_average",
            Self::Analytic => "analytic",
        })
    }
}

/// A Lyapunov-exponent estimate in units of 1/time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub horizon_t: f64,
    pub burn_in_t: f64,
    pub method: Method,
    pub n_batches: usize,
}

impl ExponentEstimate {
    pub fn from_stats(stats: &BatchStats, horizon_t: f64, burn_in_t: f64, method: Method) -> Self {
        Self {
            value: stats.value(),
            std_error: stats.std_error(),
            horizon_t,
            burn_in_t,
            method,
            n_batches: stats.means.len(),
        }
    }

    /// An exact value with zero error bar.
    pub fn analytic(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            horizon_t: f64::INFINITY,
            burn_in_t: 0.0,
            method: Method::Analytic,
            n_batches: 0,
        }
    }

    /// `|a − b| ≤ k · sqrt(σ_a² + σ_b²)`.
    pub fn agrees_with(&self, other: &ExponentEstimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.std_error.hypot(other.std_error)
    }

    /// `|value − target| ≤ k · σ`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Horizon, burn-in and batching shared by the time-average estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Horizon {
    pub t_final: f64,
    pub burn_in: f64,
    pub n_batches: usize,
}

impl Horizon {
    pub fn new(t_final: f64, burn_in: f64) -> Result<Self> {
        if !(t_final > burn_in) || !(burn_in >= 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need T > burn_in >= 0, got T = {t_final}, burn_in = {burn_in}"
            )));
        }
        Ok(Self {
            t_final,
            burn_in,
            n_batches: DEFAULT_BATCHES,
        })
    }

    /// Burn-in at the default fraction of `t_final`.
    pub fn with_default_burn_in(t_final: f64) -> Result<Self> {
        Self::new(t_final, DEFAULT_BURN_IN_FRACTION * t_final)
    }

    pub fn batches(mut self, n_batches: usize) -> Self {
        self.n_batches = n_batches;
        self
    }

    fn steps<T: Scalar>(&self, cfg: &IntegratorConfig<T>) -> Result<(u64, u64)> {
        let total = cfg.steps_for(T::of(self.t_final));
        let burn = cfg.steps_for(T::of(self.burn_in));
        if total <= burn {
            return Err(Error::InvalidArgument("horizon shorter than one step after burn-in".into()));
        }
        Ok((burn, total - burn))
    }
}

fn unit<T: Scalar>(v: &[T]) -> Result<Vec<T>> {
    let nv = norm(v);
    if !(nv > T::zero()) || !nv.is_finite() {
        return Err(Error::InvalidArgument("initial tangent vector must be non-zero".into()));
    }
    Ok(v.iter().map(|&c| c / nv).collect())
}

/// Top exponent by renormalizing a single integrated tangent vector.
pub fn estimate_top_benettin<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    x0: &[T],
    v0: &[T],
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
    stream: &mut NoiseStream,
) -> Result<ExponentEstimate> {
    check_dim(sys.dim(), v0.len())?;
    let stats = benettin_stats(sys, x0, v0, horizon, cfg, stream)?;
    Ok(ExponentEstimate::from_stats(&stats, horizon.t_final, horizon.burn_in, Method::Benettin))
}

pub(crate) fn benettin_stats<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    x0: &[T],
    v0: &[T],
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
    stream: &mut NoiseStream,
) -> Result<BatchStats> {
    let n = sys.dim();
    let v0 = unit(v0)?;
    let frame = TangentFrame::new(x0.to_vec(), DenseMatrix::from_row_major(n, 1, v0)?)?;
    let mut spec = qr_run(sys, frame, horizon, cfg, stream)?;
    Ok(spec.swap_remove(0))
}

/// QR-renormalized frame run; returns batch statistics per column.
fn qr_run<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    frame: TangentFrame<T>,
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
    stream: &mut NoiseStream,
) -> Result<Vec<BatchStats>> {
    let k = frame.v.cols();
    let (burn, measured) = horizon.steps(cfg)?;
    let interval = cfg.renorm_interval as u64;
    let dt = cfg.dt.as_f64();
    let mut tr = Trajectory::tangent(sys, frame, *cfg)?;
    let mut r = vec![T::one(); k];

    // Normalize the starting frame so that the first logs measure growth only.
    tr.renormalize(&mut r);
    for step in 1..=burn {
        tr.advance(stream)?;
        if step % interval == 0 || step == burn {
            tr.renormalize(&mut r);
        }
    }

    let mut batches: Vec<BatchMeans> = (0..k).map(|_| BatchMeans::new(measured, horizon.n_batches)).collect();
    let mut since = 0u64;
    for step in 1..=measured {
        tr.advance(stream)?;
        since += 1;
        let closes = batches[0].is_batch_end(step);
        if since == interval || closes {
            tr.renormalize(&mut r);
            for (b, &rii) in batches.iter_mut().zip(&r) {
                b.add_value(rii.ln().as_f64());
            }
            since = 0;
        }
        for b in &mut batches {
            b.add_time(step, dt);
        }
    }
    Ok(batches.into_iter().map(BatchMeans::finish).collect())
}

/// Leading `k` exponents and (for `k = n`) their sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub exponents: Vec<ExponentEstimate>,
    /// Sum of the computed exponents, with its own batch-means error bar.
    pub sum: ExponentEstimate,
}

/// Leading `k` exponents from time averages of `log R_ii` of a QR-renormalized frame
/// started on the first `k` coordinate axes.
pub fn estimate_spectrum_qr<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    x0: &[T],
    horizon: Horizon,
    k: usize,
    cfg: &IntegratorConfig<T>,
    stream: &mut NoiseStream,
) -> Result<Spectrum> {
    let stats = spectrum_stats(sys, x0, horizon, k, cfg, stream)?;
    Ok(spectrum_from_stats(&stats, horizon))
}

pub(crate) fn spectrum_stats<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    x0: &[T],
    horizon: Horizon,
    k: usize,
    cfg: &IntegratorConfig<T>,
    stream: &mut NoiseStream,
) -> Result<Vec<BatchStats>> {
    let n = sys.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n = {n}, got k = {k}")));
    }
    check_dim(n, x0.len())?;
    let frame = TangentFrame::identity(x0.to_vec(), k)?;
    let mut cols = qr_run(sys, frame, horizon, cfg, stream)?;
    let sum = BatchStats {
        means: (0..cols[0].means.len())
            .map(|b| cols.iter().map(|c| c.means[b]).sum())
            .collect(),
        total: cols.iter().map(|c| c.total).sum(),
        duration: cols[0].duration,
    };
    cols.push(sum);
    Ok(cols)
}

/// Builds a [`Spectrum`] from per-column statistics with the sum appended last.
pub(crate) fn spectrum_from_stats(stats: &[BatchStats], horizon: Horizon) -> Spectrum {
    let (cols, sum) = stats.split_at(stats.len() - 1);
    Spectrum {
        exponents: cols
            .iter()
            .map(|s| ExponentEstimate::from_stats(s, horizon.t_final, horizon.burn_in, Method::QrSpectrum))
            .collect(),
        sum: ExponentEstimate::from_stats(&sum[0], horizon.t_final, horizon.burn_in, Method::QrSpectrum),
    }
}

/// Time average of `⟨v, ∇X₀(x) v⟩` along the projective process.
///
/// Valid for additive (constant) forcing, where the martingale term of the
/// log-norm vanishes; multiplicative-noise systems are rejected.
pub fn estimate_fk_average<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    x0: &[T],
    v0: &[T],
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
    stream: &mut NoiseStream,
) -> Result<ExponentEstimate> {
    let stats = fk_stats(sys, x0, v0, horizon, cfg, stream)?;
    Ok(ExponentEstimate::from_stats(&stats, horizon.t_final, horizon.burn_in, Method::FkAverage))
}

pub(crate) fn fk_stats<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    x0: &[T],
    v0: &[T],
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
    stream: &mut NoiseStream,
) -> Result<BatchStats> {
    if !sys.additive_noise() {
        return Err(Error::Unsupported(
            "the Furstenberg–Khasminskii average needs additive noise; use Benettin".into(),
        ));
    }
    let n = sys.dim();
    check_dim(n, v0.len())?;
    let s = ProjectiveState::new(x0.to_vec(), unit(v0)?)?;
    let (burn, measured) = horizon.steps(cfg)?;
    let dt = cfg.dt.as_f64();
    let mut tr = Trajectory::projective(sys, s, *cfg)?;
    for _ in 0..burn {
        tr.advance(stream)?;
    }
    let mut jac = vec![T::zero(); n * n];
    let mut batches = BatchMeans::new(measured, horizon.n_batches);
    for step in 1..=measured {
        let q = rayleigh(sys, tr.x(), tr.aux(), &mut jac);
        batches.add(step, q.as_f64() * dt, dt);
        tr.advance(stream)?;
    }
    Ok(batches.finish())
}

/// `⟨v, ∇f(x) v⟩`.
pub(crate) fn rayleigh<T: Scalar, S: SdeSystem<T> + ?Sized>(sys: &S, x: &[T], v: &[T], jac: &mut [T]) -> T {
    let n = x.len();
    sys.drift_jacobian_into(x, jac);
    let mut q = T::zero();
    for i in 0..n {
        let row = &jac[i * n..(i + 1) * n];
        q = q + v[i] * row.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    }
    q
}

/// `λ_Σ = ε tr A`, exact for divergence-free drifts.
pub fn lambda_sigma_analytic<T: Scalar>(sys: &EulerLikeSystem<T>) -> Result<f64> {
    if !sys.tensor().is_divergence_free() {
        return Err(Error::NotEulerLike(
            "the sum exponent is ε tr A only for divergence-free drifts".into(),
        ));
    }
    Ok((sys.eps() * sys.damping().trace()).as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_l96, make_linear};

    #[test]
    fn horizon_must_exceed_burn_in() {
        assert!(Horizon::new(10.0, 10.0).is_err());
        assert!(Horizon::new(10.0, -1.0).is_err());
        assert!(Horizon::new(10.0, 1.0).is_ok());
    }

    #[test]
    fn analytic_sum_exponent() {
        let l96 = make_l96(5, 0.01, &[1.0; 5]).unwrap();
        assert!((lambda_sigma_analytic(&l96).unwrap() + 0.05).abs() < 1e-15);
        assert_eq!(lambda_sigma_analytic(&l96.with_eps(0.0).unwrap()).unwrap(), 0.0);
        let damped = EulerLikeSystem::new(
            crate::algebra::BilinearTensor::zero(2),
            DenseMatrix::from_diagonal(&[-1.0, -2.0]),
            vec![],
            0.1,
        )
        .unwrap();
        assert!((lambda_sigma_analytic(&damped).unwrap() + 0.3).abs() < 1e-15);
    }

    #[test]
    fn too_many_columns_is_rejected() {
        let sys = make_linear(DenseMatrix::from_diagonal(&[1.0, -1.0])).unwrap();
        let h = Horizon::new(1.0, 0.1).unwrap();
        let cfg = IntegratorConfig::new(0.01, crate::sde::Scheme::Rk4Deterministic).unwrap();
        let r = estimate_spectrum_qr(&sys, &[1.0, 1.0], h, 3, &cfg, &mut NoiseStream::new(0, 0));
        assert!(r.is_err());
    }
}
