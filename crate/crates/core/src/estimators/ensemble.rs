//! Ensembles of independent trajectories.
//!
//! Trajectory `i` draws its increments from stream `i` of the base seed and its
//! initial condition from a separate stream, so any member can be replayed alone.
//! Members run in parallel and are reduced in index order, which makes results
//! bit-identical regardless of thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::batch::BatchStats;
use crate::estimators::exponents::{
    benettin_stats, fk_stats, spectrum_from_stats, spectrum_stats, ExponentEstimate, Horizon, Method, Spectrum,
};
use crate::estimators::fisher::{tightness_of, SampleSet, Tightness};
use crate::scalar::Scalar;
use crate::sde::{gauss_increments, integrate, IntegratorConfig, NoiseStream, Propagation, SampleRecorder, SdeSystem};

const INITIAL_CONDITION_STREAM: u64 = 1 << 40;
const SAMPLE_STREAM_KEY: u64 = 0x5a3f_1e5d;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub base_seed: u64,
    pub size: usize,
    /// Standard deviation of the Gaussian initial state per coordinate.
    pub x0_scale: f64,
}

/// Initial state `x0 ~ N(0, scale² I)` and a uniformly random unit direction for member `member`.
pub fn initial_condition<T: Scalar>(seed: u64, member: u64, n: usize, scale: f64) -> (Vec<T>, Vec<T>) {
    let mut s = NoiseStream::new(seed, INITIAL_CONDITION_STREAM + member);
    let x: Vec<T> = gauss_increments(&mut s, n, T::of(scale * scale));
    let mut v: Vec<T> = gauss_increments(&mut s, n, T::one());
    let nv = crate::scalar::norm(&v);
    if nv > T::zero() {
        v.iter_mut().for_each(|c| *c = *c / nv);
    } else {
        v[0] = T::one();
    }
    (x, v)
}

fn members(spec: &EnsembleSpec) -> Result<Vec<u64>> {
    if spec.size == 0 {
        return Err(Error::InvalidArgument("ensemble size must be >= 1".into()));
    }
    Ok((0..spec.size as u64).collect())
}

fn tag(seed: u64, stream_id: u64) -> impl FnOnce(Error) -> Error {
    move |e| Error::Trajectory {
        seed,
        stream_id,
        source: Box::new(e),
    }
}

/// Result of one estimator over an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEstimate {
    /// Pooled estimate: mean over members, error from all batches together.
    pub pooled: ExponentEstimate,
    pub members: Vec<ExponentEstimate>,
    /// Running average against time: `(t, mean over members of the batch means up to t)`.
    pub series: Vec<(f64, f64)>,
}

fn pool(stats: &[BatchStats], horizon: Horizon, method: Method) -> EnsembleEstimate {
    EnsembleEstimate {
        pooled: ExponentEstimate::from_stats(&BatchStats::pooled(stats), horizon.t_final, horizon.burn_in, method),
        members: stats
            .iter()
            .map(|s| ExponentEstimate::from_stats(s, horizon.t_final, horizon.burn_in, method))
            .collect(),
        series: running_series(stats, horizon),
    }
}

fn running_series(stats: &[BatchStats], horizon: Horizon) -> Vec<(f64, f64)> {
    let nb = stats.iter().map(|s| s.means.len()).min().unwrap_or(0);
    let span = horizon.t_final - horizon.burn_in;
    let mut acc = 0.0;
    (0..nb)
        .map(|b| {
            acc += stats.iter().map(|s| s.means[b]).sum::<f64>() / stats.len() as f64;
            (horizon.burn_in + span * (b + 1) as f64 / nb as f64, acc / (b + 1) as f64)
        })
        .collect()
}

pub fn ensemble_benettin<T: Scalar, S: SdeSystem<T>>(
    sys: &S,
    spec: &EnsembleSpec,
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
) -> Result<EnsembleEstimate> {
    let stats = members(spec)?
        .into_par_iter()
        .map(|m| {
            let (x0, v0) = initial_condition::<T>(spec.base_seed, m, sys.dim(), spec.x0_scale);
            let mut stream = NoiseStream::new(spec.base_seed, m);
            benettin_stats(sys, &x0, &v0, horizon, cfg, &mut stream).map_err(tag(spec.base_seed, m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(&stats, horizon, Method::Benettin))
}

pub fn ensemble_fk<T: Scalar, S: SdeSystem<T>>(
    sys: &S,
    spec: &EnsembleSpec,
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
) -> Result<EnsembleEstimate> {
    let stats = members(spec)?
        .into_par_iter()
        .map(|m| {
            let (x0, v0) = initial_condition::<T>(spec.base_seed, m, sys.dim(), spec.x0_scale);
            let mut stream = NoiseStream::new(spec.base_seed, m);
            fk_stats(sys, &x0, &v0, horizon, cfg, &mut stream).map_err(tag(spec.base_seed, m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(&stats, horizon, Method::FkAverage))
}

/// Full-spectrum QR estimate pooled over the ensemble.
pub fn ensemble_spectrum<T: Scalar, S: SdeSystem<T>>(
    sys: &S,
    spec: &EnsembleSpec,
    horizon: Horizon,
    k: usize,
    cfg: &IntegratorConfig<T>,
) -> Result<Spectrum> {
    let runs = members(spec)?
        .into_par_iter()
        .map(|m| {
            let (x0, _) = initial_condition::<T>(spec.base_seed, m, sys.dim(), spec.x0_scale);
            let mut stream = NoiseStream::new(spec.base_seed, m);
            spectrum_stats(sys, &x0, horizon, k, cfg, &mut stream).map_err(tag(spec.base_seed, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = runs[0].len();
    let pooled: Vec<BatchStats> = (0..cols)
        .map(|c| BatchStats::pooled(runs.iter().map(|r| &r[c])))
        .collect();
    Ok(spectrum_from_stats(&pooled, horizon))
}

/// Tightness diagnostic on states sampled every `stride` steps after burn-in,
/// pooled over the ensemble (state-only integration).
pub fn ensemble_tightness<T: Scalar, S: SdeSystem<T>>(
    sys: &S,
    spec: &EnsembleSpec,
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
    stride: u64,
    gamma: f64,
) -> Result<Tightness> {
    let stride = stride.max(1);
    let samples = members(spec)?
        .into_par_iter()
        .map(|m| {
            let (x0, _) = initial_condition::<T>(spec.base_seed, m, sys.dim(), spec.x0_scale);
            // Separate stream so the tightness run does not reuse the exponent runs' noise.
            let mut stream = NoiseStream::new(spec.base_seed ^ 0x5eed_7167, m);
            let mut tr = crate::sde::Trajectory::state(sys, x0, *cfg).map_err(tag(spec.base_seed, m))?;
            let total = cfg.steps_for(T::of(horizon.t_final));
            let burn = cfg.steps_for(T::of(horizon.burn_in));
            let mut out = Vec::new();
            for step in 1..=total {
                tr.advance(&mut stream).map_err(tag(spec.base_seed, m))?;
                if step > burn && step % stride == 0 {
                    out.push(tr.x().to_vec());
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<Vec<T>>>>>()?;
    tightness_of(samples.iter().flatten().map(Vec::as_slice), gamma)
}

/// Thinned projective samples `(t, x, v)` every `stride` steps after burn-in,
/// concatenated over the ensemble. Member `m`'s time stamps are shifted by
/// `m · T` so the set stays time-ordered.
pub fn ensemble_samples<T: Scalar, S: SdeSystem<T>>(
    sys: &S,
    spec: &EnsembleSpec,
    horizon: Horizon,
    cfg: &IntegratorConfig<T>,
    stride: u64,
) -> Result<SampleSet<T>> {
    let runs = members(spec)?
        .into_par_iter()
        .map(|m| {
            let (x0, v0) = initial_condition::<T>(spec.base_seed, m, sys.dim(), spec.x0_scale);
            let mut stream = NoiseStream::new(spec.base_seed ^ SAMPLE_STREAM_KEY, m);
            let mut rec = SampleRecorder::after(stride, T::of(horizon.burn_in));
            integrate(
                sys,
                &x0,
                T::of(horizon.t_final),
                cfg,
                &mut stream,
                Propagation::Projective(v0),
                &mut [&mut rec],
            )
            .map_err(tag(spec.base_seed, m))?;
            Ok(rec.into_parts())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (m, (t, s)) in runs.into_iter().enumerate() {
        let offset = m as f64 * horizon.t_final;
        times.extend(t.into_iter().map(|v| v.as_f64() + offset));
        states.extend(s);
    }
    SampleSet::new(times, states, stride.max(1), horizon.t_final * spec.size as f64)
}
