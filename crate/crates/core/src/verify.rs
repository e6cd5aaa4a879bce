//! Executable checks of the exact identities of the Euler-like class.
//!
//! Flow identities (shear, norm growth, rescaling, volume, energy) integrate the
//! undamped, unforced flow and are limited by the integrator. Sphere-calculus
//! identities use central differences with step [`FD_STEP`].

use serde::Serialize;

use crate::algebra::{BilinearTensor, DenseMatrix};
use crate::error::{check_dim, Error, Result};
use crate::models::{check_unit, EulerLikeSystem};
use crate::scalar::{dot, norm, Scalar};
use crate::sde::{IntegratorConfig, NoiseStream, SdeSystem, TangentFrame, Trajectory};

/// Central-difference step for the sphere-calculus checks.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub points_tested: usize,
    pub pass: bool,
    /// Input that produced `max_residual`, for replay.
    pub worst_input: Option<Vec<f64>>,
}

impl IdentityReport {
    pub fn from_residuals(name: &str, tolerance: f64, residuals: &[(f64, Vec<f64>)]) -> Self {
        let worst = residuals
            .iter()
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Greater));
        let max_residual = worst.map_or(0.0, |w| w.0);
        Self {
            name: name.into(),
            max_residual,
            tolerance,
            points_tested: residuals.len(),
            pass: max_residual <= tolerance,
            worst_input: worst.map(|w| w.1.clone()),
        }
    }
}

fn require_undamped<T: Scalar>(sys: &EulerLikeSystem<T>) -> Result<()> {
    if sys.eps() != T::zero() {
        return Err(Error::InvalidArgument("flow identities need eps = 0".into()));
    }
    Ok(())
}

/// `Φ^t(x)` and `DΦ^t(x)` for the noiseless flow, `round(t/dt)` steps.
pub fn flow_with_jacobian<T: Scalar>(
    sys: &EulerLikeSystem<T>,
    x: &[T],
    t: T,
    cfg: &IntegratorConfig<T>,
) -> Result<(Vec<T>, DenseMatrix<T>)> {
    check_dim(sys.n(), x.len())?;
    let n = sys.n();
    let mut tr = Trajectory::tangent(sys, TangentFrame::identity(x.to_vec(), n)?, *cfg)?;
    let dw = vec![T::zero(); sys.noise_dim()];
    for _ in 0..cfg.steps_for(t) {
        tr.advance_with(&dw)?;
    }
    let f = tr.frame().expect("tangent trajectory");
    Ok((f.x, f.v))
}

/// `Φ^t(x)` for the noiseless flow.
pub fn flow<T: Scalar>(sys: &EulerLikeSystem<T>, x: &[T], t: T, cfg: &IntegratorConfig<T>) -> Result<Vec<T>> {
    check_dim(sys.n(), x.len())?;
    let mut tr = Trajectory::state(sys, x.to_vec(), *cfg)?;
    let dw = vec![T::zero(); sys.noise_dim()];
    for _ in 0..cfg.steps_for(t) {
        tr.advance_with(&dw)?;
    }
    Ok(tr.x().to_vec())
}

/// `|DΦ^t(x)x − Φ^t(x) − t B(Φ^t, Φ^t)| / (1 + |Φ^t(x)|)`.
pub fn shear_identity_residual<T: Scalar>(
    sys: &EulerLikeSystem<T>,
    x: &[T],
    t: T,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    require_undamped(sys)?;
    let (phi, d) = flow_with_jacobian(sys, x, t, cfg)?;
    let dx = d.matvec(x)?;
    let b = sys.tensor().eval(&phi)?;
    let r: Vec<T> = (0..phi.len()).map(|i| dx[i] - phi[i] - t * b[i]).collect();
    Ok(norm(&r) / (T::one() + norm(&phi)))
}

/// Checks `|DΦ^t(x)| ≥ t |B(Φ^t, Φ^t)| / |x|` (spectral norm) at each `t`.
/// The residual is the largest relative violation, zero when the bound holds.
pub fn norm_growth_check<T: Scalar>(
    sys: &EulerLikeSystem<T>,
    x: &[T],
    t_list: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<IdentityReport> {
    require_undamped(sys)?;
    let xn = norm(x);
    if !(xn > T::zero()) {
        return Err(Error::InvalidArgument("norm growth needs x != 0".into()));
    }
    let mut rows = Vec::new();
    for &t in t_list {
        let (phi, d) = flow_with_jacobian(sys, x, t, cfg)?;
        let bound = t * norm(&sys.tensor().eval(&phi)?) / xn;
        let op = d.operator_norm();
        let violation = ((bound - op) / bound.max(T::one())).max(T::zero());
        rows.push((violation.as_f64(), vec![t.as_f64()]));
    }
    Ok(IdentityReport::from_residuals("norm_growth", 1e-10, &rows))
}

/// `|Φ^t(αx) − α Φ^{αt}(x)| / (1 + |Φ^t(αx)|)`, both sides integrated with `cfg.dt`.
pub fn rescale_check<T: Scalar>(
    sys: &EulerLikeSystem<T>,
    x: &[T],
    alpha: T,
    t: T,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    require_undamped(sys)?;
    if alpha < T::zero() {
        return Err(Error::InvalidArgument("rescale needs alpha >= 0".into()));
    }
    let ax: Vec<T> = x.iter().map(|&v| alpha * v).collect();
    let lhs = flow(sys, &ax, t, cfg)?;
    let rhs: Vec<T> = flow(sys, x, alpha * t, cfg)?.into_iter().map(|v| alpha * v).collect();
    let r: Vec<T> = lhs.iter().zip(&rhs).map(|(a, b)| *a - *b).collect();
    Ok(norm(&r) / (T::one() + norm(&lhs)))
}

/// `|log |det DΦ^t(x)||` from QR renormalizations of a full tangent frame.
pub fn volume_log_det<T: Scalar>(sys: &EulerLikeSystem<T>, x: &[T], t: T, cfg: &IntegratorConfig<T>) -> Result<T> {
    check_dim(sys.n(), x.len())?;
    let n = sys.n();
    let mut tr = Trajectory::tangent(sys, TangentFrame::identity(x.to_vec(), n)?, *cfg)?;
    let dw = vec![T::zero(); sys.noise_dim()];
    let mut r = vec![T::zero(); n];
    let mut log_det = T::zero();
    let steps = cfg.steps_for(t);
    let every = cfg.renorm_interval.max(1) as u64;
    for s in 1..=steps {
        tr.advance_with(&dw)?;
        if s % every == 0 || s == steps {
            tr.renormalize(&mut r);
            log_det = log_det + r.iter().map(|v| v.ln()).sum::<T>();
        }
    }
    Ok(log_det.abs())
}

/// Largest `||x_s|² − |x|²| / |x|²` over the steps of a noiseless run to `t`.
pub fn energy_drift<T: Scalar>(sys: &EulerLikeSystem<T>, x: &[T], t: T, cfg: &IntegratorConfig<T>) -> Result<T> {
    let e0 = dot(x, x);
    if !(e0 > T::zero()) {
        return Err(Error::InvalidArgument("energy drift needs x != 0".into()));
    }
    let mut tr = Trajectory::state(sys, x.to_vec(), *cfg)?;
    let dw = vec![T::zero(); sys.noise_dim()];
    let mut worst = T::zero();
    for _ in 0..cfg.steps_for(t) {
        tr.advance_with(&dw)?;
        worst = worst.max((dot(tr.x(), tr.x()) - e0).abs() / e0);
    }
    Ok(worst)
}

/// `V_A(v) = Av − ⟨v, Av⟩ v`.
pub fn sphere_field<T: Scalar>(a: &DenseMatrix<T>, v: &[T]) -> Vec<T> {
    let av = a.matvec(v).expect("matching dimension");
    let q = dot(v, &av);
    av.iter().zip(v).map(|(&p, &w)| p - q * w).collect()
}

/// Orthonormal basis of the tangent space `v^⊥` of the unit sphere.
pub fn tangent_basis<T: Scalar>(v: &[T]) -> Vec<Vec<T>> {
    let n = v.len();
    let mut basis: Vec<Vec<T>> = vec![v.to_vec()];
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = vec![T::zero(); n];
        e[i] = T::one();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &e);
                e.iter_mut().zip(q).for_each(|(a, &b)| *a = *a - c * b);
            }
        }
        let en = norm(&e);
        if en > T::of(1e-6) {
            e.iter_mut().for_each(|a| *a = *a / en);
            basis.push(e);
        }
    }
    basis.remove(0);
    basis
}

/// Point at parameter `s` on the great-circle retraction through `v` along `w`.
fn on_sphere<T: Scalar>(v: &[T], w: &[T], s: T) -> Vec<T> {
    let p: Vec<T> = v.iter().zip(w).map(|(&a, &b)| a + s * b).collect();
    let pn = norm(&p);
    p.into_iter().map(|a| a / pn).collect()
}

/// Central-difference derivative of `f` along the sphere curve through `v` with velocity `w`.
fn directional<T: Scalar>(f: impl Fn(&[T]) -> Vec<T>, v: &[T], w: &[T], h: T) -> Vec<T> {
    let plus = f(&on_sphere(v, w, h));
    let minus = f(&on_sphere(v, w, -h));
    plus.iter().zip(&minus).map(|(&a, &b)| (a - b) / (h + h)).collect()
}

/// Divergence on `S^{n−1}` of the field `f`, by central differences in a tangent frame.
fn sphere_divergence<T: Scalar>(f: impl Fn(&[T]) -> Vec<T>, v: &[T], h: T) -> T {
    tangent_basis(v)
        .iter()
        .map(|e| dot(e, &directional(&f, v, e, h)))
        .sum()
}

/// `|Div V_A(v) − (tr A − n⟨v, Av⟩)|` with the left side by finite differences.
pub fn div_trace_identity_check<T: Scalar>(a: &DenseMatrix<T>, v: &[T]) -> Result<T> {
    check_dim(a.rows(), a.cols())?;
    check_dim(a.rows(), v.len())?;
    check_unit(v)?;
    let n = T::of(v.len() as f64);
    let numeric = sphere_divergence(|w| sphere_field(a, w), v, T::of(FD_STEP));
    let av = a.matvec(v)?;
    Ok((numeric - (a.trace() - n * dot(v, &av))).abs())
}

/// `|[V_A, V_B](v) + V_{[A,B]}(v)|` with the bracket by finite differences.
pub fn projective_bracket_check<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, v: &[T]) -> Result<T> {
    check_dim(a.rows(), v.len())?;
    check_dim(b.rows(), v.len())?;
    check_unit(v)?;
    let h = T::of(FD_STEP);
    let va = sphere_field(a, v);
    let vb = sphere_field(b, v);
    // [X, Y] = (DY) X − (DX) Y
    let dvb = directional(|w| sphere_field(b, w), v, &va, h);
    let dva = directional(|w| sphere_field(a, w), v, &vb, h);
    let mut br: Vec<T> = dvb.iter().zip(&dva).map(|(&p, &q)| p - q).collect();
    let radial = dot(&br, v);
    br.iter_mut().zip(v).for_each(|(c, &w)| *c = *c - radial * w);
    let rhs = sphere_field(&a.commutator(b)?, v);
    let r: Vec<T> = br.iter().zip(&rhs).map(|(&p, &q)| p + q).collect();
    Ok(norm(&r))
}

/// Compares the divergence of the lifted drift on `ℝⁿ × S^{n−1}`, assembled by
/// finite differences, with `2 Div X₀(x) − n⟨v, ∇X₀(x) v⟩`.
pub fn lifted_div_identity_check<T: Scalar>(sys: &EulerLikeSystem<T>, x: &[T], v: &[T]) -> Result<T> {
    let n = sys.n();
    check_dim(n, x.len())?;
    check_dim(n, v.len())?;
    check_unit(v)?;
    let h = T::of(FD_STEP);
    let drift = |y: &[T]| {
        let mut out = vec![T::zero(); n];
        sys.drift_into(y, &mut out);
        out
    };
    let mut base = T::zero();
    let mut y = x.to_vec();
    for i in 0..n {
        y[i] = x[i] + h;
        let p = drift(&y)[i];
        y[i] = x[i] - h;
        let m = drift(&y)[i];
        y[i] = x[i];
        base = base + (p - m) / (h + h);
    }
    let jac = sys.linearization(x)?;
    let fiber = sphere_divergence(|w| sphere_field(&jac, w), v, h);
    let exact_div = jac.trace();
    let formula = exact_div + exact_div - T::of(n as f64) * dot(v, &jac.matvec(v)?);
    Ok((base + fiber - formula).abs())
}

/// Standard Gaussian samples from a counter-based stream, drawn in pairs so
/// that the stream layout does not depend on `len`.
pub fn gaussian_vec(stream: &mut NoiseStream, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    let mut pair = [0.0; 2];
    while out.len() < len {
        stream.fill_increments::<f64>(1.0, &mut pair);
        out.extend_from_slice(&pair);
    }
    out.truncate(len);
    out
}

/// Uniformly distributed unit vector.
pub fn random_unit(stream: &mut NoiseStream, n: usize) -> Vec<f64> {
    loop {
        let g = gaussian_vec(stream, n);
        let gn = norm(&g);
        if gn > 1e-8 {
            return g.into_iter().map(|c| c / gn).collect();
        }
    }
}

/// A generic member of the Euler-like class of dimension `n`.
///
/// Gaussian `b[ℓ][j][k]`, symmetrized in `(j, k)`, then alternately projected
/// onto `{fully symmetric part = 0}` (energy) and `{Σ_ℓ b[ℓ][ℓ][k] = 0 ∀k}`
/// (divergence). Both sets are subspaces, so the iteration converges to the
/// projection onto their intersection. The result is scaled to `max |b| = 1`.
pub fn random_admissible_tensor(n: usize, seed: u64) -> Result<BilinearTensor<f64>> {
    if n < 3 {
        return Err(Error::InvalidArgument("random admissible tensors need n >= 3".into()));
    }
    let mut stream = NoiseStream::new(seed, 0x7e45_0000);
    let idx = |l: usize, j: usize, k: usize| (l * n + j) * n + k;
    let g = gaussian_vec(&mut stream, n * n * n);
    let mut b = vec![0.0; n * n * n];
    for l in 0..n {
        for j in 0..n {
            for k in 0..n {
                b[idx(l, j, k)] = 0.5 * (g[idx(l, j, k)] + g[idx(l, k, j)]);
            }
        }
    }
    // |G_k|² for the divergence functionals with (j,k)-symmetric representers
    let g2 = 0.5 * (n as f64 + 1.0);
    for _ in 0..10_000 {
        let mut sym = vec![0.0; n * n * n];
        for l in 0..n {
            for j in 0..n {
                for k in 0..n {
                    sym[idx(l, j, k)] = (b[idx(l, j, k)]
                        + b[idx(l, k, j)]
                        + b[idx(j, l, k)]
                        + b[idx(j, k, l)]
                        + b[idx(k, l, j)]
                        + b[idx(k, j, l)])
                        / 6.0;
                }
            }
        }
        b.iter_mut().zip(&sym).for_each(|(x, s)| *x -= s);
        let d: Vec<f64> = (0..n).map(|k| (0..n).map(|l| b[idx(l, l, k)]).sum()).collect();
        for (k, &dk) in d.iter().enumerate() {
            let c = dk / g2;
            for l in 0..n {
                b[idx(l, l, k)] -= 0.5 * c;
                b[idx(l, k, l)] -= 0.5 * c;
            }
        }
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let e_res = sym.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let d_res = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if e_res.max(d_res) <= 1e-15 * scale {
            break;
        }
    }
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::InvalidArgument("projection annihilated the tensor".into()));
    }
    let dense: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|l| (0..n).map(|j| (0..n).map(|k| b[idx(l, j, k)] / scale).collect()).collect())
        .collect();
    BilinearTensor::from_dense(&dense)
}

/// Parameters of [`identity_suite`].
#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    pub points: usize,
    pub seed: u64,
    pub t_flow: f64,
    pub cfg: IntegratorConfig<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            points: 50,
            seed: 0,
            t_flow: 1.0,
            cfg: IntegratorConfig::new(1e-3, crate::sde::Scheme::Rk4Deterministic).expect("valid config"),
        }
    }
}

/// Which identity families [`identity_suite`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Shear,
    NormGrowth,
    Rescale,
    DivTrace,
    Bracket,
    LiftedDiv,
    Volume,
    Energy,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "shear" => Suite::Shear,
            "norm" | "norm-growth" => Suite::NormGrowth,
            "rescale" => Suite::Rescale,
            "div-trace" => Suite::DivTrace,
            "bracket" => Suite::Bracket,
            "lifted-div" => Suite::LiftedDiv,
            "volume" => Suite::Volume,
            "energy" => Suite::Energy,
            other => return Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
        })
    }
}

/// A flow that blows up fails its identity rather than aborting the suite.
fn or_infinite(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::BlowUp { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Runs the selected identity checks on `sc.points` random inputs each.
/// The flow checks use the undamped copy of `sys`.
pub fn identity_suite(sys: &EulerLikeSystem<f64>, suite: Suite, sc: &SuiteConfig) -> Result<Vec<IdentityReport>> {
    let n = sys.n();
    let free = sys.with_eps(0.0)?;
    let mut stream = NoiseStream::new(sc.seed, 0x5e1f_0000);
    let want = |s: Suite| suite == Suite::All || suite == s;
    let mut out = Vec::new();
    let t = sc.t_flow;

    if want(Suite::Energy) {
        let mut rows = Vec::new();
        for _ in 0..sc.points {
            let x = random_unit(&mut stream, n);
            rows.push((or_infinite(energy_drift(&free, &x, t, &sc.cfg))?, x));
        }
        let mut r = IdentityReport::from_residuals("energy", 1e-8, &rows);
        let structural = sys.tensor().energy_residual();
        if structural > sys.tensor().roundoff_tolerance() {
            r.max_residual = r.max_residual.max(structural);
            r.pass = false;
        }
        out.push(r);
    }
    if want(Suite::Shear) {
        let mut rows = Vec::new();
        for _ in 0..sc.points {
            let x = random_unit(&mut stream, n);
            rows.push((or_infinite(shear_identity_residual(&free, &x, t, &sc.cfg))?, x));
        }
        out.push(IdentityReport::from_residuals("shear", 1e-6, &rows));
    }
    if want(Suite::NormGrowth) {
        let mut worst: Option<IdentityReport> = None;
        for _ in 0..sc.points {
            let x = random_unit(&mut stream, n);
            let mut r = match norm_growth_check(&free, &x, &[0.5 * t, t], &sc.cfg) {
                Err(Error::BlowUp { .. }) => IdentityReport::from_residuals("norm_growth", 1e-10, &[(f64::INFINITY, vec![])]),
                other => other?,
            };
            r.worst_input = Some(x);
            if worst.as_ref().is_none_or(|w| r.max_residual > w.max_residual) {
                worst = Some(r);
            }
        }
        if let Some(mut w) = worst {
            w.points_tested = sc.points;
            out.push(w);
        }
    }
    if want(Suite::Rescale) {
        let mut rows = Vec::new();
        for _ in 0..sc.points {
            let x = random_unit(&mut stream, n);
            rows.push((or_infinite(rescale_check(&free, &x, 2.0, 0.5 * t, &sc.cfg))?, x));
        }
        out.push(IdentityReport::from_residuals("rescale", 1e-6, &rows));
    }
    if want(Suite::Volume) {
        let mut rows = Vec::new();
        for _ in 0..sc.points.min(10) {
            let x = random_unit(&mut stream, n);
            rows.push((or_infinite(volume_log_det(&free, &x, t, &sc.cfg))?, x));
        }
        out.push(IdentityReport::from_residuals("volume", 1e-6, &rows));
    }
    if want(Suite::DivTrace) {
        let mut rows = Vec::new();
        for _ in 0..sc.points {
            let a = DenseMatrix::from_row_major(n, n, gaussian_vec(&mut stream, n * n))?;
            let v = random_unit(&mut stream, n);
            rows.push((div_trace_identity_check(&a, &v)?, v));
        }
        out.push(IdentityReport::from_residuals("div_trace", 1e-6, &rows));
    }
    if want(Suite::Bracket) {
        let mut rows = Vec::new();
        for _ in 0..sc.points {
            let a = DenseMatrix::from_row_major(n, n, gaussian_vec(&mut stream, n * n))?;
            let b = DenseMatrix::from_row_major(n, n, gaussian_vec(&mut stream, n * n))?;
            let v = random_unit(&mut stream, n);
            rows.push((projective_bracket_check(&a, &b, &v)?, v));
        }
        out.push(IdentityReport::from_residuals("projective_bracket", 1e-5, &rows));
    }
    if want(Suite::LiftedDiv) {
        let mut rows = Vec::new();
        for _ in 0..sc.points {
            let x = gaussian_vec(&mut stream, n);
            let v = random_unit(&mut stream, n);
            let mut input = x.clone();
            input.extend_from_slice(&v);
            rows.push((lifted_div_identity_check(sys, &x, &v)?, input));
        }
        out.push(IdentityReport::from_residuals("lifted_div", 1e-6, &rows));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_l96;
    use crate::sde::Scheme;

    fn rk4(dt: f64) -> IntegratorConfig<f64> {
        IntegratorConfig::new(dt, Scheme::Rk4Deterministic).unwrap()
    }

    #[test]
    fn shear_is_exact_at_time_zero() {
        let sys = make_l96(5, 0.0, &[1.0; 5]).unwrap();
        let x = [0.6, 0.0, -0.8, 0.0, 0.0];
        assert_eq!(shear_identity_residual(&sys, &x, 0.0, &rk4(1e-3)).unwrap(), 0.0);
    }

    #[test]
    fn flow_checks_reject_damped_systems() {
        let sys = make_l96(5, 0.1, &[1.0; 5]).unwrap();
        assert!(shear_identity_residual(&sys, &[1.0; 5], 1.0, &rk4(1e-3)).is_err());
    }

    #[test]
    fn identity_matrix_has_zero_sphere_field() {
        let a = DenseMatrix::<f64>::identity(4);
        let v = [0.5, 0.5, 0.5, 0.5];
        assert!(div_trace_identity_check(&a, &v).unwrap() < 1e-9);
        assert!(sphere_field(&a, &v).iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        let a = DenseMatrix::<f64>::identity(2);
        assert!(div_trace_identity_check(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_normal_to_v() {
        let v = [0.0f64, 0.6, 0.0, 0.8];
        let b = tangent_basis(&v);
        assert_eq!(b.len(), 3);
        for (i, e) in b.iter().enumerate() {
            assert!(dot(e, &v).abs() < 1e-14);
            for (j, f) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(e, f) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn random_tensor_is_admissible() {
        for seed in 0..5 {
            let b = random_admissible_tensor(4, seed).unwrap();
            assert!(b.is_energy_conserving(), "seed {seed}: {}", b.energy_residual());
            assert!(b.is_divergence_free(), "seed {seed}");
            assert!(!b.is_zero());
        }
    }
}
