//! Fixed-step integration of the state, the tangent (variational) flow and the
//! projective process.
//!
//! Every scheme is applied to the augmented system `(x, aux)` where `aux` is
//! empty, an `n × k` tangent frame, or a unit direction `v`. Tangent and
//! direction updates therefore use exactly the stage values and noise
//! increments of the state update, so the tangent flow is the derivative of
//! the discrete map actually taken.

use serde::{Deserialize, Serialize};

use crate::algebra::DenseMatrix;
use crate::error::{check_dim, Error, Result};
use crate::models::{check_unit, ProjectiveState};
use crate::scalar::{dot, Scalar};
use crate::sde::noise::NoiseStream;
use crate::sde::system::SdeSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Strong order 1.0 for additive noise; Itô interpretation otherwise.
    EulerMaruyama,
    /// Predictor–corrector; converges to the Stratonovich solution.
    HeunStratonovich,
    /// Classical RK4 on the drift, noise added from the step's left end point.
    /// Exact splitting for additive noise; meant for ε = 0 and additive forcing.
    Rk4Deterministic,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler_maruyama" | "em" => Ok(Self::EulerMaruyama),
            "heun_stratonovich" | "heun" => Ok(Self::HeunStratonovich),
            "rk4_deterministic" | "rk4" => Ok(Self::Rk4Deterministic),
            other => Err(Error::InvalidArgument(format!("unknown scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::EulerMaruyama => "euler_maruyama",
            Self::HeunStratonovich => "heun_stratonovich",
            Self::Rk4Deterministic => "rk4_deterministic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    pub dt: T,
    pub scheme: Scheme,
    /// Steps between QR renormalizations of tangent frames.
    pub renorm_interval: usize,
}

pub const DEFAULT_RENORM_INTERVAL: usize = 10;
pub const DEFAULT_DT: f64 = 1e-3;

impl<T: Scalar> IntegratorConfig<T> {
    pub fn new(dt: T, scheme: Scheme) -> Result<Self> {
        Self::with_renorm(dt, scheme, DEFAULT_RENORM_INTERVAL)
    }

    pub fn with_renorm(dt: T, scheme: Scheme, renorm_interval: usize) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if renorm_interval == 0 {
            return Err(Error::InvalidArgument("renorm_interval must be >= 1".into()));
        }
        Ok(Self { dt, scheme, renorm_interval })
    }

    /// Heun for stochastic runs, RK4 for ε = 0; `dt = 1e-3`.
    ///
    /// Euler–Maruyama is not the default: its tangent map `I + dt J` biases the
    /// sum exponent by `O(dt)`, which is visible at `dt = 1e-3`.
    pub fn default_for_eps(eps: T) -> Self {
        let scheme = if eps > T::zero() {
            Scheme::HeunStratonovich
        } else {
            Scheme::Rk4Deterministic
        };
        Self {
            dt: T::of(DEFAULT_DT),
            scheme,
            renorm_interval: DEFAULT_RENORM_INTERVAL,
        }
    }

    /// Number of steps covering `[0, t]`.
    pub fn steps_for(&self, t: T) -> u64 {
        (t / self.dt).round().to_u64().unwrap_or(0)
    }
}

/// A state together with `k` tangent vectors, stored as the columns of an `n × k` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentFrame<T> {
    pub x: Vec<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Scalar> TangentFrame<T> {
    pub fn new(x: Vec<T>, v: DenseMatrix<T>) -> Result<Self> {
        check_dim(x.len(), v.rows())?;
        if v.cols() > v.rows() {
            return Err(Error::InvalidArgument("a tangent frame has at most n columns".into()));
        }
        if !v.is_finite() {
            return Err(Error::InvalidArgument("tangent frame must be finite".into()));
        }
        Ok(Self { x, v })
    }

    /// Frame spanned by the first `k` coordinate axes.
    pub fn identity(x: Vec<T>, k: usize) -> Result<Self> {
        let n = x.len();
        let mut v = DenseMatrix::zeros(n, k);
        for i in 0..k.min(n) {
            v[(i, i)] = T::one();
        }
        Self::new(x, v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Lift {
    State,
    Tangent(usize),
    Projective,
}

struct Work<T> {
    jac: Vec<T>,
    njac: Vec<T>,
    tmp: Vec<T>,
}

/// Buffers and stage storage for one augmented step.
struct Stepper<T> {
    n: usize,
    lift: Lift,
    w: Work<T>,
    fx: [Vec<T>; 4],
    fa: [Vec<T>; 4],
    gx: [Vec<T>; 2],
    ga: [Vec<T>; 2],
    sx: Vec<T>,
    sa: Vec<T>,
}

impl<T: Scalar> Stepper<T> {
    fn new(n: usize, lift: Lift) -> Self {
        let aux = match lift {
            Lift::State => 0,
            Lift::Tangent(k) => n * k,
            Lift::Projective => n,
        };
        let z = |len: usize| vec![T::zero(); len];
        Self {
            n,
            lift,
            w: Work {
                jac: z(n * n),
                njac: z(n * n),
                tmp: z(n),
            },
            fx: [z(n), z(n), z(n), z(n)],
            fa: [z(aux), z(aux), z(aux), z(aux)],
            gx: [z(n), z(n)],
            ga: [z(aux), z(aux)],
            sx: z(n),
            sa: z(aux),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn drift<S: SdeSystem<T> + ?Sized>(
        lift: Lift,
        n: usize,
        sys: &S,
        x: &[T],
        a: &[T],
        dx: &mut [T],
        da: &mut [T],
        w: &mut Work<T>,
    ) {
        sys.drift_into(x, dx);
        match lift {
            Lift::State => {}
            Lift::Tangent(k) => {
                sys.drift_jacobian_into(x, &mut w.jac);
                frame_product(&w.jac, a, n, k, da);
            }
            Lift::Projective => {
                sys.drift_jacobian_into(x, &mut w.jac);
                project_tangent(&w.jac, a, n, &mut w.tmp, da);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn noise<S: SdeSystem<T> + ?Sized>(
        lift: Lift,
        n: usize,
        sys: &S,
        x: &[T],
        a: &[T],
        dw: &[T],
        gx: &mut [T],
        ga: &mut [T],
        w: &mut Work<T>,
    ) {
        gx.iter_mut().for_each(|v| *v = T::zero());
        sys.add_noise(x, dw, gx);
        if lift == Lift::State {
            return;
        }
        if sys.additive_noise() {
            ga.iter_mut().for_each(|v| *v = T::zero());
            return;
        }
        sys.noise_jacobian_into(x, dw, &mut w.njac);
        match lift {
            Lift::State => {}
            Lift::Tangent(k) => frame_product(&w.njac, a, n, k, ga),
            Lift::Projective => project_tangent(&w.njac, a, n, &mut w.tmp, ga),
        }
    }

    fn step<S: SdeSystem<T> + ?Sized>(&mut self, sys: &S, scheme: Scheme, dt: T, x: &mut [T], a: &mut [T], dw: &[T]) {
        let (n, lift) = (self.n, self.lift);
        let noisy = !dw.is_empty();
        let half = T::of(0.5);
        match scheme {
            Scheme::EulerMaruyama => {
                Self::drift(lift, n, sys, x, a, &mut self.fx[0], &mut self.fa[0], &mut self.w);
                if noisy {
                    Self::noise(lift, n, sys, x, a, dw, &mut self.gx[0], &mut self.ga[0], &mut self.w);
                    axpy2(x, dt, &self.fx[0], &self.gx[0]);
                    axpy2(a, dt, &self.fa[0], &self.ga[0]);
                } else {
                    axpy(x, dt, &self.fx[0]);
                    axpy(a, dt, &self.fa[0]);
                }
            }
            Scheme::HeunStratonovich => {
                Self::drift(lift, n, sys, x, a, &mut self.fx[0], &mut self.fa[0], &mut self.w);
                if noisy {
                    Self::noise(lift, n, sys, x, a, dw, &mut self.gx[0], &mut self.ga[0], &mut self.w);
                }
                for i in 0..n {
                    self.sx[i] = x[i] + dt * self.fx[0][i] + if noisy { self.gx[0][i] } else { T::zero() };
                }
                for i in 0..a.len() {
                    self.sa[i] = a[i] + dt * self.fa[0][i] + if noisy { self.ga[0][i] } else { T::zero() };
                }
                let (f1x, f1a) = (&mut self.fx[1], &mut self.fa[1]);
                Self::drift(lift, n, sys, &self.sx, &self.sa, f1x, f1a, &mut self.w);
                if noisy {
                    let (g1x, g1a) = (&mut self.gx[1], &mut self.ga[1]);
                    Self::noise(lift, n, sys, &self.sx, &self.sa, dw, g1x, g1a, &mut self.w);
                }
                let hdt = half * dt;
                for i in 0..n {
                    let mut d = hdt * (self.fx[0][i] + self.fx[1][i]);
                    if noisy {
                        d = d + half * (self.gx[0][i] + self.gx[1][i]);
                    }
                    x[i] = x[i] + d;
                }
                for i in 0..a.len() {
                    let mut d = hdt * (self.fa[0][i] + self.fa[1][i]);
                    if noisy {
                        d = d + half * (self.ga[0][i] + self.ga[1][i]);
                    }
                    a[i] = a[i] + d;
                }
            }
            Scheme::Rk4Deterministic => {
                if noisy {
                    Self::noise(lift, n, sys, x, a, dw, &mut self.gx[0], &mut self.ga[0], &mut self.w);
                }
                let hdt = half * dt;
                Self::drift(lift, n, sys, x, a, &mut self.fx[0], &mut self.fa[0], &mut self.w);
                for stage in 1..4 {
                    let c = if stage == 3 { dt } else { hdt };
                    for i in 0..n {
                        self.sx[i] = x[i] + c * self.fx[stage - 1][i];
                    }
                    for i in 0..a.len() {
                        self.sa[i] = a[i] + c * self.fa[stage - 1][i];
                    }
                    let (fx, fa) = (&mut self.fx[stage], &mut self.fa[stage]);
                    Self::drift(lift, n, sys, &self.sx, &self.sa, fx, fa, &mut self.w);
                }
                let sixth = dt / T::of(6.0);
                let two = T::of(2.0);
                for i in 0..n {
                    let mut d = sixth * (self.fx[0][i] + two * (self.fx[1][i] + self.fx[2][i]) + self.fx[3][i]);
                    if noisy {
                        d = d + self.gx[0][i];
                    }
                    x[i] = x[i] + d;
                }
                for i in 0..a.len() {
                    let mut d = sixth * (self.fa[0][i] + two * (self.fa[1][i] + self.fa[2][i]) + self.fa[3][i]);
                    if noisy {
                        d = d + self.ga[0][i];
                    }
                    a[i] = a[i] + d;
                }
            }
        }
    }
}

#[inline]
fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

#[inline]
fn axpy2<T: Scalar>(y: &mut [T], a: T, x: &[T], g: &[T]) {
    for ((yi, &xi), &gi) in y.iter_mut().zip(x).zip(g) {
        *yi = *yi + a * xi + gi;
    }
}

/// `out = M · F` for `M` (`n × n`) and the frame `F` (`n × k`), both row-major.
#[inline]
fn frame_product<T: Scalar>(m: &[T], f: &[T], n: usize, k: usize, out: &mut [T]) {
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        for c in 0..k {
            let mut s = T::zero();
            for (mm, &rv) in row.iter().enumerate() {
                s = s + rv * f[mm * k + c];
            }
            out[i * k + c] = s;
        }
    }
}

/// `out = M v − ⟨v, M v⟩ v`.
#[inline]
fn project_tangent<T: Scalar>(m: &[T], v: &[T], n: usize, tmp: &mut [T], out: &mut [T]) {
    for i in 0..n {
        tmp[i] = m[i * n..(i + 1) * n].iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    }
    let r = dot(v, tmp);
    for i in 0..n {
        out[i] = tmp[i] - r * v[i];
    }
}

/// A single trajectory of the state, optionally carrying a tangent frame or a
/// projective direction. Strictly sequential; owns all of its work buffers.
pub struct Trajectory<'s, T, S: ?Sized> {
    sys: &'s S,
    cfg: IntegratorConfig<T>,
    stepper: Stepper<T>,
    x: Vec<T>,
    aux: Vec<T>,
    dw: Vec<T>,
    step: u64,
    last_norm: T,
}

impl<'s, T: Scalar, S: SdeSystem<T> + ?Sized> Trajectory<'s, T, S> {
    fn build(sys: &'s S, x0: Vec<T>, aux: Vec<T>, lift: Lift, cfg: IntegratorConfig<T>) -> Result<Self> {
        check_dim(sys.dim(), x0.len())?;
        if x0.iter().chain(&aux).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("initial condition must be finite".into()));
        }
        Ok(Self {
            sys,
            cfg,
            stepper: Stepper::new(sys.dim(), lift),
            x: x0,
            aux,
            dw: vec![T::zero(); sys.noise_dim()],
            step: 0,
            last_norm: T::one(),
        })
    }

    pub fn state(sys: &'s S, x0: Vec<T>, cfg: IntegratorConfig<T>) -> Result<Self> {
        Self::build(sys, x0, Vec::new(), Lift::State, cfg)
    }

    pub fn tangent(sys: &'s S, frame: TangentFrame<T>, cfg: IntegratorConfig<T>) -> Result<Self> {
        let k = frame.v.cols();
        Self::build(sys, frame.x, frame.v.into_vec(), Lift::Tangent(k), cfg)
    }

    pub fn projective(sys: &'s S, s: ProjectiveState<T>, cfg: IntegratorConfig<T>) -> Result<Self> {
        check_unit(&s.v)?;
        Self::build(sys, s.x, s.v, Lift::Projective, cfg)
    }

    pub fn config(&self) -> &IntegratorConfig<T> {
        &self.cfg
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    /// Tangent frame entries (row-major `n × k`) or the unit direction.
    pub fn aux(&self) -> &[T] {
        &self.aux
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> T {
        T::of(self.step as f64) * self.cfg.dt
    }

    /// `|v|` before the most recent projective renormalization.
    pub fn last_direction_norm(&self) -> T {
        self.last_norm
    }

    /// Draws this step's increments from `stream` and advances one step.
    pub fn advance(&mut self, stream: &mut NoiseStream) -> Result<()> {
        if !self.dw.is_empty() {
            stream.fill_increments(self.cfg.dt, &mut self.dw);
        }
        let dw = std::mem::take(&mut self.dw);
        let out = self.advance_with(&dw);
        self.dw = dw;
        out
    }

    /// Advances one step with caller-supplied increments.
    pub fn advance_with(&mut self, dw: &[T]) -> Result<()> {
        check_dim(self.sys.noise_dim(), dw.len())?;
        self.stepper
            .step(self.sys, self.cfg.scheme, self.cfg.dt, &mut self.x, &mut self.aux, dw);
        self.step += 1;
        if self.stepper.lift == Lift::Projective {
            let nv = dot(&self.aux, &self.aux).sqrt();
            self.last_norm = nv;
            if nv > T::zero() {
                self.aux.iter_mut().for_each(|c| *c = *c / nv);
            }
        }
        if self.x.iter().chain(&self.aux).any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                step: self.step,
                time: self.time().as_f64(),
            });
        }
        Ok(())
    }

    /// QR-renormalizes the tangent frame, writing the diagonal of `R` into `r_diag`.
    pub fn renormalize(&mut self, r_diag: &mut [T]) {
        if let Lift::Tangent(k) = self.stepper.lift {
            crate::algebra::matrix::qr_in_place(&mut self.aux, self.stepper.n, k, r_diag);
        }
    }

    pub fn frame(&self) -> Option<TangentFrame<T>> {
        match self.stepper.lift {
            Lift::Tangent(k) => Some(TangentFrame {
                x: self.x.clone(),
                v: DenseMatrix::from_row_major(self.stepper.n, k, self.aux.clone()).ok()?,
            }),
            _ => None,
        }
    }

    pub fn projective_state(&self) -> Option<ProjectiveState<T>> {
        match self.stepper.lift {
            Lift::Projective => Some(ProjectiveState {
                x: self.x.clone(),
                v: self.aux.clone(),
            }),
            _ => None,
        }
    }
}

/// One step of the configured scheme for the state alone.
pub fn step_state<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    x: &[T],
    cfg: &IntegratorConfig<T>,
    dw: &[T],
) -> Result<Vec<T>> {
    let mut tr = Trajectory::state(sys, x.to_vec(), *cfg)?;
    tr.advance_with(dw)?;
    Ok(tr.x)
}

/// One step of the state and its tangent frame, driven by the same increments.
pub fn step_tangent<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    frame: &TangentFrame<T>,
    cfg: &IntegratorConfig<T>,
    dw: &[T],
) -> Result<TangentFrame<T>> {
    let mut tr = Trajectory::tangent(sys, frame.clone(), *cfg)?;
    tr.advance_with(dw)?;
    Ok(tr.frame().expect("tangent trajectory"))
}

/// One step of the projective process; the direction is renormalized afterwards.
pub fn step_projective<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    s: &ProjectiveState<T>,
    cfg: &IntegratorConfig<T>,
    dw: &[T],
) -> Result<ProjectiveState<T>> {
    let mut tr = Trajectory::projective(sys, s.clone(), *cfg)?;
    tr.advance_with(dw)?;
    Ok(tr.projective_state().expect("projective trajectory"))
}

/// What [`integrate`] shows observers after each step.
pub struct StepView<'a, T> {
    pub step: u64,
    pub t: T,
    pub x: &'a [T],
    /// Current unit direction, when a direction is being propagated.
    pub v: Option<&'a [T]>,
    /// `log` of the direction's growth factor over this step (zero in state mode).
    pub log_growth: T,
}

pub trait Observer<T> {
    fn observe(&mut self, view: &StepView<'_, T>);
}

impl<T, F: FnMut(&StepView<'_, T>)> Observer<T> for F {
    fn observe(&mut self, view: &StepView<'_, T>) {
        self(view)
    }
}

/// What is carried alongside the state in [`integrate`].
#[derive(Clone, Debug)]
pub enum Propagation<T> {
    State,
    /// A single tangent vector, renormalized every `renorm_interval` steps;
    /// `log_growth` is reported at renormalization steps.
    Tangent(Vec<T>),
    /// The projective direction, renormalized every step.
    Projective(Vec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationOutcome<T> {
    pub x: Vec<T>,
    pub v: Option<Vec<T>>,
    pub steps: u64,
    pub t: T,
}

/// Integrates over `[0, t_final]`, streaming each step to the observers.
/// Nothing is stored unless an observer stores it.
pub fn integrate<T: Scalar, S: SdeSystem<T> + ?Sized>(
    sys: &S,
    x0: &[T],
    t_final: T,
    cfg: &IntegratorConfig<T>,
    stream: &mut NoiseStream,
    propagation: Propagation<T>,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<IntegrationOutcome<T>> {
    if t_final < T::zero() {
        return Err(Error::InvalidArgument("integration horizon must be non-negative".into()));
    }
    let n_steps = cfg.steps_for(t_final);
    match propagation {
        Propagation::State => {
            let mut tr = Trajectory::state(sys, x0.to_vec(), *cfg)?;
            for _ in 0..n_steps {
                tr.advance(stream)?;
                let view = StepView {
                    step: tr.steps(),
                    t: tr.time(),
                    x: tr.x(),
                    v: None,
                    log_growth: T::zero(),
                };
                observers.iter_mut().for_each(|o| o.observe(&view));
            }
            Ok(IntegrationOutcome {
                x: tr.x.clone(),
                v: None,
                steps: tr.steps(),
                t: tr.time(),
            })
        }
        Propagation::Tangent(v0) => {
            check_dim(sys.dim(), v0.len())?;
            let n = v0.len();
            let frame = TangentFrame::new(x0.to_vec(), DenseMatrix::from_row_major(n, 1, v0)?)?;
            let mut tr = Trajectory::tangent(sys, frame, *cfg)?;
            let mut r = [T::one()];
            for _ in 0..n_steps {
                tr.advance(stream)?;
                let mut growth = T::zero();
                if tr.steps() % cfg.renorm_interval as u64 == 0 || tr.steps() == n_steps {
                    tr.renormalize(&mut r);
                    growth = r[0].ln();
                }
                let view = StepView {
                    step: tr.steps(),
                    t: tr.time(),
                    x: tr.x(),
                    v: Some(tr.aux()),
                    log_growth: growth,
                };
                observers.iter_mut().for_each(|o| o.observe(&view));
            }
            Ok(IntegrationOutcome {
                x: tr.x.clone(),
                v: Some(tr.aux.clone()),
                steps: tr.steps(),
                t: tr.time(),
            })
        }
        Propagation::Projective(v0) => {
            let s = ProjectiveState::new(x0.to_vec(), v0)?;
            let mut tr = Trajectory::projective(sys, s, *cfg)?;
            for _ in 0..n_steps {
                tr.advance(stream)?;
                let view = StepView {
                    step: tr.steps(),
                    t: tr.time(),
                    x: tr.x(),
                    v: Some(tr.aux()),
                    log_growth: tr.last_direction_norm().ln(),
                };
                observers.iter_mut().for_each(|o| o.observe(&view));
            }
            Ok(IntegrationOutcome {
                x: tr.x.clone(),
                v: Some(tr.aux.clone()),
                steps: tr.steps(),
                t: tr.time(),
            })
        }
    }
}

/// Sums `log_growth` over all observed steps.
#[derive(Clone, Debug, Default)]
pub struct LogNormAccumulator<T> {
    pub total: T,
    pub count: u64,
}

impl<T: Scalar> Observer<T> for LogNormAccumulator<T> {
    fn observe(&mut self, view: &StepView<'_, T>) {
        self.total = self.total + view.log_growth;
        self.count += 1;
    }
}

/// Running time average of an observable of the state.
pub struct TimeAverage<T, F> {
    f: F,
    sum: T,
    count: u64,
}

impl<T: Scalar, F: FnMut(&[T]) -> T> TimeAverage<T, F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            sum: T::zero(),
            count: 0,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `None` before the first observation.
    pub fn mean(&self) -> Option<T> {
        (self.count > 0).then(|| self.sum / T::of(self.count as f64))
    }
}

impl<T: Scalar, F: FnMut(&[T]) -> T> Observer<T> for TimeAverage<T, F> {
    fn observe(&mut self, view: &StepView<'_, T>) {
        self.sum = self.sum + (self.f)(view.x);
        self.count += 1;
    }
}

/// Records `(t, x, v)` every `stride` steps, optionally skipping an initial transient.
#[derive(Clone, Debug)]
pub struct SampleRecorder<T> {
    stride: u64,
    skip_before: T,
    times: Vec<T>,
    states: Vec<ProjectiveState<T>>,
}

impl<T: Scalar> SampleRecorder<T> {
    pub fn new(stride: u64) -> Self {
        Self::after(stride, T::zero())
    }

    /// Records only at times `t >= skip_before`.
    pub fn after(stride: u64, skip_before: T) -> Self {
        Self {
            stride: stride.max(1),
            skip_before,
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<ProjectiveState<T>>) {
        (self.times, self.states)
    }
}

impl<T: Scalar> Observer<T> for SampleRecorder<T> {
    fn observe(&mut self, view: &StepView<'_, T>) {
        if view.step % self.stride == 0 && view.t >= self.skip_before {
            self.times.push(view.t);
            self.states.push(ProjectiveState {
                x: view.x.to_vec(),
                v: view.v.map(<[T]>::to_vec).unwrap_or_default(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BilinearTensor;
    use crate::models::{make_linear, make_ou, EulerLikeSystem};

    #[test]
    fn zero_system_leaves_state_and_frame_alone() {
        let sys = EulerLikeSystem::new_permissive(
            BilinearTensor::<f64>::zero(3),
            DenseMatrix::zeros(3, 3),
            vec![vec![1.0, 0.0, 0.0]],
            0.0,
        )
        .unwrap();
        for scheme in [Scheme::EulerMaruyama, Scheme::HeunStratonovich, Scheme::Rk4Deterministic] {
            let cfg = IntegratorConfig::new(0.1, scheme).unwrap();
            let x = vec![1.0, -2.0, 0.5];
            assert_eq!(step_state(&sys, &x, &cfg, &[0.0]).unwrap(), x);
            let f = TangentFrame::identity(x.clone(), 3).unwrap();
            assert_eq!(step_tangent(&sys, &f, &cfg, &[0.3]).unwrap().v, f.v);
        }
    }

    #[test]
    fn blow_up_is_reported_with_step() {
        let sys = make_linear(DenseMatrix::from_diagonal(&[1e300])).unwrap();
        let cfg = IntegratorConfig::new(1.0, Scheme::EulerMaruyama).unwrap();
        let mut tr = Trajectory::state(&sys, vec![1.0], cfg).unwrap();
        let mut stream = NoiseStream::new(0, 0);
        tr.advance(&mut stream).unwrap();
        match tr.advance(&mut stream) {
            Err(Error::BlowUp { step, .. }) => assert_eq!(step, 2),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let sys = make_ou(2, 0.1).unwrap();
        let cfg = IntegratorConfig::new(0.01, Scheme::EulerMaruyama).unwrap();
        let mut acc = LogNormAccumulator::default();
        let out = integrate(
            &sys,
            &[0.3, 0.4],
            0.0,
            &cfg,
            &mut NoiseStream::new(1, 0),
            Propagation::State,
            &mut [&mut acc],
        )
        .unwrap();
        assert_eq!(out.x, vec![0.3, 0.4]);
        assert_eq!(out.steps, 0);
        assert_eq!(acc.count, 0);
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(0.0, Scheme::EulerMaruyama).is_err());
        assert!(IntegratorConfig::with_renorm(0.1, Scheme::EulerMaruyama, 0).is_err());
        assert_eq!("heun".parse::<Scheme>().unwrap(), Scheme::HeunStratonovich);
        assert_eq!(IntegratorConfig::default_for_eps(0.0).scheme, Scheme::Rk4Deterministic);
        assert_eq!(IntegratorConfig::default_for_eps(0.1).scheme, Scheme::HeunStratonovich);
    }
}
