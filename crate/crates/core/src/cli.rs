//! Command-line front end.
//!
//! Flags override the TOML config given by `--config`; the output directory can
//! also come from `EULERLIKE_OUTPUT_DIR`. Stochastic commands require a seed.
//! Exit codes: 0 success, 1 check or verdict failure, 2 usage or parse error,
//! 3 trajectory blow-up.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimators::{
    ensemble_benettin, ensemble_fk, ensemble_samples, ensemble_spectrum, ensemble_tightness, estimate_fi_plugin,
    fisher_from_exponents, EnsembleEstimate, EnsembleSpec, ExponentEstimate, Horizon, Measured, PluginOptions,
    DEFAULT_BATCHES, DEFAULT_BURN_IN_FRACTION,
};
use crate::hormander::{default_budget, projective_span_certificate, SpanReport, Verdict};
use crate::model_file::{load_model, model_fingerprint, sha256_hex, Real};
use crate::models::{make_l96, make_ou, make_scalar_multiplicative, EulerLikeSystem, ScalarMultiplicative};
use crate::report::{
    csv, real, samples_csv, series_csv, sweep_csv, write_json, write_text, EstimateRecord, RunRecord, SweepCell,
};
use crate::sde::integrator::DEFAULT_DT;
use crate::sde::{IntegratorConfig, Scheme, SdeSystem};
use crate::verify::{identity_suite, IdentityReport, Suite, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

pub const OUTPUT_DIR_ENV: &str = "EULERLIKE_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "eulerlike-out";
const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "eulerlike", version, about = "Lyapunov exponents and spanning certificates for Euler-like SDEs")]
pub struct Cli {
    /// TOML config file; flags take precedence over its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory for CSV/JSON outputs.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural checks and the spanning certificate; exit 0 iff both hold.
    CheckModel(CertArgs),
    /// Lyapunov exponents for one model.
    Lyapunov(LyapunovArgs),
    /// Top exponent, λ₁/ε, Fisher information and tightness over an ε-grid.
    Sweep(SweepArgs),
    /// Writes the spanning certificate (text and JSON).
    Hormander(CertArgs),
    /// Runs the exact-identity suites.
    Verify(VerifyArgs),
    /// Fisher information from the exponent identity and from a plug-in estimate.
    Fi(FiArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Lorenz-96 model, e.g. `J=5 eps=0.01 q=1,1,0,0,0`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub l96: Option<Vec<String>>,
    /// Model file (TOML).
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Ornstein–Uhlenbeck model, e.g. `n=2 eps=0.05`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub ou: Option<Vec<String>>,
    /// Scalar multiplicative oracle, e.g. `a=-0.3 sigma=1`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub scalar: Option<Vec<String>>,
    /// Overrides the model's ε.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Horizon T.
    #[arg(long = "t", value_name = "T")]
    pub t: Option<f64>,
    /// Burn-in time; default 10% of T.
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// em, heun or rk4.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Number of independent trajectories.
    #[arg(long)]
    pub ensemble: Option<usize>,
    #[arg(long)]
    pub batches: Option<usize>,
    /// Standard deviation of the random initial state.
    #[arg(long)]
    pub x0_scale: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CertArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Bracket generation budget; default 2n.
    #[arg(long)]
    pub generations: Option<usize>,
    /// Also print the JSON certificate.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Estimators: benettin, fk, qr.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Number of exponents for qr; default n.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Strictly positive, descending, e.g. `0.1,0.05,0.02,0.01`.
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    /// Subset of benettin, fk, qr, fi_identity, tightness.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// γ in the tightness diagnostic E exp(γ|x|²).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Steps between tightness samples.
    #[arg(long)]
    pub stride: Option<u64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// all, energy, shear, norm-growth, rescale, volume, div-trace, bracket, lifted-div.
    #[arg(long)]
    pub suite: Option<String>,
    /// Flow time for the flow identities.
    #[arg(long = "t", value_name = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub scheme: Option<String>,
    /// Random inputs per identity.
    #[arg(long)]
    pub points: Option<usize>,
    /// Seed of the random inputs (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct FiArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Steps between retained samples for the plug-in estimate.
    #[arg(long)]
    pub stride: Option<u64>,
    /// Also write the thinned samples as CSV.
    #[arg(long)]
    pub write_samples: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    l96: Option<String>,
    file: Option<PathBuf>,
    ou: Option<String>,
    scalar: Option<String>,
    eps: Option<Real>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    eps: Option<Vec<Real>>,
    estimators: Option<Vec<String>>,
    gamma: Option<Real>,
    stride: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    t: Option<Real>,
    burn_in: Option<Real>,
    dt: Option<Real>,
    scheme: Option<String>,
    ensemble: Option<usize>,
    batches: Option<usize>,
    x0_scale: Option<Real>,
    output_dir: Option<PathBuf>,
    generations: Option<usize>,
    estimators: Option<Vec<String>>,
    k: Option<usize>,
    stride: Option<u64>,
    suite: Option<String>,
    points: Option<usize>,
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    sweep: SweepSection,
}

struct Context {
    config: ConfigFile,
    config_dir: PathBuf,
    output_dir: PathBuf,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn real_of(r: &Option<Real>) -> Option<f64> {
    r.map(|v| v.0)
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Io(_) => EXIT_USAGE,
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::Trajectory { source, .. } => exit_code(source),
        Error::NotEulerLike(_) | Error::Unsupported(_) | Error::Json(_) => EXIT_VERDICT,
    }
}

fn report_error(e: &Error) {
    eprintln!("error: {e}");
    if let Error::Trajectory { seed, stream_id, .. } = e {
        eprintln!("replay: seed {seed}, stream {stream_id}");
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            exit_code(&e)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<(ConfigFile, PathBuf)> {
    let Some(path) = path else {
        return Ok((ConfigFile::default(), PathBuf::from(".")));
    };
    let text = std::fs::read_to_string(path)?;
    let cfg: ConfigFile = toml::from_str(&text).map_err(|e| {
        let (line, column) = e
            .span()
            .map_or((1, 1), |s| crate::model_file::line_column(&text, s.start));
        Error::Parse {
            line,
            column,
            message: format!("{}: {}", path.display(), e.message().trim()),
        }
    })?;
    let dir = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((cfg, dir))
}

fn execute(cli: &Cli) -> Result<i32> {
    let (config, config_dir) = load_config(cli.config.as_deref())?;
    let output_dir = cli
        .output_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let ctx = Context { config, config_dir, output_dir };
    match &cli.command {
        Command::CheckModel(a) => cmd_check_model(a, &ctx),
        Command::Hormander(a) => cmd_hormander(a, &ctx),
        Command::Lyapunov(a) => cmd_lyapunov(a, &ctx),
        Command::Sweep(a) => cmd_sweep(a, &ctx),
        Command::Verify(a) => cmd_verify(a, &ctx),
        Command::Fi(a) => cmd_fi(a, &ctx),
    }
}

/// A model chosen on the command line or in the config.
pub enum Loaded {
    Euler(EulerLikeSystem<f64>),
    Scalar(ScalarMultiplicative<f64>),
}

impl Loaded {
    fn euler(self, what: &str) -> Result<EulerLikeSystem<f64>> {
        match self {
            Loaded::Euler(s) => Ok(s),
            Loaded::Scalar(_) => Err(Error::Unsupported(format!("{what} needs an Euler-like model"))),
        }
    }

    fn fingerprint(&self) -> String {
        match self {
            Loaded::Euler(s) => model_fingerprint(s),
            Loaded::Scalar(s) => sha256_hex(format!("scalar a={} sigma={}", real(s.a), real(s.sigma)).as_bytes()),
        }
    }

    fn eps(&self) -> f64 {
        match self {
            Loaded::Euler(s) => s.eps(),
            Loaded::Scalar(_) => 1.0,
        }
    }

    fn additive(&self) -> bool {
        match self {
            Loaded::Euler(_) => true,
            Loaded::Scalar(s) => s.additive_noise(),
        }
    }
}

/// `KEY=VALUE` tokens (possibly several per argument) into a map with lowercase keys.
pub fn parse_kv(tokens: &[String]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for tok in tokens.iter().flat_map(|t| t.split_whitespace()) {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| usage(format!("expected KEY=VALUE, got `{tok}`")))?;
        out.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(kv: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    kv.get(key)
        .map(|v| v.parse::<T>().map_err(|_| usage(format!("cannot parse {key}={v}"))))
        .transpose()
}

fn list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("cannot parse `{s}` as a number"))))
        .collect()
}

fn split_spec(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Builds the Lorenz-96 model from `J=… eps=… q=…`; `q` defaults to forcing the first two sites.
pub fn l96_from_kv(tokens: &[String], eps_override: Option<f64>) -> Result<EulerLikeSystem<f64>> {
    let kv = parse_kv(tokens)?;
    let j: usize = num(&kv, "j")?.ok_or_else(|| usage("--l96 needs J=<sites>"))?;
    let eps = eps_override
        .or(num(&kv, "eps")?)
        .ok_or_else(|| usage("--l96 needs eps=<value>"))?;
    let q = match kv.get("q") {
        Some(v) => list(v)?,
        None => (0..j).map(|i| if i < 2 { 1.0 } else { 0.0 }).collect(),
    };
    if q.len() != j {
        return Err(usage(format!("q has {} entries, expected J = {j}", q.len())));
    }
    make_l96(j, eps, &q)
}

fn load(m: &ModelArgs, ctx: &Context) -> Result<Loaded> {
    let cfg = &ctx.config.model;
    let eps = m.eps.or(real_of(&cfg.eps));
    let from_flags = m.l96.is_some() as u8 + m.model.is_some() as u8 + m.ou.is_some() as u8 + m.scalar.is_some() as u8;
    if from_flags > 1 {
        return Err(usage("give exactly one of --l96, --model, --ou, --scalar"));
    }
    let (l96, file, ou, scalar) = if from_flags == 1 {
        (m.l96.clone(), m.model.clone(), m.ou.clone(), m.scalar.clone())
    } else {
        let n = cfg.l96.is_some() as u8 + cfg.file.is_some() as u8 + cfg.ou.is_some() as u8 + cfg.scalar.is_some() as u8;
        if n != 1 {
            return Err(usage("no model: use --l96, --model, --ou or --scalar (or [model] in the config)"));
        }
        (
            cfg.l96.as_deref().map(split_spec),
            cfg.file.as_ref().map(|f| ctx.config_dir.join(f)),
            cfg.ou.as_deref().map(split_spec),
            cfg.scalar.as_deref().map(split_spec),
        )
    };
    if let Some(tokens) = l96 {
        return Ok(Loaded::Euler(l96_from_kv(&tokens, eps)?));
    }
    if let Some(path) = file {
        let sys = load_model(&path)?;
        return Ok(Loaded::Euler(match eps {
            Some(e) => sys.with_eps(e)?,
            None => sys,
        }));
    }
    if let Some(tokens) = ou {
        let kv = parse_kv(&tokens)?;
        let n: usize = num(&kv, "n")?.ok_or_else(|| usage("--ou needs n=<dim>"))?;
        let e = eps.or(num(&kv, "eps")?).ok_or_else(|| usage("--ou needs eps=<value>"))?;
        return Ok(Loaded::Euler(make_ou(n, e)?));
    }
    if let Some(tokens) = scalar {
        let kv = parse_kv(&tokens)?;
        let a: f64 = num(&kv, "a")?.ok_or_else(|| usage("--scalar needs a=<rate>"))?;
        let sigma: f64 = num(&kv, "sigma")?.unwrap_or(1.0);
        return Ok(Loaded::Scalar(make_scalar_multiplicative(a, sigma)));
    }
    unreachable!("one model source was selected")
}

struct RunSettings {
    seed: u64,
    horizon: Horizon,
    cfg: IntegratorConfig<f64>,
    spec: EnsembleSpec,
}

fn run_settings(r: &RunArgs, ctx: &Context, eps: f64, additive: bool) -> Result<RunSettings> {
    let c = &ctx.config;
    let seed = r
        .seed
        .or(c.seed)
        .ok_or_else(|| usage("--seed is required for stochastic commands"))?;
    let t = r.t.or(real_of(&c.t)).ok_or_else(|| usage("--t is required"))?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(usage(format!("T must be positive, got {t}")));
    }
    let burn = r.burn_in.or(real_of(&c.burn_in)).unwrap_or(DEFAULT_BURN_IN_FRACTION * t);
    let batches = r.batches.or(c.batches).unwrap_or(DEFAULT_BATCHES);
    let horizon = Horizon::new(t, burn)?.batches(batches);
    let dt = r.dt.or(real_of(&c.dt)).unwrap_or(DEFAULT_DT);
    let scheme = match r.scheme.as_ref().or(c.scheme.as_ref()) {
        Some(s) => s.parse::<Scheme>().map_err(|e| usage(e.to_string()))?,
        None => default_scheme(eps, additive),
    };
    let cfg = IntegratorConfig::new(dt, scheme).map_err(|e| usage(e.to_string()))?;
    let size = r.ensemble.or(c.ensemble).unwrap_or(1);
    if size == 0 {
        return Err(usage("--ensemble must be >= 1"));
    }
    let spec = EnsembleSpec {
        base_seed: seed,
        size,
        x0_scale: r.x0_scale.or(real_of(&c.x0_scale)).unwrap_or(1.0),
    };
    Ok(RunSettings { seed, horizon, cfg, spec })
}

/// Heun for stochastic runs (Stratonovich, second order in the drift for
/// additive noise); RK4 for the noiseless flow.
pub fn default_scheme(eps: f64, additive: bool) -> Scheme {
    if eps == 0.0 && additive {
        Scheme::Rk4Deterministic
    } else {
        Scheme::HeunStratonovich
    }
}

fn structural_summary(sys: &EulerLikeSystem<f64>) -> (bool, String) {
    let b = sys.tensor();
    let tol = b.roundoff_tolerance();
    let energy = b.energy_residual();
    let div = b.divergence_residual().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let neg = sys.damping().is_negative_definite();
    let yes = |ok: bool| if ok { "yes" } else { "NO" };
    let text = format!(
        "model: n = {}, eps = {}, fingerprint {}\n\
         energy conserving: {} (residual {:.3e}, tolerance {:.3e})\n\
         divergence free: {} (residual {:.3e})\n\
         damping negative definite: {}\n",
        sys.n(),
        sys.eps(),
        model_fingerprint(sys),
        yes(energy <= tol),
        energy,
        tol,
        yes(div <= tol),
        div,
        yes(neg),
    );
    (energy <= tol && div <= tol && neg, text)
}

fn certificate(a: &CertArgs, ctx: &Context) -> Result<(bool, EulerLikeSystem<f64>, SpanReport)> {
    let sys = load(&a.model, ctx)?.euler("the spanning certificate")?;
    let (contract, text) = structural_summary(&sys);
    print!("{text}");
    let gens = a.generations.or(ctx.config.generations).unwrap_or(default_budget(sys.n()));
    let cert = projective_span_certificate(&sys, gens);
    print!("{}", cert.to_text());
    if a.json {
        println!("{}", cert.to_json()?);
    }
    Ok((contract, sys, cert))
}

fn cmd_check_model(a: &CertArgs, ctx: &Context) -> Result<i32> {
    let (contract, _, cert) = certificate(a, ctx)?;
    Ok(if contract && cert.verdict == Verdict::Certified { EXIT_OK } else { EXIT_VERDICT })
}

fn cmd_hormander(a: &CertArgs, ctx: &Context) -> Result<i32> {
    let (_, _, cert) = certificate(a, ctx)?;
    write_text(&ctx.output_dir.join("certificate.txt"), &cert.to_text())?;
    write_text(&ctx.output_dir.join("certificate.json"), &(cert.to_json()? + "\n"))?;
    Ok(if cert.verdict == Verdict::Certified { EXIT_OK } else { EXIT_VERDICT })
}

#[derive(Serialize)]
struct LyapunovSummary {
    model_fingerprint: String,
    estimates: Vec<EstimateRecord>,
    spectrum: Option<crate::estimators::Spectrum>,
    /// Benettin and FK agree within 3 combined standard errors.
    consistent: Option<bool>,
}

fn run_estimator<S: SdeSystem<f64>>(
    sys: &S,
    name: &str,
    rs: &RunSettings,
    k: usize,
) -> Result<(EnsembleEstimate, Option<crate::estimators::Spectrum>)> {
    match name {
        "benettin" => Ok((ensemble_benettin(sys, &rs.spec, rs.horizon, &rs.cfg)?, None)),
        "fk" => Ok((ensemble_fk(sys, &rs.spec, rs.horizon, &rs.cfg)?, None)),
        "qr" => {
            let s = ensemble_spectrum(sys, &rs.spec, rs.horizon, k, &rs.cfg)?;
            let top = EnsembleEstimate { pooled: s.exponents[0].clone(), members: Vec::new(), series: Vec::new() };
            Ok((top, Some(s)))
        }
        other => Err(usage(format!("unknown estimator `{other}`"))),
    }
}

fn cmd_lyapunov(a: &LyapunovArgs, ctx: &Context) -> Result<i32> {
    let model = load(&a.model, ctx)?;
    let rs = run_settings(&a.run, ctx, model.eps(), model.additive())?;
    let names = a
        .estimators
        .clone()
        .or_else(|| ctx.config.estimators.clone())
        .unwrap_or_else(|| vec!["benettin".into()]);
    let fp = model.fingerprint();
    let n = match &model {
        Loaded::Euler(s) => s.n(),
        Loaded::Scalar(_) => 1,
    };
    let k = a.k.or(ctx.config.k).unwrap_or(n);
    let mut records = Vec::new();
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut spectrum = None;
    let mut by_name = BTreeMap::new();
    for name in &names {
        let (est, spec) = match &model {
            Loaded::Euler(s) => run_estimator(s, name, &rs, k)?,
            Loaded::Scalar(s) => run_estimator(s, name, &rs, k)?,
        };
        records.push(EstimateRecord::new(&est.pooled, rs.cfg.dt, rs.cfg.scheme, rs.seed, rs.spec.size, &fp));
        if !est.series.is_empty() {
            series.push((name.clone(), est.series.clone()));
        }
        if let Some(mut s) = spec {
            records.push(EstimateRecord::new(&s.sum, rs.cfg.dt, rs.cfg.scheme, rs.seed, rs.spec.size, &fp));
            s.exponents.truncate(k);
            spectrum = Some(s);
        }
        by_name.insert(name.as_str(), est.pooled);
    }
    let consistent = match (by_name.get("benettin"), by_name.get("fk")) {
        (Some(b), Some(f)) => Some(b.agrees_with(f, 3.0)),
        _ => None,
    };
    let summary = LyapunovSummary { model_fingerprint: fp, estimates: records, spectrum, consistent };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    write_json(&ctx.output_dir.join("lyapunov.json"), &summary)?;
    let refs: Vec<(&str, &[(f64, f64)])> = series.iter().map(|(n, s)| (n.as_str(), s.as_slice())).collect();
    if !refs.is_empty() {
        write_text(&ctx.output_dir.join("lyapunov_series.csv"), &series_csv(&refs))?;
    }
    Ok(EXIT_OK)
}

const SWEEP_ESTIMATORS: [&str; 5] = ["benettin", "fk", "qr", "fi_identity", "tightness"];

/// Everything that determines a sweep's numbers.
#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    pub model_fingerprint: String,
    pub eps_grid: Vec<f64>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub burn_in: f64,
    pub n_batches: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub ensemble_size: usize,
    pub base_seed: u64,
    pub x0_scale: f64,
    pub estimators: Vec<String>,
    pub gamma: f64,
    pub stride: u64,
    pub code_version: String,
}

impl SweepConfig {
    /// Fingerprint of the whole run.
    pub fn fingerprint(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("serializable").as_bytes())
    }

    /// Fingerprint of one ε cell; independent of the rest of the grid.
    pub fn cell_fingerprint(&self, eps: f64) -> String {
        let mut v = serde_json::to_value(self).expect("serializable");
        v["eps_grid"] = json!(null);
        v["eps"] = json!(real(eps));
        sha256_hex(v.to_string().as_bytes())
    }
}

/// Checks that the grid is non-empty, strictly positive and strictly descending.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(usage("empty eps grid"));
    }
    if grid.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(usage("eps grid must be strictly positive"));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(usage("eps grid must be sorted in strictly descending order"));
    }
    Ok(())
}

fn sweep_cell(
    base: &EulerLikeSystem<f64>,
    eps: f64,
    sc: &SweepConfig,
    rs: &RunSettings,
) -> Result<SweepCell> {
    let sys = base.with_eps(eps)?;
    let fp = sc.cell_fingerprint(eps);
    let mut estimates = Vec::new();
    let mut top: Option<ExponentEstimate> = None;
    for name in ["benettin", "fk", "qr"] {
        if !sc.estimators.iter().any(|e| e == name) {
            continue;
        }
        let (est, spec) = run_estimator(&sys, name, rs, sys.n())?;
        estimates.push(EstimateRecord::new(&est.pooled, rs.cfg.dt, rs.cfg.scheme, rs.seed, rs.spec.size, &fp));
        if let Some(s) = spec {
            estimates.push(EstimateRecord::new(&s.sum, rs.cfg.dt, rs.cfg.scheme, rs.seed, rs.spec.size, &fp));
        }
        top.get_or_insert(est.pooled);
    }
    let fisher: Option<Measured> = match (&top, sc.estimators.iter().any(|e| e == "fi_identity")) {
        (Some(l1), true) => Some(fisher_from_exponents(l1, &sys)?),
        _ => None,
    };
    let tightness = if sc.estimators.iter().any(|e| e == "tightness") {
        Some(ensemble_tightness(&sys, &rs.spec, rs.horizon, &rs.cfg, sc.stride, sc.gamma)?)
    } else {
        None
    };
    Ok(SweepCell {
        eps,
        fingerprint: fp,
        estimates,
        lambda1: top.as_ref().map(|e| e.value),
        stderr: top.as_ref().map(|e| e.std_error),
        lambda1_over_eps: top.as_ref().map(|e| e.value / eps),
        fisher,
        tightness,
        error: None,
    })
}

fn cmd_sweep(a: &SweepArgs, ctx: &Context) -> Result<i32> {
    let started = Instant::now();
    let c = &ctx.config;
    let grid: Vec<f64> = a
        .eps_grid
        .clone()
        .or_else(|| c.sweep.eps.as_ref().map(|v| v.iter().map(|r| r.0).collect()))
        .ok_or_else(|| usage("--eps-grid is required"))?;
    validate_grid(&grid)?;
    // each cell sets its own ε; the grid supplies one when the model spec has none
    let mut model = a.model.clone();
    model.eps = model.eps.or(Some(grid[0]));
    let sys = load(&model, ctx)?.euler("sweep")?;
    let estimators = a
        .estimators
        .clone()
        .or_else(|| c.sweep.estimators.clone())
        .or_else(|| c.estimators.clone())
        .unwrap_or_else(|| vec!["benettin".into(), "fi_identity".into(), "tightness".into()]);
    if let Some(bad) = estimators.iter().find(|e| !SWEEP_ESTIMATORS.contains(&e.as_str())) {
        return Err(usage(format!("unknown estimator `{bad}`")));
    }
    let rs = run_settings(&a.run, ctx, grid[grid.len() - 1], true)?;
    let sc = SweepConfig {
        model_fingerprint: model_fingerprint(&sys.with_eps(0.0)?),
        eps_grid: grid.clone(),
        t_final: rs.horizon.t_final,
        burn_in: rs.horizon.burn_in,
        n_batches: rs.horizon.n_batches,
        dt: rs.cfg.dt,
        scheme: rs.cfg.scheme,
        ensemble_size: rs.spec.size,
        base_seed: rs.seed,
        x0_scale: rs.spec.x0_scale,
        estimators,
        gamma: a.gamma.or(real_of(&c.sweep.gamma)).unwrap_or(0.05),
        stride: a.stride.or(c.sweep.stride).or(c.stride).unwrap_or(100),
        code_version: CODE_VERSION.into(),
    };
    let cells_dir = ctx.output_dir.join("cells");
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    let mut first_error: Option<Error> = None;
    for &eps in &grid {
        let fp = sc.cell_fingerprint(eps);
        let path = cells_dir.join(format!("{fp}.json"));
        if let Some(cell) = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str::<SweepCell>(&t).ok())
            .filter(|cell| cell.fingerprint == fp && cell.error.is_none())
        {
            eprintln!("eps = {eps}: cached");
            cells.push(cell);
            continue;
        }
        eprintln!("eps = {eps}: running");
        match sweep_cell(&sys, eps, &sc, &rs) {
            Ok(cell) => {
                write_json(&path, &cell)?;
                cells.push(cell);
            }
            Err(e) => {
                let msg = e.to_string();
                warnings.push(format!("eps = {eps}: {msg}"));
                cells.push(SweepCell {
                    eps,
                    fingerprint: fp,
                    estimates: Vec::new(),
                    lambda1: None,
                    stderr: None,
                    lambda1_over_eps: None,
                    fisher: None,
                    tightness: None,
                    error: Some(msg),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    let table = sweep_csv(&cells);
    print!("{table}");
    write_text(&ctx.output_dir.join("sweep.csv"), &table)?;
    let record = RunRecord {
        fingerprint: sc.fingerprint(),
        config: serde_json::to_value(&sc)?,
        cells,
        warnings: warnings.clone(),
        wall_clock_s: started.elapsed().as_secs_f64(),
        code_version: CODE_VERSION.into(),
    };
    write_json(&ctx.output_dir.join("run_record.json"), &record)?;
    if !warnings.is_empty() {
        eprintln!("warnings:");
        for w in &warnings {
            eprintln!("  {w}");
        }
    }
    match first_error {
        Some(e) if record.cells.iter().all(|c| c.error.is_some()) => {
            report_error(&e);
            Ok(exit_code(&e))
        }
        _ => Ok(EXIT_OK),
    }
}

fn identity_rows(reports: &[IdentityReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                real(r.max_residual),
                real(r.tolerance),
                r.points_tested.to_string(),
                r.pass.to_string(),
            ]
        })
        .collect();
    csv(&["name", "max_residual", "tolerance", "points", "pass"], &rows)
}

fn cmd_verify(a: &VerifyArgs, ctx: &Context) -> Result<i32> {
    let sys = load(&a.model, ctx)?.euler("verify")?;
    let c = &ctx.config;
    let suite: Suite = a.suite.as_ref().or(c.suite.as_ref()).map_or(Ok(Suite::All), |s| s.parse())?;
    let defaults = SuiteConfig::default();
    let scheme = match a.scheme.as_ref().or(c.scheme.as_ref()) {
        Some(s) => s.parse::<Scheme>().map_err(|e| usage(e.to_string()))?,
        None => defaults.cfg.scheme,
    };
    let dt = a.dt.or(real_of(&c.dt)).unwrap_or(defaults.cfg.dt);
    let sc = SuiteConfig {
        points: a.points.or(c.points).unwrap_or(defaults.points),
        seed: a.seed.or(c.seed).unwrap_or(defaults.seed),
        t_flow: a.t.or(real_of(&c.t)).unwrap_or(defaults.t_flow),
        cfg: IntegratorConfig::new(dt, scheme).map_err(|e| usage(e.to_string()))?,
    };
    if !(sc.t_flow >= 0.0) {
        return Err(usage("--t must be non-negative"));
    }
    let reports = identity_suite(&sys, suite, &sc)?;
    let table = identity_rows(&reports);
    print!("{table}");
    write_text(&ctx.output_dir.join("verify.csv"), &table)?;
    write_json(&ctx.output_dir.join("verify.json"), &reports)?;
    let mut ok = true;
    for r in reports.iter().filter(|r| !r.pass) {
        ok = false;
        eprintln!("FAILED {}: residual {:e} > {:e}; input {:?}", r.name, r.max_residual, r.tolerance, r.worst_input);
    }
    Ok(if ok { EXIT_OK } else { EXIT_VERDICT })
}

#[derive(Serialize)]
struct FiSummary {
    model_fingerprint: String,
    lambda1: EstimateRecord,
    identity: Measured,
    plugin: Option<f64>,
    n_samples: usize,
}

fn cmd_fi(a: &FiArgs, ctx: &Context) -> Result<i32> {
    let sys = load(&a.model, ctx)?.euler("fi")?;
    let rs = run_settings(&a.run, ctx, sys.eps(), true)?;
    let fp = model_fingerprint(&sys);
    let l1 = ensemble_benettin(&sys, &rs.spec, rs.horizon, &rs.cfg)?.pooled;
    let identity = fisher_from_exponents(&l1, &sys)?;
    let stride = a.stride.or(ctx.config.stride).unwrap_or(10);
    let (plugin, n_samples) = if sys.n() <= 3 {
        let samples = ensemble_samples(&sys, &rs.spec, rs.horizon, &rs.cfg, stride)?;
        if a.write_samples {
            write_text(&ctx.output_dir.join("samples.csv"), &samples_csv(samples.times(), samples.states()))?;
        }
        let dirs: Vec<Vec<f64>> = sys.forcing().to_vec();
        (Some(estimate_fi_plugin(&samples, &dirs, &PluginOptions::default())?), samples.len())
    } else {
        eprintln!("plug-in estimate skipped: state dimension {} > 3", sys.n());
        (None, 0)
    };
    let summary = FiSummary {
        model_fingerprint: fp.clone(),
        lambda1: EstimateRecord::new(&l1, rs.cfg.dt, rs.cfg.scheme, rs.seed, rs.spec.size, &fp),
        identity,
        plugin,
        n_samples,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    write_json(&ctx.output_dir.join("fi.json"), &summary)?;
    Ok(EXIT_OK)
}
