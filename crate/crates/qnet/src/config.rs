//! JSON run configuration, schema `qnet/1`.
//!
//! Decimal parameters may be written as JSON strings or numbers; numbers keep
//! their source text, so `0.873563218` is read digit for digit either way.

use std::path::Path;

use qnet_core::{
    BatchSpec, Buffer, FiniteMethod, InterarrivalSpec, ModelSpec, PhaseType, PrecisionContext, Real, Rejection,
};
use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA: &str = "qnet/1";
pub const DIGITS_ENV: &str = "QNET_PRECISION_DIGITS";

/// A decimal kept as text until the working precision is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Decimal(pub String);

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(Decimal(s)),
            serde_json::Value::Number(n) => Ok(Decimal(n.to_string())),
            other => Err(de::Error::custom(format!("expected a decimal, got {other}"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: String,
    model: RawModel,
    #[serde(default)]
    precision: RawPrecision,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default = "default_outputs")]
    outputs: Vec<OutputKind>,
    #[serde(default)]
    format: Format,
    simulate: Option<SimulationSettings>,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::StationaryTable, OutputKind::PerformanceReport]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    servers: usize,
    service_rate: Decimal,
    interarrival: RawLaw,
    buffer: RawBuffer,
    batch: Option<RawBatch>,
    rejection: Option<RawRejection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawRejection {
    Partial,
    Full,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
enum RawLaw {
    Deterministic { period: Option<Decimal>, rate: Option<Decimal> },
    Exponential { rate: Decimal },
    Erlang { phases: usize, rate: Decimal },
    Hyperexponential { weights: Vec<Decimal>, rates: Vec<Decimal> },
    PhaseType { alpha: Vec<Decimal>, generator: Vec<Vec<Decimal>> },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawBuffer {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawBatch {
    Unit,
    /// Sizes 1..=K, optional mass above K.
    Pmf { probabilities: Vec<Decimal>, tail: Option<Decimal> },
    Geometric { ratio: Decimal, support: Option<usize> },
    /// Law on {0,1,…}, conditioned on being nonzero.
    ZeroSupport { probabilities: Vec<Decimal> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrecision {
    digits: Option<usize>,
    eps_sigma: Option<Decimal>,
    eps_trunc: Option<Decimal>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    #[serde(default)]
    finite_method: Method,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    #[default]
    ExactCut,
    GeometricTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    StationaryTable,
    PerformanceReport,
    PmfData,
    CdfData,
    TransitionMatrixDump,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::StationaryTable => "stationary_table",
            OutputKind::PerformanceReport => "performance_report",
            OutputKind::PmfData => "pmf_data",
            OutputKind::CdfData => "cdf_data",
            OutputKind::TransitionMatrixDump => "transition_matrix_dump",
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub arrivals: u64,
    pub seed: u64,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

pub fn default_batches() -> usize {
    100
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// File stem used to name outputs.
    pub stem: String,
    pub model: ModelSpec,
    pub precision: PrecisionContext,
    pub method: FiniteMethod,
    pub outputs: Vec<OutputKind>,
    pub format: Format,
    pub simulate: Option<SimulationSettings>,
}

/// Reads and validates `path`; `QNET_PRECISION_DIGITS` overrides the digits.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("qnet").to_string();
    let digits = match std::env::var(DIGITS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Validation(format!("{DIGITS_ENV}: not an integer: {v:?}")))?,
        ),
        Err(_) => None,
    };
    parse_config_str(&text, &stem, digits)
}

pub fn parse_config_str(text: &str, stem: &str, digits_override: Option<usize>) -> Result<RunConfig, CliError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if raw.schema != SCHEMA {
        return Err(CliError::Validation(format!("schema: expected {SCHEMA:?}, got {:?}", raw.schema)));
    }
    let precision = precision(&raw.precision, digits_override)?;
    let model = model(&raw.model, &precision)?;
    let method = match raw.solver.finite_method {
        Method::ExactCut => FiniteMethod::ExactCut,
        Method::GeometricTail => FiniteMethod::GeometricTail,
    };
    if let Some(s) = &raw.simulate {
        if s.batches < 2 {
            return Err(CliError::Validation(String::from("simulate.batches: need at least 2")));
        }
    }
    let mut outputs = Vec::new();
    for o in raw.outputs {
        if !outputs.contains(&o) {
            outputs.push(o);
        }
    }
    Ok(RunConfig { stem: stem.to_string(), model, precision, method, outputs, format: raw.format, simulate: raw.simulate })
}

fn field<T>(path: &str, r: qnet_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Validation(format!("{path}: {e}")))
}

fn precision(raw: &RawPrecision, digits_override: Option<usize>) -> Result<PrecisionContext, CliError> {
    let digits = digits_override.or(raw.digits).unwrap_or(50);
    let default_sigma = format!("1e-{}", digits.saturating_sub(10));
    let es = raw.eps_sigma.as_ref().map_or(default_sigma.as_str(), |d| d.0.as_str());
    let et = raw.eps_trunc.as_ref().map_or("1e-16", |d| d.0.as_str());
    let mut ctx = field("precision", PrecisionContext::new(digits, es, et))?;
    if let Some(cap) = raw.max_iterations {
        ctx = ctx.with_max_iterations(cap);
    }
    Ok(ctx)
}

fn num(path: &str, d: &Decimal, ctx: &PrecisionContext) -> Result<Real, CliError> {
    ctx.parse(&d.0).map_err(|_| CliError::Validation(format!("{path}: not a decimal: {:?}", d.0)))
}

fn nums(path: &str, ds: &[Decimal], ctx: &PrecisionContext) -> Result<Vec<Real>, CliError> {
    ds.iter().enumerate().map(|(i, d)| num(&format!("{path}[{i}]"), d, ctx)).collect()
}

fn law(raw: &RawLaw, ctx: &PrecisionContext) -> Result<InterarrivalSpec, CliError> {
    let p = "model.interarrival";
    let spec = match raw {
        RawLaw::Deterministic { period, rate } => {
            let period = match (period, rate) {
                (Some(t), None) => num(&format!("{p}.period"), t, ctx)?,
                (None, Some(r)) => {
                    let r = num(&format!("{p}.rate"), r, ctx)?;
                    if !r.is_positive() {
                        return Err(CliError::Validation(format!("{p}.rate: must be positive")));
                    }
                    r.recip()
                }
                _ => return Err(CliError::Validation(format!("{p}: give exactly one of period or rate"))),
            };
            InterarrivalSpec::deterministic(period)
        }
        RawLaw::Exponential { rate } => InterarrivalSpec::exponential(num(&format!("{p}.rate"), rate, ctx)?),
        RawLaw::Erlang { phases, rate } => InterarrivalSpec::erlang(*phases, num(&format!("{p}.rate"), rate, ctx)?),
        RawLaw::Hyperexponential { weights, rates } => InterarrivalSpec::hyperexponential(
            nums(&format!("{p}.weights"), weights, ctx)?,
            nums(&format!("{p}.rates"), rates, ctx)?,
        ),
        RawLaw::PhaseType { alpha, generator } => {
            let m = alpha.len();
            if generator.len() != m || generator.iter().any(|r| r.len() != m) {
                return Err(CliError::Validation(format!("{p}.generator: must be {m}x{m} to match alpha")));
            }
            let flat: Vec<Decimal> = generator.iter().flatten().cloned().collect();
            let ph = field(
                p,
                PhaseType::new(nums(&format!("{p}.alpha"), alpha, ctx)?, nums(&format!("{p}.generator"), &flat, ctx)?),
            )?;
            InterarrivalSpec::phase_type(ph)
        }
    };
    field(p, spec)
}

fn batch(raw: &RawBatch, ctx: &PrecisionContext) -> Result<BatchSpec, CliError> {
    let p = "model.batch";
    match raw {
        RawBatch::Unit => Ok(BatchSpec::unit(ctx.bits())),
        RawBatch::Pmf { probabilities, tail } => {
            let pmf = nums(&format!("{p}.probabilities"), probabilities, ctx)?;
            let tail = match tail {
                Some(t) => num(&format!("{p}.tail"), t, ctx)?,
                None => ctx.zero(),
            };
            field(p, BatchSpec::from_pmf(pmf, tail))
        }
        RawBatch::Geometric { ratio, support } => {
            let q = num(&format!("{p}.ratio"), ratio, ctx)?;
            let k = support.unwrap_or_else(|| BatchSpec::geometric_support_for(&q, ctx.eps_sigma()));
            field(p, BatchSpec::geometric(&q, k))
        }
        RawBatch::ZeroSupport { probabilities } => {
            field(p, BatchSpec::normalize_from_zero_support(&nums(&format!("{p}.probabilities"), probabilities, ctx)?))
        }
    }
}

fn model(raw: &RawModel, ctx: &PrecisionContext) -> Result<ModelSpec, CliError> {
    let buffer = match raw.buffer {
        RawBuffer::Finite(n) => Buffer::Finite(n),
        RawBuffer::Infinite => Buffer::Infinite,
    };
    let mu = num("model.service_rate", &raw.service_rate, ctx)?;
    let law = law(&raw.interarrival, ctx)?;
    let base = field("model", ModelSpec::new(raw.servers, mu, law, buffer))?;
    let rejection = raw.rejection.map(|r| match r {
        RawRejection::Partial => Rejection::Partial,
        RawRejection::Full => Rejection::Full,
    });
    match &raw.batch {
        Some(b) => {
            let spec = batch(b, ctx)?;
            field("model.rejection", base.with_batch(spec, rejection))
        }
        None if rejection.is_some() => {
            Err(CliError::Validation(String::from("model.rejection: only meaningful with a batch law")))
        }
        None => Ok(base),
    }
}
