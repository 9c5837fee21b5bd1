//! Experiment configuration: a JSON document with a `job` tag.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stc_core::channel::FadingModel;
use stc_core::constellation::DigitPermutation;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "job", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Construct(ConstructJob),
    Verify(VerifyJob),
    Waterfill(WaterfillJob),
    Udm(UdmJob),
    Outage(OutageJob),
    Simulate(SimulateJob),
}

/// Build a codebook and write it out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructJob {
    pub family: FamilySpec,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Exact check of a codebook criterion, a UDM family or the alternate-flip
/// bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyJob {
    pub target: VerifyTarget,
    #[serde(default)]
    pub criterion: Option<Criterion>,
    /// Defaults to the codebook's own rate.
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one_usize")]
    pub nr: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Worst-case channel per codeword pair, or for listed singular values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaterfillJob {
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub instances: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default = "one")]
    pub snr: f64,
    #[serde(default = "one_usize")]
    pub nr: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Build and certify a UDM family, or search all families exhaustively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UdmJob {
    #[serde(default)]
    pub family: Option<UdmSpec>,
    #[serde(default)]
    pub exhaustive: Option<ExhaustiveSpec>,
}

/// Analytic tradeoff curve, plus Monte Carlo points when `trials > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutageJob {
    pub model: FadingModel,
    /// Multiplexing gains for the Monte Carlo points.
    #[serde(default)]
    pub gains: Vec<f64>,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub method: OutageMethod,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Codeword error probability under ML decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateJob {
    pub family: FamilySpec,
    pub model: FadingModel,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Rescale the codebook to unit average energy per antenna and channel
    /// use, so different schemes are compared at equal transmit power.
    #[serde(default)]
    pub unit_average: bool,
    /// Pass only if the fitted diversity slope lies in `value ± tol`.
    #[serde(default)]
    pub expect_slope: Option<SlopeExpectation>,
}

pub const JOBS: [&str; 6] = ["construct", "verify", "waterfill", "udm", "outage", "simulate"];

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Scalar,
    Parallel,
    Miso,
    Mimo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageMethod {
    #[default]
    Mc,
    /// Importance sampling, iid Rayleigh only.
    Is,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeExpectation {
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VerifyTarget {
    Codebook(FamilySpec),
    Udm(UdmSpec),
    Abf { nbits: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PermSpec {
    Named(PermName),
    Explicit(DigitPermutation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermName {
    Identity,
    BitReversal,
    AltFlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Qam { bits: u32 },
    RectQam { bits: u32 },
    SquareQam { per_rail: usize },
    RotatedQam { bits: u32 },
    Alamouti { bits: u32 },
    Vblast { nt: usize, bits_per_antenna: u32 },
    /// `branches` copies of the `2^bits`-QAM; branch `l > 1` applies
    /// `perms[l - 2]` to both rails.
    Permutation { branches: usize, bits: u32, perms: Vec<PermSpec> },
    /// Permutations of whole `2^bits`-QAM points rather than rails.
    QamPermutation { bits: u32, perms: Vec<PermSpec> },
    RandomPermutation { branches: usize, bits: u32, draws: usize },
    /// Irregular-gap PAM rails, gap parameter `g` (default 1).
    Udm {
        family: UdmSpec,
        #[serde(default = "one")]
        gap: f64,
    },
    /// Branch `l` of a parallel stream code sent from antenna `l` at time `l`.
    DiagonalMiso { stream: Box<FamilySpec> },
    Dblast { bits_per_rail: u32, perm: PermSpec },
    Timespace { bits_per_rail: u32, perm: PermSpec },
    Expurgated { base: Box<FamilySpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case", deny_unknown_fields)]
pub enum UdmSpec {
    IdentityPair { n: usize },
    Tensor { n: usize },
    L4F3 { n: usize },
    Pascal { n: usize, l: usize, p: u32, m: u32 },
    RsMds { n: usize, l: usize, p: u32, m: u32 },
    Custom { p: u32, m: u32, matrices: Vec<Vec<Vec<u32>>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustiveSpec {
    pub p: u32,
    pub m: u32,
    pub n: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    /// JSON path of the offending value, `.` for the document root.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub errors: Vec<SchemaError>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.errors.iter().map(|e| format!("{}: {}", e.path, e.message)).collect();
        write!(f, "invalid config: {}", parts.join("; "))
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn single(path: &str, message: impl Into<String>) -> Self {
        Self { errors: vec![SchemaError { path: path.into(), message: message.into() }] }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError::single(".", format!("malformed JSON: {e}")))?;
    parse_config_value(value)
}

pub fn parse_config_value(value: serde_json::Value) -> Result<ExperimentConfig, ConfigError> {
    let serde_json::Value::Object(mut map) = value else {
        return Err(ConfigError::single(".", "config must be a JSON object"));
    };
    let job = match map.remove("job") {
        Some(serde_json::Value::String(j)) => j,
        Some(_) => return Err(ConfigError::single("job", "must be a string")),
        None => return Err(ConfigError::single("job", "missing field `job`")),
    };
    let body = serde_json::Value::Object(map);
    let config = match job.as_str() {
        "construct" => ExperimentConfig::Construct(typed(body)?),
        "verify" => ExperimentConfig::Verify(typed(body)?),
        "waterfill" => ExperimentConfig::Waterfill(typed(body)?),
        "udm" => ExperimentConfig::Udm(typed(body)?),
        "outage" => ExperimentConfig::Outage(typed(body)?),
        "simulate" => ExperimentConfig::Simulate(typed(body)?),
        other => {
            return Err(ConfigError::single("job", format!("unknown job `{other}`, expected one of {}", JOBS.join(", "))))
        }
    };
    let errors = config.range_errors();
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError { errors })
    }
}

fn typed<T: serde::de::DeserializeOwned>(body: serde_json::Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::single(&path, e.into_inner().to_string())
    })
}

impl<'de> Deserialize<'de> for ExperimentConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        parse_config_value(value).map_err(serde::de::Error::custom)
    }
}

impl ExperimentConfig {
    pub fn job_name(&self) -> &'static str {
        match self {
            ExperimentConfig::Construct(_) => "construct",
            ExperimentConfig::Verify(_) => "verify",
            ExperimentConfig::Waterfill(_) => "waterfill",
            ExperimentConfig::Udm(_) => "udm",
            ExperimentConfig::Outage(_) => "outage",
            ExperimentConfig::Simulate(_) => "simulate",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::Construct(j) => j.seed,
            ExperimentConfig::Verify(j) => j.seed,
            ExperimentConfig::Waterfill(j) => j.seed,
            ExperimentConfig::Outage(j) => j.seed,
            ExperimentConfig::Simulate(j) => j.seed,
            ExperimentConfig::Udm(_) => None,
        }
    }

    /// Whether the job draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        match self {
            ExperimentConfig::Construct(j) => j.family.is_random(),
            ExperimentConfig::Verify(j) => matches!(&j.target, VerifyTarget::Codebook(f) if f.is_random()),
            ExperimentConfig::Udm(_) => false,
            ExperimentConfig::Waterfill(j) => j.family.as_ref().is_some_and(FamilySpec::is_random),
            ExperimentConfig::Outage(j) => j.trials > 0,
            ExperimentConfig::Simulate(_) => true,
        }
    }

    /// Canonical text: every default spelled out, fixed key order.
    pub fn to_canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact canonical form.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        sha256_hex(compact.as_bytes())
    }

    fn range_errors(&self) -> Vec<SchemaError> {
        let mut errs = Vec::new();
        let mut push = |path: &str, msg: String| errs.push(SchemaError { path: path.into(), message: msg });
        if self.is_stochastic() && self.seed().is_none() {
            push("seed", "missing field `seed` (required for stochastic jobs)".into());
        }
        match self {
            ExperimentConfig::Verify(VerifyJob { target, criterion, rate, c, nr, .. }) => {
                if matches!(target, VerifyTarget::Codebook(_)) && criterion.is_none() {
                    push("criterion", "missing field `criterion` (required for codebook targets)".into());
                }
                if let VerifyTarget::Abf { nbits } = target {
                    if !(1..=12).contains(nbits) {
                        push("target.abf.nbits", format!("{nbits} outside 1..=12"));
                    }
                }
                check_positive(&mut push, "c", *c);
                if let Some(r) = rate {
                    check_positive(&mut push, "rate", *r);
                }
                if *nr == 0 {
                    push("nr", "must be positive".into());
                }
            }
            ExperimentConfig::Waterfill(WaterfillJob { family, instances, rate, snr, nr, .. }) => {
                match (family, instances) {
                    (Some(_), Some(_)) | (None, None) => {
                        push("family", "exactly one of `family` and `instances` is required".into())
                    }
                    (None, Some(inst)) => {
                        if rate.is_none() {
                            push("rate", "missing field `rate` (required with `instances`)".into());
                        }
                        for (i, sv) in inst.iter().enumerate() {
                            if sv.is_empty() || sv.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                                push(&format!("instances[{i}]"), "need nonnegative finite singular values".into());
                            }
                        }
                    }
                    _ => {}
                }
                if let Some(r) = rate {
                    check_positive(&mut push, "rate", *r);
                }
                check_positive(&mut push, "snr", *snr);
                if *nr == 0 {
                    push("nr", "must be positive".into());
                }
            }
            ExperimentConfig::Udm(UdmJob { family, exhaustive, .. }) => {
                if family.is_some() == exhaustive.is_some() {
                    push("family", "exactly one of `family` and `exhaustive` is required".into());
                }
            }
            ExperimentConfig::Outage(OutageJob { gains, snr_db, trials, .. }) => {
                if *trials > 0 && (gains.is_empty() || snr_db.is_empty()) {
                    push("gains", "Monte Carlo points need nonempty `gains` and `snr_db`".into());
                }
                for (i, g) in gains.iter().enumerate() {
                    if !(g.is_finite() && *g >= 0.0) {
                        push(&format!("gains[{i}]"), format!("{g} must be finite and nonnegative"));
                    }
                }
                check_grid(&mut push, snr_db);
            }
            ExperimentConfig::Simulate(SimulateJob { snr_db, trials, expect_slope, .. }) => {
                if snr_db.is_empty() {
                    push("snr_db", "must be nonempty".into());
                }
                check_grid(&mut push, snr_db);
                if *trials < 100 {
                    push("trials", format!("{trials} < 100"));
                }
                if let Some(e) = expect_slope {
                    check_positive(&mut push, "expect_slope.tol", e.tol);
                }
            }
            ExperimentConfig::Construct(_) => {}
        }
        errs
    }
}

fn check_positive(push: &mut impl FnMut(&str, String), path: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        push(path, format!("{v} must be finite and positive"));
    }
}

fn check_grid(push: &mut impl FnMut(&str, String), snr_db: &[f64]) {
    for (i, s) in snr_db.iter().enumerate() {
        if !s.is_finite() {
            push(&format!("snr_db[{i}]"), format!("{s} is not finite"));
        }
    }
}

impl FamilySpec {
    pub fn is_random(&self) -> bool {
        match self {
            FamilySpec::RandomPermutation { .. } => true,
            FamilySpec::Expurgated { base } => base.is_random(),
            FamilySpec::DiagonalMiso { stream } => stream.is_random(),
            _ => false,
        }
    }
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
