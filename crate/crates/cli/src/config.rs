use std::path::Path;

use multiplicity::bitgroup::{GroupElement, KValue, Site};
use multiplicity::blocksys::{BlockCaps, TargetSequence};
use multiplicity::cfsystem::SystemCaps;
use multiplicity::koopman::{TraceWindow, DEFAULT_ENUMERATION_CAP};
use multiplicity::oracle::{default_toys, OracleConfig, ToySpec};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// `E` as written in the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ESpec {
    List(Vec<u64>),
    /// `"primes_up_to:N"` or `"from:k"`.
    Pattern(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    #[serde(rename = "E")]
    pub e: ESpec,
    pub steps: usize,
    pub p_max: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default)]
    pub singles: Vec<String>,
    pub pairs: Vec<[String; 2]>,
    pub n_max: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub level: usize,
    #[serde(rename = "A")]
    pub a: Vec<u64>,
    #[serde(rename = "B")]
    pub b: Vec<u64>,
    /// Supports of the characters to trace; `[]` is `χ = 0`.
    pub characters: Vec<Vec<Site>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictSection {
    #[serde(default)]
    pub k: Vec<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsSection {
    pub max_h: Option<u64>,
    pub max_columns: Option<u64>,
    pub max_blocks: Option<usize>,
    pub max_combinations: Option<usize>,
    pub max_enumeration: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub queries_per_system: Option<usize>,
    pub max_power: Option<i64>,
    pub seed: Option<u64>,
    pub chi: Option<Vec<Site>>,
    pub toys: Option<Vec<ToySpec>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub target: TargetSection,
    pub schedule: Option<ScheduleSection>,
    pub traces: Option<TraceSection>,
    #[serde(default)]
    pub predict: PredictSection,
    #[serde(default)]
    pub caps: CapsSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

/// Singles, pairs and `n_max`.
pub type ScheduleSpec = (Vec<KValue>, Vec<(KValue, KValue)>, usize);

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub hash: String,
    pub target: Option<TargetSequence>,
    /// Finite `E`, or the window `{n_1, …, n_steps}` for infinite patterns.
    pub e_values: Vec<u64>,
    pub steps: usize,
    pub p_max: usize,
    pub schedule: Option<ScheduleSpec>,
    pub traces: Option<(TraceWindow, Vec<GroupElement>)>,
    pub predict_k: Vec<u64>,
    pub block_caps: BlockCaps,
    pub system_caps: SystemCaps,
    pub oracle: OracleConfig,
    pub toys: Vec<ToySpec>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::new("E_CONFIG", 2, msg)
}

fn positive<T: PartialOrd + Default + Copy>(value: Option<T>, name: &str, default: T) -> Result<T, CliError> {
    match value {
        Some(v) if v <= T::default() => Err(config_error(format!("caps.{name} must be positive"))),
        Some(v) => Ok(v),
        None => Ok(default),
    }
}

fn kvalue(text: &str, field: &str) -> Result<KValue, CliError> {
    KValue::parse(text).map_err(|e| config_error(format!("{field}: {e}")))
}

fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n)
        .filter(|&p| (2..).take_while(|d| d * d <= p).all(|d| p % d != 0))
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path, max_h: Option<u64>) -> Result<Self, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::new("E_USAGE", 2, format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| config_error("config is not UTF-8"))?;
        let raw: RawConfig = toml::from_str(&text).map_err(|e| config_error(e.to_string()))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        if let Some(h) = max_h {
            hasher.update(format!("\n--max-h={h}").as_bytes());
        }
        Self::from_raw(raw, hex::encode(hasher.finalize()), max_h)
    }

    fn from_raw(raw: RawConfig, hash: String, max_h: Option<u64>) -> Result<Self, CliError> {
        let (target, e_values) = match &raw.target.e {
            ESpec::List(values) => {
                if values.is_empty() || values.contains(&0) {
                    return Err(config_error("target.E must be a nonempty list of positive integers"));
                }
                let mut e = values.clone();
                e.sort_unstable();
                e.dedup();
                let target = match TargetSequence::from_set(e.iter().copied()) {
                    Ok(t) => Some(t),
                    Err(multiplicity::Error::TrivialTarget) => None,
                    Err(err) => return Err(config_error(format!("target.E: {err}"))),
                };
                (target, e)
            }
            ESpec::Pattern(p) => {
                if let Some(n) = p.strip_prefix("primes_up_to:") {
                    let n: u64 = n
                        .parse()
                        .map_err(|_| config_error(format!("target.E: bad pattern {p:?}")))?;
                    let e = primes_up_to(n);
                    if e.is_empty() {
                        return Err(config_error(format!("target.E: {p:?} is empty")));
                    }
                    let t = TargetSequence::from_set(e.iter().copied()).map_err(|e| config_error(e.to_string()))?;
                    (Some(t), e)
                } else if let Some(k) = p.strip_prefix("from:") {
                    let k: u64 = k
                        .parse()
                        .map_err(|_| config_error(format!("target.E: bad pattern {p:?}")))?;
                    let t = TargetSequence::from_start(k).map_err(|e| config_error(e.to_string()))?;
                    let mut e = t.terms(raw.target.steps.max(1));
                    e.sort_unstable();
                    e.dedup();
                    (Some(t), e)
                } else {
                    return Err(config_error(format!(
                        "target.E: unknown pattern {p:?} (expected primes_up_to:N or from:k)"
                    )));
                }
            }
        };

        let schedule = match &raw.schedule {
            Some(s) => {
                let singles = s
                    .singles
                    .iter()
                    .map(|w| kvalue(w, "schedule.singles"))
                    .collect::<Result<Vec<_>, _>>()?;
                let pairs = s
                    .pairs
                    .iter()
                    .map(|[a, b]| Ok((kvalue(a, "schedule.pairs")?, kvalue(b, "schedule.pairs")?)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                if !pairs.iter().any(|(a, b)| a.is_zero() && b.is_zero()) {
                    return Err(config_error("schedule.pairs must include [\"0\", \"0\"]"));
                }
                if s.n_max == 0 {
                    return Err(config_error("schedule.n_max must be positive"));
                }
                Some((singles, pairs, s.n_max))
            }
            None => None,
        };

        let traces = match &raw.traces {
            Some(t) => {
                if t.level == 0 {
                    return Err(config_error("traces.level must be at least 1"));
                }
                if t.a.is_empty() || t.b.is_empty() {
                    return Err(config_error("traces.A and traces.B must be nonempty"));
                }
                if t.characters.is_empty() {
                    return Err(config_error("traces.characters must be nonempty"));
                }
                let window = TraceWindow {
                    level: t.level,
                    a: t.a.clone(),
                    b: t.b.clone(),
                };
                let chars = t
                    .characters
                    .iter()
                    .map(|s| GroupElement::from_sites(s.iter().copied()))
                    .collect();
                Some((window, chars))
            }
            None => None,
        };

        if raw.predict.k.contains(&0) {
            return Err(config_error("predict.k entries must be positive"));
        }

        let caps = &raw.caps;
        let defaults = (BlockCaps::default(), SystemCaps::default());
        let block_caps = BlockCaps {
            max_blocks: positive(caps.max_blocks, "max_blocks", defaults.0.max_blocks)?,
            max_combinations: positive(caps.max_combinations, "max_combinations", defaults.0.max_combinations)?,
        };
        let system_caps = SystemCaps {
            max_h: positive(max_h.or(caps.max_h), "max_h", defaults.1.max_h)?,
            max_columns: positive(caps.max_columns, "max_columns", defaults.1.max_columns)?,
        };
        let enumeration_cap = positive(caps.max_enumeration, "max_enumeration", DEFAULT_ENUMERATION_CAP)?;

        let base = OracleConfig::default();
        let oracle = OracleConfig {
            queries_per_system: raw.oracle.queries_per_system.unwrap_or(base.queries_per_system),
            max_power: raw.oracle.max_power.unwrap_or(base.max_power),
            seed: raw.oracle.seed.unwrap_or(base.seed),
            chi: raw.oracle.chi.clone().unwrap_or(base.chi),
            enumeration_cap,
        };
        if oracle.max_power < 0 {
            return Err(config_error("oracle.max_power must be non-negative"));
        }
        if oracle.chi.is_empty() {
            return Err(config_error("oracle.chi must be a nonzero character"));
        }
        let toys = raw.oracle.toys.clone().unwrap_or_else(default_toys);

        Ok(RunConfig {
            hash,
            target,
            e_values,
            steps: raw.target.steps,
            p_max: raw.target.p_max,
            schedule,
            traces,
            predict_k: raw.predict.k,
            block_caps,
            system_caps,
            oracle,
            toys,
        })
    }

    pub fn require_schedule(&self) -> Result<&ScheduleSpec, CliError> {
        self.schedule
            .as_ref()
            .ok_or_else(|| config_error("missing config field `schedule`"))
    }

    pub fn require_traces(&self) -> Result<&(TraceWindow, Vec<GroupElement>), CliError> {
        self.traces
            .as_ref()
            .ok_or_else(|| config_error("missing config field `traces`"))
    }
}
