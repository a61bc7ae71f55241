//! Experiment configuration.
//!
//! Settings come from three layers: built-in defaults, an optional TOML file,
//! and command-line overrides (`--set key=value` or the dedicated flags).
//! Later layers win. Keys are dotted paths such as `sweep.sizes` or
//! `protocol.rounds`; in the file they may be written either as dotted keys
//! or inside `[section]` tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use dpmeter_core::privacy::Adversary;
use dpmeter_core::traces::{DayConfig, DayType, MINUTES_PER_DAY};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory.
    pub out: PathBuf,
    /// Corpus directory; empty means `<out>/corpus`.
    pub corpus: PathBuf,
    /// Slot length `T_p` in minutes.
    pub slot_minutes: u32,
    /// Per-slot privacy target; `λ(t) = max_i X_t^i / ε`.
    pub epsilon: f64,
    /// Monte Carlo trials for attack simulations and the Monte Carlo error
    /// estimator.
    pub trials: u64,
    pub traces: TraceConfig,
    pub sweep: SweepConfig,
    pub privacy: PrivacyConfig,
    pub protocol: ProtocolConfig,
    pub attack: AttackConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    pub households: u32,
    pub month: u8,
    pub day_type: DayKind,
    /// Appliance catalog file; empty means the built-in catalog.
    pub catalog: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayKind {
    Weekday,
    Weekend,
}

impl From<DayKind> for DayType {
    fn from(d: DayKind) -> DayType {
        match d {
            DayKind::Weekday => DayType::Weekday,
            DayKind::Weekend => DayType::Weekend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMode {
    Random,
    Consumption,
}

impl ClusterMode {
    pub fn name(self) -> &'static str {
        match self {
            ClusterMode::Random => "random",
            ClusterMode::Consumption => "consumption",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Closed-form `μ(t)` for every slot.
    Analytic,
    /// `trials` noise draws per slot.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sizes: Vec<u32>,
    pub modes: Vec<ClusterMode>,
    pub alphas: Vec<f64>,
    /// Random clusters sampled per size.
    pub clusters: u32,
    pub estimator: Estimator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdversaryName {
    #[serde(rename = "RND")]
    Rnd,
    #[serde(rename = "STAT")]
    Stat,
    #[serde(rename = "BAYES")]
    Bayes,
    #[serde(rename = "BAYES_STAT")]
    BayesStat,
}

impl From<AdversaryName> for Adversary {
    fn from(a: AdversaryName) -> Adversary {
        match a {
            AdversaryName::Rnd => Adversary::Rnd,
            AdversaryName::Stat => Adversary::Stat,
            AdversaryName::Bayes => Adversary::Bayes,
            AdversaryName::BayesStat => Adversary::BayesStat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrivacyConfig {
    pub cluster_size: u32,
    /// Window lengths in minutes; each must be a multiple of the slot length.
    pub windows: Vec<u32>,
    pub adversaries: Vec<AdversaryName>,
    /// Added to every slot's start count when building the STAT prior.
    pub prior_pseudocount: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    Robust,
    Simple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub sizes: Vec<u32>,
    /// Rounds simulated per cluster size.
    pub rounds: u32,
    /// Tolerated failure fraction `α = M/N`.
    pub alpha: f64,
    /// Expected participants per node, capped at `N − 1`.
    pub w: f64,
    pub variant: VariantName,
    /// Largest meter reading in watts.
    pub max_watts: f64,
    /// Probability that a round loses one meter between the two rounds.
    pub death_rate: f64,
    /// Write slot 0 of every size as a binary transcript and replay it.
    pub transcript: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackCase {
    pub n: u32,
    pub t: u32,
    pub w: f64,
    /// Honest nodes the supplier may falsely report as missing.
    #[serde(default)]
    pub claimable: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub cases: Vec<AttackCase>,
    /// Slot length used to express success probabilities as years.
    pub slot_minutes: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 2012,
            out: PathBuf::from("out"),
            corpus: PathBuf::new(),
            slot_minutes: 10,
            epsilon: 1.0,
            trials: 100_000,
            traces: TraceConfig::default(),
            sweep: SweepConfig::default(),
            privacy: PrivacyConfig::default(),
            protocol: ProtocolConfig::default(),
            attack: AttackConfig::default(),
        }
    }
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            households: 3000,
            month: 11,
            day_type: DayKind::Weekday,
            catalog: PathBuf::new(),
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sizes: vec![50, 100, 200, 400],
            modes: vec![ClusterMode::Random, ClusterMode::Consumption],
            alphas: vec![0.0, 0.5],
            clusters: 200,
            estimator: Estimator::Analytic,
        }
    }
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            cluster_size: 100,
            windows: vec![30, 60, 240, 480, 1440],
            adversaries: vec![AdversaryName::Rnd, AdversaryName::Stat, AdversaryName::Bayes, AdversaryName::BayesStat],
            prior_pseudocount: 0.5,
        }
    }
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            sizes: vec![50, 100, 200],
            rounds: 1000,
            alpha: 0.2,
            w: 30.0,
            variant: VariantName::Robust,
            max_watts: 10_000.0,
            death_rate: 0.01,
            transcript: true,
        }
    }
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            cases: vec![
                AttackCase { n: 100, t: 50, w: 30.0, claimable: 0 },
                AttackCase { n: 300, t: 150, w: 90.0, claimable: 0 },
                AttackCase { n: 100, t: 50, w: 5.0, claimable: 0 },
                AttackCase { n: 300, t: 150, w: 5.0, claimable: 0 },
                AttackCase { n: 100, t: 30, w: 5.0, claimable: 20 },
            ],
            slot_minutes: 5,
        }
    }
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> Value {
    match format!("v = {value}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(Value::String(value.into())),
        Err(_) => Value::String(value.into()),
    }
}

/// Sets a dotted `key` in `table`.
fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("malformed key `{key}`")));
    }
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        let entry = t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        t = match entry {
            Value::Table(inner) => inner,
            _ => return Err(config_err(format!("`{p}` in `{key}` is not a section"))),
        };
    }
    t.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// A `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| config_err(format!("override `{s}` is not key=value")))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

impl ExperimentConfig {
    /// Defaults, then `file`, then `overrides` in order.
    pub fn load(file: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self> {
        let mut table = Table::try_from(ExperimentConfig::default()).map_err(config_err)?;
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => CliError::MissingInput {
                    path: path.into(),
                    reason: "config file not found".into(),
                },
                _ => CliError::Io {
                    path: path.into(),
                    source: e,
                },
            })?;
            let parsed: Table = text.parse().map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            merge(&mut table, parsed);
        }
        for (k, v) in overrides {
            set_dotted(&mut table, k, v.clone())?;
        }
        let cfg: ExperimentConfig = Value::Table(table).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.slot_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(self.slot_minutes) {
            return bad(format!("slot_minutes = {} must divide 1440", self.slot_minutes));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        DayConfig::new(self.traces.month, self.traces.day_type.into()).map_err(config_err)?;
        let s = &self.sweep;
        if s.sizes.is_empty() || s.sizes.iter().any(|&n| n < 2) {
            return bad("sweep.sizes needs cluster sizes of at least 2".into());
        }
        if s.alphas.iter().any(|a| !(0.0..1.0).contains(a)) {
            return bad("sweep.alphas must lie in [0, 1)".into());
        }
        if s.clusters == 0 {
            return bad("sweep.clusters must be at least 1".into());
        }
        let p = &self.privacy;
        if p.cluster_size < 2 {
            return bad("privacy.cluster_size must be at least 2".into());
        }
        if let Some(w) = p.windows.iter().find(|&&w| w == 0 || w % self.slot_minutes != 0 || w > MINUTES_PER_DAY) {
            return bad(format!("privacy.windows entry {w} must be a positive multiple of slot_minutes up to 1440"));
        }
        if !(p.prior_pseudocount.is_finite() && p.prior_pseudocount >= 0.0) {
            return bad("privacy.prior_pseudocount must be nonnegative".into());
        }
        let pr = &self.protocol;
        if pr.sizes.iter().any(|&n| n < 2) {
            return bad("protocol.sizes needs cluster sizes of at least 2".into());
        }
        if !(0.0..1.0).contains(&pr.alpha) {
            return bad("protocol.alpha must lie in [0, 1)".into());
        }
        if !(pr.w.is_finite() && pr.w > 0.0) {
            return bad("protocol.w must be positive".into());
        }
        if !(pr.max_watts.is_finite() && pr.max_watts > 0.0) {
            return bad("protocol.max_watts must be positive".into());
        }
        if !(0.0..=1.0).contains(&pr.death_rate) {
            return bad("protocol.death_rate must lie in [0, 1]".into());
        }
        for c in &self.attack.cases {
            if c.n < 2 || c.t + c.claimable >= c.n || !(c.w > 0.0 && c.w <= (c.n - 1) as f64) {
                return bad(format!("attack case {c:?} needs T + claimable < N and 0 < w <= N-1"));
            }
        }
        if self.attack.slot_minutes == 0 {
            return bad("attack.slot_minutes must be at least 1".into());
        }
        Ok(())
    }

    pub fn day(&self) -> DayConfig {
        DayConfig::new(self.traces.month, self.traces.day_type.into()).expect("validated")
    }

    pub fn corpus_dir(&self) -> PathBuf {
        if self.corpus.as_os_str().is_empty() {
            self.out.join("corpus")
        } else {
            self.corpus.clone()
        }
    }

    /// The effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hash of everything that affects results; output locations are left
    /// out so moving a run does not change it.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.corpus = PathBuf::new();
        short_hash(c.to_toml().as_bytes())
    }
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}
