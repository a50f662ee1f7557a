//! Run configuration: line-oriented `section.key = value` files.
//!
//! Every key has a default and a type taken from the default value. Unknown
//! keys, duplicate keys and unparsable values are configuration errors. The
//! effective configuration prints in the same format and parses back to an
//! identical value.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::arena::{ArenaConfig, CommandRules, GLOBAL_FEATURES, UNIT_FEATURES};
use crate::control::ControlConfig;
use crate::model::checkpoint::fnv1a;
use crate::model::{AttentionMode, Hyper, TrainConfig};
use crate::{Error, Result};

/// Expert data generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub episodes: usize,
    pub horizon: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { episodes: 220, horizon: 150 }
    }
}

/// Optimizer settings for the two training modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainBlock {
    pub epochs: usize,
    pub lr: f64,
    pub stoch_epochs: usize,
    /// Learning rate of the stochastic mode, whose RSVI gradients are far
    /// noisier than the deterministic ones.
    pub stoch_lr: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub clip_norm: Option<f64>,
}

impl Default for TrainBlock {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainBlock {
            epochs: 10,
            lr: t.lr,
            stoch_epochs: 10,
            stoch_lr: 0.005,
            batch_size: t.batch_size,
            momentum: t.momentum,
            clip_norm: t.clip_norm,
        }
    }
}

/// Simulated command execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub episodes: usize,
    pub frames: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { episodes: 300, frames: 800 }
    }
}

/// Attention statistics reported after training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// Mass on the expert's attention set that counts a state as faithful.
    pub faithful_mass: f64,
    /// Support size under which a state counts as sparse.
    pub max_support: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { faithful_mass: 0.5, max_support: 10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub arena: ArenaConfig,
    pub data: DataConfig,
    pub model: Hyper,
    pub train: TrainBlock,
    pub control: ControlConfig,
    pub commands: CommandRules,
    pub simulate: SimulateConfig,
    pub metrics: MetricsConfig,
}

/// Model keys fixed by the arena feature layout.
const DERIVED_KEYS: [&str; 3] = ["model.d_in", "model.global_dim", "model.grid"];
const OPTIONAL_KEYS: [&str; 1] = ["train.clip_norm"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut root = match serde_json::to_value(RunConfig::default())? {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(at(format!("duplicate key `{key}`")));
            }
            if DERIVED_KEYS.contains(&key) {
                return Err(at(format!("`{key}` is derived from the arena and cannot be set")));
            }
            let slot = lookup(&mut root, key).ok_or_else(|| at(format!("unknown key `{key}`")))?;
            *slot = parse_value(slot, value, OPTIONAL_KEYS.contains(&key)).map_err(|e| at(format!("`{key}`: {e}")))?;
        }
        let mut cfg: RunConfig = serde_json::from_value(Value::Object(root)).map_err(|e| Error::Config(e.to_string()))?;
        cfg.sync_derived();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn sync_derived(&mut self) {
        self.model.d_in = UNIT_FEATURES;
        self.model.global_dim = GLOBAL_FEATURES;
        self.model.grid = self.arena.grid;
    }

    pub fn validate(&self) -> Result<()> {
        self.arena.validate()?;
        self.model.validate()?;
        self.commands.validate()?;
        self.control.validate(self.arena.grid * self.arena.grid)?;
        if self.model.d_in != UNIT_FEATURES || self.model.global_dim != GLOBAL_FEATURES || self.model.grid != self.arena.grid {
            return Err(Error::Config("model dimensions disagree with the arena features".into()));
        }
        if self.data.episodes == 0 || self.data.horizon == 0 {
            return Err(Error::Config("data.episodes and data.horizon must be positive".into()));
        }
        if self.simulate.episodes == 0 || self.simulate.frames == 0 {
            return Err(Error::Config("simulate.episodes and simulate.frames must be positive".into()));
        }
        let t = &self.train;
        if t.batch_size == 0 || !(t.lr >= 0.0) || !(t.stoch_lr >= 0.0) || !(0.0..1.0).contains(&t.momentum) {
            return Err(Error::Config("train: need batch_size >= 1, lr >= 0, momentum in [0, 1)".into()));
        }
        if matches!(t.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::Config("train.clip_norm must be positive or none".into()));
        }
        if !(0.0..=1.0).contains(&self.metrics.faithful_mass) {
            return Err(Error::Config("metrics.faithful_mass must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn train_config(&self, mode: AttentionMode) -> TrainConfig {
        let (epochs, lr) = match mode {
            AttentionMode::Deterministic => (self.train.epochs, self.train.lr),
            AttentionMode::Stochastic => (self.train.stoch_epochs, self.train.stoch_lr),
        };
        TrainConfig {
            mode,
            epochs,
            batch_size: self.train.batch_size,
            lr,
            momentum: self.train.momentum,
            clip_norm: self.train.clip_norm,
        }
    }

    /// All settable keys with their effective values, sorted by key within
    /// each section.
    pub fn entries(&self) -> Vec<(String, String)> {
        let root = serde_json::to_value(self).expect("config serializes");
        let mut out = Vec::new();
        for (section, v) in root.as_object().expect("object") {
            match v {
                Value::Object(fields) => {
                    for (k, fv) in fields {
                        let key = format!("{section}.{k}");
                        if !DERIVED_KEYS.contains(&key.as_str()) {
                            out.push((key, format_value(fv)));
                        }
                    }
                }
                other => out.push((section.clone(), format_value(other))),
            }
        }
        out
    }

    /// Effective configuration in the input format.
    pub fn render(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// FNV-1a of the rendered configuration, as 16 hex digits.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a(self.render().as_bytes()))
    }
}

fn lookup<'a>(root: &'a mut Map<String, Value>, key: &str) -> Option<&'a mut Value> {
    match key.split_once('.') {
        Some((section, field)) => match root.get_mut(section)? {
            Value::Object(m) => m.get_mut(field),
            _ => None,
        },
        None => match root.get_mut(key)? {
            Value::Object(_) => None,
            v => Some(v),
        },
    }
}

fn parse_value(default: &Value, text: &str, optional: bool) -> std::result::Result<Value, String> {
    if optional && text.eq_ignore_ascii_case("none") {
        return Ok(Value::Null);
    }
    match default {
        Value::Bool(_) => text.parse::<bool>().map(Value::Bool).map_err(|_| format!("expected true or false, found `{text}`")),
        Value::Number(n) if n.is_u64() => {
            text.parse::<u64>().map(|v| Value::Number(v.into())).map_err(|_| format!("expected a non-negative integer, found `{text}`"))
        }
        Value::Number(_) | Value::Null => {
            let v: f64 = text.parse().map_err(|_| format!("expected a number, found `{text}`"))?;
            Number::from_f64(v).map(Value::Number).ok_or_else(|| format!("expected a finite number, found `{text}`"))
        }
        Value::String(_) => Ok(Value::String(text.to_string())),
        _ => Err("not a settable key".into()),
    }
}

fn format_value(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::Number(n) => match (n.as_u64(), n.as_f64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(f)) => format!("{f:?}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
