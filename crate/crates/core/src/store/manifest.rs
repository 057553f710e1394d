use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};

/// Provenance of a generated artifact: enough to regenerate it bit for bit.
///
/// `created_unix` honours `SOURCE_DATE_EPOCH` so that reruns can produce
/// byte-identical manifests.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub model: String,
    pub seed: u64,
    pub version: String,
    pub created_unix: u64,
    /// Physical parameters, schedule settings and other run options.
    pub params: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(model: impl Into<String>, seed: u64) -> Self {
        Self {
            model: model.into(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: now_unix(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn param_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .param(key)
            .ok_or_else(|| Error::malformed("manifest", format!("missing param.{key}")))?;
        raw.parse()
            .map_err(|_| Error::malformed("manifest", format!("param.{key}={raw} does not parse")))
    }

    /// Manifest lines (without a trailing header).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "model={}", self.model).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "version={}", self.version).unwrap();
        writeln!(out, "created_unix={}", self.created_unix).unwrap();
        for (k, v) in &self.params {
            writeln!(out, "param.{k}={v}").unwrap();
        }
        out
    }

    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| {
            kv.get(k)
                .cloned()
                .ok_or_else(|| Error::malformed("manifest", format!("missing key {k}")))
        };
        let seed = get("seed")?
            .parse()
            .map_err(|_| Error::malformed("manifest", "seed is not an integer"))?;
        let created_unix = get("created_unix")?
            .parse()
            .map_err(|_| Error::malformed("manifest", "created_unix is not an integer"))?;
        let params = kv
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("param.").map(|k| (k.to_string(), v.clone())))
            .collect();
        Ok(Self {
            model: get("model")?,
            seed,
            version: get("version")?,
            created_unix,
            params,
        })
    }
}

pub(crate) fn now_unix() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return epoch;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Parse `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::malformed("manifest", format!("line {}: expected key=value", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}
