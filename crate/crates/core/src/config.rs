//! Analysis and probing configuration shared by the pipeline commands.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::constraint::ParamPath;
use crate::oas::Overrides;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// How a well-known library method maps onto constraint atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CommonMethod {
    /// `x.equals(v)` is `x == v`.
    Eq,
    /// `x.length()` inside a comparison is `len(x)`.
    Len,
    /// `x.isEmpty()` is `len(x) == 0`.
    IsEmpty,
    /// `tracked.contains(x)` is `x in {..}`.
    Contains,
    /// Recognized but kept verbatim.
    Unparsed,
}

pub fn default_common_methods() -> BTreeMap<String, CommonMethod> {
    [
        ("equals", CommonMethod::Eq),
        ("length", CommonMethod::Len),
        ("size", CommonMethod::Len),
        ("isEmpty", CommonMethod::IsEmpty),
        ("contains", CommonMethod::Contains),
        ("startsWith", CommonMethod::Unparsed),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn default_patterns() -> Vec<String> {
    vec!["addError".to_string()]
}

fn default_max_depth() -> usize {
    15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AnalysisConfig {
    /// `Class.method` entry points.
    #[serde(default)]
    pub controllers: Vec<String>,
    #[serde(default)]
    pub request_models: Vec<String>,
    /// Method names whose calls mark an invalid state.
    #[serde(default = "default_patterns")]
    pub invalid_state_patterns: Vec<String>,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    /// Merged over [`default_common_methods`].
    #[serde(default)]
    pub common_methods: BTreeMap<String, CommonMethod>,
    /// Probe values replacing type defaults, keyed by parameter path.
    #[serde(default)]
    pub overrides: BTreeMap<String, Value>,
    /// Optional parameters the base request always carries.
    #[serde(default)]
    pub extra_paths: Vec<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            controllers: Vec::new(),
            request_models: Vec::new(),
            invalid_state_patterns: default_patterns(),
            max_depth: default_max_depth(),
            common_methods: BTreeMap::new(),
            overrides: BTreeMap::new(),
            extra_paths: Vec::new(),
        }
    }
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: AnalysisConfig = serde_json::from_str(text)?;
        if c.max_depth == 0 {
            return Err(ConfigError::Invalid("maxDepth must be at least 1".into()));
        }
        if c.invalid_state_patterns.iter().any(|p| p.is_empty()) {
            return Err(ConfigError::Invalid("invalidStatePatterns must not contain empty names".into()));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Defaults with configured entries taking precedence.
    pub fn common_method_table(&self) -> BTreeMap<String, CommonMethod> {
        let mut t = default_common_methods();
        t.extend(self.common_methods.iter().map(|(k, v)| (k.clone(), *v)));
        t
    }

    pub fn probe_overrides(&self) -> Overrides {
        self.overrides.iter().map(|(k, v)| (ParamPath::new(k.as_str()), v.clone())).collect()
    }

    pub fn extra_param_paths(&self) -> Vec<ParamPath> {
        self.extra_paths.iter().map(|p| ParamPath::new(p.as_str())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_merge() {
        let c = AnalysisConfig::from_json(r#"{"controllers": ["A.b"], "commonMethods": {"startsWith": "eq"}}"#).unwrap();
        assert_eq!(c.max_depth, 15);
        assert_eq!(c.invalid_state_patterns, vec!["addError"]);
        let t = c.common_method_table();
        assert_eq!(t["startsWith"], CommonMethod::Eq);
        assert_eq!(t["length"], CommonMethod::Len);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(AnalysisConfig::from_json(r#"{"maxDepth": 0}"#).is_err());
        assert!(AnalysisConfig::from_json(r#"{"controlers": []}"#).is_err());
        assert!(AnalysisConfig::from_json(r#"{"commonMethods": {"x": "regex"}}"#).is_err());
    }
}
