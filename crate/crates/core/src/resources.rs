//! Properties-format message bundles.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BundleError {
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: u32, key: String },
    #[error("line {line}: missing `=` separator")]
    MissingSeparator { line: u32 },
    #[error("line {line}: empty key")]
    EmptyKey { line: u32 },
}

impl BundleError {
    pub fn line(&self) -> u32 {
        match self {
            BundleError::DuplicateKey { line, .. }
            | BundleError::MissingSeparator { line }
            | BundleError::EmptyKey { line } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MessageBundle {
    pub source_name: String,
    entries: BTreeMap<String, String>,
}

impl MessageBundle {
    pub fn new(source_name: impl Into<String>) -> Self {
        MessageBundle {
            source_name: source_name.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Inserts an entry, returning `false` if the key was already present.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> bool {
        let key = key.into();
        if self.entries.contains_key(&key) {
            return false;
        }
        self.entries.insert(key, value.into());
        true
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn lookup(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Resolves a key, degrading to `???key???` when it is missing.
    pub fn get_message(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some(msg) => msg.clone(),
            None => {
                log::warn!("{}: missing message key `{key}`", self.source_name);
                format!("???{key}???")
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Parses `key = value` lines. `#` and `!` start comments; blank lines are
/// skipped. The value is everything after the first `=`, trimmed.
pub fn parse_properties(source_name: &str, text: &str) -> Result<MessageBundle, BundleError> {
    let mut bundle = MessageBundle::new(source_name);
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx as u32 + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let content = line.trim_start();
        if content.trim().is_empty() || content.starts_with('#') || content.starts_with('!') {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(BundleError::MissingSeparator { line: line_no })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(BundleError::EmptyKey { line: line_no });
        }
        if !bundle.insert(key, value.trim()) {
            return Err(BundleError::DuplicateKey {
                line: line_no,
                key: key.to_string(),
            });
        }
    }
    Ok(bundle)
}
