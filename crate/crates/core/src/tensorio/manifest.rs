//! JSON tensor manifest shared with the framework-side dump script.
//!
//! ```json
//! {
//!   "model": "toy-cnn",
//!   "entries": [
//!     {"name": "conv1.act", "path": "conv1_act.npy", "role": "activation",
//!      "layer": "conv1", "shape": [1, 3, 8, 8], "max_abs": 2.5, "exempt": true},
//!     {"name": "conv1.weight", "path": "conv1_w.npy", "role": "weight",
//!      "layer": "conv1", "shape": [4, 3, 3, 3]}
//!   ]
//! }
//! ```
//!
//! `scale` is filled in by quantization: a number for activations, an array
//! of per-kernel scales for weights.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SparqError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Activation,
    Weight,
}

/// Layer identifier; dump scripts may emit either an index or a name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayerId {
    Index(u64),
    Name(String),
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerId::Index(i) => write!(f, "{i}"),
            LayerId::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scale {
    PerLayer(f64),
    PerKernel(Vec<f64>),
}

impl Scale {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Scale::PerLayer(s) => vec![*s],
            Scale::PerKernel(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub role: Role,
    pub layer: LayerId,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    /// Calibrated activation maximum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_abs: Option<f64>,
    /// Layer runs on the exact INT8 path.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exempt: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TensorManifest {
    #[serde(default)]
    pub model: String,
    pub entries: Vec<ManifestEntry>,
}

impl TensorManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.check_names()?;
        Ok(m)
    }

    fn check_names(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.name.as_str()) {
                return Err(SparqError::Manifest(format!("duplicate entry name '{}'", e.name)));
            }
        }
        Ok(())
    }

    /// Loads a manifest, resolving relative paths against its directory and
    /// checking that every referenced file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| SparqError::Manifest(format!("{}: {e}", path.display())))?;
        let mut m = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut m.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
            if !e.path.is_file() {
                return Err(SparqError::Manifest(format!(
                    "entry '{}' references missing file {}",
                    e.name,
                    e.path.display()
                )));
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn get(&self, name: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// The (activation, weight) entries of one layer.
    pub fn layer(&self, layer: &str) -> Result<(&ManifestEntry, &ManifestEntry)> {
        let find = |role| {
            self.entries
                .iter()
                .find(|e| e.role == role && e.layer.to_string() == layer)
                .ok_or_else(|| SparqError::Manifest(format!("layer '{layer}' has no {role:?} entry")))
        };
        Ok((find(Role::Activation)?, find(Role::Weight)?))
    }

    /// Distinct layer ids in entry order.
    pub fn layers(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for e in &self.entries {
            let id = e.layer.to_string();
            if !seen.contains(&id) {
                seen.push(id);
            }
        }
        seen
    }
}
