use serde::{Deserialize, Serialize};

use selfaffine::{AffineMap, IfsSystem};

/// One map of the system as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

/// Per-command knobs. Everything is optional; command-line flags win
/// over config values, and unset knobs fall back to built-in defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sep_depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_outer: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_inner: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth0: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_angles: Option<u32>,
}

impl Params {
    pub fn is_default(&self) -> bool {
        *self == Params::default()
    }
}

/// A full run description: the system, an optional probability vector,
/// and command parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub maps: Vec<MapConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Params::is_default")]
    pub params: Params,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validate and build the system. Map indices in error messages are
    /// zero-based and match the order in the file.
    pub fn system(&self) -> Result<IfsSystem, String> {
        let mut maps = Vec::with_capacity(self.maps.len());
        for (i, m) in self.maps.iter().enumerate() {
            maps.push(
                AffineMap::new(m.linear, m.translation).map_err(|e| format!("maps[{i}]: {e}"))?,
            );
        }
        let ifs = IfsSystem::new(maps).map_err(|e| format!("maps: {e}"))?;
        if let Some(p) = &self.probabilities {
            if p.len() != ifs.len() {
                return Err(format!(
                    "probabilities has {} entries for {} maps",
                    p.len(),
                    ifs.len()
                ));
            }
        }
        Ok(ifs)
    }

    pub fn from_system(ifs: &IfsSystem, probabilities: Option<Vec<f64>>) -> Self {
        RunConfig {
            maps: ifs
                .maps()
                .iter()
                .map(|m| MapConfig {
                    linear: *m.linear(),
                    translation: *m.translation(),
                })
                .collect(),
            probabilities,
            params: Params::default(),
        }
    }
}

/// Default truncation depth by alphabet size: deep enough for tight
/// brackets on small systems, budget-safe on larger ones.
pub fn default_depth(n: usize) -> u32 {
    if n <= 3 {
        12
    } else if n <= 6 {
        8
    } else {
        6
    }
}
