//! Reports produced by the empirical bound probes.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    FkDomination,
    Decay,
    Holder,
    Perturbation,
    RhoCompare,
}

/// Fitted constants and the worst violation observed on a sample. A
/// `max_violation` of zero means the fitted constants satisfy the bound on
/// every sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundProbeReport {
    pub bound: BoundId,
    pub constants: BTreeMap<String, f64>,
    pub max_violation: f64,
    pub samples: usize,
    pub description: String,
    pub notes: Vec<String>,
}

impl BoundProbeReport {
    pub fn new(bound: BoundId, samples: usize, description: impl Into<String>) -> Self {
        Self {
            bound,
            constants: BTreeMap::new(),
            max_violation: 0.0,
            samples,
            description: description.into(),
            notes: Vec::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    pub fn set(&mut self, name: &str, v: f64) {
        self.constants.insert(name.to_string(), v);
    }
}
