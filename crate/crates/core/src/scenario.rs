//! A concrete embedding problem: topology, catalog and SFC instances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NodeId, PhysicalNetwork};
use crate::services::{Catalog, CatalogError, SfcId, SfcInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: PhysicalNetwork,
    pub catalog: Catalog,
    /// Instance `i` has id `SfcId(i)`.
    pub sfcs: Vec<SfcInstance>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("SFC #{index}: {source}")]
    Sfc {
        index: usize,
        #[source]
        source: CatalogError,
    },
}

/// One SFC entry of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfcEntry {
    pub template: String,
    pub start: usize,
    pub end: usize,
    pub users: u32,
}

/// ```toml
/// [[sfcs]]
/// template = "CloudGaming"
/// start = 0
/// end = 3
/// users = 300
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub sfcs: Vec<SfcEntry>,
}

impl Scenario {
    pub fn new(network: PhysicalNetwork, catalog: Catalog, entries: &[SfcEntry]) -> Result<Self, ScenarioError> {
        let sfcs = entries
            .iter()
            .enumerate()
            .map(|(index, e)| {
                catalog
                    .instantiate(SfcId(index), &e.template, NodeId(e.start), NodeId(e.end), e.users, &network)
                    .map_err(|source| ScenarioError::Sfc { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scenario { network, catalog, sfcs })
    }

    pub fn from_toml(network: PhysicalNetwork, catalog: Catalog, text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Scenario::new(network, catalog, &file.sfcs)
    }

    pub fn entries(&self) -> Vec<SfcEntry> {
        self.sfcs
            .iter()
            .map(|s| SfcEntry { template: s.template.name.clone(), start: s.start.0, end: s.end.0, users: s.users })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioFile { sfcs: self.entries() }).expect("scenario serializes")
    }

    pub fn sfc(&self, id: SfcId) -> &SfcInstance {
        &self.sfcs[id.0]
    }

    pub fn request_count(&self) -> usize {
        self.sfcs.iter().map(|s| s.requests.len()).sum()
    }
}
