use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::NodeAllocation;
use crate::network::{NodeId, Path};
use crate::scenario::Scenario;
use crate::services::SfcId;

use super::Embedding;

#[derive(Debug, Error)]
pub enum EmbeddingIoError {
    #[error("embedding parse error: {0}")]
    Parse(String),
    #[error("unknown VNF type {0:?}")]
    UnknownVnf(String),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("route for sfc {sfc} vlink {vlink}: {detail}")]
    Route { sfc: usize, vlink: usize, detail: String },
    #[error("duplicate entry: {0}")]
    Duplicate(String),
}

/// On-disk embedding. Link loads are always recomputed on load; the active
/// set is recomputed unless listed explicitly.
///
/// ```toml
/// active = [3]
///
/// [[allocations]]
/// node = 3
/// vnf = "NAT"
/// cores = 0.276
///
/// [[mappings]]
/// sfc = 0
/// position = 0
/// node = 3
///
/// [[routes]]
/// sfc = 0
/// vlink = 0
/// nodes = [0, 2, 3]
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active: Option<Vec<usize>>,
    #[serde(default)]
    pub allocations: Vec<AllocationEntry>,
    #[serde(default)]
    pub mappings: Vec<MappingEntry>,
    #[serde(default)]
    pub routes: Vec<RouteEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationEntry {
    pub node: usize,
    pub vnf: String,
    pub cores: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingEntry {
    pub sfc: usize,
    pub position: usize,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteEntry {
    pub sfc: usize,
    pub vlink: usize,
    /// Node sequence; a single node denotes its self-loop.
    pub nodes: Vec<usize>,
}

impl Embedding {
    pub fn to_file(&self, scenario: &Scenario) -> EmbeddingFile {
        let derived: Vec<usize> = self.allocations.keys().map(|v| v.0).collect();
        let active: Vec<usize> = self.active.iter().map(|v| v.0).collect();
        EmbeddingFile {
            active: (active != derived).then_some(active),
            allocations: self
                .allocations
                .iter()
                .flat_map(|(v, a)| {
                    a.iter().map(move |(f, c)| AllocationEntry {
                        node: v.0,
                        vnf: scenario.catalog.vnf(f).name.clone(),
                        cores: c,
                    })
                })
                .collect(),
            mappings: self
                .request_map
                .iter()
                .map(|(&(c, u), v)| MappingEntry { sfc: c.0, position: u, node: v.0 })
                .collect(),
            routes: self
                .link_paths
                .iter()
                .map(|(&(c, k), p)| RouteEntry { sfc: c.0, vlink: k, nodes: p.nodes().iter().map(|v| v.0).collect() })
                .collect(),
        }
    }

    pub fn to_toml(&self, scenario: &Scenario) -> String {
        toml::to_string(&self.to_file(scenario)).expect("embedding serializes")
    }

    pub fn from_file(file: &EmbeddingFile, scenario: &Scenario) -> Result<Embedding, EmbeddingIoError> {
        let net = &scenario.network;
        let node = |v: usize| {
            if v < net.node_count() {
                Ok(NodeId(v))
            } else {
                Err(EmbeddingIoError::UnknownNode(v))
            }
        };
        let mut allocations: BTreeMap<NodeId, NodeAllocation> = BTreeMap::new();
        for a in &file.allocations {
            let v = node(a.node)?;
            let f = scenario.catalog.vnf_by_name(&a.vnf).ok_or_else(|| EmbeddingIoError::UnknownVnf(a.vnf.clone()))?.id;
            let alloc = allocations.entry(v).or_default();
            if alloc.contains(f) {
                return Err(EmbeddingIoError::Duplicate(format!("instance of {} on node {}", a.vnf, a.node)));
            }
            alloc.set(f, a.cores);
        }
        let mut request_map = BTreeMap::new();
        for m in &file.mappings {
            if request_map.insert((SfcId(m.sfc), m.position), node(m.node)?).is_some() {
                return Err(EmbeddingIoError::Duplicate(format!("mapping of request {}/{}", m.sfc, m.position)));
            }
        }
        let mut link_paths = BTreeMap::new();
        for r in &file.routes {
            let nodes = r.nodes.iter().map(|&v| node(v)).collect::<Result<Vec<_>, _>>()?;
            let path = Path::from_nodes(net, &nodes).map_err(|e| EmbeddingIoError::Route {
                sfc: r.sfc,
                vlink: r.vlink,
                detail: e.to_string(),
            })?;
            if link_paths.insert((SfcId(r.sfc), r.vlink), path).is_some() {
                return Err(EmbeddingIoError::Duplicate(format!("route of vlink {}/{}", r.sfc, r.vlink)));
            }
        }
        let mut emb = Embedding::from_parts(scenario, allocations, request_map, link_paths);
        if let Some(active) = &file.active {
            let set = active.iter().map(|&v| node(v)).collect::<Result<_, _>>()?;
            emb.set_active(set);
        }
        Ok(emb)
    }

    pub fn from_toml(text: &str, scenario: &Scenario) -> Result<Embedding, EmbeddingIoError> {
        let file: EmbeddingFile = toml::from_str(text).map_err(|e| EmbeddingIoError::Parse(e.to_string()))?;
        Embedding::from_file(&file, scenario)
    }
}
