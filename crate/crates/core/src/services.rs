//! VNF types, SFC templates and concrete SFC instances.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NodeId, PhysicalNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VnfId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SfcId(pub usize);

impl fmt::Display for SfcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VnfType {
    pub id: VnfId,
    pub name: String,
    /// Cores needed per served user.
    pub proc_per_user: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfcTemplate {
    pub name: String,
    pub chain: Vec<VnfId>,
    /// End-to-end latency bound (ms).
    pub max_latency: f64,
    /// Per-user bandwidth of each virtual link (Mb/s), `chain.len() + 1` entries.
    pub bw_per_user: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("duplicate VNF name {0}")]
    DuplicateVnf(String),
    #[error("duplicate SFC template name {0}")]
    DuplicateTemplate(String),
    #[error("VNF {name}: processing per user must be finite and > 0, got {value}")]
    InvalidVnf { name: String, value: f64 },
    #[error("template {template}: {detail}")]
    InvalidTemplate { template: String, detail: String },
    #[error("template {template} references unknown VNF {vnf}")]
    UnknownVnf { template: String, vnf: String },
    #[error("unknown SFC template {0}")]
    UnknownTemplate(String),
    #[error("SFC endpoint {0} is not a node of the topology")]
    UnknownNode(NodeId),
    #[error("an SFC needs at least one user")]
    NoUsers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    vnfs: Vec<VnfType>,
    templates: Vec<SfcTemplate>,
}

impl Catalog {
    pub fn new(vnfs: Vec<VnfType>, templates: Vec<SfcTemplate>) -> Result<Self, CatalogError> {
        for (i, v) in vnfs.iter().enumerate() {
            debug_assert_eq!(v.id, VnfId(i));
            if !(v.proc_per_user.is_finite() && v.proc_per_user > 0.0) {
                return Err(CatalogError::InvalidVnf { name: v.name.clone(), value: v.proc_per_user });
            }
            if vnfs[..i].iter().any(|w| w.name == v.name) {
                return Err(CatalogError::DuplicateVnf(v.name.clone()));
            }
        }
        for (i, t) in templates.iter().enumerate() {
            let bad = |detail: String| CatalogError::InvalidTemplate { template: t.name.clone(), detail };
            if templates[..i].iter().any(|o| o.name == t.name) {
                return Err(CatalogError::DuplicateTemplate(t.name.clone()));
            }
            if t.chain.is_empty() {
                return Err(bad("chain is empty".into()));
            }
            if let Some(f) = t.chain.iter().find(|f| f.0 >= vnfs.len()) {
                return Err(CatalogError::UnknownVnf { template: t.name.clone(), vnf: format!("#{}", f.0) });
            }
            if !(t.max_latency.is_finite() && t.max_latency > 0.0) {
                return Err(bad(format!("max latency must be > 0, got {}", t.max_latency)));
            }
            if t.bw_per_user.len() != t.chain.len() + 1 {
                return Err(bad(format!(
                    "expected {} per-link bandwidths, got {}",
                    t.chain.len() + 1,
                    t.bw_per_user.len()
                )));
            }
            if t.bw_per_user.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                return Err(bad("bandwidth per user must be finite and > 0".into()));
            }
        }
        Ok(Catalog { vnfs, templates })
    }

    pub fn vnfs(&self) -> &[VnfType] {
        &self.vnfs
    }

    pub fn templates(&self) -> &[SfcTemplate] {
        &self.templates
    }

    pub fn vnf(&self, id: VnfId) -> &VnfType {
        &self.vnfs[id.0]
    }

    pub fn vnf_by_name(&self, name: &str) -> Option<&VnfType> {
        self.vnfs.iter().find(|v| v.name == name)
    }

    pub fn template(&self, name: &str) -> Option<&SfcTemplate> {
        self.templates.iter().find(|t| t.name == name)
    }

    /// Materializes an SFC instance serving `users` aggregated users.
    pub fn instantiate(
        &self,
        id: SfcId,
        template: &str,
        start: NodeId,
        end: NodeId,
        users: u32,
        net: &PhysicalNetwork,
    ) -> Result<SfcInstance, CatalogError> {
        let template = self.template(template).ok_or_else(|| CatalogError::UnknownTemplate(template.to_string()))?;
        for v in [start, end] {
            if !net.contains(v) {
                return Err(CatalogError::UnknownNode(v));
            }
        }
        if users == 0 {
            return Err(CatalogError::NoUsers);
        }
        let n = f64::from(users);
        let requests = template
            .chain
            .iter()
            .enumerate()
            .map(|(position, &vnf)| VnfRequest { sfc: id, position, vnf, demand: n * self.vnf(vnf).proc_per_user })
            .collect();
        let len = template.chain.len();
        let virtual_links = (0..=len)
            .map(|index| VirtualLink {
                index,
                from: if index == 0 { VirtualNode::Start } else { VirtualNode::Request(index - 1) },
                to: if index == len { VirtualNode::End } else { VirtualNode::Request(index) },
                bandwidth: n * template.bw_per_user[index],
            })
            .collect();
        Ok(SfcInstance { id, template: template.clone(), start, end, users, requests, virtual_links })
    }

    pub fn from_toml(text: &str) -> Result<Self, CatalogError> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
        file.build()
    }

    pub fn to_toml(&self) -> String {
        let file = CatalogFile {
            vnfs: self.vnfs.iter().map(|v| VnfSpec { name: v.name.clone(), proc_per_user: v.proc_per_user }).collect(),
            sfcs: self
                .templates
                .iter()
                .map(|t| {
                    let uniform = t.bw_per_user.iter().all(|b| *b == t.bw_per_user[0]);
                    SfcSpec {
                        name: t.name.clone(),
                        chain: t.chain.iter().map(|f| self.vnf(*f).name.clone()).collect(),
                        max_latency_ms: t.max_latency,
                        bw_per_user_mbps: if uniform {
                            BandwidthPerUser::Uniform(t.bw_per_user[0])
                        } else {
                            BandwidthPerUser::PerLink(t.bw_per_user.clone())
                        },
                    }
                })
                .collect(),
        };
        toml::to_string(&file).expect("catalog serializes")
    }
}

/// The six VNFs and four SFC templates used throughout the experiments.
pub fn default_catalog() -> Catalog {
    let vnfs = [("NAT", 0.00092), ("FW", 0.0009), ("TM", 0.0133), ("WOC", 0.0054), ("IDPS", 0.0107), ("VOC", 0.0054)];
    let vnfs: Vec<VnfType> = vnfs
        .iter()
        .enumerate()
        .map(|(i, (name, p))| VnfType { id: VnfId(i), name: name.to_string(), proc_per_user: *p })
        .collect();
    let id = |name: &str| vnfs.iter().position(|v| v.name == name).map(VnfId).unwrap();
    let template = |name: &str, chain: [&str; 5], latency: f64, bw: f64| SfcTemplate {
        name: name.to_string(),
        chain: chain.iter().map(|f| id(f)).collect(),
        max_latency: latency,
        bw_per_user: vec![bw; chain.len() + 1],
    };
    let templates = vec![
        template("WebService", ["NAT", "FW", "TM", "WOC", "IDPS"], 500.0, 0.1),
        template("VoIP", ["NAT", "FW", "TM", "FW", "NAT"], 100.0, 0.064),
        template("VideoStreaming", ["NAT", "FW", "TM", "VOC", "IDPS"], 100.0, 4.0),
        template("CloudGaming", ["NAT", "FW", "VOC", "WOC", "IDPS"], 60.0, 4.0),
    ];
    Catalog::new(vnfs, templates).expect("built-in catalog is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VirtualNode {
    Start,
    Request(usize),
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualLink {
    pub index: usize,
    pub from: VirtualNode,
    pub to: VirtualNode,
    /// Aggregated bandwidth (Mb/s).
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VnfRequest {
    pub sfc: SfcId,
    pub position: usize,
    pub vnf: VnfId,
    /// Aggregated processing demand (cores).
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfcInstance {
    pub id: SfcId,
    pub template: SfcTemplate,
    pub start: NodeId,
    pub end: NodeId,
    pub users: u32,
    pub requests: Vec<VnfRequest>,
    /// `requests.len() + 1` links: start -> r0 -> ... -> r(n-1) -> end.
    pub virtual_links: Vec<VirtualLink>,
}

impl SfcInstance {
    pub fn max_latency(&self) -> f64 {
        self.template.max_latency
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    #[serde(default)]
    vnfs: Vec<VnfSpec>,
    #[serde(default)]
    sfcs: Vec<SfcSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VnfSpec {
    name: String,
    proc_per_user: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SfcSpec {
    name: String,
    chain: Vec<String>,
    max_latency_ms: f64,
    bw_per_user_mbps: BandwidthPerUser,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum BandwidthPerUser {
    Uniform(f64),
    PerLink(Vec<f64>),
}

impl CatalogFile {
    fn build(&self) -> Result<Catalog, CatalogError> {
        let vnfs: Vec<VnfType> = self
            .vnfs
            .iter()
            .enumerate()
            .map(|(i, v)| VnfType { id: VnfId(i), name: v.name.clone(), proc_per_user: v.proc_per_user })
            .collect();
        let mut templates = Vec::with_capacity(self.sfcs.len());
        for s in &self.sfcs {
            let chain = s
                .chain
                .iter()
                .map(|name| {
                    vnfs.iter()
                        .position(|v| &v.name == name)
                        .map(VnfId)
                        .ok_or_else(|| CatalogError::UnknownVnf { template: s.name.clone(), vnf: name.clone() })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let bw_per_user = match &s.bw_per_user_mbps {
                BandwidthPerUser::Uniform(b) => vec![*b; chain.len() + 1],
                BandwidthPerUser::PerLink(v) => v.clone(),
            };
            templates.push(SfcTemplate { name: s.name.clone(), chain, max_latency: s.max_latency_ms, bw_per_user });
        }
        Catalog::new(vnfs, templates)
    }
}
