use serde::{Deserialize, Serialize};

use super::{NodeId, PhysicalNetwork, PhysicalNode, TopologyError};

/// On-disk topology description.
///
/// ```toml
/// bidirectional = true
///
/// [[nodes]]
/// id = 0
/// name = "Seattle"
/// cores = 16
/// omega = 0.4
///
/// [[links]]
/// from = 0
/// to = 1
/// latency_ms = 8.0
/// bandwidth_mbps = "inf"
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    /// Expand every listed link into both directions.
    #[serde(default)]
    pub bidirectional: bool,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: usize,
    #[serde(default)]
    pub name: Option<String>,
    pub cores: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: usize,
    pub to: usize,
    pub latency_ms: f64,
    #[serde(default)]
    pub bandwidth_mbps: BandwidthSpec,
}

/// Either a finite capacity in Mb/s or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSpec {
    Finite(f64),
    Named(InfiniteBandwidth),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfiniteBandwidth {
    #[serde(rename = "inf")]
    Inf,
}

impl Default for BandwidthSpec {
    fn default() -> Self {
        BandwidthSpec::Named(InfiniteBandwidth::Inf)
    }
}

impl BandwidthSpec {
    pub fn value(self) -> f64 {
        match self {
            BandwidthSpec::Finite(v) => v,
            BandwidthSpec::Named(_) => f64::INFINITY,
        }
    }
}

impl TopologyFile {
    pub fn build(&self) -> Result<PhysicalNetwork, TopologyError> {
        let count = self.nodes.len();
        let mut slots: Vec<Option<PhysicalNode>> = vec![None; count];
        for spec in &self.nodes {
            if spec.id >= count {
                return Err(TopologyError::NodeIds { count, detail: format!("id {} out of range", spec.id) });
            }
            if slots[spec.id].is_some() {
                return Err(TopologyError::NodeIds { count, detail: format!("id {} listed twice", spec.id) });
            }
            slots[spec.id] = Some(PhysicalNode {
                id: NodeId(spec.id),
                name: spec.name.clone().unwrap_or_else(|| format!("n{}", spec.id)),
                cores: spec.cores,
                csw_latency: spec.omega,
                csw_processing: spec.xi,
                up_latency: spec.kappa,
                up_processing: spec.mu,
            });
        }
        // Every slot is filled: ids are unique and in range.
        let nodes: Vec<PhysicalNode> = slots.into_iter().flatten().collect();

        let mut links = Vec::new();
        for l in &self.links {
            let bandwidth = l.bandwidth_mbps.value();
            if l.from == l.to {
                // An explicit self-loop is tolerated only if it matches the implicit one.
                let ok =
                    l.latency_ms == 0.0 && nodes.get(l.from).is_some_and(|n| n.is_nfv()) && bandwidth.is_infinite();
                if !ok {
                    return Err(TopologyError::InvalidLink {
                        from: l.from,
                        to: l.to,
                        detail: "explicit self-loop must have zero latency, infinite bandwidth and an NFV node".into(),
                    });
                }
                continue;
            }
            links.push((l.from, l.to, l.latency_ms, bandwidth));
            if self.bidirectional {
                links.push((l.to, l.from, l.latency_ms, bandwidth));
            }
        }
        PhysicalNetwork::new(nodes, links)
    }
}
