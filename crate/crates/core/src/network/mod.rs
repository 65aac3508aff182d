//! Physical substrate: nodes with CPU cores and cost parameters, directed
//! links with latency and bandwidth, and latency-shortest-path queries.

mod config;
mod paths;

use std::fmt;

use thiserror::Error;

pub use config::{BandwidthSpec, LinkSpec, NodeSpec, TopologyFile};
pub use paths::{KShortestPaths, Path};

/// Dense index of a physical node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Dense index of a physical link (self-loops included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalNode {
    pub id: NodeId,
    pub name: String,
    /// Number of CPU cores. Zero marks a forwarding-only node.
    pub cores: f64,
    /// Context-switching latency per process (ms).
    pub csw_latency: f64,
    /// Context-switching processing per process (cores).
    pub csw_processing: f64,
    /// Upscaling latency per balanced core (ms).
    pub up_latency: f64,
    /// Upscaling processing per balanced core (cores).
    pub up_processing: f64,
}

impl PhysicalNode {
    pub fn is_nfv(&self) -> bool {
        self.cores > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalLink {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    /// Mb/s; `f64::INFINITY` for uncapacitated links and self-loops.
    pub bandwidth: f64,
    /// ms
    pub latency: f64,
}

impl PhysicalLink {
    pub fn is_self_loop(&self) -> bool {
        self.from == self.to
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("topology parse error: {0}")]
    Parse(String),
    #[error("topology has no nodes")]
    Empty,
    #[error("node ids must be dense 0..{count}: {detail}")]
    NodeIds { count: usize, detail: String },
    #[error("node {node}: {detail}")]
    InvalidNode { node: usize, detail: String },
    #[error("link {from}->{to}: {detail}")]
    InvalidLink { from: usize, to: usize, detail: String },
    #[error("duplicate link {from}->{to}")]
    DuplicateLink { from: usize, to: usize },
    #[error("topology is not connected: node {0} unreachable from node 0")]
    Disconnected(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {to} unreachable from {from}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("no loopless path {from}->{to} crosses an NFV node (searched {searched} paths)")]
    NoNfvPath { from: NodeId, to: NodeId, searched: usize },
    #[error("node sequence {0:?} is not a walk over existing links")]
    NotAWalk(Vec<usize>),
}

/// Immutable physical network. Self-loops are present on every NFV node.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalNetwork {
    nodes: Vec<PhysicalNode>,
    links: Vec<PhysicalLink>,
    /// Non-self-loop outgoing links, sorted by target node id.
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
    self_loops: Vec<Option<LinkId>>,
}

impl PhysicalNetwork {
    /// Builds and validates a network. Self-loops must not be part of
    /// `links`; they are inserted for every node with cores > 0.
    pub fn new(nodes: Vec<PhysicalNode>, links: Vec<(usize, usize, f64, f64)>) -> Result<Self, TopologyError> {
        if nodes.is_empty() {
            return Err(TopologyError::Empty);
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.id.0 != i {
                return Err(TopologyError::NodeIds {
                    count: nodes.len(),
                    detail: format!("position {i} holds id {}", n.id),
                });
            }
            let params = [
                ("cores", n.cores),
                ("omega", n.csw_latency),
                ("xi", n.csw_processing),
                ("kappa", n.up_latency),
                ("mu", n.up_processing),
            ];
            for (name, value) in params {
                if !value.is_finite() || value < 0.0 {
                    return Err(TopologyError::InvalidNode {
                        node: i,
                        detail: format!("{name} must be finite and >= 0, got {value}"),
                    });
                }
            }
        }

        let n = nodes.len();
        let mut out_links = vec![Vec::new(); n];
        let mut in_links = vec![Vec::new(); n];
        let mut all = Vec::with_capacity(links.len() + n);
        let mut seen = std::collections::BTreeSet::new();
        for (from, to, latency, bandwidth) in links {
            if from >= n || to >= n {
                return Err(TopologyError::InvalidLink { from, to, detail: "unknown endpoint".into() });
            }
            if from == to {
                return Err(TopologyError::InvalidLink { from, to, detail: "self-loops are implicit".into() });
            }
            if !latency.is_finite() || latency < 0.0 {
                return Err(TopologyError::InvalidLink {
                    from,
                    to,
                    detail: format!("latency must be finite and >= 0, got {latency}"),
                });
            }
            if bandwidth.is_nan() || bandwidth <= 0.0 {
                return Err(TopologyError::InvalidLink {
                    from,
                    to,
                    detail: format!("bandwidth must be > 0, got {bandwidth}"),
                });
            }
            if !seen.insert((from, to)) {
                return Err(TopologyError::DuplicateLink { from, to });
            }
            let id = LinkId(all.len());
            all.push(PhysicalLink { id, from: NodeId(from), to: NodeId(to), bandwidth, latency });
            out_links[from].push(id);
            in_links[to].push(id);
        }

        let mut self_loops = vec![None; n];
        for node in &nodes {
            if node.is_nfv() {
                let id = LinkId(all.len());
                all.push(PhysicalLink { id, from: node.id, to: node.id, bandwidth: f64::INFINITY, latency: 0.0 });
                self_loops[node.id.0] = Some(id);
            }
        }

        for list in out_links.iter_mut() {
            list.sort_by_key(|l| all[l.0].to);
        }
        for list in in_links.iter_mut() {
            list.sort_by_key(|l| all[l.0].from);
        }

        let net = PhysicalNetwork { nodes, links: all, out_links, in_links, self_loops };
        net.check_weakly_connected()?;
        for l in net.links.iter().filter(|l| !l.is_self_loop()) {
            if net.link_between(l.to, l.from).is_none() {
                log::warn!("asymmetric link {}->{} has no reverse direction", l.from, l.to);
            }
        }
        Ok(net)
    }

    fn check_weakly_connected(&self) -> Result<(), TopologyError> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            let neighbours = self.out_links[v]
                .iter()
                .map(|l| self.links[l.0].to.0)
                .chain(self.in_links[v].iter().map(|l| self.links[l.0].from.0));
            for w in neighbours {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(TopologyError::Disconnected(v)),
            None => Ok(()),
        }
    }

    /// Parses and validates a TOML topology description.
    pub fn from_toml(text: &str) -> Result<Self, TopologyError> {
        let file: TopologyFile = toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
        file.build()
    }

    pub fn nodes(&self) -> &[PhysicalNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[PhysicalLink] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &PhysicalNode {
        &self.nodes[id.0]
    }

    pub fn link(&self, id: LinkId) -> &PhysicalLink {
        &self.links[id.0]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.0 < self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn nfv_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.is_nfv()).map(|n| n.id)
    }

    pub fn self_loop(&self, v: NodeId) -> Option<LinkId> {
        self.self_loops[v.0]
    }

    /// Outgoing links other than the self-loop, ordered by target id.
    pub fn out_links(&self, v: NodeId) -> &[LinkId] {
        &self.out_links[v.0]
    }

    pub fn in_links(&self, v: NodeId) -> &[LinkId] {
        &self.in_links[v.0]
    }

    /// The directed link `from -> to`, or the self-loop when `from == to`.
    pub fn link_between(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        if from == to {
            return self.self_loop(from);
        }
        self.out_links[from.0].iter().copied().find(|l| self.links[l.0].to == to)
    }

    /// Returns a copy with every node's cost parameters replaced.
    pub fn with_costs(&self, omega: f64, xi: f64, kappa: f64, mu: f64) -> Self {
        let mut net = self.clone();
        for n in net.nodes.iter_mut() {
            n.csw_latency = omega;
            n.csw_processing = xi;
            n.up_latency = kappa;
            n.up_processing = mu;
        }
        net
    }

    pub fn all_bandwidth_infinite(&self) -> bool {
        self.links.iter().all(|l| l.bandwidth.is_infinite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn load(text: &str) -> Result<PhysicalNetwork, TopologyError> {
        PhysicalNetwork::from_toml(text)
    }

    #[test]
    fn shipped_topology() {
        let net = fixtures::internet2();
        assert_eq!(net.node_count(), 10);
        assert_eq!(net.nfv_nodes().count(), 10);
        let loops = net.links().iter().filter(|l| l.is_self_loop()).count();
        assert_eq!(loops, 10);
        assert_eq!(net.links().len() - loops, 30);
        for l in net.links().iter().filter(|l| !l.is_self_loop()) {
            assert!((3.0..=13.5).contains(&l.latency), "{l:?}");
            assert!(net.link_between(l.to, l.from).is_some());
        }
        assert!(net.all_bandwidth_infinite());
    }

    #[test]
    fn self_loop_lookup() {
        let net = load(
            "[[nodes]]\nid = 0\ncores = 4\n[[nodes]]\nid = 1\ncores = 0\n[[links]]\nfrom = 0\nto = 1\nlatency_ms = 2\n",
        )
        .unwrap();
        let l = net.self_loop(NodeId(0)).unwrap();
        assert_eq!(net.link_between(NodeId(0), NodeId(0)), Some(l));
        assert_eq!(net.self_loop(NodeId(1)), None);
        assert!(net.out_links(NodeId(0)).iter().all(|l| !net.link(*l).is_self_loop()));
        assert_eq!(net.link_between(NodeId(1), NodeId(0)), None);
    }

    #[test]
    fn rejected_topologies() {
        let node = |id: usize| format!("[[nodes]]\nid = {id}\ncores = 1\n");
        let link = |a: usize, b: usize, lat: &str| format!("[[links]]\nfrom = {a}\nto = {b}\nlatency_ms = {lat}\n");
        assert_eq!(load("nodes = []\n"), Err(TopologyError::Empty));
        assert!(matches!(load(&format!("{}{}", node(0), node(2))), Err(TopologyError::NodeIds { .. })));
        assert!(matches!(load(&format!("{}{}", node(0), node(0))), Err(TopologyError::NodeIds { .. })));
        assert!(matches!(load(&format!("{}{}", node(0), node(1))), Err(TopologyError::Disconnected(1))));
        let two = format!("{}{}", node(0), node(1));
        assert!(matches!(load(&format!("{two}{}", link(0, 1, "-1"))), Err(TopologyError::InvalidLink { .. })));
        assert!(matches!(load(&format!("{two}{}", link(0, 5, "1"))), Err(TopologyError::InvalidLink { .. })));
        assert!(matches!(
            load(&format!("{two}{}{}", link(0, 1, "1"), link(0, 1, "2"))),
            Err(TopologyError::DuplicateLink { .. })
        ));
        assert!(matches!(
            load(&format!("{two}{}{}", link(0, 1, "1"), link(0, 0, "1"))),
            Err(TopologyError::InvalidLink { .. })
        ));
        assert!(matches!(load(&format!("{two}unknown = 1\n")), Err(TopologyError::Parse(_))));
        let neg = "[[nodes]]\nid = 0\ncores = -1\n";
        assert!(matches!(load(neg), Err(TopologyError::InvalidNode { .. })));
    }

    #[test]
    fn bidirectional_expansion_and_bandwidth() {
        let text = "bidirectional = true\n[[nodes]]\nid = 0\ncores = 1\n[[nodes]]\nid = 1\ncores = 1\n[[links]]\nfrom = 0\nto = 1\nlatency_ms = 4\nbandwidth_mbps = 100\n";
        let net = load(text).unwrap();
        let back = net.link(net.link_between(NodeId(1), NodeId(0)).unwrap());
        assert_eq!((back.latency, back.bandwidth), (4.0, 100.0));
        assert!(!net.all_bandwidth_infinite());
    }

    #[test]
    fn cost_override() {
        let net = fixtures::internet2().with_costs(0.4, 0.004, 1.75, 0.0175);
        assert!(net.nodes().iter().all(|n| n.csw_latency == 0.4 && n.up_processing == 0.0175));
    }
}
