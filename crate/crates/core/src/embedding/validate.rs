//! Constraint checker that recomputes every quantity from the raw embedding
//! and reports each violated constraint family.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::costs::{self, LatencyModel, NodeAllocation};
use crate::network::{LinkId, NodeId, PhysicalNetwork};
use crate::scenario::Scenario;
use crate::services::{SfcId, VnfId};

use super::{Embedding, TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintFamily {
    /// Routes leave the start point and reach the end point of their SFC.
    FixedEndpoint,
    /// Every request is mapped exactly once, and only real requests are.
    UniqueMapping,
    /// An instance is at least as large as the demand mapped onto it.
    InstanceCapacity,
    /// Mapped requests have an instance; instances have mapped requests.
    InstancePresence,
    /// Instances plus processing overhead fit into the node's cores.
    NodeCapacity,
    /// Each virtual link is routed between the nodes of its endpoints.
    PathEndpoints,
    /// Consecutive links of a route share nodes.
    PathContinuity,
    /// A route does not revisit a node.
    Transit,
    /// Co-located endpoints use the self-loop; distinct endpoints never do.
    SelfLoop,
    /// Aggregated link load stays within capacity.
    Bandwidth,
    /// End-to-end latency stays within the SFC's bound.
    Latency,
    /// Active-node flags agree with instance placement.
    ActiveFlag,
    /// Queueing utilization stays below saturation.
    Saturation,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 13] = [
        ConstraintFamily::FixedEndpoint,
        ConstraintFamily::UniqueMapping,
        ConstraintFamily::InstanceCapacity,
        ConstraintFamily::InstancePresence,
        ConstraintFamily::NodeCapacity,
        ConstraintFamily::PathEndpoints,
        ConstraintFamily::PathContinuity,
        ConstraintFamily::Transit,
        ConstraintFamily::SelfLoop,
        ConstraintFamily::Bandwidth,
        ConstraintFamily::Latency,
        ConstraintFamily::ActiveFlag,
        ConstraintFamily::Saturation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintFamily::FixedEndpoint => "fixed-endpoint",
            ConstraintFamily::UniqueMapping => "unique-mapping",
            ConstraintFamily::InstanceCapacity => "instance-capacity",
            ConstraintFamily::InstancePresence => "instance-presence",
            ConstraintFamily::NodeCapacity => "node-capacity",
            ConstraintFamily::PathEndpoints => "path-endpoints",
            ConstraintFamily::PathContinuity => "path-continuity",
            ConstraintFamily::Transit => "transit",
            ConstraintFamily::SelfLoop => "self-loop",
            ConstraintFamily::Bandwidth => "bandwidth",
            ConstraintFamily::Latency => "latency",
            ConstraintFamily::ActiveFlag => "active-flag",
            ConstraintFamily::Saturation => "saturation",
        }
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An identifier involved in a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Involved {
    Sfc(SfcId),
    Request(SfcId, usize),
    VirtualLink(SfcId, usize),
    Node(NodeId),
    Link(LinkId),
    Vnf(VnfId),
}

impl fmt::Display for Involved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Involved::Sfc(c) => write!(f, "sfc {c}"),
            Involved::Request(c, u) => write!(f, "request {c}/{u}"),
            Involved::VirtualLink(c, k) => write!(f, "vlink {c}/{k}"),
            Involved::Node(v) => write!(f, "node {v}"),
            Involved::Link(l) => write!(f, "link {l}"),
            Involved::Vnf(x) => write!(f, "vnf {}", x.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub detail: String,
    pub involved: Vec<Involved>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.family, self.detail)?;
        if !self.involved.is_empty() {
            let ids: Vec<String> = self.involved.iter().map(|i| i.to_string()).collect();
            write!(f, " ({})", ids.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn families(&self) -> BTreeSet<ConstraintFamily> {
        self.violations.iter().map(|v| v.family).collect()
    }

    pub fn count(&self, family: ConstraintFamily) -> usize {
        self.violations.iter().filter(|v| v.family == family).count()
    }

    fn push(&mut self, family: ConstraintFamily, detail: String, involved: Vec<Involved>) {
        self.violations.push(Violation { family, detail, involved });
    }
}

/// Checks `emb` against every constraint of the placement problem for
/// `scenario` under the given latency model. Nothing cached in the
/// embedding (active set, link loads) is trusted; both are recomputed and
/// compared.
pub fn validate(emb: &Embedding, scenario: &Scenario, model: &LatencyModel) -> ValidationReport {
    use ConstraintFamily as F;
    let net = &scenario.network;
    let mut report = ValidationReport::default();

    // Mapping completeness and uniqueness. The map is keyed by request, so
    // a request can hold at most one node; spurious keys are the other way
    // to break it.
    for (&(c, u), &v) in emb.request_map() {
        let known = scenario.sfcs.get(c.0).is_some_and(|s| u < s.requests.len());
        if !known {
            report.push(
                F::UniqueMapping,
                "mapping for a request that does not exist".into(),
                vec![Involved::Request(c, u)],
            );
        } else if !net.contains(v) {
            report.push(
                F::UniqueMapping,
                format!("request mapped to unknown node {}", v),
                vec![Involved::Request(c, u)],
            );
        }
    }
    for sfc in &scenario.sfcs {
        for r in &sfc.requests {
            if emb.mapped_node(sfc.id, r.position).is_none() {
                report.push(
                    F::UniqueMapping,
                    "request is not mapped".into(),
                    vec![Involved::Request(sfc.id, r.position)],
                );
            }
        }
    }

    // Demand per (node, VNF) from the mapping alone.
    let mut demand: BTreeMap<(NodeId, VnfId), f64> = BTreeMap::new();
    for sfc in &scenario.sfcs {
        for r in &sfc.requests {
            if let Some(v) = emb.mapped_node(sfc.id, r.position) {
                *demand.entry((v, r.vnf)).or_insert(0.0) += r.demand;
            }
        }
    }
    for (&(v, f), &d) in &demand {
        let c = emb.allocations().get(&v).map_or(0.0, |a| a.get(f));
        if c <= 0.0 {
            report.push(
                F::InstancePresence,
                format!("{d} cores of demand mapped to a node without an instance"),
                vec![Involved::Node(v), Involved::Vnf(f)],
            );
        } else if d > c + TOLERANCE {
            report.push(
                F::InstanceCapacity,
                format!("instance has {c} cores but serves {d}"),
                vec![Involved::Node(v), Involved::Vnf(f)],
            );
        }
    }
    for (&v, alloc) in emb.allocations() {
        if !net.contains(v) {
            report.push(F::InstancePresence, "instance on unknown node".into(), vec![Involved::Node(v)]);
            continue;
        }
        for (f, c) in alloc.iter() {
            if !demand.contains_key(&(v, f)) {
                report.push(
                    F::InstancePresence,
                    format!("instance of {c} cores serves no request"),
                    vec![Involved::Node(v), Involved::Vnf(f)],
                );
            }
            if c < 0.0 {
                report.push(
                    F::InstancePresence,
                    format!("negative size {c}"),
                    vec![Involved::Node(v), Involved::Vnf(f)],
                );
            }
        }
        let node = net.node(v);
        let residual = costs::residual_capacity(alloc, node);
        if residual < -TOLERANCE {
            report.push(
                F::NodeCapacity,
                format!("{} cores used of {}", node.cores - residual, node.cores),
                vec![Involved::Node(v)],
            );
        }
        if let LatencyModel::Sota(_) = model {
            if !model.admits(alloc, node) {
                report.push(
                    F::Saturation,
                    format!("utilization {} at or above saturation", costs::utilization(alloc, node)),
                    vec![Involved::Node(v)],
                );
            }
        }
    }

    // Routing.
    let mut load: BTreeMap<LinkId, f64> = BTreeMap::new();
    for &(c, k) in emb.link_paths().keys() {
        let known = scenario.sfcs.get(c.0).is_some_and(|s| k < s.virtual_links.len());
        if !known {
            report.push(
                F::PathEndpoints,
                "route for a virtual link that does not exist".into(),
                vec![Involved::VirtualLink(c, k)],
            );
        }
    }
    for sfc in &scenario.sfcs {
        let n = sfc.requests.len();
        for vl in &sfc.virtual_links {
            let k = vl.index;
            let id = Involved::VirtualLink(sfc.id, k);
            let Some(path) = emb.path(sfc.id, k) else {
                report.push(F::PathEndpoints, "virtual link is not routed".into(), vec![id]);
                continue;
            };
            for l in path.links() {
                *load.entry(*l).or_insert(0.0) += vl.bandwidth;
            }
            check_walk(net, path.nodes(), path.links(), id, &mut report);

            let from = if k == 0 { Some(sfc.start) } else { emb.mapped_node(sfc.id, k - 1) };
            let to = if k == n { Some(sfc.end) } else { emb.mapped_node(sfc.id, k) };
            if let Some(x) = from {
                if path.source() != x {
                    let family = if k == 0 { F::FixedEndpoint } else { F::PathEndpoints };
                    report.push(family, format!("route leaves {} instead of {}", path.source(), x), vec![id]);
                }
            }
            if let Some(y) = to {
                if path.target() != y {
                    let family = if k == n { F::FixedEndpoint } else { F::PathEndpoints };
                    report.push(family, format!("route reaches {} instead of {}", path.target(), y), vec![id]);
                }
            }
            let colocated = match (from, to) {
                (Some(x), Some(y)) => Some(x == y),
                _ => None,
            };
            let self_loops = path.links().iter().filter(|l| net.link(**l).is_self_loop()).count();
            match colocated {
                Some(true) => {
                    let expected: Vec<LinkId> = net.self_loop(path.source()).into_iter().collect();
                    if path.links() != expected.as_slice() {
                        report.push(F::SelfLoop, "co-located endpoints must use the self-loop".into(), vec![id]);
                    }
                }
                Some(false) if self_loops > 0 => {
                    report.push(F::SelfLoop, "self-loop on a route between distinct nodes".into(), vec![id]);
                }
                _ => {}
            }
        }
    }

    for (&l, &x) in &load {
        let beta = net.link(l).bandwidth;
        if x > beta + TOLERANCE {
            report.push(F::Bandwidth, format!("load {x} exceeds capacity {beta}"), vec![Involved::Link(l)]);
        }
    }
    let recorded: BTreeSet<LinkId> = emb.link_load().keys().copied().collect();
    let computed: BTreeSet<LinkId> = load.iter().filter(|(_, x)| **x > TOLERANCE).map(|(l, _)| *l).collect();
    for &l in recorded.union(&computed) {
        let a = emb.link_load().get(&l).copied().unwrap_or(0.0);
        let b = load.get(&l).copied().unwrap_or(0.0);
        if (a - b).abs() > TOLERANCE * (1.0 + b.abs()) {
            report.push(
                F::Bandwidth,
                format!("recorded load {a} differs from routed load {b}"),
                vec![Involved::Link(l)],
            );
        }
    }

    // Latency of fully mapped SFCs.
    for sfc in &scenario.sfcs {
        let mapped: Option<Vec<NodeId>> = sfc.requests.iter().map(|r| emb.mapped_node(sfc.id, r.position)).collect();
        let Some(nodes) = mapped else { continue };
        if nodes.iter().any(|v| !net.contains(*v)) {
            continue;
        }
        let mut total: f64 = sfc
            .virtual_links
            .iter()
            .filter_map(|vl| emb.path(sfc.id, vl.index))
            .map(|p| p.links().iter().map(|l| net.link(*l).latency).sum::<f64>())
            .sum();
        for (r, v) in sfc.requests.iter().zip(&nodes) {
            let alloc = emb.allocations().get(v).unwrap_or_else(|| costs::empty_allocation());
            total += request_latency(model, alloc, net, *v, r.vnf);
        }
        if !(total <= sfc.max_latency() + TOLERANCE) {
            report.push(
                F::Latency,
                format!("end-to-end latency {total} exceeds bound {}", sfc.max_latency()),
                vec![Involved::Sfc(sfc.id)],
            );
        }
    }

    // Active flags.
    let expected: BTreeSet<NodeId> =
        emb.allocations().iter().filter(|(_, a)| a.iter().any(|(_, c)| c > TOLERANCE)).map(|(v, _)| *v).collect();
    for v in expected.symmetric_difference(emb.active()) {
        let detail =
            if expected.contains(v) { "hosts instances but is not active" } else { "active without instances" };
        report.push(F::ActiveFlag, detail.into(), vec![Involved::Node(*v)]);
    }

    report
}

fn request_latency(model: &LatencyModel, alloc: &NodeAllocation, net: &PhysicalNetwork, v: NodeId, f: VnfId) -> f64 {
    model.request_latency(alloc, net.node(v), f).unwrap_or(f64::INFINITY)
}

fn check_walk(net: &PhysicalNetwork, nodes: &[NodeId], links: &[LinkId], id: Involved, report: &mut ValidationReport) {
    use ConstraintFamily as F;
    if links.iter().any(|l| l.0 >= net.links().len()) {
        report.push(F::PathContinuity, "route uses an unknown link".into(), vec![id]);
        return;
    }
    if nodes.len() > 1 {
        let chained = links.len() == nodes.len() - 1
            && links.iter().zip(nodes.windows(2)).all(|(l, w)| {
                let link = net.link(*l);
                link.from == w[0] && link.to == w[1]
            });
        if !chained {
            report.push(F::PathContinuity, "route links do not form a walk".into(), vec![id]);
        }
        let distinct: BTreeSet<NodeId> = nodes.iter().copied().collect();
        if distinct.len() != nodes.len() {
            report.push(F::Transit, "route revisits a node".into(), vec![id]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Path, PhysicalNode};
    use crate::scenario::SfcEntry;
    use crate::services::{Catalog, SfcTemplate, VnfType};

    fn scenario(max_latency: f64) -> Scenario {
        let nodes = (0..3)
            .map(|i| PhysicalNode {
                id: NodeId(i),
                name: format!("n{i}"),
                cores: 4.0,
                csw_latency: 0.4,
                csw_processing: 0.004,
                up_latency: 1.75,
                up_processing: 0.0175,
            })
            .collect();
        let links = vec![(0, 1, 5.0, 10.0), (1, 0, 5.0, 10.0), (1, 2, 5.0, 10.0), (2, 1, 5.0, 10.0)];
        let net = PhysicalNetwork::new(nodes, links).unwrap();
        let cat = Catalog::new(
            vec![VnfType { id: VnfId(0), name: "A".into(), proc_per_user: 0.1 }],
            vec![SfcTemplate { name: "S".into(), chain: vec![VnfId(0)], max_latency, bw_per_user: vec![1.0; 2] }],
        )
        .unwrap();
        let entries = [SfcEntry { template: "S".into(), start: 0, end: 2, users: 2 }];
        Scenario::new(net, cat, &entries).unwrap()
    }

    fn path(s: &Scenario, nodes: &[usize]) -> Path {
        let ids: Vec<NodeId> = nodes.iter().map(|&n| NodeId(n)).collect();
        Path::from_nodes(&s.network, &ids).unwrap()
    }

    fn embed(s: &Scenario) -> Embedding {
        let sfc = &s.sfcs[0];
        let mut emb = Embedding::new();
        emb.apply_mapping(&s.network, sfc, 0, NodeId(1), path(s, &[0, 1])).unwrap();
        emb.connect_end(sfc, path(s, &[1, 2])).unwrap();
        emb
    }

    #[test]
    fn feasible_line_embedding_passes() {
        let s = scenario(20.0);
        let emb = embed(&s);
        let report = validate(&emb, &s, &LatencyModel::Sharing);
        assert!(report.ok(), "{:?}", report.violations);
        // 10 ms of links, one process: 0.4 + 1.75.
        let lat = emb.end_to_end_latency(&s.network, &s.sfcs[0], &LatencyModel::Sharing);
        assert!((lat - 12.15).abs() < 1e-12);
    }

    #[test]
    fn tight_bound_reports_only_latency() {
        let s = scenario(12.0);
        let report = validate(&embed(&s), &s, &LatencyModel::Sharing);
        assert_eq!(report.violations.len(), 1, "{:?}", report.violations);
        assert_eq!(report.violations[0].family, ConstraintFamily::Latency);
        assert_eq!(report.violations[0].involved, vec![Involved::Sfc(SfcId(0))]);
    }

    #[test]
    fn rerouted_link_is_an_endpoint_violation() {
        let s = scenario(20.0);
        let mut emb = embed(&s);
        emb.force_path(SfcId(0), 1, path(&s, &[1, 0]));
        let fams = validate(&emb, &s, &LatencyModel::Sharing).families();
        assert!(fams.contains(&ConstraintFamily::FixedEndpoint));
        assert!(fams.contains(&ConstraintFamily::Bandwidth));
    }

    #[test]
    fn missing_instance_and_undersized_instance() {
        let s = scenario(20.0);
        let mut emb = embed(&s);
        emb.force_allocation(NodeId(1), VnfId(0), 0.1);
        assert!(validate(&emb, &s, &LatencyModel::Sharing).families().contains(&ConstraintFamily::InstanceCapacity));
        emb.force_allocation(NodeId(1), VnfId(0), 0.0);
        let fams = validate(&emb, &s, &LatencyModel::Sharing).families();
        assert!(fams.contains(&ConstraintFamily::InstancePresence));
        assert!(fams.contains(&ConstraintFamily::ActiveFlag));
    }

    #[test]
    fn walk_families() {
        let s = scenario(100.0);
        let mut emb = embed(&s);
        emb.force_path(SfcId(0), 1, path(&s, &[1, 0, 1, 2]));
        let fams = validate(&emb, &s, &LatencyModel::Sharing).families();
        assert!(fams.contains(&ConstraintFamily::Transit));

        let mut emb = embed(&s);
        emb.force_mapping(SfcId(0), 0, NodeId(0));
        emb.force_path(SfcId(0), 0, path(&s, &[0, 1, 0]));
        let fams = validate(&emb, &s, &LatencyModel::Sharing).families();
        assert!(fams.contains(&ConstraintFamily::SelfLoop));
    }

    #[test]
    fn over_capacity_node() {
        let s = scenario(100.0);
        let mut emb = embed(&s);
        emb.force_allocation(NodeId(1), VnfId(0), 4.0);
        let fams = validate(&emb, &s, &LatencyModel::Sharing).families();
        assert!(fams.contains(&ConstraintFamily::NodeCapacity));
    }

    #[test]
    fn text_round_trip() {
        let s = scenario(20.0);
        let emb = embed(&s);
        let text = emb.to_toml(&s);
        let back = Embedding::from_toml(&text, &s).unwrap();
        assert_eq!(back, emb);
        assert_eq!(back.to_toml(&s), text);
    }

    #[test]
    fn explicit_active_set_survives_round_trip() {
        let s = scenario(20.0);
        let mut emb = embed(&s);
        emb.set_active([NodeId(1), NodeId(2)].into_iter().collect());
        let back = Embedding::from_toml(&emb.to_toml(&s), &s).unwrap();
        assert_eq!(back.active(), emb.active());
        assert_eq!(validate(&back, &s, &LatencyModel::Sharing).families(), [ConstraintFamily::ActiveFlag].into());
    }
}
