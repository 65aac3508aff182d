//! Embedding state: VNF instance sizes per node, request-to-node mappings,
//! routed virtual links and the derived bookkeeping (active nodes, link loads).

mod io;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::costs::{self, LatencyModel, NodeAllocation};
use crate::network::{LinkId, NodeId, Path, PhysicalNetwork};
use crate::scenario::Scenario;
use crate::services::{SfcId, SfcInstance, VnfId};

pub use io::{AllocationEntry, EmbeddingFile, EmbeddingIoError, MappingEntry, RouteEntry};
pub use validate::{validate, ConstraintFamily, Involved, ValidationReport, Violation};

/// Absolute tolerance for capacity, latency and load comparisons.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MappingError {
    #[error("node {0} has no CPU cores")]
    NotNfv(NodeId),
    #[error("SFC {sfc} has no request at position {position}")]
    NoSuchRequest { sfc: SfcId, position: usize },
    #[error("request ({sfc}, {position}) is already mapped")]
    AlreadyMapped { sfc: SfcId, position: usize },
    #[error("request ({sfc}, {position}) mapped before its predecessor")]
    OutOfOrder { sfc: SfcId, position: usize },
    #[error("path {got:?} does not connect {expected_from} to {expected_to}")]
    PathMismatch { expected_from: NodeId, expected_to: NodeId, got: (NodeId, NodeId) },
    #[error("node {node} would be overcommitted (residual {residual})")]
    Capacity { node: NodeId, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Embedding {
    allocations: BTreeMap<NodeId, NodeAllocation>,
    request_map: BTreeMap<(SfcId, usize), NodeId>,
    /// Keyed by (SFC, virtual-link index); link `k` enters request `k`.
    link_paths: BTreeMap<(SfcId, usize), Path>,
    active: BTreeSet<NodeId>,
    link_load: BTreeMap<LinkId, f64>,
    /// Number of requests of each SFC mapped to a node.
    residents: BTreeMap<NodeId, BTreeMap<SfcId, usize>>,
}

impl Embedding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn allocations(&self) -> &BTreeMap<NodeId, NodeAllocation> {
        &self.allocations
    }

    pub fn allocation(&self, v: NodeId) -> &NodeAllocation {
        self.allocations.get(&v).unwrap_or_else(|| costs::empty_allocation())
    }

    pub fn request_map(&self) -> &BTreeMap<(SfcId, usize), NodeId> {
        &self.request_map
    }

    pub fn mapped_node(&self, sfc: SfcId, position: usize) -> Option<NodeId> {
        self.request_map.get(&(sfc, position)).copied()
    }

    pub fn link_paths(&self) -> &BTreeMap<(SfcId, usize), Path> {
        &self.link_paths
    }

    pub fn path(&self, sfc: SfcId, vlink: usize) -> Option<&Path> {
        self.link_paths.get(&(sfc, vlink))
    }

    pub fn active(&self) -> &BTreeSet<NodeId> {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn link_load(&self) -> &BTreeMap<LinkId, f64> {
        &self.link_load
    }

    /// SFCs with at least one request mapped to `v`.
    pub fn residents(&self, v: NodeId) -> impl Iterator<Item = SfcId> + '_ {
        self.residents.get(&v).into_iter().flat_map(|m| m.keys().copied())
    }

    /// Instances of `f` anywhere in the network.
    pub fn instances_of(&self, f: VnfId) -> impl Iterator<Item = NodeId> + '_ {
        self.allocations.iter().filter(move |(_, a)| a.contains(f)).map(|(v, _)| *v)
    }

    /// Node currently terminating the chain of `sfc` at `position`: the start
    /// point before anything is mapped, else the node of request
    /// `position - 1`.
    fn entry_node(&self, sfc: &SfcInstance, position: usize) -> Option<NodeId> {
        if position == 0 {
            Some(sfc.start)
        } else {
            self.mapped_node(sfc.id, position - 1)
        }
    }

    /// Maps request `position` of `sfc` to `node`, growing (or creating) the
    /// instance there by the request's demand and routing the incoming
    /// virtual link over `path`. Leaves the embedding untouched on error.
    pub fn apply_mapping(
        &mut self,
        net: &PhysicalNetwork,
        sfc: &SfcInstance,
        position: usize,
        node: NodeId,
        path: Path,
    ) -> Result<(), MappingError> {
        let request = sfc.requests.get(position).ok_or(MappingError::NoSuchRequest { sfc: sfc.id, position })?;
        if !net.contains(node) || !net.node(node).is_nfv() {
            return Err(MappingError::NotNfv(node));
        }
        if self.request_map.contains_key(&(sfc.id, position)) {
            return Err(MappingError::AlreadyMapped { sfc: sfc.id, position });
        }
        let prev = self.entry_node(sfc, position).ok_or(MappingError::OutOfOrder { sfc: sfc.id, position })?;
        if path.source() != prev || path.target() != node {
            return Err(MappingError::PathMismatch {
                expected_from: prev,
                expected_to: node,
                got: (path.source(), path.target()),
            });
        }
        let mut grown = self.allocation(node).clone();
        grown.add(request.vnf, request.demand);
        let residual = costs::residual_capacity(&grown, net.node(node));
        if residual < -TOLERANCE {
            return Err(MappingError::Capacity { node, residual });
        }

        self.allocations.insert(node, grown);
        self.active.insert(node);
        self.request_map.insert((sfc.id, position), node);
        *self.residents.entry(node).or_default().entry(sfc.id).or_default() += 1;
        self.add_route(sfc, position, path);
        Ok(())
    }

    /// Routes the final virtual link from the last request to the end point.
    pub fn connect_end(&mut self, sfc: &SfcInstance, path: Path) -> Result<(), MappingError> {
        let last = sfc.requests.len();
        let prev = self.entry_node(sfc, last).ok_or(MappingError::OutOfOrder { sfc: sfc.id, position: last })?;
        if path.source() != prev || path.target() != sfc.end {
            return Err(MappingError::PathMismatch {
                expected_from: prev,
                expected_to: sfc.end,
                got: (path.source(), path.target()),
            });
        }
        if self.link_paths.contains_key(&(sfc.id, last)) {
            return Err(MappingError::AlreadyMapped { sfc: sfc.id, position: last });
        }
        self.add_route(sfc, last, path);
        Ok(())
    }

    fn add_route(&mut self, sfc: &SfcInstance, vlink: usize, path: Path) {
        let bw = sfc.virtual_links[vlink].bandwidth;
        for l in path.links() {
            *self.link_load.entry(*l).or_insert(0.0) += bw;
        }
        self.link_paths.insert((sfc.id, vlink), path);
    }

    /// Unmaps every request of `sfc`, shrinks the instances it used and
    /// drops its routes. A no-op for an unmapped SFC.
    pub fn release_sfc(&mut self, sfc: &SfcInstance) {
        for r in &sfc.requests {
            let Some(v) = self.request_map.remove(&(sfc.id, r.position)) else {
                continue;
            };
            if let Some(alloc) = self.allocations.get_mut(&v) {
                alloc.add(r.vnf, -r.demand);
                if alloc.is_empty() {
                    self.allocations.remove(&v);
                    self.active.remove(&v);
                }
            }
            if let Some(m) = self.residents.get_mut(&v) {
                if let Some(n) = m.get_mut(&sfc.id) {
                    *n -= 1;
                    if *n == 0 {
                        m.remove(&sfc.id);
                    }
                }
                if m.is_empty() {
                    self.residents.remove(&v);
                }
            }
        }
        for vl in &sfc.virtual_links {
            if let Some(path) = self.link_paths.remove(&(sfc.id, vl.index)) {
                for l in path.links() {
                    if let Some(load) = self.link_load.get_mut(l) {
                        *load -= vl.bandwidth;
                        if *load <= TOLERANCE {
                            self.link_load.remove(l);
                        }
                    }
                }
            }
        }
    }

    /// Whether every request and virtual link of `sfc` is in place.
    pub fn is_complete(&self, sfc: &SfcInstance) -> bool {
        sfc.requests.iter().all(|r| self.request_map.contains_key(&(sfc.id, r.position)))
            && sfc.virtual_links.iter().all(|l| self.link_paths.contains_key(&(sfc.id, l.index)))
    }

    /// Propagation latency of the routed virtual links of `sfc`.
    pub fn path_latency(&self, sfc: SfcId) -> f64 {
        self.link_paths.range((sfc, 0)..=(sfc, usize::MAX)).map(|(_, p)| p.latency()).sum()
    }

    /// Node-induced latency of the mapped requests of `sfc`; infinite if a
    /// hosting node is saturated under the queueing model.
    pub fn sfc_latency_overhead(&self, net: &PhysicalNetwork, sfc: &SfcInstance, model: &LatencyModel) -> f64 {
        self.overhead_with(net, sfc, model, None)
    }

    /// As [`Self::sfc_latency_overhead`], with the allocation of one node
    /// replaced by `over`.
    pub fn overhead_with(
        &self,
        net: &PhysicalNetwork,
        sfc: &SfcInstance,
        model: &LatencyModel,
        over: Option<(NodeId, &NodeAllocation)>,
    ) -> f64 {
        let mut total = 0.0;
        for r in &sfc.requests {
            let Some(v) = self.mapped_node(sfc.id, r.position) else {
                continue;
            };
            let alloc = match over {
                Some((w, a)) if w == v => a,
                _ => self.allocation(v),
            };
            match model.request_latency(alloc, net.node(v), r.vnf) {
                Ok(l) => total += l,
                Err(_) => return f64::INFINITY,
            }
        }
        total
    }

    /// Propagation plus node-induced latency of `sfc`.
    pub fn end_to_end_latency(&self, net: &PhysicalNetwork, sfc: &SfcInstance, model: &LatencyModel) -> f64 {
        self.path_latency(sfc.id) + self.sfc_latency_overhead(net, sfc, model)
    }

    /// Rebuilds an embedding from raw parts, deriving active nodes and link
    /// loads. Paths are keyed by (SFC, virtual link); unknown SFC ids keep
    /// their route but contribute no load.
    pub fn from_parts(
        scenario: &Scenario,
        allocations: BTreeMap<NodeId, NodeAllocation>,
        request_map: BTreeMap<(SfcId, usize), NodeId>,
        link_paths: BTreeMap<(SfcId, usize), Path>,
    ) -> Self {
        let allocations: BTreeMap<_, _> = allocations.into_iter().filter(|(_, a)| !a.is_empty()).collect();
        let active = allocations.keys().copied().collect();
        let mut residents: BTreeMap<NodeId, BTreeMap<SfcId, usize>> = BTreeMap::new();
        for (&(c, _), &v) in &request_map {
            *residents.entry(v).or_default().entry(c).or_default() += 1;
        }
        let mut link_load = BTreeMap::new();
        for (&(c, k), p) in &link_paths {
            let bw = scenario.sfcs.get(c.0).and_then(|s| s.virtual_links.get(k)).map_or(0.0, |l| l.bandwidth);
            for l in p.links() {
                *link_load.entry(*l).or_insert(0.0) += bw;
            }
        }
        Embedding { allocations, request_map, link_paths, active, link_load, residents }
    }

    /// Overwrites the size of one instance without touching mappings or
    /// bookkeeping. Intended for constructing faulty embeddings in tests.
    pub fn force_allocation(&mut self, v: NodeId, f: VnfId, cores: f64) {
        self.allocations.entry(v).or_default().set(f, cores);
        if self.allocations[&v].is_empty() {
            self.allocations.remove(&v);
        }
    }

    /// Replaces one route without updating link loads.
    pub fn force_path(&mut self, sfc: SfcId, vlink: usize, path: Path) {
        self.link_paths.insert((sfc, vlink), path);
    }

    /// Re-points one request mapping without touching instances.
    pub fn force_mapping(&mut self, sfc: SfcId, position: usize, node: NodeId) {
        self.request_map.insert((sfc, position), node);
    }

    pub fn set_active(&mut self, active: BTreeSet<NodeId>) {
        self.active = active;
    }
}
