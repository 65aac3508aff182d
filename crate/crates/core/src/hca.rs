//! Two-phase greedy SFC embedding.
//!
//! SFCs are embedded one at a time in ascending order of their latency
//! bound. Phase 1 walks the chain and, for each request, grows the nearest
//! existing instance of the requested VNF or opens a new instance on the
//! fullest node that still fits. If the resulting chain misses its latency
//! bound, phase 2 discards it and places the whole chain on a single node
//! of a latency-shortest path between the endpoints.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use log::debug;

use crate::costs::{self, LatencyModel, NodeAllocation};
use crate::embedding::{Embedding, TOLERANCE};
use crate::network::{NodeId, Path, PhysicalNetwork};
use crate::scenario::Scenario;
use crate::services::{SfcId, SfcInstance, VnfId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcaConfig {
    pub mode: LatencyModel,
    /// Number of endpoint-to-endpoint paths phase 2 examines.
    pub k_max: usize,
    /// Reject phase-1 steps that already break the SFC's own bound.
    pub self_check: bool,
    /// Restrict phase-2 hosts to nodes without instances.
    pub phase2_inactive_only: bool,
    /// Reserved for randomized tie-breaking; every tie is currently broken
    /// by id, so the value has no effect.
    pub rng_seed: u64,
}

impl Default for HcaConfig {
    fn default() -> Self {
        HcaConfig { mode: LatencyModel::Sharing, k_max: 64, self_check: true, phase2_inactive_only: false, rng_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcaStatus {
    Success,
    /// Embedding stopped at this SFC.
    Infeasible(SfcId),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HcaStats {
    pub scale_ups_attempted: usize,
    pub scale_ups_succeeded: usize,
    pub new_instances: usize,
    pub phase2_activations: usize,
    pub runtime: Duration,
}

#[derive(Debug, Clone)]
pub struct HcaOutcome {
    pub status: HcaStatus,
    /// Complete only on success; otherwise holds the SFCs embedded before
    /// the failing one.
    pub embedding: Embedding,
    pub per_sfc_latency: BTreeMap<SfcId, f64>,
    /// SFC ids in processing order.
    pub order: Vec<SfcId>,
    pub stats: HcaStats,
}

impl HcaOutcome {
    pub fn is_success(&self) -> bool {
        self.status == HcaStatus::Success
    }

    pub fn active_nodes(&self) -> usize {
        self.embedding.active_count()
    }

    pub fn mean_latency(&self) -> f64 {
        if self.per_sfc_latency.is_empty() {
            return 0.0;
        }
        self.per_sfc_latency.values().sum::<f64>() / self.per_sfc_latency.len() as f64
    }
}

/// Why a candidate host was turned down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    Capacity,
    /// An already-embedded SFC would miss its bound.
    ResidentLatency(SfcId),
    /// The SFC being embedded would already miss its own bound.
    OwnLatency,
}

/// Processing order: ascending latency bound, then id.
pub fn processing_order(scenario: &Scenario) -> Vec<SfcId> {
    let mut ids: Vec<SfcId> = scenario.sfcs.iter().map(|s| s.id).collect();
    ids.sort_by(|a, b| {
        let (x, y) = (scenario.sfc(*a), scenario.sfc(*b));
        x.max_latency().total_cmp(&y.max_latency()).then(a.cmp(b))
    });
    ids
}

pub fn run(scenario: &Scenario, config: &HcaConfig) -> HcaOutcome {
    assert!(config.k_max >= 1, "k_max must be at least 1");
    let started = Instant::now();
    let mut state = State {
        scenario,
        net: &scenario.network,
        config,
        emb: Embedding::new(),
        sp: HashMap::new(),
        stats: HcaStats::default(),
    };
    let order = processing_order(scenario);
    let mut status = HcaStatus::Success;
    let mut per_sfc_latency = BTreeMap::new();
    for &id in &order {
        let sfc = scenario.sfc(id);
        if !state.embed(sfc) {
            debug!("sfc {id} ({}) could not be embedded", sfc.template.name);
            status = HcaStatus::Infeasible(id);
            break;
        }
        per_sfc_latency.insert(id, state.emb.end_to_end_latency(state.net, sfc, &config.mode));
    }
    // Later embeddings may raise the latency of earlier ones (within bounds).
    for (id, lat) in per_sfc_latency.iter_mut() {
        *lat = state.emb.end_to_end_latency(state.net, scenario.sfc(*id), &config.mode);
    }
    let mut stats = state.stats;
    stats.runtime = started.elapsed();
    HcaOutcome { status, embedding: state.emb, per_sfc_latency, order, stats }
}

struct State<'a> {
    scenario: &'a Scenario,
    net: &'a PhysicalNetwork,
    config: &'a HcaConfig,
    emb: Embedding,
    sp: HashMap<(NodeId, NodeId), Option<Path>>,
    stats: HcaStats,
}

enum Phase1 {
    Mapped,
    /// No host found; `self_rejected` is set if the SFC's own bound ruled
    /// out at least one otherwise feasible host.
    Failed {
        self_rejected: bool,
    },
}

impl State<'_> {
    fn shortest(&mut self, a: NodeId, b: NodeId) -> Option<Path> {
        let net = self.net;
        self.sp.entry((a, b)).or_insert_with(|| net.shortest_path(a, b).ok()).clone()
    }

    fn embed(&mut self, sfc: &SfcInstance) -> bool {
        let bound = sfc.max_latency() + TOLERANCE;
        match self.phase1(sfc) {
            Phase1::Mapped => {
                if self.emb.end_to_end_latency(self.net, sfc, &self.config.mode) <= bound {
                    return true;
                }
            }
            Phase1::Failed { self_rejected: false } => {
                self.emb.release_sfc(sfc);
                return false;
            }
            Phase1::Failed { self_rejected: true } => {}
        }
        self.emb.release_sfc(sfc);
        self.stats.phase2_activations += 1;
        self.phase2(sfc)
    }

    /// Checks whether `v` may take `alloc` as its new allocation, given
    /// that `sfc` has routed `own_path_latency` so far and will run its
    /// requests in `own` on `v` (in addition to those already mapped).
    fn admit(
        &self,
        sfc: &SfcInstance,
        v: NodeId,
        alloc: &NodeAllocation,
        own: &[VnfId],
        own_path_latency: f64,
    ) -> Result<(), Rejection> {
        let node = self.net.node(v);
        if costs::residual_capacity(alloc, node) < -TOLERANCE {
            return Err(Rejection::Capacity);
        }
        for other in self.emb.residents(v) {
            if other == sfc.id {
                continue;
            }
            let s = self.scenario.sfc(other);
            let lat =
                self.emb.path_latency(other) + self.emb.overhead_with(self.net, s, &self.config.mode, Some((v, alloc)));
            if !(lat <= s.max_latency() + TOLERANCE) {
                return Err(Rejection::ResidentLatency(other));
            }
        }
        if self.config.self_check {
            let mut lat = own_path_latency + self.emb.overhead_with(self.net, sfc, &self.config.mode, Some((v, alloc)));
            for &f in own {
                lat += self.config.mode.request_latency(alloc, node, f).unwrap_or(f64::INFINITY);
            }
            if !(lat <= sfc.max_latency() + TOLERANCE) {
                return Err(Rejection::OwnLatency);
            }
        }
        Ok(())
    }

    fn phase1(&mut self, sfc: &SfcInstance) -> Phase1 {
        let mut current = sfc.start;
        let mut self_rejected = false;
        for r in &sfc.requests {
            let routed = self.emb.path_latency(sfc.id);

            // Grow the nearest existing instance.
            let mut instances: Vec<(f64, NodeId, Path)> = Vec::new();
            let hosts: Vec<NodeId> = self.emb.instances_of(r.vnf).collect();
            for v in hosts {
                if let Some(p) = self.shortest(current, v) {
                    instances.push((p.latency(), v, p));
                }
            }
            instances.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut chosen = None;
            for (lat, v, p) in instances {
                self.stats.scale_ups_attempted += 1;
                let mut grown = self.emb.allocation(v).clone();
                grown.add(r.vnf, r.demand);
                match self.admit(sfc, v, &grown, &[r.vnf], routed + lat) {
                    Ok(()) => {
                        self.stats.scale_ups_succeeded += 1;
                        chosen = Some((v, p));
                        break;
                    }
                    Err(Rejection::OwnLatency) => self_rejected = true,
                    Err(_) => {}
                }
            }

            // Open a new instance on the fullest node that fits.
            if chosen.is_none() {
                let mut nodes: Vec<(f64, NodeId, Path)> = Vec::new();
                let candidates: Vec<NodeId> =
                    self.net.nfv_nodes().filter(|v| !self.emb.allocation(*v).contains(r.vnf)).collect();
                for v in candidates {
                    if let Some(p) = self.shortest(current, v) {
                        let residual = costs::residual_capacity(self.emb.allocation(v), self.net.node(v));
                        nodes.push((residual, v, p));
                    }
                }
                nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for (_, v, p) in nodes {
                    let mut grown = self.emb.allocation(v).clone();
                    grown.add(r.vnf, r.demand);
                    match self.admit(sfc, v, &grown, &[r.vnf], routed + p.latency()) {
                        Ok(()) => {
                            self.stats.new_instances += 1;
                            chosen = Some((v, p));
                            break;
                        }
                        Err(Rejection::OwnLatency) => self_rejected = true,
                        Err(_) => {}
                    }
                }
            }

            let Some((v, p)) = chosen else {
                return Phase1::Failed { self_rejected };
            };
            if self.emb.apply_mapping(self.net, sfc, r.position, v, p).is_err() {
                return Phase1::Failed { self_rejected };
            }
            current = v;
        }
        let Some(p) = self.shortest(current, sfc.end) else {
            return Phase1::Failed { self_rejected };
        };
        self.emb.connect_end(sfc, p).expect("final link follows the last request");
        Phase1::Mapped
    }

    fn phase2(&mut self, sfc: &SfcInstance) -> bool {
        let net = self.net;
        let Ok(paths) = net.paths_between(sfc.start, sfc.end) else {
            return false;
        };
        let chain: Vec<VnfId> = sfc.requests.iter().map(|r| r.vnf).collect();
        for path in paths.take(self.config.k_max) {
            let mut best: Option<(f64, NodeId, usize)> = None;
            for (i, &v) in path.nodes().iter().enumerate() {
                let node = net.node(v);
                if !node.is_nfv() || (self.config.phase2_inactive_only && !self.emb.allocation(v).is_empty()) {
                    continue;
                }
                let mut grown = self.emb.allocation(v).clone();
                for r in &sfc.requests {
                    grown.add(r.vnf, r.demand);
                }
                if self.admit_whole(sfc, v, &grown, &chain, path.latency()).is_err() {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((cores, w, _)) => node.cores > cores || (node.cores == cores && v < w),
                };
                if better {
                    best = Some((node.cores, v, i));
                }
            }
            let Some((_, v, i)) = best else { continue };
            let last = path.nodes().len() - 1;
            for r in &sfc.requests {
                let hop = if r.position == 0 { path.slice(net, 0, i) } else { path.slice(net, i, i) };
                self.emb.apply_mapping(net, sfc, r.position, v, hop).expect("host admitted the whole chain");
            }
            self.emb.connect_end(sfc, path.slice(net, i, last)).expect("final link follows the last request");
            let lat = self.emb.end_to_end_latency(net, sfc, &self.config.mode);
            if lat <= sfc.max_latency() + TOLERANCE {
                return true;
            }
            self.emb.release_sfc(sfc);
            return false;
        }
        false
    }

    /// Host check for a whole chain; the own-latency test is always on
    /// here since the full route is known.
    fn admit_whole(
        &self,
        sfc: &SfcInstance,
        v: NodeId,
        alloc: &NodeAllocation,
        chain: &[VnfId],
        path_latency: f64,
    ) -> Result<(), Rejection> {
        let node = self.net.node(v);
        self.admit(sfc, v, alloc, &[], 0.0).or_else(|e| if e == Rejection::OwnLatency { Ok(()) } else { Err(e) })?;
        let mut lat = path_latency;
        for &f in chain {
            lat += self.config.mode.request_latency(alloc, node, f).unwrap_or(f64::INFINITY);
        }
        if lat <= sfc.max_latency() + TOLERANCE {
            Ok(())
        } else {
            Err(Rejection::OwnLatency)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::validate;
    use crate::network::PhysicalNode;
    use crate::scenario::SfcEntry;
    use crate::services::{Catalog, SfcTemplate, VnfType};

    fn node(i: usize, cores: f64, omega: f64, kappa: f64) -> PhysicalNode {
        PhysicalNode {
            id: NodeId(i),
            name: format!("n{i}"),
            cores,
            csw_latency: omega,
            csw_processing: 0.0,
            up_latency: kappa,
            up_processing: 0.0,
        }
    }

    fn bidir(links: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64, f64)> {
        links.iter().flat_map(|&(a, b, l)| [(a, b, l, f64::INFINITY), (b, a, l, f64::INFINITY)]).collect()
    }

    fn catalog(vnfs: &[(&str, f64)], templates: Vec<(&str, Vec<usize>, f64)>) -> Catalog {
        let vnfs = vnfs
            .iter()
            .enumerate()
            .map(|(i, (n, p))| VnfType { id: VnfId(i), name: n.to_string(), proc_per_user: *p })
            .collect();
        let templates = templates
            .into_iter()
            .map(|(n, chain, phi)| SfcTemplate {
                name: n.into(),
                bw_per_user: vec![1.0; chain.len() + 1],
                chain: chain.into_iter().map(VnfId).collect(),
                max_latency: phi,
            })
            .collect();
        Catalog::new(vnfs, templates).unwrap()
    }

    fn entry(t: &str, s: usize, e: usize, users: u32) -> SfcEntry {
        SfcEntry { template: t.into(), start: s, end: e, users }
    }

    #[test]
    fn single_colocated_sfc() {
        let net =
            PhysicalNetwork::new(vec![node(0, 4.0, 0.0, 0.0), node(1, 4.0, 0.0, 0.0)], bidir(&[(0, 1, 1.0)])).unwrap();
        let cat = catalog(&[("A", 0.1), ("B", 0.1)], vec![("S", vec![0, 1], 10.0)]);
        let s = Scenario::new(net, cat, &[entry("S", 0, 0, 1)]).unwrap();
        let out = run(&s, &HcaConfig::default());
        assert!(out.is_success());
        assert_eq!(out.active_nodes(), 1);
        assert_eq!(out.per_sfc_latency[&SfcId(0)], 0.0);
        assert!(validate(&out.embedding, &s, &LatencyModel::Sharing).ok());
    }

    #[test]
    fn shared_instance_is_scaled_up() {
        let net = PhysicalNetwork::new(
            vec![node(0, 0.0, 0.0, 0.0), node(1, 4.0, 0.0, 0.0), node(2, 4.0, 0.0, 0.0)],
            bidir(&[(0, 1, 1.0), (0, 2, 2.0)]),
        )
        .unwrap();
        let cat = catalog(&[("A", 0.1)], vec![("S", vec![0], 10.0)]);
        let s = Scenario::new(net, cat, &[entry("S", 0, 0, 1), entry("S", 0, 0, 2)]).unwrap();
        let out = run(&s, &HcaConfig::default());
        assert!(out.is_success());
        assert_eq!(out.active_nodes(), 1);
        assert_eq!(out.stats.new_instances, 1);
        assert_eq!(out.stats.scale_ups_succeeded, 1);
        assert!((out.embedding.allocation(NodeId(1)).get(VnfId(0)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn scale_up_that_breaks_a_resident_is_skipped() {
        // T runs one process on node 1 at 1 ms, exactly its bound. Growing
        // that instance for L crosses a core boundary and would put T at 2 ms.
        let net = PhysicalNetwork::new(
            vec![node(0, 0.0, 0.0, 0.0), node(1, 8.0, 1.0, 0.0), node(2, 8.0, 1.0, 0.0)],
            bidir(&[(0, 1, 0.0), (0, 2, 0.0)]),
        )
        .unwrap();
        let cat = catalog(&[("A", 0.5)], vec![("T", vec![0], 1.0), ("L", vec![0], 100.0)]);
        let s = Scenario::new(net, cat, &[entry("T", 0, 0, 1), entry("L", 0, 0, 2)]).unwrap();
        let out = run(&s, &HcaConfig::default());
        assert!(out.is_success());
        assert_eq!(out.order, vec![SfcId(0), SfcId(1)]);
        assert_eq!(out.embedding.mapped_node(SfcId(0), 0), Some(NodeId(1)));
        assert_eq!(out.embedding.mapped_node(SfcId(1), 0), Some(NodeId(2)));
        assert!(out.stats.scale_ups_attempted >= 1);
        assert_eq!(out.stats.scale_ups_succeeded, 0);
        assert!(validate(&out.embedding, &s, &LatencyModel::Sharing).ok());
    }

    #[test]
    fn scale_up_within_one_core_is_accepted() {
        let net = PhysicalNetwork::new(vec![node(0, 8.0, 1.0, 1.0)], vec![]).unwrap();
        let cat = catalog(&[("A", 0.1)], vec![("T", vec![0], 2.0)]);
        let s = Scenario::new(net, cat, &[entry("T", 0, 0, 2), entry("T", 0, 0, 1)]).unwrap();
        let out = run(&s, &HcaConfig::default());
        assert!(out.is_success());
        assert_eq!(out.per_sfc_latency[&SfcId(0)], 2.0);
    }

    #[test]
    fn phase2_after_detour() {
        // Node 3 is the fullest node once Early lives there, so phase 1
        // sends the tight SFC on a 20 ms detour and it misses its bound.
        let net = PhysicalNetwork::new(
            vec![node(0, 0.0, 0.0, 0.0), node(1, 4.0, 0.0, 0.0), node(2, 0.0, 0.0, 0.0), node(3, 1.0, 0.0, 0.0)],
            bidir(&[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 20.0)]),
        )
        .unwrap();
        let cat = catalog(&[("A", 0.1), ("B", 0.1)], vec![("Early", vec![1], 5.0), ("Tight", vec![0, 1], 10.0)]);
        let s = Scenario::new(net, cat, &[entry("Early", 3, 3, 1), entry("Tight", 0, 2, 1)]).unwrap();
        let config = HcaConfig { self_check: false, ..HcaConfig::default() };
        let out = run(&s, &config);
        assert!(out.is_success(), "{:?}", out.status);
        assert_eq!(out.stats.phase2_activations, 1);
        assert_eq!(out.embedding.mapped_node(SfcId(1), 0), Some(NodeId(1)));
        assert_eq!(out.embedding.mapped_node(SfcId(1), 1), Some(NodeId(1)));
        assert_eq!(out.per_sfc_latency[&SfcId(1)], 2.0);
        assert!(validate(&out.embedding, &s, &LatencyModel::Sharing).ok());

        // With the own-bound check the detour is refused up front and the
        // outcome is the same.
        let checked = run(&s, &HcaConfig::default());
        assert!(checked.is_success());
        assert_eq!(checked.embedding, out.embedding);
    }

    #[test]
    fn bound_below_propagation_is_infeasible() {
        let net =
            PhysicalNetwork::new(vec![node(0, 4.0, 0.0, 0.0), node(1, 4.0, 0.0, 0.0)], bidir(&[(0, 1, 5.0)])).unwrap();
        let cat = catalog(&[("A", 0.1)], vec![("S", vec![0], 4.0)]);
        let s = Scenario::new(net, cat, &[entry("S", 0, 1, 1)]).unwrap();
        assert_eq!(run(&s, &HcaConfig::default()).status, HcaStatus::Infeasible(SfcId(0)));
    }

    #[test]
    fn demand_beyond_total_capacity_is_infeasible() {
        let net =
            PhysicalNetwork::new(vec![node(0, 2.0, 0.0, 0.0), node(1, 2.0, 0.0, 0.0)], bidir(&[(0, 1, 1.0)])).unwrap();
        let cat = catalog(&[("A", 1.0)], vec![("S", vec![0], 100.0)]);
        let s = Scenario::new(net, cat, &[entry("S", 0, 1, 5)]).unwrap();
        assert!(!run(&s, &HcaConfig::default()).is_success());
    }

    #[test]
    fn fixture_run_is_valid_and_conserves_demand() {
        let net = crate::fixtures::internet2();
        let cat = crate::services::default_catalog();
        let entries: Vec<SfcEntry> = ["CloudGaming", "VoIP", "VideoStreaming", "WebService"]
            .iter()
            .enumerate()
            .map(|(i, t)| entry(t, i, 9 - i, 100))
            .collect();
        let s = Scenario::new(net, cat, &entries).unwrap();
        let out = run(&s, &HcaConfig::default());
        assert!(out.is_success());
        assert!(validate(&out.embedding, &s, &LatencyModel::Sharing).ok());
        let placed: f64 = out.embedding.allocations().values().map(|a| a.total()).sum();
        let demanded: f64 = s.sfcs.iter().flat_map(|c| c.requests.iter()).map(|r| r.demand).sum();
        assert!((placed - demanded).abs() < 1e-9);
        let phis: Vec<f64> = out.order.iter().map(|c| s.sfc(*c).max_latency()).collect();
        assert!(phis.windows(2).all(|w| w[0] <= w[1]));
    }
}
