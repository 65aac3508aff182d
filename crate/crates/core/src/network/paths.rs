use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use super::{LinkId, NodeId, PathError, PhysicalNetwork};

/// A loopless walk between two physical nodes. A path from a node to itself
/// is the node's self-loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    nodes: Vec<NodeId>,
    links: Vec<LinkId>,
    latency: f64,
}

impl Path {
    /// Builds a path from its node sequence. `[v]` and `[v, v]` both denote
    /// the self-loop of `v` (an empty walk if `v` is forwarding-only).
    pub fn from_nodes(net: &PhysicalNetwork, nodes: &[NodeId]) -> Result<Path, PathError> {
        let raw = || nodes.iter().map(|n| n.0).collect::<Vec<_>>();
        if nodes.is_empty() || nodes.iter().any(|n| !net.contains(*n)) {
            return Err(PathError::NotAWalk(raw()));
        }
        if nodes.len() == 1 || (nodes.len() == 2 && nodes[0] == nodes[1]) {
            let v = nodes[0];
            let links: Vec<LinkId> = net.self_loop(v).into_iter().collect();
            return Ok(Path { nodes: vec![v], links, latency: 0.0 });
        }
        let mut links = Vec::with_capacity(nodes.len() - 1);
        let mut latency = 0.0;
        for w in nodes.windows(2) {
            if w[0] == w[1] {
                return Err(PathError::NotAWalk(raw()));
            }
            let l = net.link_between(w[0], w[1]).ok_or_else(|| PathError::NotAWalk(raw()))?;
            latency += net.link(l).latency;
            links.push(l);
        }
        Ok(Path { nodes: nodes.to_vec(), links, latency })
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("path has at least one node")
    }

    /// Visited nodes; a single entry for a self-loop.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    /// Sum of member link latencies in path order (ms).
    pub fn latency(&self) -> f64 {
        self.latency
    }

    pub fn is_self_loop(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Sub-path between positions `from..=to` of the node sequence.
    pub fn slice(&self, net: &PhysicalNetwork, from: usize, to: usize) -> Path {
        Path::from_nodes(net, &self.nodes[from..=to]).expect("sub-walk of a valid path")
    }

    fn order(&self, other: &Path) -> Ordering {
        self.latency.total_cmp(&other.latency).then_with(|| self.nodes.cmp(&other.nodes))
    }
}

#[derive(Debug)]
struct Label {
    latency: f64,
    nodes: Vec<NodeId>,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Label {}
impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.latency.total_cmp(&other.latency).then_with(|| self.nodes.cmp(&other.nodes))
    }
}

/// Dijkstra over non-self-loop links, ties broken by lexicographic node
/// sequence. `banned_nodes` are never entered; `banned_links` never used.
fn dijkstra(
    net: &PhysicalNetwork,
    src: NodeId,
    dst: NodeId,
    banned_nodes: &[bool],
    banned_links: &HashSet<LinkId>,
) -> Option<Vec<NodeId>> {
    let n = net.node_count();
    let mut best: Vec<Option<Label>> = (0..n).map(|_| None).collect();
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Label { latency: 0.0, nodes: vec![src] }));
    while let Some(Reverse(label)) = heap.pop() {
        let v = *label.nodes.last().unwrap();
        if settled[v.0] {
            continue;
        }
        settled[v.0] = true;
        if v == dst {
            return Some(label.nodes);
        }
        for &l in net.out_links(v) {
            if banned_links.contains(&l) {
                continue;
            }
            let w = net.link(l).to;
            if settled[w.0] || banned_nodes[w.0] {
                continue;
            }
            let mut nodes = label.nodes.clone();
            nodes.push(w);
            let cand = Label { latency: label.latency + net.link(l).latency, nodes };
            let improves = match &best[w.0] {
                Some(b) => cand < *b,
                None => true,
            };
            if improves {
                best[w.0] = Some(Label { latency: cand.latency, nodes: cand.nodes.clone() });
                heap.push(Reverse(cand));
            }
        }
    }
    None
}

impl PhysicalNetwork {
    /// Minimum-latency path `a -> b`; the self-loop when `a == b`.
    pub fn shortest_path(&self, a: NodeId, b: NodeId) -> Result<Path, PathError> {
        for v in [a, b] {
            if !self.contains(v) {
                return Err(PathError::UnknownNode(v));
            }
        }
        if a == b {
            return Path::from_nodes(self, &[a]);
        }
        let banned = vec![false; self.node_count()];
        let nodes = dijkstra(self, a, b, &banned, &HashSet::new()).ok_or(PathError::Unreachable { from: a, to: b })?;
        Path::from_nodes(self, &nodes)
    }

    /// Up to `k` loopless paths `a -> b` in ascending latency order.
    pub fn k_shortest_paths(&self, a: NodeId, b: NodeId, k: usize) -> Result<Vec<Path>, PathError> {
        Ok(self.paths_between(a, b)?.take(k).collect())
    }

    /// Lazy enumeration of loopless paths `a -> b` in ascending
    /// (latency, node sequence) order.
    pub fn paths_between(&self, a: NodeId, b: NodeId) -> Result<KShortestPaths<'_>, PathError> {
        for v in [a, b] {
            if !self.contains(v) {
                return Err(PathError::UnknownNode(v));
            }
        }
        Ok(KShortestPaths {
            net: self,
            source: a,
            target: b,
            accepted: Vec::new(),
            candidates: Vec::new(),
            exhausted: false,
        })
    }

    /// Lowest-latency loopless path `a -> b` visiting at least one NFV node,
    /// searching at most `k_max` paths.
    pub fn first_nfv_path(&self, a: NodeId, b: NodeId, k_max: usize) -> Result<Path, PathError> {
        let mut searched = 0;
        for p in self.paths_between(a, b)?.take(k_max) {
            searched += 1;
            if p.nodes().iter().any(|v| self.node(*v).is_nfv()) {
                return Ok(p);
            }
        }
        Err(PathError::NoNfvPath { from: a, to: b, searched })
    }
}

/// Yen's algorithm as an iterator.
pub struct KShortestPaths<'a> {
    net: &'a PhysicalNetwork,
    source: NodeId,
    target: NodeId,
    accepted: Vec<Path>,
    candidates: Vec<Path>,
    exhausted: bool,
}

impl KShortestPaths<'_> {
    fn spur_candidates(&mut self) {
        let net = self.net;
        let last = self.accepted.last().expect("called after the first path");
        let n = net.node_count();
        for i in 0..last.nodes.len() - 1 {
            let root = &last.nodes[..=i];
            let spur = root[i];
            let mut banned_links = HashSet::new();
            for p in &self.accepted {
                if p.nodes.len() > i + 1 && &p.nodes[..=i] == root {
                    banned_links.insert(p.links[i]);
                }
            }
            let mut banned_nodes = vec![false; n];
            for v in &root[..i] {
                banned_nodes[v.0] = true;
            }
            let Some(spur_nodes) = dijkstra(net, spur, self.target, &banned_nodes, &banned_links) else {
                continue;
            };
            let mut full = root[..i].to_vec();
            full.extend_from_slice(&spur_nodes);
            let known = self.accepted.iter().chain(self.candidates.iter()).any(|p| p.nodes == full);
            if !known {
                let path = Path::from_nodes(net, &full).expect("spur path uses existing links");
                self.candidates.push(path);
            }
        }
    }
}

impl Iterator for KShortestPaths<'_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        if self.exhausted {
            return None;
        }
        if self.accepted.is_empty() {
            let first = self.net.shortest_path(self.source, self.target).ok();
            match first {
                Some(p) => {
                    if self.source == self.target {
                        self.exhausted = true;
                    }
                    self.accepted.push(p.clone());
                    return Some(p);
                }
                None => {
                    self.exhausted = true;
                    return None;
                }
            }
        }
        self.spur_candidates();
        let best = (0..self.candidates.len()).min_by(|&x, &y| self.candidates[x].order(&self.candidates[y]));
        match best {
            Some(i) => {
                let p = self.candidates.swap_remove(i);
                self.accepted.push(p.clone());
                Some(p)
            }
            None => {
                self.exhausted = true;
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::PhysicalNode;

    fn node(i: usize, cores: f64) -> PhysicalNode {
        PhysicalNode {
            id: NodeId(i),
            name: format!("n{i}"),
            cores,
            csw_latency: 0.0,
            csw_processing: 0.0,
            up_latency: 0.0,
            up_processing: 0.0,
        }
    }

    fn undirected(n: usize, cores: &[f64], edges: &[(usize, usize, f64)]) -> PhysicalNetwork {
        let nodes = (0..n).map(|i| node(i, cores[i])).collect();
        let links = edges.iter().flat_map(|&(a, b, l)| [(a, b, l, f64::INFINITY), (b, a, l, f64::INFINITY)]).collect();
        PhysicalNetwork::new(nodes, links).unwrap()
    }

    fn triangle() -> PhysicalNetwork {
        // 0-1: 3, 1-2: 3, 0-2: 10
        undirected(3, &[16.0; 3], &[(0, 1, 3.0), (1, 2, 3.0), (0, 2, 10.0)])
    }

    fn ids(p: &Path) -> Vec<usize> {
        p.nodes().iter().map(|n| n.0).collect()
    }

    #[test]
    fn self_path_is_the_self_loop() {
        let net = triangle();
        let p = net.shortest_path(NodeId(1), NodeId(1)).unwrap();
        assert_eq!(p.latency(), 0.0);
        assert_eq!(p.links(), &[net.self_loop(NodeId(1)).unwrap()]);
        assert!(p.is_self_loop());
    }

    #[test]
    fn triangle_prefers_two_hops() {
        let net = triangle();
        let p = net.shortest_path(NodeId(0), NodeId(2)).unwrap();
        assert_eq!(ids(&p), vec![0, 1, 2]);
        assert_eq!(p.latency(), 6.0);
    }

    #[test]
    fn line_graph() {
        let net = undirected(3, &[16.0; 3], &[(0, 1, 5.0), (1, 2, 5.0)]);
        assert_eq!(net.shortest_path(NodeId(0), NodeId(2)).unwrap().latency(), 10.0);
        assert_eq!(net.k_shortest_paths(NodeId(0), NodeId(2), 3).unwrap().len(), 1);
    }

    #[test]
    fn triangle_two_shortest() {
        let net = triangle();
        let ps = net.k_shortest_paths(NodeId(0), NodeId(2), 2).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!((ids(&ps[0]), ps[0].latency()), (vec![0, 1, 2], 6.0));
        assert_eq!((ids(&ps[1]), ps[1].latency()), (vec![0, 2], 10.0));
        let one = net.k_shortest_paths(NodeId(0), NodeId(2), 1).unwrap();
        assert_eq!(one, vec![net.shortest_path(NodeId(0), NodeId(2)).unwrap()]);
    }

    #[test]
    fn ties_break_on_node_sequence() {
        // Square 0-1-3 and 0-2-3 with equal latency.
        let net = undirected(4, &[16.0; 4], &[(0, 2, 1.0), (2, 3, 1.0), (0, 1, 1.0), (1, 3, 1.0)]);
        let ps = net.k_shortest_paths(NodeId(0), NodeId(3), 5).unwrap();
        assert_eq!(ids(&ps[0]), vec![0, 1, 3]);
        assert_eq!(ids(&ps[1]), vec![0, 2, 3]);
        assert_eq!(ps.len(), 2);
    }

    #[test]
    fn nfv_path_detours_through_nfv_node() {
        // a=0, x=1 (only NFV node), b=2; direct 0-2 is cheaper.
        let net = undirected(3, &[0.0, 16.0, 0.0], &[(0, 1, 4.0), (1, 2, 4.0), (0, 2, 5.0)]);
        let p = net.first_nfv_path(NodeId(0), NodeId(2), 64).unwrap();
        assert_eq!(ids(&p), vec![0, 1, 2]);
    }

    #[test]
    fn nfv_path_with_nfv_endpoint_is_shortest() {
        let net = undirected(3, &[16.0, 0.0, 0.0], &[(0, 1, 4.0), (1, 2, 4.0), (0, 2, 5.0)]);
        let p = net.first_nfv_path(NodeId(0), NodeId(2), 64).unwrap();
        assert_eq!(p, net.shortest_path(NodeId(0), NodeId(2)).unwrap());
    }

    #[test]
    fn nfv_path_exhaustion() {
        let net = undirected(3, &[0.0; 3], &[(0, 1, 4.0), (1, 2, 4.0)]);
        assert!(matches!(net.first_nfv_path(NodeId(0), NodeId(2), 64), Err(PathError::NoNfvPath { searched: 1, .. })));
    }

    #[test]
    fn from_nodes_rejects_missing_links() {
        let net = undirected(3, &[16.0; 3], &[(0, 1, 5.0), (1, 2, 5.0)]);
        assert!(Path::from_nodes(&net, &[NodeId(0), NodeId(2)]).is_err());
        assert!(Path::from_nodes(&net, &[NodeId(0), NodeId(0), NodeId(1)]).is_err());
    }
}
