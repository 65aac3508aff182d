//! Exhaustive branch-and-bound for tiny instances, used as a reference
//! optimum for the placement model under the sharing latency model.

use thiserror::Error;

use crate::costs::LatencyModel;
use crate::embedding::{Embedding, TOLERANCE};
use crate::network::{NodeId, Path, PathError};
use crate::scenario::Scenario;
use crate::services::SfcInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    pub max_nfv_nodes: usize,
    pub max_requests: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits { max_nfv_nodes: 5, max_requests: 8 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("instance too large for exhaustive search: {what} = {got} exceeds {limit}")]
    LimitExceeded { what: &'static str, got: usize, limit: usize },
    #[error("link {from} -> {to} has finite bandwidth; the exact search assumes unconstrained links")]
    FiniteBandwidth { from: NodeId, to: NodeId },
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub status: ExactStatus,
    /// Number of active nodes; `None` when infeasible.
    pub objective: Option<usize>,
    pub embedding: Option<Embedding>,
    /// Search-tree nodes visited.
    pub explored: u64,
}

struct Search<'a> {
    scenario: &'a Scenario,
    nfv: Vec<NodeId>,
    /// Shortest-path routes between every node pair.
    routes: Vec<Vec<Path>>,
    /// (SFC index, position) in processing order.
    order: Vec<(usize, usize)>,
    best: Option<(usize, Embedding)>,
    explored: u64,
}

impl Search<'_> {
    fn route(&self, a: NodeId, b: NodeId) -> &Path {
        &self.routes[a.0][b.0]
    }

    /// Lower bound on the final end-to-end latency of `sfc`: routed links,
    /// the direct remainder to the end point and the current node latency,
    /// which can only grow as instances grow.
    fn latency_bound(&self, emb: &Embedding, sfc: &SfcInstance) -> f64 {
        let last = (0..sfc.requests.len()).rev().find_map(|p| emb.mapped_node(sfc.id, p).map(|v| (p, v)));
        let Some((p, v)) = last else {
            return self.route(sfc.start, sfc.end).latency();
        };
        let tail = if p + 1 == sfc.requests.len() { 0.0 } else { self.route(v, sfc.end).latency() };
        emb.path_latency(sfc.id) + tail + emb.sfc_latency_overhead(&self.scenario.network, sfc, &LatencyModel::Sharing)
    }

    fn dfs(&mut self, depth: usize, emb: Embedding) {
        self.explored += 1;
        if let Some((best, _)) = &self.best {
            if emb.active_count() >= *best {
                return;
            }
        }
        let net = &self.scenario.network;
        let sfcs = &self.scenario.sfcs;
        if sfcs.iter().any(|s| self.latency_bound(&emb, s) > s.max_latency() + TOLERANCE) {
            return;
        }
        let Some(&(ci, pos)) = self.order.get(depth) else {
            // Every chain is closed; the bound above is now exact.
            self.best = Some((emb.active_count(), emb));
            return;
        };
        let sfc = &sfcs[ci];
        let prev = if pos == 0 { sfc.start } else { emb.mapped_node(sfc.id, pos - 1).expect("mapped in order") };
        for i in 0..self.nfv.len() {
            let v = self.nfv[i];
            let mut next = emb.clone();
            if next.apply_mapping(net, sfc, pos, v, self.route(prev, v).clone()).is_err() {
                continue;
            }
            if pos + 1 == sfc.requests.len() {
                next.connect_end(sfc, self.route(v, sfc.end).clone()).expect("end route matches");
            }
            self.dfs(depth + 1, next);
        }
    }
}

/// Minimum number of active nodes over all request-to-node assignments.
/// Routes follow shortest paths, which is without loss of generality when
/// no link limits bandwidth.
pub fn solve_exact(scenario: &Scenario, limits: &ExactLimits) -> Result<ExactSolution, ExactError> {
    let net = &scenario.network;
    let nfv: Vec<NodeId> = net.nfv_nodes().collect();
    if nfv.len() > limits.max_nfv_nodes {
        return Err(ExactError::LimitExceeded { what: "NFV nodes", got: nfv.len(), limit: limits.max_nfv_nodes });
    }
    let requests = scenario.request_count();
    if requests > limits.max_requests {
        return Err(ExactError::LimitExceeded { what: "requests", got: requests, limit: limits.max_requests });
    }
    if let Some(l) = net.links().iter().find(|l| !l.is_self_loop() && l.bandwidth.is_finite()) {
        return Err(ExactError::FiniteBandwidth { from: l.from, to: l.to });
    }
    let ids: Vec<NodeId> = net.node_ids().collect();
    let mut routes = Vec::with_capacity(ids.len());
    for &a in &ids {
        let mut row = Vec::with_capacity(ids.len());
        for &b in &ids {
            row.push(net.shortest_path(a, b)?);
        }
        routes.push(row);
    }
    let order =
        scenario.sfcs.iter().enumerate().flat_map(|(ci, s)| (0..s.requests.len()).map(move |p| (ci, p))).collect();
    let mut search = Search { scenario, nfv, routes, order, best: None, explored: 0 };
    search.dfs(0, Embedding::new());
    Ok(match search.best {
        Some((objective, emb)) => ExactSolution {
            status: ExactStatus::Optimal,
            objective: Some(objective),
            embedding: Some(emb),
            explored: search.explored,
        },
        None => ExactSolution {
            status: ExactStatus::Infeasible,
            objective: None,
            embedding: None,
            explored: search.explored,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::two_node;
    use super::*;
    use crate::embedding::validate;

    #[test]
    fn single_request_uses_one_node() {
        let s = two_node(0.4, 1.75, 10.0);
        let sol = solve_exact(&s, &ExactLimits::default()).unwrap();
        assert_eq!(sol.status, ExactStatus::Optimal);
        assert_eq!(sol.objective, Some(1));
        let emb = sol.embedding.unwrap();
        assert!(validate(&emb, &s, &LatencyModel::Sharing).ok());
    }

    #[test]
    fn tight_bound_is_infeasible() {
        // 3 ms of propagation alone exceeds the bound.
        let s = two_node(0.0, 0.0, 2.5);
        let sol = solve_exact(&s, &ExactLimits::default()).unwrap();
        assert_eq!(sol.status, ExactStatus::Infeasible);
        assert!(sol.embedding.is_none());
    }

    #[test]
    fn limits_are_enforced() {
        let s = two_node(0.0, 0.0, 10.0);
        let err = solve_exact(&s, &ExactLimits { max_nfv_nodes: 1, max_requests: 8 }).unwrap_err();
        assert!(matches!(err, ExactError::LimitExceeded { what: "NFV nodes", .. }));
        let err = solve_exact(&s, &ExactLimits { max_nfv_nodes: 5, max_requests: 0 }).unwrap_err();
        assert!(matches!(err, ExactError::LimitExceeded { what: "requests", .. }));
    }
}
