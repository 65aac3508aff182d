//! Processing-resource sharing costs.
//!
//! Context switching is charged per process on a node, where a VNF instance
//! of size `c` runs `ceil(c)` processes. Upscaling is charged per instance on
//! the `ceil(c)` cores its load balancer spreads traffic over. Both have a
//! latency component (ms) and a processing component (cores).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{PhysicalNetwork, PhysicalNode};
use crate::services::VnfId;

/// Allocation sizes within this distance above an integer count as that
/// integer when taking the ceiling; repeated `+= pi` / `-= pi` drifts.
pub const CEIL_TOLERANCE: f64 = 1e-9;

/// Utilization at or above which the queueing latency model is rejected.
pub const SOTA_UTILIZATION_CAP: f64 = 0.999;

/// Number of processes (cores touched) by an instance of size `c`.
pub fn process_count(c: f64) -> u64 {
    if c <= CEIL_TOLERANCE {
        0
    } else {
        (c - CEIL_TOLERANCE).ceil() as u64
    }
}

/// Cores assigned to each VNF instance hosted on one node. Absent entries
/// mean no instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeAllocation {
    cores: BTreeMap<VnfId, f64>,
}

impl NodeAllocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_iter<I: IntoIterator<Item = (VnfId, f64)>>(items: I) -> Self {
        let mut a = Self::new();
        for (f, c) in items {
            a.set(f, c);
        }
        a
    }

    pub fn get(&self, f: VnfId) -> f64 {
        self.cores.get(&f).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, f: VnfId) -> bool {
        self.cores.contains_key(&f)
    }

    /// Sets the size of the instance of `f`; sizes at or below
    /// [`CEIL_TOLERANCE`] remove it.
    pub fn set(&mut self, f: VnfId, c: f64) {
        if c <= CEIL_TOLERANCE {
            self.cores.remove(&f);
        } else {
            self.cores.insert(f, c);
        }
    }

    pub fn add(&mut self, f: VnfId, delta: f64) {
        let c = self.get(f) + delta;
        self.set(f, c);
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VnfId, f64)> + '_ {
        self.cores.iter().map(|(f, c)| (*f, *c))
    }

    /// Sum of instance sizes.
    pub fn total(&self) -> f64 {
        self.cores.values().sum()
    }

    /// Total number of processes sharing the node.
    pub fn processes(&self) -> u64 {
        self.cores.values().map(|c| process_count(*c)).sum()
    }
}

pub fn csw_latency(alloc: &NodeAllocation, node: &PhysicalNode) -> f64 {
    alloc.processes() as f64 * node.csw_latency
}

pub fn csw_processing(alloc: &NodeAllocation, node: &PhysicalNode) -> f64 {
    alloc.processes() as f64 * node.csw_processing
}

pub fn up_latency(c: f64, node: &PhysicalNode) -> f64 {
    process_count(c) as f64 * node.up_latency
}

pub fn up_processing(c: f64, node: &PhysicalNode) -> f64 {
    process_count(c) as f64 * node.up_processing
}

/// Processing lost to context switching and load balancing on a node.
pub fn node_processing_overhead(alloc: &NodeAllocation, node: &PhysicalNode) -> f64 {
    csw_processing(alloc, node) + alloc.iter().map(|(_, c)| up_processing(c, node)).sum::<f64>()
}

/// Cores left after instance sizes and overhead; negative when overcommitted.
pub fn residual_capacity(alloc: &NodeAllocation, node: &PhysicalNode) -> f64 {
    node.cores - node_processing_overhead(alloc, node) - alloc.total()
}

/// Latency a node adds to a request served by its instance of `f`.
pub fn node_latency(alloc: &NodeAllocation, node: &PhysicalNode, f: VnfId) -> f64 {
    csw_latency(alloc, node) + up_latency(alloc.get(f), node)
}

/// Node-induced latency of one SFC: the sum of [`node_latency`] over its
/// requests. A node hosting several requests of the chain is charged once
/// per request.
pub fn sfc_latency_overhead<'a, I>(placements: I) -> f64
where
    I: IntoIterator<Item = (&'a NodeAllocation, &'a PhysicalNode, VnfId)>,
{
    placements.into_iter().map(|(a, n, f)| node_latency(a, n, f)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SotaParams {
    /// Queue size.
    pub k: u32,
    /// Service rate.
    pub l: f64,
}

impl Default for SotaParams {
    fn default() -> Self {
        SotaParams { k: 100, l: 10.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("node utilization {0} is at or above the saturation cap {SOTA_UTILIZATION_CAP}")]
    Saturated(f64),
    #[error("coupling factor h must be > 0 to derive processing from latency")]
    ZeroCoupling,
    #[error("invalid cost parameter: {0}")]
    Invalid(String),
}

/// Fraction of a node's cores assigned to VNF instances.
pub fn utilization(alloc: &NodeAllocation, node: &PhysicalNode) -> f64 {
    let total = alloc.total();
    if total == 0.0 {
        0.0
    } else if node.cores == 0.0 {
        f64::INFINITY
    } else {
        total / node.cores
    }
}

/// Utilization-driven node latency of a finite M/M/1/K-style queue:
/// `(P - (1 + K(1-P)) P^(K+1)) / (L (1-P) (1-P^K))`.
pub fn sota_latency_at(p: f64, params: SotaParams) -> Result<f64, CostError> {
    if p.is_nan() || p >= SOTA_UTILIZATION_CAP {
        return Err(CostError::Saturated(p));
    }
    if p <= 0.0 {
        return Ok(0.0);
    }
    let k = params.k as i32;
    let pk = p.powi(k);
    let num = p - (1.0 + f64::from(params.k) * (1.0 - p)) * pk * p;
    let den = params.l * (1.0 - p) * (1.0 - pk);
    Ok(num / den)
}

pub fn sota_latency(alloc: &NodeAllocation, node: &PhysicalNode, params: SotaParams) -> Result<f64, CostError> {
    sota_latency_at(utilization(alloc, node), params)
}

/// How node-induced latency is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LatencyModel {
    /// Context switching plus upscaling.
    #[default]
    Sharing,
    /// Utilization-only queueing model, blind to process structure.
    Sota(SotaParams),
}

impl LatencyModel {
    /// Latency added by `node` to a request of VNF `f`.
    pub fn request_latency(&self, alloc: &NodeAllocation, node: &PhysicalNode, f: VnfId) -> Result<f64, CostError> {
        match self {
            LatencyModel::Sharing => Ok(node_latency(alloc, node, f)),
            LatencyModel::Sota(p) => sota_latency(alloc, node, *p),
        }
    }

    /// Whether `alloc` on `node` is admissible beyond the core-capacity check.
    pub fn admits(&self, alloc: &NodeAllocation, node: &PhysicalNode) -> bool {
        match self {
            LatencyModel::Sharing => true,
            LatencyModel::Sota(_) => utilization(alloc, node) < SOTA_UTILIZATION_CAP,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LatencyModel::Sharing => "sharing",
            LatencyModel::Sota(_) => "sota",
        }
    }
}

/// Which quantity the coupling factor `h` derives from the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingOrientation {
    /// `xi = h * omega`, `mu = h * kappa`.
    #[default]
    ProcessingFromLatency,
    /// `omega = h * xi`, `kappa = h * mu`, i.e. `xi = omega / h`.
    LatencyFromProcessing,
}

impl fmt::Display for CouplingOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingOrientation::ProcessingFromLatency => "processing-from-latency",
            CouplingOrientation::LatencyFromProcessing => "latency-from-processing",
        })
    }
}

impl FromStr for CouplingOrientation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "processing-from-latency" => Ok(CouplingOrientation::ProcessingFromLatency),
            "latency-from-processing" => Ok(CouplingOrientation::LatencyFromProcessing),
            other => Err(format!("unknown coupling orientation {other}")),
        }
    }
}

/// Uniform per-node cost parameters derived from latency values and `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub omega: f64,
    pub kappa: f64,
    pub h: f64,
    #[serde(default)]
    pub orientation: CouplingOrientation,
}

impl CostParams {
    pub fn new(omega: f64, kappa: f64, h: f64) -> Self {
        CostParams { omega, kappa, h, orientation: CouplingOrientation::default() }
    }

    /// `(xi, mu)` implied by the coupling.
    pub fn processing(&self) -> Result<(f64, f64), CostError> {
        for (name, v) in [("omega", self.omega), ("kappa", self.kappa), ("h", self.h)] {
            if !v.is_finite() || v < 0.0 {
                return Err(CostError::Invalid(format!("{name} = {v}")));
            }
        }
        match self.orientation {
            CouplingOrientation::ProcessingFromLatency => Ok((self.h * self.omega, self.h * self.kappa)),
            CouplingOrientation::LatencyFromProcessing => {
                if self.h == 0.0 {
                    if self.omega == 0.0 && self.kappa == 0.0 {
                        return Ok((0.0, 0.0));
                    }
                    return Err(CostError::ZeroCoupling);
                }
                Ok((self.omega / self.h, self.kappa / self.h))
            }
        }
    }

    /// Copy of `net` with these parameters on every node.
    pub fn apply(&self, net: &PhysicalNetwork) -> Result<PhysicalNetwork, CostError> {
        let (xi, mu) = self.processing()?;
        Ok(net.with_costs(self.omega, xi, self.kappa, mu))
    }
}

pub(crate) fn empty_allocation() -> &'static NodeAllocation {
    static EMPTY: std::sync::OnceLock<NodeAllocation> = std::sync::OnceLock::new();
    EMPTY.get_or_init(NodeAllocation::new)
}
