//! Mixed-integer linear model of the placement problem, LP-format export
//! and an exact solver for tiny instances.
//!
//! Variable names encode their indices. Virtual nodes of SFC `c` are `s`
//! (start), `0..n` (requests) and `t` (end); virtual link `k` enters
//! request `k` (link `n` enters the end point).
//!
//! | name                  | meaning                                             |
//! |-----------------------|-----------------------------------------------------|
//! | `m_c_u_v`             | virtual node `u` of SFC `c` is mapped to node `v`   |
//! | `c_f_v`               | cores of the instance of VNF `f` on node `v`        |
//! | `i_f_v`               | node `v` hosts an instance of VNF `f`               |
//! | `n_f_v`               | processes of that instance, `ceil(c_f_v)`           |
//! | `psi_v`               | processing overhead of node `v`                     |
//! | `a_v`                 | node `v` is active                                  |
//! | `p_c_k_x_y`           | virtual link `k` runs from node `x` to node `y`     |
//! | `e_c_k_a_b_x_y`       | physical link `a -> b` carries that route           |
//! | `z_c_u_v`             | node-induced latency of request `u` if on `v`       |
//! | `sigma_c`             | node-induced latency of SFC `c`                     |

mod exact;
mod lp;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::costs::{self, CEIL_TOLERANCE};
use crate::embedding::Embedding;
use crate::network::{LinkId, NodeId, PhysicalNetwork};
use crate::scenario::Scenario;
use crate::services::{SfcId, SfcInstance, VnfId};

pub use exact::{solve_exact, ExactError, ExactLimits, ExactSolution, ExactStatus};
pub use lp::{export_lp, parse_lp, LpParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// Coefficient times variable index.
pub type Term = (usize, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// `family.index`.
    pub name: String,
    pub terms: Vec<Term>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn family(&self) -> &str {
        self.name.rsplit_once('.').map_or(self.name.as_str(), |(f, _)| f)
    }

    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v]).sum()
    }

    pub fn satisfied(&self, values: &[f64], tol: f64) -> bool {
        let lhs = self.lhs(values);
        match self.relation {
            Relation::Le => lhs <= self.rhs + tol,
            Relation::Ge => lhs >= self.rhs - tol,
            Relation::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// A minimization problem over declared variables.
#[derive(Debug, Clone, Default)]
pub struct LinearModel {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    objective: Vec<Term>,
    constraints: Vec<Constraint>,
    counters: HashMap<String, usize>,
}

impl PartialEq for LinearModel {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.objective == other.objective && self.constraints == other.constraints
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable {0} declared twice")]
    DuplicateVariable(String),
    #[error("constraint {0} declared twice")]
    DuplicateConstraint(String),
    #[error("invalid big-M parameters: {0}")]
    BigM(String),
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn objective(&self) -> &[Term] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn add_var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64) -> Result<usize, ModelError> {
        if self.index.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable { name, kind, lb, ub });
        Ok(id)
    }

    fn must_var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64) -> usize {
        self.add_var(name, kind, lb, ub).expect("builder declares each variable once")
    }

    pub fn set_objective(&mut self, terms: Vec<Term>) {
        self.objective = terms;
    }

    /// Appends a row named `family.N` with the next free N for the family.
    pub fn add_row(&mut self, family: &str, terms: Vec<Term>, relation: Relation, rhs: f64) {
        let n = self.counters.entry(family.to_string()).or_insert(0);
        let name = format!("{family}.{n}");
        *n += 1;
        self.constraints.push(Constraint { name, terms, relation, rhs });
    }

    /// Appends a row with an explicit name.
    pub fn push_row(&mut self, row: Constraint) -> Result<(), ModelError> {
        if self.constraints.iter().any(|c| c.name == row.name) {
            return Err(ModelError::DuplicateConstraint(row.name));
        }
        self.constraints.push(row);
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, a)| a * values[v]).sum()
    }

    /// Names of violated rows, bounds (`bound:x`) and integrality
    /// requirements (`integral:x`) under `values`.
    pub fn check(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut bad = Vec::new();
        for (v, var) in self.variables.iter().enumerate() {
            let x = values[v];
            if x < var.lb - tol || x > var.ub + tol {
                bad.push(format!("bound:{}", var.name));
            }
            if var.kind != VarKind::Continuous && (x - x.round()).abs() > tol {
                bad.push(format!("integral:{}", var.name));
            }
        }
        for c in &self.constraints {
            if !c.satisfied(values, tol) {
                bad.push(c.name.clone());
            }
        }
        bad
    }

    pub fn count_kind(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.kind == kind).count()
    }

    pub fn count_prefix(&self, prefix: &str) -> usize {
        self.variables.iter().filter(|v| v.name.starts_with(prefix)).count()
    }
}

/// Big-M constants and the slack used for strict inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    /// Must exceed every node's core count.
    pub m_gamma: f64,
    /// Must exceed the number of VNF types.
    pub m_f: f64,
    /// Strict-inequality slack, in (0, 1e-6].
    pub eps: f64,
}

impl BigM {
    pub fn for_scenario(scenario: &Scenario) -> Self {
        let max_cores = scenario.network.nodes().iter().map(|n| n.cores).fold(0.0, f64::max);
        BigM { m_gamma: max_cores.floor() + 1.0, m_f: scenario.catalog.vnfs().len() as f64 + 1.0, eps: 1e-6 }
    }

    pub fn check(&self, scenario: &Scenario) -> Result<(), ModelError> {
        let max_cores = scenario.network.nodes().iter().map(|n| n.cores).fold(0.0, f64::max);
        if !(self.m_gamma > max_cores) {
            return Err(ModelError::BigM(format!("M_gamma = {} must exceed {max_cores}", self.m_gamma)));
        }
        let types = scenario.catalog.vnfs().len() as f64;
        if !(self.m_f > types) {
            return Err(ModelError::BigM(format!("M_F = {} must exceed {types}", self.m_f)));
        }
        if !(self.eps > 0.0 && self.eps <= 1e-6) {
            return Err(ModelError::BigM(format!("eps = {} must lie in (0, 1e-6]", self.eps)));
        }
        Ok(())
    }
}

/// A virtual node of an SFC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Vn {
    Start,
    Request(usize),
    End,
}

impl fmt::Display for Vn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vn::Start => f.write_str("s"),
            Vn::Request(u) => write!(f, "{u}"),
            Vn::End => f.write_str("t"),
        }
    }
}

fn virtual_nodes(sfc: &SfcInstance) -> Vec<Vn> {
    let mut out = vec![Vn::Start];
    out.extend((0..sfc.requests.len()).map(Vn::Request));
    out.push(Vn::End);
    out
}

/// Endpoints of virtual link `k`.
fn vlink_ends(sfc: &SfcInstance, k: usize) -> (Vn, Vn) {
    let from = if k == 0 { Vn::Start } else { Vn::Request(k - 1) };
    let to = if k == sfc.requests.len() { Vn::End } else { Vn::Request(k) };
    (from, to)
}

fn m_name(c: SfcId, u: Vn, v: NodeId) -> String {
    format!("m_{}_{}_{}", c.0, u, v.0)
}
fn c_name(f: VnfId, v: NodeId) -> String {
    format!("c_{}_{}", f.0, v.0)
}
fn i_name(f: VnfId, v: NodeId) -> String {
    format!("i_{}_{}", f.0, v.0)
}
fn n_name(f: VnfId, v: NodeId) -> String {
    format!("n_{}_{}", f.0, v.0)
}
fn psi_name(v: NodeId) -> String {
    format!("psi_{}", v.0)
}
fn a_name(v: NodeId) -> String {
    format!("a_{}", v.0)
}
fn p_name(c: SfcId, k: usize, x: NodeId, y: NodeId) -> String {
    format!("p_{}_{}_{}_{}", c.0, k, x.0, y.0)
}
fn e_name(net: &PhysicalNetwork, c: SfcId, k: usize, l: LinkId, x: NodeId, y: NodeId) -> String {
    let link = net.link(l);
    format!("e_{}_{}_{}_{}_{}_{}", c.0, k, link.from.0, link.to.0, x.0, y.0)
}
fn z_name(c: SfcId, u: usize, v: NodeId) -> String {
    format!("z_{}_{}_{}", c.0, u, v.0)
}
fn sigma_name(c: SfcId) -> String {
    format!("sigma_{}", c.0)
}

/// Candidate (x, y) node pairs of virtual link `k`; fixed endpoints prune
/// the first and last link.
fn vlink_pairs(net: &PhysicalNetwork, sfc: &SfcInstance, k: usize) -> Vec<(NodeId, NodeId)> {
    let all: Vec<NodeId> = net.node_ids().collect();
    let (from, to) = vlink_ends(sfc, k);
    let xs = if from == Vn::Start { vec![sfc.start] } else { all.clone() };
    let ys = if to == Vn::End { vec![sfc.end] } else { all };
    xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect()
}

/// Upper bound on the process count of one instance on `v`.
fn max_processes(net: &PhysicalNetwork, v: NodeId) -> f64 {
    net.node(v).cores.ceil()
}

/// Builds the complete model for `scenario` (sharing latency model).
pub fn build_model(scenario: &Scenario, big_m: &BigM) -> Result<LinearModel, ModelError> {
    big_m.check(scenario)?;
    let net = &scenario.network;
    let vnfs: Vec<VnfId> = scenario.catalog.vnfs().iter().map(|f| f.id).collect();
    let nodes: Vec<NodeId> = net.node_ids().collect();
    let mut model = LinearModel::new();
    use Relation::*;
    use VarKind::*;

    // Declarations.
    for sfc in &scenario.sfcs {
        for u in virtual_nodes(sfc) {
            for &v in &nodes {
                model.must_var(m_name(sfc.id, u, v), Binary, 0.0, 1.0);
            }
        }
    }
    for &f in &vnfs {
        for &v in &nodes {
            let cores = net.node(v).cores;
            model.must_var(c_name(f, v), Continuous, 0.0, cores);
            model.must_var(i_name(f, v), Binary, 0.0, 1.0);
            model.must_var(n_name(f, v), Integer, 0.0, max_processes(net, v));
        }
    }
    for &v in &nodes {
        model.must_var(psi_name(v), Continuous, 0.0, f64::INFINITY);
        model.must_var(a_name(v), Binary, 0.0, 1.0);
    }
    for sfc in &scenario.sfcs {
        for k in 0..sfc.virtual_links.len() {
            for (x, y) in vlink_pairs(net, sfc, k) {
                model.must_var(p_name(sfc.id, k, x, y), Binary, 0.0, 1.0);
                for l in net.links() {
                    model.must_var(e_name(net, sfc.id, k, l.id, x, y), Binary, 0.0, 1.0);
                }
            }
        }
        for u in 0..sfc.requests.len() {
            for &v in &nodes {
                model.must_var(z_name(sfc.id, u, v), Continuous, 0.0, f64::INFINITY);
            }
        }
        model.must_var(sigma_name(sfc.id), Continuous, 0.0, f64::INFINITY);
    }
    let var = |model: &LinearModel, name: String| model.var(&name).expect("declared above");

    model.set_objective(nodes.iter().map(|&v| (var(&model, a_name(v)), 1.0)).collect());

    // Fixed start and end points.
    for sfc in &scenario.sfcs {
        for (u, eta) in [(Vn::Start, sfc.start), (Vn::End, sfc.end)] {
            for &v in &nodes {
                let rhs = if v == eta { 1.0 } else { 0.0 };
                let t = vec![(var(&model, m_name(sfc.id, u, v)), 1.0)];
                model.add_row("fixed_endpoint", t, Eq, rhs);
            }
        }
    }
    // Every request on exactly one node.
    for sfc in &scenario.sfcs {
        for r in &sfc.requests {
            let t = nodes.iter().map(|&v| (var(&model, m_name(sfc.id, Vn::Request(r.position), v)), 1.0)).collect();
            model.add_row("unique_mapping", t, Eq, 1.0);
        }
    }
    // Instance sizing, flags and presence.
    for &f in &vnfs {
        for &v in &nodes {
            let cv = var(&model, c_name(f, v));
            let iv = var(&model, i_name(f, v));
            let nv = var(&model, n_name(f, v));
            let mut served = Vec::new();
            for sfc in &scenario.sfcs {
                for r in sfc.requests.iter().filter(|r| r.vnf == f) {
                    served.push((var(&model, m_name(sfc.id, Vn::Request(r.position), v)), r.demand));
                }
            }
            let mut t = served.clone();
            t.push((cv, -1.0));
            model.add_row("instance_capacity", t, Le, 0.0);
            model.add_row("instance_flag", vec![(cv, 1.0), (iv, -big_m.m_gamma)], Le, 0.0);
            model.add_row("instance_flag", vec![(iv, 1.0), (cv, -1.0)], Le, 1.0 - big_m.eps);
            let mut t = vec![(iv, 1.0)];
            t.extend(served.iter().map(|&(m, _)| (m, -1.0)));
            model.add_row("instance_presence", t, Le, 0.0);
            model.add_row("ceiling", vec![(cv, 1.0), (nv, -1.0)], Le, 0.0);
            model.add_row("ceiling", vec![(nv, 1.0), (cv, -1.0)], Le, 1.0 - big_m.eps);
        }
    }
    // Processing overhead and node capacity.
    for &v in &nodes {
        let node = net.node(v);
        let per_process = node.csw_processing + node.up_processing;
        let psi = var(&model, psi_name(v));
        let mut t = vec![(psi, 1.0)];
        t.extend(vnfs.iter().map(|&f| (var(&model, n_name(f, v)), -per_process)));
        model.add_row("processing_overhead", t, Eq, 0.0);
        let mut t: Vec<Term> = vnfs.iter().map(|&f| (var(&model, c_name(f, v)), 1.0)).collect();
        t.push((psi, 1.0));
        model.add_row("node_capacity", t, Le, node.cores);
    }
    // Routing.
    for sfc in &scenario.sfcs {
        for k in 0..sfc.virtual_links.len() {
            let (from, to) = vlink_ends(sfc, k);
            let pairs = vlink_pairs(net, sfc, k);
            let e = |model: &LinearModel, l: LinkId, x: NodeId, y: NodeId| var(model, e_name(net, sfc.id, k, l, x, y));
            for &(x, y) in &pairs {
                let p = var(&model, p_name(sfc.id, k, x, y));
                let mx = var(&model, m_name(sfc.id, from, x));
                let my = var(&model, m_name(sfc.id, to, y));
                model.add_row("link_mapping", vec![(p, 1.0), (mx, -1.0)], Le, 0.0);
                model.add_row("link_mapping", vec![(p, 1.0), (my, -1.0)], Le, 0.0);
                model.add_row("link_mapping", vec![(mx, 1.0), (my, 1.0), (p, -1.0)], Le, 1.0);
                for l in net.links() {
                    model.add_row("link_mapping", vec![(e(&model, l.id, x, y), 1.0), (p, -1.0)], Le, 0.0);
                }
            }
            // A colocated pair is carried by the self-loop, which the
            // adjacency lists leave out.
            let own_loop = |x: NodeId, y: NodeId| if x == y { net.self_loop(x) } else { None };
            let leaving = |x: NodeId, y: NodeId| net.out_links(x).iter().copied().chain(own_loop(x, y));
            let entering = |x: NodeId, y: NodeId| net.in_links(y).iter().copied().chain(own_loop(x, y));
            let source: Vec<Term> = pairs
                .iter()
                .flat_map(|&(x, y)| leaving(x, y).map(move |l| (l, x, y)))
                .map(|(l, x, y)| (e(&model, l, x, y), 1.0))
                .collect();
            model.add_row("source", source, Eq, 1.0);
            let dest: Vec<Term> = pairs
                .iter()
                .flat_map(|&(x, y)| entering(x, y).map(move |l| (l, x, y)))
                .map(|(l, x, y)| (e(&model, l, x, y), 1.0))
                .collect();
            model.add_row("destination", dest, Eq, 1.0);
            for &(x, y) in &pairs {
                if x != y {
                    let t = net.in_links(x).iter().map(|&l| (e(&model, l, x, y), 1.0)).collect();
                    model.add_row("no_backflow", t, Eq, 0.0);
                    let t = net.out_links(y).iter().map(|&l| (e(&model, l, x, y), 1.0)).collect();
                    model.add_row("no_backflow", t, Eq, 0.0);
                }
                for &w in &nodes {
                    if w == x || w == y {
                        continue;
                    }
                    let inflow: Vec<Term> = net.in_links(w).iter().map(|&l| (e(&model, l, x, y), 1.0)).collect();
                    let mut balance = inflow.clone();
                    balance.extend(net.out_links(w).iter().map(|&l| (e(&model, l, x, y), -1.0)));
                    model.add_row("transit", balance, Eq, 0.0);
                    model.add_row("transit", inflow, Le, 1.0);
                }
                for l in net.links() {
                    let forbidden = if x == y { !l.is_self_loop() } else { l.is_self_loop() };
                    if forbidden {
                        model.add_row("self_loop", vec![(e(&model, l.id, x, y), 1.0)], Eq, 0.0);
                    }
                }
            }
        }
    }
    // Bandwidth, for links with finite capacity.
    for l in net.links() {
        if l.bandwidth.is_infinite() {
            continue;
        }
        let mut t = Vec::new();
        for sfc in &scenario.sfcs {
            for vl in &sfc.virtual_links {
                for (x, y) in vlink_pairs(net, sfc, vl.index) {
                    t.push((var(&model, e_name(net, sfc.id, vl.index, l.id, x, y)), vl.bandwidth));
                }
            }
        }
        model.add_row("bandwidth", t, Le, l.bandwidth);
    }
    // Node-induced latency: z = m * (omega * sum_f n_f + kappa * n_type),
    // linearized with the bound U = (|F| omega + kappa) * ceil(cores).
    for sfc in &scenario.sfcs {
        let mut sigma = vec![(var(&model, sigma_name(sfc.id)), 1.0)];
        for r in &sfc.requests {
            for &v in &nodes {
                let node = net.node(v);
                let z = var(&model, z_name(sfc.id, r.position, v));
                let m = var(&model, m_name(sfc.id, Vn::Request(r.position), v));
                let bound = (vnfs.len() as f64 * node.csw_latency + node.up_latency) * max_processes(net, v);
                let mut load: Vec<Term> = vnfs.iter().map(|&f| (var(&model, n_name(f, v)), node.csw_latency)).collect();
                load.push((var(&model, n_name(r.vnf, v)), node.up_latency));
                model.add_row("latency_overhead", vec![(z, 1.0), (m, -bound)], Le, 0.0);
                let mut t = vec![(z, 1.0)];
                t.extend(load.iter().map(|&(n, a)| (n, -a)));
                model.add_row("latency_overhead", t, Le, 0.0);
                let mut t = vec![(z, 1.0)];
                t.extend(load.iter().map(|&(n, a)| (n, -a)));
                t.push((m, -bound));
                model.add_row("latency_overhead", t, Ge, -bound);
                sigma.push((z, -1.0));
            }
        }
        model.add_row("latency_overhead", sigma, Eq, 0.0);
    }
    // End-to-end latency.
    for sfc in &scenario.sfcs {
        let mut t = Vec::new();
        for k in 0..sfc.virtual_links.len() {
            for (x, y) in vlink_pairs(net, sfc, k) {
                for l in net.links() {
                    t.push((var(&model, e_name(net, sfc.id, k, l.id, x, y)), l.latency));
                }
            }
        }
        t.push((var(&model, sigma_name(sfc.id)), 1.0));
        model.add_row("latency", t, Le, sfc.max_latency());
    }
    // Active flags.
    for &v in &nodes {
        let a = var(&model, a_name(v));
        let mut t: Vec<Term> = vnfs.iter().map(|&f| (var(&model, i_name(f, v)), 1.0)).collect();
        t.push((a, -big_m.m_f));
        model.add_row("active_flag", t, Le, 0.0);
        let mut t = vec![(a, 1.0)];
        t.extend(vnfs.iter().map(|&f| (var(&model, i_name(f, v)), -1.0)));
        model.add_row("active_flag", t, Le, 0.0);
    }
    Ok(model)
}

/// Variable values that encode `emb` in `model` (built for `scenario`).
/// Variables not touched by the embedding are zero.
pub fn natural_assignment(model: &LinearModel, scenario: &Scenario, emb: &Embedding) -> Vec<f64> {
    let net = &scenario.network;
    let mut x = vec![0.0; model.variables().len()];
    let mut set = |name: String, value: f64| {
        if let Some(i) = model.var(&name) {
            x[i] = value;
        }
    };
    for sfc in &scenario.sfcs {
        set(m_name(sfc.id, Vn::Start, sfc.start), 1.0);
        set(m_name(sfc.id, Vn::End, sfc.end), 1.0);
        for r in &sfc.requests {
            if let Some(v) = emb.mapped_node(sfc.id, r.position) {
                set(m_name(sfc.id, Vn::Request(r.position), v), 1.0);
            }
        }
    }
    for (&v, alloc) in emb.allocations() {
        let node = net.node(v);
        for (f, c) in alloc.iter() {
            set(c_name(f, v), c);
            set(i_name(f, v), if c > CEIL_TOLERANCE { 1.0 } else { 0.0 });
            set(n_name(f, v), costs::process_count(c) as f64);
        }
        set(psi_name(v), costs::node_processing_overhead(alloc, node));
        set(a_name(v), if alloc.is_empty() { 0.0 } else { 1.0 });
    }
    for sfc in &scenario.sfcs {
        for k in 0..sfc.virtual_links.len() {
            let Some(path) = emb.path(sfc.id, k) else { continue };
            let (x, y) = (path.source(), path.target());
            set(p_name(sfc.id, k, x, y), 1.0);
            for &l in path.links() {
                set(e_name(net, sfc.id, k, l, x, y), 1.0);
            }
        }
        let mut sigma = 0.0;
        for r in &sfc.requests {
            let Some(v) = emb.mapped_node(sfc.id, r.position) else { continue };
            let z = costs::node_latency(emb.allocation(v), net.node(v), r.vnf);
            set(z_name(sfc.id, r.position, v), z);
            sigma += z;
        }
        set(sigma_name(sfc.id), sigma);
    }
    x
}
