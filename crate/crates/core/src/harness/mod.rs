//! Seeded scenario generation, batch execution over parameter grids and
//! aggregate statistics.
//!
//! Every instance draws from its own ChaCha8 stream: the generator is seeded
//! with the experiment seed and the stream id is the instance index, so an
//! instance's scenario does not depend on execution order or on the cost
//! setting it is solved under. Runs at different cost points or latency
//! models are therefore paired.

mod report;

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::{CostParams, CouplingOrientation, LatencyModel, SotaParams};
use crate::hca::{self, HcaConfig};
use crate::network::PhysicalNetwork;
use crate::scenario::{Scenario, SfcEntry};
use crate::services::Catalog;

pub use report::{audit_csv, comparison_csv, results_csv, CsvOptions};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("experiment spec parse error: {0}")]
    Parse(String),
    #[error("invalid experiment spec: {0}")]
    Invalid(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Which SFC templates a scenario draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Template uniform over the catalog.
    Mixed,
    /// Every SFC uses the named template.
    Homogeneous(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sharing,
    Sota,
}

impl Mode {
    pub fn model(self, sota: SotaParams) -> LatencyModel {
        match self {
            Mode::Sharing => LatencyModel::Sharing,
            Mode::Sota => LatencyModel::Sota(sota),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sharing => "sharing",
            Mode::Sota => "sota",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sharing" => Ok(Mode::Sharing),
            "sota" => Ok(Mode::Sota),
            other => Err(format!("unknown mode {other:?} (expected sharing or sota)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub num_sfcs: usize,
    pub users_per_sfc: u32,
}

impl Load {
    pub fn total_users(&self) -> u64 {
        self.num_sfcs as u64 * self.users_per_sfc as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostPoint {
    pub omega: f64,
    pub kappa: f64,
}

fn default_h() -> f64 {
    0.01
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Sharing]
}

fn default_true() -> bool {
    true
}

fn default_k_max() -> usize {
    64
}

/// Experiment description.
///
/// ```toml
/// seed = 7
/// iterations = 100
/// scenario = "mixed"            # or { homogeneous = "CloudGaming" }
/// h = 0.0
/// modes = ["sharing", "sota"]
///
/// [[loads]]
/// num_sfcs = 3
/// users_per_sfc = 300
///
/// [[costs]]
/// omega = 0.4
/// kappa = 0.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub iterations: usize,
    pub scenario: ScenarioKind,
    pub loads: Vec<Load>,
    pub costs: Vec<CostPoint>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub orientation: CouplingOrientation,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub sota: SotaParams,
    /// Allow an SFC to start and end on the same node.
    #[serde(default = "default_true")]
    pub allow_same_endpoints: bool,
    /// Share of CloudGaming SFCs in a mixed scenario; the remaining SFCs
    /// are uniform over the other templates. Each value is a grid axis.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cg_fractions: Vec<f64>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Topology file, relative to the spec file. Defaults to the shipped fixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,
    /// Catalog file, relative to the spec file. Defaults to the shipped catalog.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
}

pub const CLOUD_GAMING: &str = "CloudGaming";

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn check(&self, catalog: &Catalog) -> Result<(), HarnessError> {
        let invalid = |m: &str| Err(HarnessError::Invalid(m.to_string()));
        if self.iterations == 0 {
            return invalid("iterations must be at least 1");
        }
        if self.modes.is_empty() {
            return invalid("modes must not be empty");
        }
        if self.k_max == 0 {
            return invalid("k_max must be at least 1");
        }
        if self.loads.iter().any(|l| l.num_sfcs == 0 || l.users_per_sfc == 0) {
            return invalid("loads need at least one SFC and one user");
        }
        if let ScenarioKind::Homogeneous(t) = &self.scenario {
            if catalog.template(t).is_none() {
                return Err(HarnessError::Invalid(format!("unknown template {t:?}")));
            }
        }
        if !self.cg_fractions.is_empty() {
            if self.scenario != ScenarioKind::Mixed {
                return invalid("cg_fractions requires a mixed scenario");
            }
            if catalog.template(CLOUD_GAMING).is_none() {
                return invalid("cg_fractions requires a CloudGaming template");
            }
            if self.cg_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
                return invalid("cg_fractions must lie in [0, 1]");
            }
        }
        for c in &self.costs {
            CostParams { omega: c.omega, kappa: c.kappa, h: self.h, orientation: self.orientation }
                .processing()
                .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// Grid points in emission order: loads, then cost points, then modes,
    /// then CloudGaming fractions.
    pub fn grid(&self) -> Vec<GridPoint> {
        let fractions: Vec<Option<f64>> = if self.cg_fractions.is_empty() {
            vec![None]
        } else {
            self.cg_fractions.iter().copied().map(Some).collect()
        };
        let mut points = Vec::new();
        for load in &self.loads {
            for cost in &self.costs {
                for &mode in &self.modes {
                    for &cg_fraction in &fractions {
                        points.push(GridPoint { load: *load, cost: *cost, mode, cg_fraction });
                    }
                }
            }
        }
        points
    }

    pub fn cost_params(&self, cost: CostPoint) -> CostParams {
        CostParams { omega: cost.omega, kappa: cost.kappa, h: self.h, orientation: self.orientation }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub load: Load,
    pub cost: CostPoint,
    pub mode: Mode,
    pub cg_fraction: Option<f64>,
}

/// Draws the SFC list of one instance.
pub fn gen_entries(
    spec: &ExperimentSpec,
    catalog: &Catalog,
    node_count: usize,
    load: Load,
    cg_fraction: Option<f64>,
    index: u64,
) -> Vec<SfcEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let names: Vec<&str> = catalog.templates().iter().map(|t| t.name.as_str()).collect();
    let others: Vec<&str> = names.iter().copied().filter(|n| *n != CLOUD_GAMING).collect();
    (0..load.num_sfcs)
        .map(|_| {
            let template = match (&spec.scenario, cg_fraction) {
                (ScenarioKind::Homogeneous(t), _) => t.clone(),
                (ScenarioKind::Mixed, None) => names.choose(&mut rng).expect("catalog has templates").to_string(),
                (ScenarioKind::Mixed, Some(p)) => {
                    if rng.random_bool(p) || others.is_empty() {
                        CLOUD_GAMING.to_string()
                    } else {
                        others.choose(&mut rng).expect("non-empty").to_string()
                    }
                }
            };
            let start = rng.random_range(0..node_count);
            let mut end = rng.random_range(0..node_count);
            while !spec.allow_same_endpoints && node_count > 1 && end == start {
                end = rng.random_range(0..node_count);
            }
            SfcEntry { template, start, end, users: load.users_per_sfc }
        })
        .collect()
}

pub fn gen_scenario(
    spec: &ExperimentSpec,
    network: &PhysicalNetwork,
    catalog: &Catalog,
    load: Load,
    cg_fraction: Option<f64>,
    index: u64,
) -> Scenario {
    let entries = gen_entries(spec, catalog, network.node_count(), load, cg_fraction, index);
    Scenario::new(network.clone(), catalog.clone(), &entries)
        .expect("generated entries reference known templates and nodes")
}

/// One solved instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRow {
    pub point: usize,
    pub instance: u64,
    pub feasible: bool,
    pub active_nodes: usize,
    /// Mean end-to-end latency over the instance's SFCs (ms).
    pub mean_latency: f64,
    pub runtime_ms: f64,
}

/// Mean and 95% confidence half-width (normal approximation, sample
/// standard deviation). A single sample has half-width 0; no samples give
/// NaN for both.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub point: GridPoint,
    pub instances: usize,
    pub feasible: usize,
    pub infeasible_pct: f64,
    pub mean_active: f64,
    pub ci95_active: f64,
    pub mean_latency: f64,
    pub ci95_latency: f64,
    pub mean_runtime_ms: f64,
}

impl PointSummary {
    pub fn from_rows(point: GridPoint, rows: &[&InstanceRow]) -> Self {
        let feasible: Vec<&&InstanceRow> = rows.iter().filter(|r| r.feasible).collect();
        let active: Vec<f64> = feasible.iter().map(|r| r.active_nodes as f64).collect();
        let latency: Vec<f64> = feasible.iter().map(|r| r.mean_latency).collect();
        let (mean_active, ci95_active) = mean_ci95(&active);
        let (mean_latency, ci95_latency) = mean_ci95(&latency);
        let runtime: Vec<f64> = rows.iter().map(|r| r.runtime_ms).collect();
        PointSummary {
            point,
            instances: rows.len(),
            feasible: feasible.len(),
            infeasible_pct: if rows.is_empty() {
                0.0
            } else {
                100.0 * (rows.len() - feasible.len()) as f64 / rows.len() as f64
            },
            mean_active,
            ci95_active,
            mean_latency,
            ci95_latency,
            mean_runtime_ms: mean_ci95(&runtime).0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub points: Vec<PointSummary>,
    /// Sorted by (point, instance).
    pub rows: Vec<InstanceRow>,
}

impl ExperimentResult {
    pub fn rows_of(&self, point: usize) -> impl Iterator<Item = &InstanceRow> {
        self.rows.iter().filter(move |r| r.point == point)
    }
}

/// Runs every grid point of `spec` for `spec.iterations` instances on
/// `jobs` worker threads (`None`: all available cores).
pub fn run_experiment(
    spec: &ExperimentSpec,
    network: &PhysicalNetwork,
    catalog: &Catalog,
    jobs: Option<usize>,
) -> Result<ExperimentResult, HarnessError> {
    spec.check(catalog)?;
    let grid = spec.grid();
    let networks = grid
        .iter()
        .map(|p| spec.cost_params(p.cost).apply(network).map_err(|e| HarnessError::Invalid(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let tasks: Vec<(usize, u64)> =
        (0..grid.len()).flat_map(|p| (0..spec.iterations as u64).map(move |i| (p, i))).collect();
    let solve = |&(p, i): &(usize, u64)| {
        let point = grid[p];
        let scenario = gen_scenario(spec, &networks[p], catalog, point.load, point.cg_fraction, i);
        let config = HcaConfig { mode: point.mode.model(spec.sota), k_max: spec.k_max, ..HcaConfig::default() };
        let out = hca::run(&scenario, &config);
        InstanceRow {
            point: p,
            instance: i,
            feasible: out.is_success(),
            active_nodes: if out.is_success() { out.active_nodes() } else { 0 },
            mean_latency: if out.is_success() { out.mean_latency() } else { f64::NAN },
            runtime_ms: out.stats.runtime.as_secs_f64() * 1e3,
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::Pool(e.to_string()))?;
    let mut rows: Vec<InstanceRow> = pool.install(|| tasks.par_iter().map(solve).collect());
    rows.sort_by_key(|r| (r.point, r.instance));

    let points = grid
        .iter()
        .enumerate()
        .map(|(p, gp)| {
            let mine: Vec<&InstanceRow> = rows.iter().filter(|r| r.point == p).collect();
            PointSummary::from_rows(*gp, &mine)
        })
        .collect();
    Ok(ExperimentResult { points, rows })
}

/// Paired latency-model comparison at one (load, cost, fraction) point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub load: Load,
    pub cost: CostPoint,
    pub cg_fraction: Option<f64>,
    pub sharing: PointSummary,
    pub sota: PointSummary,
    /// Instances feasible under both models.
    pub paired: usize,
    /// Mean of per-instance (sota - sharing) active nodes over paired instances.
    pub delta_active: f64,
    pub ci95_delta_active: f64,
    pub delta_latency: f64,
    pub ci95_delta_latency: f64,
}

/// Runs `spec` under both latency models on identical instances and pairs
/// the outcomes.
pub fn compare(
    spec: &ExperimentSpec,
    network: &PhysicalNetwork,
    catalog: &Catalog,
    jobs: Option<usize>,
) -> Result<Vec<ComparisonRow>, HarnessError> {
    let mut spec = spec.clone();
    spec.modes = vec![Mode::Sharing, Mode::Sota];
    let result = run_experiment(&spec, network, catalog, jobs)?;
    // Modes are adjacent in grid order; fractions vary fastest.
    let fractions = spec.cg_fractions.len().max(1);
    let mut out = Vec::new();
    for (p, summary) in result.points.iter().enumerate() {
        if summary.point.mode != Mode::Sharing {
            continue;
        }
        let q = p + fractions;
        let sota = &result.points[q];
        debug_assert_eq!(sota.point.mode, Mode::Sota);
        let a: Vec<&InstanceRow> = result.rows_of(p).collect();
        let b: Vec<&InstanceRow> = result.rows_of(q).collect();
        let (mut da, mut dl) = (Vec::new(), Vec::new());
        for (x, y) in a.iter().zip(&b) {
            debug_assert_eq!(x.instance, y.instance);
            if x.feasible && y.feasible {
                da.push(y.active_nodes as f64 - x.active_nodes as f64);
                dl.push(y.mean_latency - x.mean_latency);
            }
        }
        let (delta_active, ci95_delta_active) = mean_ci95(&da);
        let (delta_latency, ci95_delta_latency) = mean_ci95(&dl);
        out.push(ComparisonRow {
            load: summary.point.load,
            cost: summary.point.cost,
            cg_fraction: summary.point.cg_fraction,
            sharing: summary.clone(),
            sota: sota.clone(),
            paired: da.len(),
            delta_active,
            ci95_delta_active,
            delta_latency,
            ci95_delta_latency,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::internet2;
    use crate::services::default_catalog;

    fn spec(kind: ScenarioKind, num_sfcs: usize) -> ExperimentSpec {
        ExperimentSpec {
            seed: 11,
            iterations: 4,
            scenario: kind,
            loads: vec![Load { num_sfcs, users_per_sfc: 10 }],
            costs: vec![CostPoint { omega: 0.0, kappa: 0.0 }],
            h: 0.01,
            orientation: CouplingOrientation::default(),
            modes: vec![Mode::Sharing],
            sota: SotaParams::default(),
            allow_same_endpoints: true,
            cg_fractions: vec![],
            k_max: 64,
            topology: None,
            catalog: None,
        }
    }

    #[test]
    fn generation_is_deterministic_per_index() {
        let s = spec(ScenarioKind::Mixed, 20);
        let cat = default_catalog();
        let load = s.loads[0];
        let a = gen_entries(&s, &cat, 10, load, None, 3);
        assert_eq!(a, gen_entries(&s, &cat, 10, load, None, 3));
        assert_ne!(a, gen_entries(&s, &cat, 10, load, None, 4));
    }

    #[test]
    fn homogeneous_uses_one_template() {
        let s = spec(ScenarioKind::Homogeneous("CloudGaming".into()), 100);
        let entries = gen_entries(&s, &default_catalog(), 10, s.loads[0], None, 0);
        assert_eq!(entries.len(), 100);
        assert!(entries.iter().all(|e| e.template == "CloudGaming"));
    }

    #[test]
    fn mixed_templates_are_uniform() {
        let s = spec(ScenarioKind::Mixed, 4000);
        let cat = default_catalog();
        let entries = gen_entries(&s, &cat, 10, s.loads[0], None, 0);
        for t in cat.templates() {
            let share = entries.iter().filter(|e| e.template == t.name).count() as f64 / 4000.0;
            assert!((share - 0.25).abs() <= 0.02, "{} {share}", t.name);
        }
    }

    #[test]
    fn distinct_endpoints_flag() {
        let mut s = spec(ScenarioKind::Mixed, 500);
        s.allow_same_endpoints = false;
        let entries = gen_entries(&s, &default_catalog(), 10, s.loads[0], None, 0);
        assert!(entries.iter().all(|e| e.start != e.end));
    }

    #[test]
    fn cg_fraction_extremes() {
        let s = spec(ScenarioKind::Mixed, 200);
        let cat = default_catalog();
        let all = gen_entries(&s, &cat, 10, s.loads[0], Some(1.0), 0);
        assert!(all.iter().all(|e| e.template == CLOUD_GAMING));
        let none = gen_entries(&s, &cat, 10, s.loads[0], Some(0.0), 0);
        assert!(none.iter().all(|e| e.template != CLOUD_GAMING));
    }

    #[test]
    fn ci_conventions() {
        assert_eq!(mean_ci95(&[3.0]), (3.0, 0.0));
        let (m, h) = mean_ci95(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // s = sqrt(5/3), half-width = 1.96 s / 2.
        assert!((h - 1.96 * (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
        assert!(mean_ci95(&[]).0.is_nan());
    }

    #[test]
    fn single_instance_point() {
        let mut s = spec(ScenarioKind::Mixed, 1);
        s.iterations = 1;
        let r = run_experiment(&s, &internet2(), &default_catalog(), Some(1)).unwrap();
        assert_eq!(r.points.len(), 1);
        let p = &r.points[0];
        assert_eq!(p.ci95_active, 0.0);
        assert_eq!(p.mean_active, r.rows[0].active_nodes as f64);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let mut s = spec(ScenarioKind::Mixed, 10);
        s.costs.push(CostPoint { omega: 0.4, kappa: 1.75 });
        let a = run_experiment(&s, &internet2(), &default_catalog(), Some(1)).unwrap();
        let b = run_experiment(&s, &internet2(), &default_catalog(), Some(4)).unwrap();
        let strip = |r: &ExperimentResult| {
            r.rows.iter().map(|x| (x.point, x.instance, x.feasible, x.active_nodes)).collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn spec_checks() {
        let cat = default_catalog();
        let mut s = spec(ScenarioKind::Homogeneous("Nope".into()), 1);
        assert!(s.check(&cat).is_err());
        s.scenario = ScenarioKind::Mixed;
        s.iterations = 0;
        assert!(s.check(&cat).is_err());
        s.iterations = 1;
        s.h = 0.0;
        s.costs[0].omega = 0.4;
        s.orientation = CouplingOrientation::LatencyFromProcessing;
        assert!(s.check(&cat).is_err());
    }

    #[test]
    fn spec_toml_round_trip() {
        let text = r#"
seed = 5
iterations = 10
scenario = { homogeneous = "VoIP" }
modes = ["sharing", "sota"]

[[loads]]
num_sfcs = 3
users_per_sfc = 300

[[costs]]
omega = 0.4
kappa = 0.0
"#;
        let s = ExperimentSpec::from_toml(text).unwrap();
        assert_eq!(s.scenario, ScenarioKind::Homogeneous("VoIP".into()));
        assert_eq!(s.h, 0.01);
        assert!(s.allow_same_endpoints);
        assert_eq!(ExperimentSpec::from_toml(&s.to_toml()).unwrap(), s);
        assert!(ExperimentSpec::from_toml("seed = 1\nbogus = 2").is_err());
    }
}
