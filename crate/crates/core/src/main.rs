use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use sfcplace::costs::SotaParams;
use sfcplace::embedding::{validate, Embedding};
use sfcplace::fixtures;
use sfcplace::harness::{self, CsvOptions, ExperimentSpec, Mode};
use sfcplace::hca::{self, HcaConfig, HcaStatus};
use sfcplace::ilp::{self, BigM, ExactLimits, ExactStatus};
use sfcplace::network::PhysicalNetwork;
use sfcplace::scenario::Scenario;
use sfcplace::services::Catalog;

#[derive(Parser)]
#[command(name = "sfcplace", version, about = "VNF placement and SFC embedding with shared-processing costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a scenario with the heuristic.
    Solve {
        #[command(flatten)]
        input: Inputs,
        #[arg(long, default_value = "sharing")]
        mode: Mode,
        /// Write the embedding here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Paths examined per SFC when opening a node on the route.
        #[arg(long, default_value_t = 64)]
        k_max: usize,
    },
    /// Check an embedding file against every constraint.
    Validate {
        #[command(flatten)]
        input: Inputs,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long, default_value = "sharing")]
        mode: Mode,
    },
    /// Write the integer program of a scenario in LP format.
    ExportIlp {
        #[command(flatten)]
        input: Inputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a tiny scenario to optimality by exhaustive search.
    Exact {
        #[command(flatten)]
        input: Inputs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = ExactLimits::default().max_nfv_nodes)]
        max_nfv_nodes: usize,
        #[arg(long, default_value_t = ExactLimits::default().max_requests)]
        max_requests: usize,
    },
    /// Run an experiment grid and write per-point statistics.
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-instance rows.
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Add wall-clock runtime columns.
        #[arg(long)]
        timing: bool,
        /// Drop points with 20% or more infeasible instances.
        #[arg(long)]
        filter_infeasible: bool,
    },
    /// Run an experiment under both latency models on identical instances.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Inputs {
    /// Topology file; defaults to the shipped ten-node backbone.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// VNF/SFC catalog; defaults to the shipped catalog.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    /// Infeasible scenario or invalid embedding.
    Rejected,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_network(path: Option<&Path>) -> Result<PhysicalNetwork> {
    match path {
        Some(p) => PhysicalNetwork::from_toml(&read(p)?).with_context(|| format!("loading {}", p.display())),
        None => Ok(fixtures::internet2()),
    }
}

fn load_catalog(path: Option<&Path>) -> Result<Catalog> {
    let text = match path {
        Some(p) => read(p)?,
        None => fixtures::CATALOG_TOML.to_string(),
    };
    Catalog::from_toml(&text).context("loading catalog")
}

fn load_scenario(input: &Inputs) -> Result<Scenario> {
    info!(
        "topology={} catalog={} scenario={}",
        input.topology.as_deref().map_or("<builtin>".into(), |p| p.display().to_string()),
        input.catalog.as_deref().map_or("<builtin>".into(), |p| p.display().to_string()),
        input.scenario.display()
    );
    let net = load_network(input.topology.as_deref())?;
    let cat = load_catalog(input.catalog.as_deref())?;
    Scenario::from_toml(net, cat, &read(&input.scenario)?)
        .with_context(|| format!("loading {}", input.scenario.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn solve(input: &Inputs, mode: Mode, out: Option<&Path>, k_max: usize) -> Result<Status> {
    let scenario = load_scenario(input)?;
    if k_max == 0 {
        bail!("--k-max must be at least 1");
    }
    let config = HcaConfig { mode: mode.model(SotaParams::default()), k_max, ..HcaConfig::default() };
    info!("mode={mode} k_max={k_max} sfcs={}", scenario.sfcs.len());
    let outcome = hca::run(&scenario, &config);
    let mut stdout = io::stdout().lock();
    match outcome.status {
        HcaStatus::Success => {
            writeln!(stdout, "status: success")?;
            writeln!(stdout, "active_nodes: {}", outcome.active_nodes())?;
            for (id, lat) in &outcome.per_sfc_latency {
                let bound = scenario.sfc(*id).max_latency();
                writeln!(stdout, "sfc {id}: latency {lat} ms (bound {bound} ms)")?;
            }
            if let Some(path) = out {
                write_text(path, &outcome.embedding.to_toml(&scenario))?;
            }
            Ok(Status::Ok)
        }
        HcaStatus::Infeasible(id) => {
            writeln!(stdout, "status: infeasible at sfc {id}")?;
            Ok(Status::Rejected)
        }
    }
}

fn run_validate(input: &Inputs, embedding: &Path, mode: Mode) -> Result<Status> {
    let scenario = load_scenario(input)?;
    info!("embedding={} mode={mode}", embedding.display());
    let emb = Embedding::from_toml(&read(embedding)?, &scenario)
        .with_context(|| format!("loading {}", embedding.display()))?;
    let report = validate(&emb, &scenario, &mode.model(SotaParams::default()));
    let mut stdout = io::stdout().lock();
    if report.ok() {
        writeln!(stdout, "valid: {} active nodes", emb.active_count())?;
        return Ok(Status::Ok);
    }
    writeln!(stdout, "invalid: {} violations", report.violations.len())?;
    for v in &report.violations {
        writeln!(stdout, "{}: {}", v.family, v.detail)?;
    }
    Ok(Status::Rejected)
}

fn export_ilp(input: &Inputs, out: &Path) -> Result<Status> {
    let scenario = load_scenario(input)?;
    let model = ilp::build_model(&scenario, &BigM::for_scenario(&scenario))?;
    info!("out={}", out.display());
    let mut sink = create(out)?;
    ilp::export_lp(&model, &mut sink)?;
    sink.flush()?;
    println!("variables: {} constraints: {}", model.variables().len(), model.constraints().len());
    Ok(Status::Ok)
}

fn exact(input: &Inputs, out: Option<&Path>, limits: ExactLimits) -> Result<Status> {
    let scenario = load_scenario(input)?;
    info!("max_nfv_nodes={} max_requests={}", limits.max_nfv_nodes, limits.max_requests);
    let sol = ilp::solve_exact(&scenario, &limits)?;
    match (sol.status, sol.objective, sol.embedding) {
        (ExactStatus::Optimal, Some(objective), Some(emb)) => {
            println!("status: optimal");
            println!("active_nodes: {objective}");
            println!("explored: {}", sol.explored);
            if let Some(path) = out {
                write_text(path, &emb.to_toml(&scenario))?;
            }
            Ok(Status::Ok)
        }
        _ => {
            println!("status: infeasible");
            println!("explored: {}", sol.explored);
            Ok(Status::Rejected)
        }
    }
}

/// Loads a spec with its topology and catalog, resolved against the spec's
/// directory.
fn load_spec(run: &RunArgs) -> Result<(ExperimentSpec, PhysicalNetwork, Catalog)> {
    let mut spec =
        ExperimentSpec::from_toml(&read(&run.spec)?).with_context(|| format!("loading {}", run.spec.display()))?;
    if let Some(seed) = run.seed {
        spec.seed = seed;
    }
    let base = run.spec.parent().unwrap_or(Path::new("."));
    let net = load_network(spec.topology.as_ref().map(|t| base.join(t)).as_deref())?;
    let cat = load_catalog(spec.catalog.as_ref().map(|c| base.join(c)).as_deref())?;
    if run.jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    info!("resolved spec:\n{}", spec.to_toml());
    info!("jobs={}", run.jobs.map_or("auto".into(), |j| j.to_string()));
    Ok((spec, net, cat))
}

fn experiment(run: &RunArgs, out: &Path, audit: Option<&Path>, options: CsvOptions) -> Result<Status> {
    let (spec, net, cat) = load_spec(run)?;
    let result = harness::run_experiment(&spec, &net, &cat, run.jobs)?;
    harness::results_csv(&result, options, create(out)?)?;
    if let Some(path) = audit {
        harness::audit_csv(&result, options, create(path)?)?;
    }
    for s in &result.points {
        let p = &s.point;
        println!(
            "|C|={} users={} omega={} kappa={} mode={}{}: active {:.3} +/- {:.3}, infeasible {}%",
            p.load.num_sfcs,
            p.load.users_per_sfc,
            p.cost.omega,
            p.cost.kappa,
            p.mode,
            p.cg_fraction.map_or(String::new(), |f| format!(" cg={f}")),
            s.mean_active,
            s.ci95_active,
            s.infeasible_pct
        );
    }
    Ok(Status::Ok)
}

fn run_compare(run: &RunArgs, out: Option<&Path>) -> Result<Status> {
    let (spec, net, cat) = load_spec(run)?;
    let rows = harness::compare(&spec, &net, &cat, run.jobs)?;
    match out {
        Some(path) => {
            harness::comparison_csv(&rows, create(path)?)?;
            for r in &rows {
                println!(
                    "|C|={} users={} omega={} kappa={}: delta active {:.3} +/- {:.3}, delta latency {:.3} ms over {} pairs",
                    r.load.num_sfcs, r.load.users_per_sfc, r.cost.omega, r.cost.kappa, r.delta_active, r.ci95_delta_active, r.delta_latency, r.paired
                );
            }
        }
        None => harness::comparison_csv(&rows, io::stdout().lock())?,
    }
    Ok(Status::Ok)
}

fn dispatch(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Solve { input, mode, out, k_max } => solve(&input, mode, out.as_deref(), k_max),
        Command::Validate { input, embedding, mode } => run_validate(&input, &embedding, mode),
        Command::ExportIlp { input, out } => export_ilp(&input, &out),
        Command::Exact { input, out, max_nfv_nodes, max_requests } => {
            exact(&input, out.as_deref(), ExactLimits { max_nfv_nodes, max_requests })
        }
        Command::Experiment { run, out, audit, timing, filter_infeasible } => {
            experiment(&run, &out, audit.as_deref(), CsvOptions { timing, filter_infeasible })
        }
        Command::Compare { run, out } => run_compare(&run, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Rejected) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
