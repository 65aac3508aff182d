//! CSV emission for experiment results, per-instance audit rows and paired
//! comparisons. Numbers use the shortest round-trip decimal form.

use std::io::Write;

use super::{ComparisonRow, ExperimentResult, GridPoint};

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Include wall-clock runtime columns (makes output run-dependent).
    pub timing: bool,
    /// Drop points with 20% or more infeasible instances.
    pub filter_infeasible: bool,
}

pub const INFEASIBLE_FILTER_PCT: f64 = 20.0;

fn num(x: f64) -> String {
    format!("{x}")
}

fn point_columns(p: &GridPoint) -> Vec<String> {
    vec![
        p.load.num_sfcs.to_string(),
        p.load.users_per_sfc.to_string(),
        p.load.total_users().to_string(),
        num(p.cost.omega),
        num(p.cost.kappa),
        p.mode.to_string(),
        p.cg_fraction.map(num).unwrap_or_default(),
    ]
}

const POINT_HEADER: [&str; 7] = ["num_sfcs", "users_per_sfc", "total_users", "omega", "kappa", "mode", "cg_fraction"];

pub fn results_csv<W: Write>(result: &ExperimentResult, options: CsvOptions, sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<&str> = POINT_HEADER.to_vec();
    header.extend([
        "instances",
        "feasible",
        "infeasible_pct",
        "mean_active_nodes",
        "ci95_active_nodes",
        "mean_latency_ms",
        "ci95_latency_ms",
    ]);
    if options.timing {
        header.push("mean_runtime_ms");
    }
    w.write_record(&header)?;
    for s in &result.points {
        if options.filter_infeasible && s.infeasible_pct >= INFEASIBLE_FILTER_PCT {
            continue;
        }
        let mut row = point_columns(&s.point);
        row.extend([
            s.instances.to_string(),
            s.feasible.to_string(),
            num(s.infeasible_pct),
            num(s.mean_active),
            num(s.ci95_active),
            num(s.mean_latency),
            num(s.ci95_latency),
        ]);
        if options.timing {
            row.push(num(s.mean_runtime_ms));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn audit_csv<W: Write>(result: &ExperimentResult, options: CsvOptions, sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<&str> = vec!["point"];
    header.extend(POINT_HEADER);
    header.extend(["instance", "feasible", "active_nodes", "mean_latency_ms"]);
    if options.timing {
        header.push("runtime_ms");
    }
    w.write_record(&header)?;
    for r in &result.rows {
        let mut row = vec![r.point.to_string()];
        row.extend(point_columns(&result.points[r.point].point));
        row.extend([r.instance.to_string(), r.feasible.to_string(), r.active_nodes.to_string(), num(r.mean_latency)]);
        if options.timing {
            row.push(num(r.runtime_ms));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn comparison_csv<W: Write>(rows: &[ComparisonRow], sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "num_sfcs",
        "users_per_sfc",
        "total_users",
        "omega",
        "kappa",
        "cg_fraction",
        "sharing_mean_active_nodes",
        "sota_mean_active_nodes",
        "sharing_mean_latency_ms",
        "sota_mean_latency_ms",
        "sharing_infeasible_pct",
        "sota_infeasible_pct",
        "paired",
        "delta_active_nodes",
        "ci95_delta_active_nodes",
        "delta_latency_ms",
        "ci95_delta_latency_ms",
    ])?;
    for r in rows {
        w.write_record([
            r.load.num_sfcs.to_string(),
            r.load.users_per_sfc.to_string(),
            r.load.total_users().to_string(),
            num(r.cost.omega),
            num(r.cost.kappa),
            r.cg_fraction.map(num).unwrap_or_default(),
            num(r.sharing.mean_active),
            num(r.sota.mean_active),
            num(r.sharing.mean_latency),
            num(r.sota.mean_latency),
            num(r.sharing.infeasible_pct),
            num(r.sota.infeasible_pct),
            r.paired.to_string(),
            num(r.delta_active),
            num(r.ci95_delta_active),
            num(r.delta_latency),
            num(r.ci95_delta_latency),
        ])?;
    }
    w.flush()?;
    Ok(())
}
