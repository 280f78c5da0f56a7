//! The `cdcp` command line: argument parsing and the four commands.
//!
//! Exit codes: 0 on success, 2 on usage or validation errors, 1 on runtime
//! failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::baselines::{compare_all, AVERAGING_SAMPLES};
use crate::controlloop::{run_timeline, staleness_gap, EventKind};
use crate::error::Result;
use crate::geometry::project_feasible;
use crate::netmodel::{select_serving_cell, AppRequest};
use crate::oracle::{grid_search, GridSpec};
use crate::scenario::{
    load_scenario, sample_pois, write_report, ComparisonReport, OracleReport, Report, ReportFormat, ReportMetadata,
    Scenario, SolutionRow, SolveReport, TimelineReportFile,
};
use crate::solver::solve_cdcp;

#[derive(Debug, Parser)]
#[command(name = "cdcp", version, about = "Drone placement and beam control for uplink capacity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One-shot optimization for the scenario's request.
    Solve(Common),
    /// Closed-loop timeline with periodic re-solves and the scenario's events.
    Simulate(Common),
    /// Optimizer against the NC, OSA, OSL and OSLA baselines over random POIs.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Number of POIs drawn over the convex hull of the stations.
        #[arg(long, default_value_t = 20)]
        pois: usize,
    },
    /// Exhaustive grid search.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Grid points per axis.
        #[arg(long, default_value_t = 21)]
        resolution: usize,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file, or one of the bundled names: rural, suburban, urban.
    scenario: String,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = ["csv", "json"])]
    format: String,
}

fn cell_ids(scenario: &Scenario) -> Vec<String> {
    scenario.snapshot.cells().iter().map(|(bs, _)| bs.id.clone()).collect()
}

fn metadata(command: &str, scenario: &Scenario, extra: &str) -> ReportMetadata {
    ReportMetadata::new(
        command,
        &scenario.file.name,
        scenario.seed,
        scenario.config_hash(&format!("{command} {extra}")),
    )
}

pub fn solve_report(scenario: &Scenario) -> Result<SolveReport> {
    let s = solve_cdcp(&scenario.snapshot, &scenario.request, &scenario.solver)?;
    Ok(SolveReport {
        metadata: metadata("solve", scenario, ""),
        cell_ids: cell_ids(scenario),
        solution: SolutionRow::from_solution(None, "Opt", &s, &scenario.snapshot),
    })
}

/// Runs the timeline. When the events form a single load shift, the report
/// also carries the staleness comparison for it.
pub fn simulate_report(scenario: &Scenario) -> Result<TimelineReportFile> {
    let state = scenario.loop_state();
    let timeline = run_timeline(&state, &scenario.events, &scenario.loop_config, &scenario.solver)?;
    let shift = !scenario.events.is_empty()
        && scenario
            .events
            .iter()
            .all(|e| matches!(e.kind, EventKind::LoadChange { .. }) && e.time == scenario.events[0].time);
    let staleness = if shift {
        Some(staleness_gap(&state, &scenario.events, &scenario.solver)?)
    } else {
        None
    };
    let mut meta = metadata("simulate", scenario, "");
    if staleness.is_some() {
        meta.notes.push("stale objective evaluated at the settled stale position".into());
    }
    Ok(TimelineReportFile::new(meta, &timeline, staleness))
}

/// The requests `compare` evaluates: the scenario request moved to `n`
/// seeded POIs over the convex hull of the stations, at the request's POI
/// altitude.
pub fn comparison_requests(scenario: &Scenario, n: usize) -> Vec<AppRequest> {
    let sites: Vec<_> = scenario.snapshot.cells().iter().map(|(bs, _)| bs.location).collect();
    sample_pois(&sites, n, scenario.request.poi.z, scenario.seed)
        .into_iter()
        .map(|poi| AppRequest {
            poi,
            ..scenario.request
        })
        .collect()
}

pub fn compare_report(scenario: &Scenario, n: usize) -> Result<ComparisonReport> {
    let requests = comparison_requests(scenario, n);
    let mut rows = Vec::new();
    let mut gains = Vec::new();
    for (i, req) in requests.iter().enumerate() {
        let table = compare_all(&scenario.snapshot, req, &scenario.solver)?;
        let serving = select_serving_cell(&scenario.snapshot, project_feasible(req.poi, &req.region()));
        let serving = &scenario.snapshot.station(serving).id;
        rows.extend(table.rows.iter().map(|r| SolutionRow::from_comparison(i, serving, r)));
        gains.push((table.gain_percent(), table.opt().objective - table.best_baseline().objective));
    }
    let mut meta = metadata("compare", scenario, &format!("pois={n}"));
    meta.notes.push("POIs drawn uniformly over the convex hull of the station positions".into());
    meta.notes.push(format!(
        "NC and OSL average over {AVERAGING_SAMPLES} azimuths facing the serving station; feasible only if every sampled direction is"
    ));
    meta.notes.push("gain is measured against the best feasible baseline, or the best baseline when none is feasible".into());
    let pois: Vec<_> = requests.iter().map(|r| r.poi).collect();
    Ok(ComparisonReport::new(meta, cell_ids(scenario), &pois, rows, &gains))
}

pub fn oracle_report(scenario: &Scenario, resolution: usize) -> Result<OracleReport> {
    let grid = GridSpec {
        relaxation_step: scenario.solver.relaxation_step,
        max_relaxation: scenario.solver.max_relaxation,
        ..GridSpec::with_resolution(resolution)
    };
    let s = grid_search(&scenario.snapshot, &scenario.request, &grid)?;
    Ok(OracleReport {
        metadata: metadata("oracle", scenario, &format!("resolution={resolution}")),
        grid,
        cell_ids: cell_ids(scenario),
        solution: SolutionRow::from_solution(None, "Oracle", &s, &scenario.snapshot),
    })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let common = match &cli.command {
        Command::Solve(c) | Command::Simulate(c) => c,
        Command::Compare { common, .. } | Command::Oracle { common, .. } => common,
    };
    let mut scenario = load_scenario(&common.scenario)?;
    if let Some(seed) = common.seed {
        scenario = scenario.with_seed(seed);
    }
    let report = match &cli.command {
        Command::Solve(_) => Report::Solve(solve_report(&scenario)?),
        Command::Simulate(_) => Report::Simulate(simulate_report(&scenario)?),
        Command::Compare { pois, .. } => Report::Compare(compare_report(&scenario, *pois)?),
        Command::Oracle { resolution, .. } => Report::Oracle(oracle_report(&scenario, *resolution)?),
    };
    let format: ReportFormat = common.format.parse()?;
    match &common.out {
        Some(path) => write_report(&report, path, format)?,
        None => out.write_all(report.render(format).as_bytes())?,
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}
