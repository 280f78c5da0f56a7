//! Result reports and their CSV / JSON writers.
//!
//! Floats are rounded to 9 significant digits when a report is built, so the
//! in-memory report, its JSON and its CSV all carry the same values. Field
//! order follows the struct definitions.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::ComparisonRow;
use crate::controlloop::{EventMarker, Staleness, TimelineReport};
use crate::error::{CdcpError, Result};
use crate::geometry::Location3D;
use crate::netmodel::{cell_capacities, ConstraintReport, NetworkSnapshot};
use crate::oracle::GridSpec;
use crate::solver::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = CdcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(CdcpError::invalid("format", format!("`{other}` is not csv or json"))),
        }
    }
}

/// `x` rounded to 9 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// CSV cell for a float already rounded by [`round_sig`].
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{}", round_sig(x))
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then(|| round_sig(x))
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub command: String,
    pub scenario: String,
    pub seed: u64,
    /// SHA-256 over the canonical scenario and the command parameters.
    pub config_hash: String,
    pub version: String,
    pub units: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ReportMetadata {
    pub fn new(command: &str, scenario: &str, seed: u64, config_hash: String) -> Self {
        Self {
            command: command.to_string(),
            scenario: scenario.to_string(),
            seed,
            config_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            units: "m, rad, dB, bits/s".to_string(),
            notes: Vec::new(),
        }
    }
}

/// One answer (optimizer, baseline or oracle), flattened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub poi: Option<usize>,
    pub method: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub azimuth: f64,
    pub polar: f64,
    pub serving: String,
    pub objective: f64,
    pub uav_capacity: f64,
    pub feasible: bool,
    pub relaxation: f64,
    pub slack_neighbor_sinr_db: Option<f64>,
    pub slack_uav_qos_db: Option<f64>,
    pub slack_distance_m: Option<f64>,
    pub slack_altitude_m: Option<f64>,
    pub cell_capacities: Vec<f64>,
}

impl SolutionRow {
    #[allow(clippy::too_many_arguments)]
    fn build(
        poi: Option<usize>,
        method: &str,
        location: Location3D,
        azimuth: f64,
        polar: f64,
        serving: &str,
        objective: f64,
        uav_capacity: f64,
        feasible: bool,
        relaxation: f64,
        slacks: &ConstraintReport,
        caps: &[f64],
    ) -> Self {
        Self {
            poi,
            method: method.to_string(),
            x: round_sig(location.x),
            y: round_sig(location.y),
            z: round_sig(location.z),
            azimuth: round_sig(azimuth),
            polar: round_sig(polar),
            serving: serving.to_string(),
            objective: round_sig(objective),
            uav_capacity: round_sig(uav_capacity),
            feasible,
            relaxation: round_sig(relaxation),
            slack_neighbor_sinr_db: slacks.neighbor_sinr_db.and_then(finite),
            slack_uav_qos_db: finite(slacks.uav_qos_db),
            slack_distance_m: finite(slacks.distance_m),
            slack_altitude_m: finite(slacks.altitude_m),
            cell_capacities: caps.iter().copied().map(round_sig).collect(),
        }
    }

    pub fn from_solution(poi: Option<usize>, method: &str, s: &Solution, snapshot: &NetworkSnapshot) -> Self {
        let caps = cell_capacities(snapshot, s.serving, s.location, s.direction);
        Self::build(
            poi,
            method,
            s.location,
            s.direction.azimuth,
            s.direction.polar,
            &snapshot.station(s.serving).id,
            s.objective,
            s.uav_capacity,
            s.feasible,
            s.relaxation_applied,
            &s.slacks,
            &caps,
        )
    }

    pub fn from_comparison(poi: usize, serving: &str, r: &ComparisonRow) -> Self {
        Self::build(
            Some(poi),
            &r.method,
            r.location,
            r.direction.azimuth,
            r.direction.polar,
            serving,
            r.objective,
            r.uav_capacity,
            r.feasible,
            r.relaxation_applied,
            &r.slacks,
            &r.cell_capacities,
        )
    }

    fn csv_header(cell_ids: &[String]) -> String {
        let mut h = String::from(
            "poi,method,x,y,z,azimuth,polar,serving,objective,uav_capacity,feasible,relaxation,\
             slack_neighbor_sinr_db,slack_uav_qos_db,slack_distance_m,slack_altitude_m",
        );
        for id in cell_ids {
            let _ = write!(h, ",cap_{id}");
        }
        h
    }

    fn csv_line(&self) -> String {
        let mut cells = vec![
            self.poi.map(|p| p.to_string()).unwrap_or_default(),
            self.method.clone(),
            format_float(self.x),
            format_float(self.y),
            format_float(self.z),
            format_float(self.azimuth),
            format_float(self.polar),
            self.serving.clone(),
            format_float(self.objective),
            format_float(self.uav_capacity),
            self.feasible.to_string(),
            format_float(self.relaxation),
            opt_cell(self.slack_neighbor_sinr_db),
            opt_cell(self.slack_uav_qos_db),
            opt_cell(self.slack_distance_m),
            opt_cell(self.slack_altitude_m),
        ];
        cells.extend(self.cell_capacities.iter().map(|c| format_float(*c)));
        cells.join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub metadata: ReportMetadata,
    pub cell_ids: Vec<String>,
    pub solution: SolutionRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub metadata: ReportMetadata,
    pub grid: GridSpec,
    pub cell_ids: Vec<String>,
    pub solution: SolutionRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_objective: f64,
    pub feasible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub pois: usize,
    /// Mean over POIs of Opt's relative gain over the strongest baseline, %.
    pub mean_gain_percent: f64,
    /// Mean over POIs of Opt's absolute gain over the strongest baseline, bits/s.
    pub mean_gain: f64,
    pub methods: Vec<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metadata: ReportMetadata,
    pub cell_ids: Vec<String>,
    pub pois: Vec<Location3D>,
    pub rows: Vec<SolutionRow>,
    pub summary: ComparisonSummary,
}

impl ComparisonReport {
    /// `gains` holds `(relative %, absolute)` per POI.
    pub fn new(
        metadata: ReportMetadata,
        cell_ids: Vec<String>,
        pois: &[Location3D],
        rows: Vec<SolutionRow>,
        gains: &[(f64, f64)],
    ) -> Self {
        let n = gains.len().max(1) as f64;
        let mut methods: Vec<MethodSummary> = Vec::new();
        for row in &rows {
            if !methods.iter().any(|m| m.method == row.method) {
                let mine: Vec<&SolutionRow> = rows.iter().filter(|r| r.method == row.method).collect();
                methods.push(MethodSummary {
                    method: row.method.clone(),
                    mean_objective: round_sig(mine.iter().map(|r| r.objective).sum::<f64>() / mine.len() as f64),
                    feasible: mine.iter().filter(|r| r.feasible).count(),
                });
            }
        }
        Self {
            metadata,
            cell_ids,
            pois: pois
                .iter()
                .map(|p| Location3D::new(round_sig(p.x), round_sig(p.y), round_sig(p.z)))
                .collect(),
            rows,
            summary: ComparisonSummary {
                pois: gains.len(),
                mean_gain_percent: round_sig(gains.iter().map(|g| g.0).sum::<f64>() / n),
                mean_gain: round_sig(gains.iter().map(|g| g.1).sum::<f64>() / n),
                methods,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub time: f64,
    pub objective: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub azimuth: f64,
    pub polar: f64,
    pub serving: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub azimuth: f64,
    pub polar: f64,
    pub expected_uav_capacity: f64,
    pub relaxation: f64,
    pub objective: f64,
    pub feasible: bool,
    pub serving: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StalenessRow {
    pub stale_objective: f64,
    pub fresh_objective: f64,
    pub gap_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineReportFile {
    pub metadata: ReportMetadata,
    pub samples: Vec<SampleRow>,
    pub intervals: Vec<IntervalRow>,
    pub events: Vec<EventMarker>,
    pub staleness: Option<StalenessRow>,
}

impl TimelineReportFile {
    pub fn new(metadata: ReportMetadata, report: &TimelineReport, staleness: Option<Staleness>) -> Self {
        Self {
            metadata,
            samples: report
                .samples
                .iter()
                .map(|s| SampleRow {
                    time: round_sig(s.time),
                    objective: round_sig(s.objective),
                    x: round_sig(s.location.x),
                    y: round_sig(s.location.y),
                    z: round_sig(s.location.z),
                    azimuth: round_sig(s.direction.azimuth),
                    polar: round_sig(s.direction.polar),
                    serving: s.serving.clone(),
                })
                .collect(),
            intervals: report
                .intervals
                .iter()
                .map(|i| IntervalRow {
                    time: round_sig(i.time),
                    x: round_sig(i.response.location.x),
                    y: round_sig(i.response.location.y),
                    z: round_sig(i.response.location.z),
                    azimuth: round_sig(i.response.direction.azimuth),
                    polar: round_sig(i.response.direction.polar),
                    expected_uav_capacity: round_sig(i.response.expected_uav_capacity),
                    relaxation: round_sig(i.response.relaxation),
                    objective: round_sig(i.objective),
                    feasible: i.feasible,
                    serving: i.serving.clone(),
                })
                .collect(),
            events: report
                .events
                .iter()
                .map(|e| EventMarker {
                    time: round_sig(e.time),
                    description: e.description.clone(),
                })
                .collect(),
            staleness: staleness.map(|s| StalenessRow {
                stale_objective: round_sig(s.stale_objective),
                fresh_objective: round_sig(s.fresh_objective),
                gap_percent: round_sig(s.gap_percent),
            }),
        }
    }
}

const TIMELINE_HEADER: &str = "record,time,objective,x,y,z,azimuth,polar,serving,feasible,relaxation,expected_uav_capacity,note";

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Solve(SolveReport),
    Simulate(TimelineReportFile),
    Compare(ComparisonReport),
    Oracle(OracleReport),
}

impl Report {
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => {
                let mut s = match self {
                    Report::Solve(r) => serde_json::to_string_pretty(r),
                    Report::Simulate(r) => serde_json::to_string_pretty(r),
                    Report::Compare(r) => serde_json::to_string_pretty(r),
                    Report::Oracle(r) => serde_json::to_string_pretty(r),
                }
                .expect("reports serialize");
                s.push('\n');
                s
            }
            ReportFormat::Csv => self.render_csv(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let mut line = |l: String| {
            out.push_str(&l);
            out.push('\n');
        };
        match self {
            Report::Solve(r) => {
                line(SolutionRow::csv_header(&r.cell_ids));
                line(r.solution.csv_line());
            }
            Report::Oracle(r) => {
                line(SolutionRow::csv_header(&r.cell_ids));
                line(r.solution.csv_line());
            }
            Report::Compare(r) => {
                line(SolutionRow::csv_header(&r.cell_ids));
                for row in &r.rows {
                    line(row.csv_line());
                }
            }
            Report::Simulate(r) => {
                line(TIMELINE_HEADER.to_string());
                // chronological; at equal times events come before solves before samples
                let mut rows: Vec<(f64, u8, String)> = Vec::new();
                for e in &r.events {
                    rows.push((e.time, 0, format!("event,{},,,,,,,,,,,{}", format_float(e.time), csv_text(&e.description))));
                }
                for i in &r.intervals {
                    rows.push((
                        i.time,
                        1,
                        format!(
                            "solve,{},{},{},{},{},{},{},{},{},{},{},",
                            format_float(i.time),
                            format_float(i.objective),
                            format_float(i.x),
                            format_float(i.y),
                            format_float(i.z),
                            format_float(i.azimuth),
                            format_float(i.polar),
                            csv_text(&i.serving),
                            i.feasible,
                            format_float(i.relaxation),
                            format_float(i.expected_uav_capacity),
                        ),
                    ));
                }
                for s in &r.samples {
                    rows.push((
                        s.time,
                        2,
                        format!(
                            "sample,{},{},{},{},{},{},{},{},,,,",
                            format_float(s.time),
                            format_float(s.objective),
                            format_float(s.x),
                            format_float(s.y),
                            format_float(s.z),
                            format_float(s.azimuth),
                            format_float(s.polar),
                            csv_text(&s.serving),
                        ),
                    ));
                }
                rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for (_, _, l) in rows {
                    line(l);
                }
            }
        }
        out
    }
}

pub fn write_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    std::fs::write(path, report.render(format))?;
    Ok(())
}

/// Reads a JSON report written by [`write_report`].
pub fn read_json_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CdcpError::Parse(e.to_string()))
}
