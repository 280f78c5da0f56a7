//! Scenario files, the bundled scenarios and result reports.
//!
//! A scenario file is JSON. Lengths are in the declared unit (`m` or `ft`)
//! and converted to meters on load; everything else is SI or dB.
//!
//! ```json
//! {
//!   "name": "demo",
//!   "units": "ft",
//!   "seed": 7,
//!   "stations": [
//!     {"id": "a", "position": {"x": 0, "y": 0, "z": 100}, "bandwidth": 1e8, "load": 12}
//!   ],
//!   "request": {
//!     "poi": {"x": 300, "y": 0, "z": 200}, "dis_max": 500,
//!     "rate_app": 5e6, "min_altitude": 65, "sinr_min": 25
//!   }
//! }
//! ```
//!
//! Optional top-level keys: `pathloss` (default for every station), `rx_psd`,
//! `load_saturation`, `noise`, `uav` (`tx_power`, `antenna`), `loop`,
//! `events`, `solver`. Stations may override `pathloss` and `power`.

mod report;
mod sampling;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controlloop::{validate_events, EventKind, LoopConfig, LoopState, TimelineEvent};
use crate::error::{CdcpError, Result};
use crate::geometry::{Location3D, FOOT};
use crate::netmodel::{
    AppRequest, BaseStation, CellPower, CellState, NetworkSnapshot, DEFAULT_LOAD_SATURATION, DEFAULT_RX_PSD,
};
use crate::radio::{AntennaPattern, NoiseModel, PathLossParams, UE_MAX_TX_POWER_DBM};
use crate::solver::SolverConfig;

pub use report::{
    format_float, read_json_report, round_sig, write_report, ComparisonReport, ComparisonSummary, IntervalRow,
    MethodSummary, OracleReport, Report, ReportFormat, ReportMetadata, SampleRow, SolutionRow, SolveReport,
    StalenessRow, TimelineReportFile,
};
pub use sampling::{convex_hull, sample_pois};

/// Names accepted wherever a scenario path is expected.
pub const BUNDLED: [&str; 3] = ["rural", "suburban", "urban"];

pub fn bundled_source(name: &str) -> Option<&'static str> {
    match name {
        "rural" => Some(include_str!("../../scenarios/rural.json")),
        "suburban" => Some(include_str!("../../scenarios/suburban.json")),
        "urban" => Some(include_str!("../../scenarios/urban.json")),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    M,
    Ft,
}

impl Units {
    fn scale(self) -> f64 {
        match self {
            Units::M => 1.0,
            Units::Ft => FOOT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub id: String,
    pub position: Location3D,
    /// Hz.
    pub bandwidth: f64,
    pub load: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathloss: Option<PathLossParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<CellPower>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavSpec {
    #[serde(default = "default_tx_power")]
    pub tx_power: f64,
    #[serde(default)]
    pub antenna: AntennaPattern,
}

impl Default for UavSpec {
    fn default() -> Self {
        Self {
            tx_power: UE_MAX_TX_POWER_DBM,
            antenna: AntennaPattern::default(),
        }
    }
}

fn default_tx_power() -> f64 {
    UE_MAX_TX_POWER_DBM
}

fn default_rx_psd() -> f64 {
    DEFAULT_RX_PSD
}

fn default_load_saturation() -> f64 {
    DEFAULT_LOAD_SATURATION
}

/// On-disk scenario, as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub seed: u64,
    pub stations: Vec<StationSpec>,
    #[serde(default)]
    pub pathloss: PathLossParams,
    /// Received uplink PSD of a fully loaded cell, dBm/Hz.
    #[serde(default = "default_rx_psd")]
    pub rx_psd: f64,
    #[serde(default = "default_load_saturation")]
    pub load_saturation: f64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub uav: UavSpec,
    pub request: AppRequest,
    #[serde(default, rename = "loop")]
    pub loop_config: LoopConfig,
    #[serde(default)]
    pub events: Vec<TimelineEvent>,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CdcpError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files serialize")
    }

    /// Same scenario with every length in meters.
    pub fn in_meters(&self) -> Self {
        let k = self.units.scale();
        let loc = |l: Location3D| Location3D::new(l.x * k, l.y * k, l.z * k);
        let pathloss = |p: &PathLossParams| {
            let mut p = p.clone();
            for band in &mut p.alpha_bands {
                band.altitude *= k;
            }
            p
        };
        let request = |r: &AppRequest| AppRequest {
            poi: loc(r.poi),
            dis_max: r.dis_max * k,
            min_altitude: r.min_altitude * k,
            ..*r
        };
        Self {
            units: Units::M,
            stations: self
                .stations
                .iter()
                .map(|s| StationSpec {
                    position: loc(s.position),
                    pathloss: s.pathloss.as_ref().map(pathloss),
                    ..s.clone()
                })
                .collect(),
            pathloss: pathloss(&self.pathloss),
            request: request(&self.request),
            events: self
                .events
                .iter()
                .map(|e| TimelineEvent {
                    time: e.time,
                    kind: match &e.kind {
                        EventKind::RequestChange { request: r } => EventKind::RequestChange { request: request(r) },
                        other => other.clone(),
                    },
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// A validated scenario in meters.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Canonical form: meters, defaults filled in.
    pub file: ScenarioFile,
    pub snapshot: NetworkSnapshot,
    pub request: AppRequest,
    pub loop_config: LoopConfig,
    pub events: Vec<TimelineEvent>,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Scenario {
    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        let file = file.in_meters();
        if file.stations.is_empty() {
            return Err(CdcpError::invalid("stations", "at least one station is required"));
        }
        if !file.rx_psd.is_finite() {
            return Err(CdcpError::invalid("rx_psd", "must be finite"));
        }
        let cells = file
            .stations
            .iter()
            .map(|s| {
                (
                    BaseStation {
                        id: s.id.clone(),
                        location: s.position,
                        bandwidth: s.bandwidth,
                        pathloss: s.pathloss.clone().unwrap_or_else(|| file.pathloss.clone()),
                    },
                    CellState {
                        load: s.load,
                        power: s.power.unwrap_or(CellPower::RxPsd(file.rx_psd)),
                    },
                )
            })
            .collect();
        let snapshot = NetworkSnapshot::with_load_saturation(
            cells,
            file.noise,
            file.uav.tx_power,
            file.uav.antenna,
            file.load_saturation,
        )?;
        file.request.validate()?;
        file.loop_config.validate()?;
        file.solver.validate()?;
        validate_events(&snapshot, &file.events, file.loop_config.horizon)?;
        let solver = SolverConfig {
            rng_seed: file.seed,
            ..file.solver.clone()
        };
        Ok(Self {
            request: file.request,
            loop_config: file.loop_config,
            events: file.events.clone(),
            seed: file.seed,
            solver,
            snapshot,
            file,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_file(&ScenarioFile::parse(text)?)
    }

    /// Replaces the seed used for POI sampling and the solver's hops.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.file.seed = seed;
        self.solver.rng_seed = seed;
        self
    }

    pub fn loop_state(&self) -> LoopState {
        LoopState {
            snapshot: self.snapshot.clone(),
            request: self.request,
        }
    }

    /// Hex SHA-256 of the canonical scenario plus `extra` (command parameters).
    pub fn config_hash(&self, extra: &str) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_string(&self.file).expect("scenario files serialize"));
        h.update(extra.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Loads a scenario file, or a bundled scenario by name when no such file
/// exists.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    if !path.exists() {
        if let Some(src) = path.to_str().and_then(bundled_source) {
            return Scenario::parse(src);
        }
    }
    Scenario::parse(&std::fs::read_to_string(path)?)
}

pub fn bundled(name: &str) -> Result<Scenario> {
    let src = bundled_source(name).ok_or_else(|| CdcpError::invalid("scenario", format!("no bundled scenario `{name}`")))?;
    Scenario::parse(src)
}

pub fn write_scenario(file: &ScenarioFile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, file.to_json() + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "stations": [
            {"id": "a", "position": {"x": 0, "y": 0, "z": 30}, "bandwidth": 1e7, "load": 4},
            {"id": "b", "position": {"x": 1500, "y": 0, "z": 30}, "bandwidth": 1e7, "load": 4}
        ],
        "request": {"poi": {"x": 100, "y": 0, "z": 60}, "dis_max": 50, "rate_app": 1e6, "min_altitude": 20, "sinr_min": 5}
    }"#;

    #[test]
    fn bundled_loads_match() {
        let rural = bundled("rural").unwrap();
        let loads: Vec<f64> = (0..rural.snapshot.len()).map(|i| rural.snapshot.state(i).load).collect();
        assert_eq!(loads, [57.0, 108.0, 36.0, 147.0]);
        let suburban = bundled("suburban").unwrap();
        let loads: Vec<f64> = (0..suburban.snapshot.len()).map(|i| suburban.snapshot.state(i).load).collect();
        assert_eq!(loads, [48.0, 135.0, 27.0, 36.0, 357.0, 261.0, 168.0]);
        let urban = bundled("urban").unwrap();
        assert_eq!(urban.snapshot.len(), 23);
        assert!((urban.request.min_altitude - 50.292).abs() < 1e-9);
        assert!((rural.request.min_altitude - 65.0 * FOOT).abs() < 1e-9);
        assert!((rural.request.dis_max - 500.0 * FOOT).abs() < 1e-9);
    }

    #[test]
    fn round_trip_identity() {
        for name in BUNDLED {
            let f = ScenarioFile::parse(bundled_source(name).unwrap()).unwrap();
            assert_eq!(ScenarioFile::parse(&f.to_json()).unwrap(), f);
            let s = Scenario::from_file(&f).unwrap();
            assert_eq!(ScenarioFile::parse(&s.file.to_json()).unwrap(), s.file);
            assert_eq!(Scenario::from_file(&s.file).unwrap().file, s.file);
        }
    }

    #[test]
    fn feet_are_converted() {
        let text = MINIMAL.replace(r#""name": "t","#, r#""name": "t", "units": "ft","#);
        let s = Scenario::parse(&text).unwrap();
        assert!((s.request.dis_max - 50.0 * FOOT).abs() < 1e-12);
        assert!((s.snapshot.station(1).location.x - 1500.0 * FOOT).abs() < 1e-9);
        assert_eq!(s.file.units, Units::M);
    }

    #[test]
    fn validation_errors_name_the_key() {
        let err = Scenario::parse(&MINIMAL.replace(r#""load": 4}"#, r#""load": 4, "colour": 1}"#)).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        assert!(err.is_validation());

        let err = Scenario::parse(&MINIMAL.replace(r#""id": "b""#, r#""id": "a""#)).unwrap_err();
        assert!(matches!(err, CdcpError::DuplicateCell(_)));

        let err = Scenario::parse(&MINIMAL.replace(r#""load": 4}"#, r#""load": -1}"#)).unwrap_err();
        assert!(err.to_string().contains("load"));

        let err = Scenario::parse(&MINIMAL.replace(r#""dis_max": 50"#, r#""dis_max": 0"#)).unwrap_err();
        assert!(err.to_string().contains("dis_max"), "{err}");

        let err = Scenario::parse(&MINIMAL.replace(r#""min_altitude": 20"#, r#""min_altitude": 500"#)).unwrap_err();
        assert!(matches!(err, CdcpError::DegenerateRegion { .. }));
    }

    #[test]
    fn loads_bundled_by_name_and_files_from_disk() {
        assert_eq!(load_scenario("rural").unwrap().snapshot.len(), 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = Scenario::parse(MINIMAL).unwrap();
        write_scenario(&s.file, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap().file, s.file);
        assert!(matches!(load_scenario(dir.path().join("missing.json")), Err(CdcpError::Io(_))));
    }

    #[test]
    fn config_hash_tracks_inputs() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.config_hash("x"), s.config_hash("x"));
        assert_ne!(s.config_hash("x"), s.config_hash("y"));
        assert_ne!(s.config_hash("x"), s.clone().with_seed(9).config_hash("x"));
        assert_eq!(s.config_hash("").len(), 64);
    }
}
