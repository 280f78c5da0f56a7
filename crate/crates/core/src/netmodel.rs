//! Long-run average network state and the control-problem quantities built
//! on it: bandwidth shares, aggregate cell power, drone and neighbor SINR,
//! the capacity objective and the constraint slacks.

use serde::{Deserialize, Serialize};

use crate::error::{CdcpError, Result};
use crate::geometry::{distance, offset_to_vector, Direction, FeasibleRegion, Location3D};
use crate::radio::{
    antenna_gain, dbm_to_mw, noise_power, AntennaPattern, NoiseModel, PathLossParams,
    UE_MAX_TX_POWER_DBM,
};

/// Received uplink PSD of a fully loaded cell, dBm/Hz.
pub const DEFAULT_RX_PSD: f64 = -152.5;
/// Load at which a cell's aggregate uplink power saturates.
pub const DEFAULT_LOAD_SATURATION: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub id: String,
    pub location: Location3D,
    /// Carrier bandwidth in Hz.
    pub bandwidth: f64,
    pub pathloss: PathLossParams,
}

/// How the aggregate received uplink power of a cell is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellPower {
    /// Average received PSD in dBm/Hz, scaled by load saturation.
    RxPsd(f64),
    /// Explicit aggregate power over the band, dBm.
    AggPower(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    /// Average number of connected UEs; may be fractional.
    pub load: f64,
    pub power: CellPower,
}

impl CellState {
    pub fn with_load(load: f64) -> Self {
        Self {
            load,
            power: CellPower::RxPsd(DEFAULT_RX_PSD),
        }
    }
}

/// Aggregate uplink power at a cell over `bandwidth`, in dBm. An empty cell
/// yields `-inf`.
pub fn cell_agg_power(state: &CellState, bandwidth: f64, load_saturation: f64) -> f64 {
    match state.power {
        CellPower::AggPower(p) => p,
        CellPower::RxPsd(psd) => {
            let fill = (state.load / load_saturation).min(1.0);
            if fill <= 0.0 {
                f64::NEG_INFINITY
            } else {
                psd + 10.0 * bandwidth.log10() + 10.0 * fill.log10()
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct CellCache {
    agg_mw: f64,
    noise_full_mw: f64,
    shadowing_db: f64,
}

/// Immutable picture of every cell in one control interval.
#[derive(Debug, Clone)]
pub struct NetworkSnapshot {
    cells: Vec<(BaseStation, CellState)>,
    noise: NoiseModel,
    uav_tx_power: f64,
    uav_antenna: AntennaPattern,
    load_saturation: f64,
    cache: Vec<CellCache>,
}

impl NetworkSnapshot {
    pub fn new(
        cells: Vec<(BaseStation, CellState)>,
        noise: NoiseModel,
        uav_tx_power: f64,
        uav_antenna: AntennaPattern,
    ) -> Result<Self> {
        Self::with_load_saturation(cells, noise, uav_tx_power, uav_antenna, DEFAULT_LOAD_SATURATION)
    }

    pub fn with_load_saturation(
        cells: Vec<(BaseStation, CellState)>,
        noise: NoiseModel,
        uav_tx_power: f64,
        uav_antenna: AntennaPattern,
        load_saturation: f64,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(CdcpError::invalid("stations", "at least one station is required"));
        }
        if uav_tx_power > UE_MAX_TX_POWER_DBM {
            return Err(CdcpError::ExceedsPowerClass(uav_tx_power));
        }
        if uav_tx_power.is_nan() {
            return Err(CdcpError::invalid("uav.tx_power", "must be a number"));
        }
        if !(load_saturation > 0.0) {
            return Err(CdcpError::invalid("load_saturation", "must be positive"));
        }
        noise.validate()?;
        uav_antenna.validate()?;
        for (i, (bs, state)) in cells.iter().enumerate() {
            if cells[..i].iter().any(|(other, _)| other.id == bs.id) {
                return Err(CdcpError::DuplicateCell(bs.id.clone()));
            }
            if !bs.location.is_finite() {
                return Err(CdcpError::invalid(format!("stations[{}].position", bs.id), "must be finite"));
            }
            if !(bs.bandwidth > 0.0) || !bs.bandwidth.is_finite() {
                return Err(CdcpError::invalid(format!("stations[{}].bandwidth", bs.id), "must be positive"));
            }
            if !(state.load >= 0.0) || !state.load.is_finite() {
                return Err(CdcpError::invalid(format!("stations[{}].load", bs.id), "must be non-negative"));
            }
            bs.pathloss.validate()?;
        }
        let cache = cells
            .iter()
            .map(|(bs, state)| CellCache {
                agg_mw: dbm_to_mw(cell_agg_power(state, bs.bandwidth, load_saturation)),
                noise_full_mw: dbm_to_mw(noise_power(&noise, bs.bandwidth)),
                shadowing_db: bs.pathloss.shadowing_db(link_key(&bs.id)),
            })
            .collect();
        Ok(Self {
            cells,
            noise,
            uav_tx_power,
            uav_antenna,
            load_saturation,
            cache,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[(BaseStation, CellState)] {
        &self.cells
    }

    pub fn station(&self, index: usize) -> &BaseStation {
        &self.cells[index].0
    }

    pub fn state(&self, index: usize) -> &CellState {
        &self.cells[index].1
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.cells.iter().position(|(bs, _)| bs.id == id)
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn uav_tx_power(&self) -> f64 {
        self.uav_tx_power
    }

    pub fn uav_antenna(&self) -> &AntennaPattern {
        &self.uav_antenna
    }

    pub fn load_saturation(&self) -> f64 {
        self.load_saturation
    }

    /// Same topology with new per-cell loads.
    pub fn with_loads(&self, loads: &[f64]) -> Result<Self> {
        if loads.len() != self.cells.len() {
            return Err(CdcpError::invalid("loads", "one load per station is required"));
        }
        let cells = self
            .cells
            .iter()
            .zip(loads)
            .map(|((bs, state), &load)| (bs.clone(), CellState { load, ..*state }))
            .collect();
        Self::with_load_saturation(
            cells,
            self.noise,
            self.uav_tx_power,
            self.uav_antenna,
            self.load_saturation,
        )
    }

    /// Drone power received at cell `j`, dBm. Coincident positions count as
    /// boresight.
    pub fn uav_power_at(&self, j: usize, l: Location3D, dir: Direction) -> f64 {
        self.link_power_dbm(j, l, dir.unit_vector())
    }

    fn link_power_dbm(&self, j: usize, l: Location3D, unit: [f64; 3]) -> f64 {
        let bs = &self.cells[j].0;
        let v = l.offset_to(&bs.location);
        let d = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let offset = if d > 0.0 { offset_to_vector(unit, v) } else { 0.0 };
        self.uav_tx_power - bs.pathloss.median_loss_db(d, Some(l.z)) - self.cache[j].shadowing_db
            + antenna_gain(&self.uav_antenna, offset)
    }
}

/// Stable 64-bit key of a station id (FNV-1a), used to key shadowing draws.
pub fn link_key(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// The drone's streaming request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppRequest {
    pub poi: Location3D,
    /// Maximum distance from the POI, meters.
    pub dis_max: f64,
    /// Required uplink rate, bits/s.
    pub rate_app: f64,
    pub min_altitude: f64,
    /// SINR floor protecting neighbor cells, dB.
    pub sinr_min: f64,
}

impl AppRequest {
    pub fn region(&self) -> FeasibleRegion {
        FeasibleRegion {
            center: self.poi,
            radius: self.dis_max,
            min_altitude: self.min_altitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_app >= 0.0) || !self.rate_app.is_finite() {
            return Err(CdcpError::invalid("request.rate", "must be non-negative"));
        }
        if !self.sinr_min.is_finite() {
            return Err(CdcpError::invalid("request.sinr_min", "must be finite"));
        }
        self.region().validate()
    }
}

/// Station with the strongest boresight signal from `location`; ties go to
/// the lexicographically lowest id.
pub fn select_serving_cell(snapshot: &NetworkSnapshot, location: Location3D) -> usize {
    let mut best = 0;
    let mut best_power = f64::NEG_INFINITY;
    for (j, (bs, _)) in snapshot.cells.iter().enumerate() {
        let d = distance(location, bs.location);
        let power = -bs.pathloss.median_loss_db(d, Some(location.z)) - snapshot.cache[j].shadowing_db;
        let better = power > best_power
            || (power == best_power && bs.id < snapshot.cells[best].0.id);
        if better {
            best = j;
            best_power = power;
        }
    }
    best
}

/// Average bandwidth share of a user in cell `serving`; the drone counts as
/// one extra user when present.
pub fn avg_bandwidth_share(snapshot: &NetworkSnapshot, serving: usize, uav_present: bool) -> f64 {
    let (bs, state) = &snapshot.cells[serving];
    let users = state.load + if uav_present { 1.0 } else { 0.0 };
    if users > 0.0 {
        bs.bandwidth / users
    } else {
        bs.bandwidth
    }
}

/// Linear SINR needed to carry `rate_app` over `share` Hz at the Shannon bound.
pub fn qos_to_sinr(rate_app: f64, share: f64) -> f64 {
    (rate_app / share).exp2() - 1.0
}

/// [`qos_to_sinr`] in dB, finite for any finite spectral efficiency.
pub fn qos_to_sinr_db(rate_app: f64, share: f64) -> f64 {
    let x = rate_app / share;
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x <= 1.0 {
        10.0 * (x * std::f64::consts::LN_2).exp_m1().log10()
    } else {
        10.0 * (x * std::f64::consts::LOG10_2 + (-(-x * std::f64::consts::LN_2).exp_m1()).log10())
    }
}

/// Shannon capacity in bits/s.
pub fn shannon_rate(bandwidth: f64, sinr: f64) -> f64 {
    bandwidth * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Drone SINR at its serving cell; ground-to-drone interference is ignored.
pub fn sinr_uav(snapshot: &NetworkSnapshot, serving: usize, l: Location3D, dir: Direction) -> f64 {
    let share = avg_bandwidth_share(snapshot, serving, true);
    let noise_mw = dbm_to_mw(noise_power(&snapshot.noise, share));
    dbm_to_mw(snapshot.uav_power_at(serving, l, dir)) / noise_mw
}

/// Average SINR of the ground users of neighbor cell `j` under drone
/// interference.
pub fn sinr_neighbor(snapshot: &NetworkSnapshot, j: usize, l: Location3D, dir: Direction) -> f64 {
    let c = &snapshot.cache[j];
    c.agg_mw / (c.noise_full_mw + dbm_to_mw(snapshot.uav_power_at(j, l, dir)))
}

/// Objective and SINR figures at one decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Drone capacity plus neighbor ground capacity, bits/s.
    pub objective: f64,
    pub uav_capacity: f64,
    pub uav_sinr_db: f64,
    /// Lowest SINR over loaded neighbor cells; `None` without such cells.
    pub min_neighbor_sinr_db: Option<f64>,
}

pub fn evaluate(snapshot: &NetworkSnapshot, serving: usize, l: Location3D, dir: Direction) -> Evaluation {
    let unit = dir.unit_vector();
    let share = avg_bandwidth_share(snapshot, serving, true);
    let noise_share_mw = dbm_to_mw(noise_power(&snapshot.noise, share));
    let uav_sinr = dbm_to_mw(snapshot.link_power_dbm(serving, l, unit)) / noise_share_mw;
    let uav_capacity = shannon_rate(share, uav_sinr);

    let mut objective = uav_capacity;
    let mut min_sinr: Option<f64> = None;
    for (j, (bs, state)) in snapshot.cells.iter().enumerate() {
        if j == serving || state.load <= 0.0 {
            continue;
        }
        let c = &snapshot.cache[j];
        let sinr = c.agg_mw / (c.noise_full_mw + dbm_to_mw(snapshot.link_power_dbm(j, l, unit)));
        objective += shannon_rate(bs.bandwidth, sinr);
        min_sinr = Some(min_sinr.map_or(sinr, |m| m.min(sinr)));
    }
    Evaluation {
        objective,
        uav_capacity,
        uav_sinr_db: 10.0 * uav_sinr.log10(),
        min_neighbor_sinr_db: min_sinr.map(|s| 10.0 * s.log10()),
    }
}

/// Uplink capacity objective in bits/s: the drone's share plus every loaded
/// neighbor cell. Serving-cell ground users are a constant and excluded.
pub fn evaluate_objective(snapshot: &NetworkSnapshot, serving: usize, l: Location3D, dir: Direction) -> f64 {
    evaluate(snapshot, serving, l, dir).objective
}

/// Per-cell ground capacity in bits/s. Neighbors carry their objective term;
/// the serving cell carries its interference-free ground capacity, which the
/// objective treats as a constant. Empty cells are zero.
pub fn cell_capacities(snapshot: &NetworkSnapshot, serving: usize, l: Location3D, dir: Direction) -> Vec<f64> {
    snapshot
        .cells
        .iter()
        .enumerate()
        .map(|(j, (bs, state))| {
            if state.load <= 0.0 {
                0.0
            } else if j == serving {
                let c = &snapshot.cache[j];
                shannon_rate(bs.bandwidth, c.agg_mw / c.noise_full_mw)
            } else {
                shannon_rate(bs.bandwidth, sinr_neighbor(snapshot, j, l, dir))
            }
        })
        .collect()
}

/// SINR thresholds for one request against one serving cell, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub sinr_min_db: f64,
    pub sinr_app_db: f64,
}

impl Thresholds {
    pub fn new(snapshot: &NetworkSnapshot, serving: usize, request: &AppRequest) -> Self {
        let share = avg_bandwidth_share(snapshot, serving, true);
        Self {
            sinr_min_db: request.sinr_min,
            sinr_app_db: qos_to_sinr_db(request.rate_app, share),
        }
    }

    pub fn relaxed(&self, relaxation_db: f64) -> Self {
        Self {
            sinr_app_db: self.sinr_app_db - relaxation_db,
            ..*self
        }
    }
}

/// Constraint slacks; the point is feasible when every slack is `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Worst neighbor SINR minus the floor, dB; `None` without loaded neighbors.
    pub neighbor_sinr_db: Option<f64>,
    /// Drone SINR minus the QoS threshold, dB.
    pub uav_qos_db: f64,
    /// `dis_max` minus the distance to the POI, meters.
    pub distance_m: f64,
    /// Altitude above the floor, meters.
    pub altitude_m: f64,
    pub feasible: bool,
}

impl ConstraintReport {
    pub fn from_evaluation(eval: &Evaluation, thresholds: &Thresholds, request: &AppRequest, l: Location3D) -> Self {
        let neighbor = eval.min_neighbor_sinr_db.map(|s| s - thresholds.sinr_min_db);
        let uav_qos = eval.uav_sinr_db - thresholds.sinr_app_db;
        let distance_m = request.dis_max - distance(l, request.poi);
        let altitude_m = l.z - request.min_altitude;
        let feasible = neighbor.map_or(true, |s| s >= 0.0)
            && uav_qos >= 0.0
            && distance_m >= 0.0
            && altitude_m >= 0.0;
        Self {
            neighbor_sinr_db: neighbor,
            uav_qos_db: uav_qos,
            distance_m,
            altitude_m,
            feasible,
        }
    }

    /// Sum of squared SINR violations in dB².
    pub fn sinr_violation_sq(&self) -> f64 {
        let n = self.neighbor_sinr_db.map_or(0.0, |s| (-s).max(0.0));
        let u = (-self.uav_qos_db).max(0.0);
        n * n + u * u
    }

    /// Total violation across all constraints (dB and meters mixed), used to
    /// rank infeasible candidates.
    pub fn total_violation(&self) -> f64 {
        self.neighbor_sinr_db.map_or(0.0, |s| (-s).max(0.0))
            + (-self.uav_qos_db).max(0.0)
            + (-self.distance_m).max(0.0)
            + (-self.altitude_m).max(0.0)
    }

    /// Lowest relaxation of the QoS threshold in dB that makes this point
    /// feasible, or `None` if another constraint is violated.
    pub fn required_relaxation(&self) -> Option<f64> {
        let others_ok = self.neighbor_sinr_db.map_or(true, |s| s >= 0.0)
            && self.distance_m >= 0.0
            && self.altitude_m >= 0.0;
        others_ok.then(|| (-self.uav_qos_db).max(0.0))
    }
}

pub fn evaluate_constraints(
    snapshot: &NetworkSnapshot,
    serving: usize,
    request: &AppRequest,
    l: Location3D,
    dir: Direction,
) -> ConstraintReport {
    let eval = evaluate(snapshot, serving, l, dir);
    let thresholds = Thresholds::new(snapshot, serving, request);
    ConstraintReport::from_evaluation(&eval, &thresholds, request, l)
}
