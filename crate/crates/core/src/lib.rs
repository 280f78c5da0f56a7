//! Placement and transmit-direction control for a cellular-connected drone
//! streaming uplink video, maximizing aggregate uplink capacity of the
//! surrounding cells.

pub mod baselines;
pub mod cli;
pub mod controlloop;
pub mod error;
pub mod geometry;
pub mod netmodel;
pub mod oracle;
pub mod radio;
pub mod scenario;
pub mod solver;

pub use error::{CdcpError, Result};
pub use geometry::{Direction, FeasibleRegion, Location3D};
pub use netmodel::{AppRequest, BaseStation, CellPower, CellState, NetworkSnapshot};
pub use solver::{solve_cdcp, Solution, SolverConfig};
