//! Link-level arithmetic: dB conversions, air-to-ground path loss, the drone
//! antenna pattern, received power and thermal noise.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CdcpError, Result};
use crate::geometry::{angular_offset, direction_to, distance, Direction, Location3D};

/// Maximum UE transmit power (power class 3).
pub const UE_MAX_TX_POWER_DBM: f64 = 23.0;

pub fn to_db(linear: f64) -> Result<f64> {
    if !(linear > 0.0) {
        return Err(CdcpError::NonPositiveLinear(linear));
    }
    Ok(10.0 * linear.log10())
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    from_db(dbm - 30.0)
}

pub fn watts_to_dbm(watts: f64) -> Result<f64> {
    Ok(to_db(watts)? + 30.0)
}

/// Linear milliwatts for a dBm value; `-inf` maps to zero.
pub(crate) fn dbm_to_mw(dbm: f64) -> f64 {
    from_db(dbm)
}

/// Path-loss exponent pinned at an altitude; values in between are
/// interpolated linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AltitudeBand {
    pub altitude: f64,
    pub alpha: f64,
}

/// Parameters of `L = α·10·log10(d) + β + X_σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadowing_seed: Option<u64>,
    /// Optional altitude-dependent exponent table; overrides `alpha` when set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha_bands: Vec<AltitudeBand>,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            alpha: 2.2,
            beta: 38.0,
            sigma: 0.0,
            shadowing_seed: None,
            alpha_bands: Vec::new(),
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(CdcpError::invalid("path_loss.alpha", "must be positive"));
        }
        if !self.beta.is_finite() {
            return Err(CdcpError::invalid("path_loss.beta", "must be finite"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(CdcpError::invalid("path_loss.sigma", "must be non-negative"));
        }
        for pair in self.alpha_bands.windows(2) {
            if !(pair[1].altitude > pair[0].altitude) {
                return Err(CdcpError::invalid(
                    "path_loss.alpha_bands",
                    "altitudes must be strictly increasing",
                ));
            }
        }
        if self.alpha_bands.iter().any(|b| !(b.alpha > 0.0)) {
            return Err(CdcpError::invalid("path_loss.alpha_bands", "alpha must be positive"));
        }
        Ok(())
    }

    /// Path-loss exponent for a drone at `altitude` meters.
    pub fn exponent_at(&self, altitude: f64) -> f64 {
        let bands = &self.alpha_bands;
        match bands.len() {
            0 => self.alpha,
            _ if altitude <= bands[0].altitude => bands[0].alpha,
            n if altitude >= bands[n - 1].altitude => bands[n - 1].alpha,
            _ => {
                let i = bands.partition_point(|b| b.altitude <= altitude);
                let (lo, hi) = (bands[i - 1], bands[i]);
                let t = (altitude - lo.altitude) / (hi.altitude - lo.altitude);
                lo.alpha + t * (hi.alpha - lo.alpha)
            }
        }
    }

    /// Shadowing term in dB for one drone-cell link. Zero without `sigma` or
    /// a seed; otherwise a normal draw keyed on `(seed, link)` so the value
    /// does not depend on evaluation order.
    pub fn shadowing_db(&self, link: u64) -> f64 {
        match self.shadowing_seed {
            Some(seed) if self.sigma > 0.0 => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ link);
                let z: f64 = StandardNormal.sample(&mut rng);
                self.sigma * z
            }
            _ => 0.0,
        }
    }

    /// Full loss for a link, with the exponent resolved at `altitude` (flat
    /// `alpha` when `None`). Distances below 1 m are clamped to 1 m.
    pub fn loss_db(&self, distance: f64, altitude: Option<f64>, link: u64) -> f64 {
        self.median_loss_db(distance, altitude) + self.shadowing_db(link)
    }

    /// Loss without the shadowing term.
    pub fn median_loss_db(&self, distance: f64, altitude: Option<f64>) -> f64 {
        let alpha = altitude.map_or(self.alpha, |h| self.exponent_at(h));
        alpha * 10.0 * distance.max(1.0).log10() + self.beta
    }
}

/// Path loss in dB with the flat exponent.
pub fn path_loss(distance: f64, params: &PathLossParams) -> f64 {
    params.loss_db(distance, None, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaKind {
    Directional,
    Omni,
}

/// Drone antenna: quadratic roll-off from boresight, floored at
/// `backlobe_floor` dB below the forward gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaPattern {
    pub kind: AntennaKind,
    pub forward_gain: f64,
    pub hpbw: f64,
    pub backlobe_floor: f64,
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self {
            kind: AntennaKind::Directional,
            forward_gain: 6.0,
            hpbw: PI / 2.0,
            backlobe_floor: 20.0,
        }
    }
}

impl AntennaPattern {
    pub fn omni(gain: f64) -> Self {
        Self {
            kind: AntennaKind::Omni,
            forward_gain: gain,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hpbw > 0.0 && self.hpbw <= PI) {
            return Err(CdcpError::invalid("antenna.hpbw", "must lie in (0, π]"));
        }
        if !(self.backlobe_floor > 0.0) {
            return Err(CdcpError::invalid("antenna.backlobe_floor", "must be positive"));
        }
        if !self.forward_gain.is_finite() {
            return Err(CdcpError::invalid("antenna.forward_gain", "must be finite"));
        }
        Ok(())
    }
}

/// Gain in dBi at `offset` radians from boresight.
pub fn antenna_gain(pattern: &AntennaPattern, offset: f64) -> f64 {
    match pattern.kind {
        AntennaKind::Omni => pattern.forward_gain,
        AntennaKind::Directional => {
            let rolloff = 12.0 * (offset / pattern.hpbw).powi(2);
            pattern.forward_gain - rolloff.min(pattern.backlobe_floor)
        }
    }
}

/// Power in dBm received at `bs` from a drone at `uav` transmitting toward
/// `dir`.
pub fn received_power(
    tx_power: f64,
    uav: Location3D,
    dir: Direction,
    bs: Location3D,
    pl: &PathLossParams,
    ant: &AntennaPattern,
) -> Result<f64> {
    if tx_power > UE_MAX_TX_POWER_DBM {
        return Err(CdcpError::ExceedsPowerClass(tx_power));
    }
    let toward_bs = direction_to(uav, bs)?;
    let gain = antenna_gain(ant, angular_offset(dir, toward_bs));
    Ok(tx_power - path_loss(distance(uav, bs), pl) + gain)
}

/// Thermal noise spectral density plus receiver noise figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub psd: f64,
    #[serde(default)]
    pub noise_figure: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            psd: -174.0,
            noise_figure: 5.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.psd < 0.0) || !self.psd.is_finite() {
            return Err(CdcpError::invalid("noise.psd", "must be a negative dBm/Hz value"));
        }
        if !self.noise_figure.is_finite() {
            return Err(CdcpError::invalid("noise.noise_figure", "must be finite"));
        }
        Ok(())
    }
}

/// Noise power in dBm over `bandwidth` Hz.
pub fn noise_power(model: &NoiseModel, bandwidth: f64) -> f64 {
    model.psd + model.noise_figure + 10.0 * bandwidth.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn flat(alpha: f64, beta: f64) -> PathLossParams {
        PathLossParams {
            alpha,
            beta,
            ..PathLossParams::default()
        }
    }

    #[test]
    fn db_examples() {
        assert_eq!(from_db(0.0), 1.0);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((watts_to_dbm(1.0).unwrap() - 30.0).abs() < 1e-12);
        assert!(to_db(0.0).is_err());
        assert!(to_db(-1.0).is_err());
        for x in -200..=200 {
            let x = f64::from(x);
            let back = to_db(from_db(x)).unwrap();
            assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0), "{x} -> {back}");
        }
    }

    #[test]
    fn path_loss_examples() {
        assert_eq!(path_loss(1.0, &flat(2.0, 40.0)), 40.0);
        assert!((path_loss(100.0, &flat(2.0, 40.0)) - 80.0).abs() < 1e-12);
        assert!((path_loss(10.0, &flat(3.7, 38.0)) - 75.0).abs() < 1e-12);
        // clamped below 1 m
        assert_eq!(path_loss(0.2, &flat(2.0, 40.0)), 40.0);
    }

    #[test]
    fn exponent_interpolates_between_bands() {
        let params = PathLossParams {
            alpha_bands: vec![
                AltitudeBand { altitude: 15.0, alpha: 2.9 },
                AltitudeBand { altitude: 30.0, alpha: 2.5 },
                AltitudeBand { altitude: 120.0, alpha: 2.0 },
            ],
            ..PathLossParams::default()
        };
        assert_eq!(params.exponent_at(0.0), 2.9);
        assert_eq!(params.exponent_at(500.0), 2.0);
        assert!((params.exponent_at(22.5) - 2.7).abs() < 1e-12);
        assert!((params.exponent_at(75.0) - 2.25).abs() < 1e-12);
        assert_eq!(PathLossParams::default().exponent_at(80.0), 2.2);
    }

    #[test]
    fn shadowing_is_seeded_and_keyed() {
        let params = PathLossParams {
            sigma: 6.0,
            shadowing_seed: Some(11),
            ..PathLossParams::default()
        };
        let a = params.shadowing_db(3);
        assert_eq!(a, params.shadowing_db(3));
        assert_ne!(a, params.shadowing_db(4));
        let unseeded = PathLossParams { shadowing_seed: None, ..params.clone() };
        assert_eq!(unseeded.shadowing_db(3), 0.0);
    }

    #[test]
    fn antenna_examples() {
        let ant = AntennaPattern::default();
        assert_eq!(antenna_gain(&ant, 0.0), 6.0);
        assert!((antenna_gain(&ant, PI / 4.0) - 3.0).abs() < 1e-12);
        assert_eq!(antenna_gain(&ant, PI), -14.0);
        assert_eq!(antenna_gain(&AntennaPattern::omni(0.0), 2.0), 0.0);
    }

    #[test]
    fn received_power_examples() {
        // 80 dB of loss: alpha 2, beta 40, d = 100 m, boresight
        let pl = flat(2.0, 40.0);
        let ant = AntennaPattern::default();
        let uav = Location3D::new(0.0, 0.0, 50.0);
        let bs = Location3D::new(100.0, 0.0, 50.0);
        let dir = direction_to(uav, bs).unwrap();
        let p = received_power(23.0, uav, dir, bs, &pl, &ant).unwrap();
        assert!((p + 51.0).abs() < 1e-12);

        let omni = AntennaPattern::omni(0.0);
        let reference = received_power(23.0, uav, dir, bs, &pl, &omni).unwrap();
        for k in 0..16 {
            let d = Direction::new(TAU * f64::from(k) / 16.0, PI * f64::from(k) / 16.0);
            assert_eq!(received_power(23.0, uav, d, bs, &pl, &omni).unwrap(), reference);
        }

        let far = Location3D::new(200.0, 0.0, 50.0);
        let p_far = received_power(23.0, uav, dir, far, &pl, &ant).unwrap();
        assert!((p - p_far - 6.0206).abs() < 1e-4);
        assert!((p - p_far - 20.0 * 2f64.log10()).abs() < 1e-12);

        assert!(matches!(
            received_power(24.0, uav, dir, bs, &pl, &ant),
            Err(CdcpError::ExceedsPowerClass(_))
        ));
        assert!(received_power(23.0, uav, dir, uav, &pl, &ant).is_err());
    }

    #[test]
    fn noise_examples() {
        let nf0 = NoiseModel { psd: -174.0, noise_figure: 0.0 };
        assert_eq!(noise_power(&nf0, 1.0), -174.0);
        assert!((noise_power(&nf0, 1e6) + 114.0).abs() < 1e-12);
        let nf5 = NoiseModel { psd: -174.0, noise_figure: 5.0 };
        assert!((noise_power(&nf5, 1e7) + 99.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn path_loss_strictly_increasing(d in 1.0..1e5f64, step in 1e-3..1e3f64, alpha in 0.5..5.0f64) {
            let pl = flat(alpha, 38.0);
            prop_assert!(path_loss(d + step, &pl) > path_loss(d, &pl));
        }

        #[test]
        fn gain_peaks_at_boresight(a in 0.0..PI, b in 0.0..PI, hpbw in 0.1..PI, floor in 1.0..40.0f64) {
            let ant = AntennaPattern { hpbw, backlobe_floor: floor, ..AntennaPattern::default() };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(antenna_gain(&ant, lo) >= antenna_gain(&ant, hi));
            prop_assert!(antenna_gain(&ant, 0.0) >= antenna_gain(&ant, a));
            if a > 1e-6 {
                prop_assert!(antenna_gain(&ant, 0.0) > antenna_gain(&ant, a));
            }
        }
    }
}
