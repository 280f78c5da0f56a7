#![allow(dead_code)]

use std::f64::consts::PI;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cdcp_core::geometry::{Direction, Location3D};
use cdcp_core::netmodel::{
    evaluate_objective, qos_to_sinr, select_serving_cell, shannon_rate, AppRequest, BaseStation, CellState,
    NetworkSnapshot,
};
use cdcp_core::radio::{antenna_gain, from_db, path_loss, to_db, AntennaKind, AntennaPattern, NoiseModel, PathLossParams};

pub type Station = (String, Location3D, f64);

pub fn build(stations: &[Station], sigma: f64) -> NetworkSnapshot {
    let cells = stations
        .iter()
        .map(|(id, loc, load)| {
            (
                BaseStation {
                    id: id.clone(),
                    location: *loc,
                    bandwidth: 1e7,
                    pathloss: PathLossParams {
                        sigma,
                        shadowing_seed: Some(11),
                        ..PathLossParams::default()
                    },
                },
                CellState::with_load(*load),
            )
        })
        .collect();
    NetworkSnapshot::new(cells, NoiseModel::default(), 23.0, AntennaPattern::default()).unwrap()
}

/// Seeded scenario with 1 to 4 stations: the serving site sits near the POI
/// and neighbors on a ring 900 to 2000 m out.
pub fn random_scenario(seed: u64) -> (NetworkSnapshot, AppRequest) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4usize);
    let poi = Location3D::new(rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0), rng.random_range(40.0..100.0));
    let mut stations = vec![("bs0".to_string(), Location3D::new(0.0, 0.0, rng.random_range(25.0..40.0)), rng.random_range(1.0..30.0))];
    for i in 1..n {
        let r = rng.random_range(900.0..2000.0);
        let t = rng.random_range(0.0..2.0 * PI);
        stations.push((
            format!("bs{i}"),
            Location3D::new(r * t.cos(), r * t.sin(), rng.random_range(25.0..40.0)),
            rng.random_range(1.0..30.0),
        ));
    }
    let request = AppRequest {
        poi,
        dis_max: rng.random_range(50.0..150.0),
        rate_app: 1e6,
        min_altitude: 20.0,
        sinr_min: 5.0,
    };
    (build(&stations, 0.0), request)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

pub fn db_round_trip(x: f64, db: f64) -> Result<(), TestCaseError> {
    let back = from_db(to_db(x).unwrap());
    prop_assert!(close(back, x, 1e-12), "{x} -> {back}");
    let again = to_db(from_db(db)).unwrap();
    prop_assert!(close(again, db, 1e-12) || (again - db).abs() < 1e-12, "{db} -> {again}");
    Ok(())
}

pub fn pathloss_monotone(d: f64, factor: f64, alpha: f64, beta: f64) -> Result<(), TestCaseError> {
    let p = PathLossParams { alpha, beta, ..PathLossParams::default() };
    prop_assert!(path_loss(d, &p) < path_loss(d * factor, &p));
    Ok(())
}

pub fn antenna_shape(a: f64, b: f64, gain: f64, hpbw: f64, floor: f64) -> Result<(), TestCaseError> {
    let ant = AntennaPattern { kind: AntennaKind::Directional, forward_gain: gain, hpbw, backlobe_floor: floor };
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    prop_assert!(antenna_gain(&ant, 0.0) >= antenna_gain(&ant, lo));
    prop_assert!(antenna_gain(&ant, lo) >= antenna_gain(&ant, hi));
    Ok(())
}

pub fn shannon_round_trip(rate: f64, share: f64) -> Result<(), TestCaseError> {
    let back = shannon_rate(share, qos_to_sinr(rate, share));
    prop_assert!(close(back, rate, 1e-9), "{rate} over {share}: {back}");
    Ok(())
}

pub fn qos_example() -> bool {
    qos_to_sinr(5e6, 2.5e6) == 3.0
}

pub fn stations_strategy() -> impl Strategy<Value = Vec<Station>> {
    prop::collection::vec(
        ((-2000.0..2000.0f64), (-2000.0..2000.0f64), (20.0..40.0f64), (0.0..40.0f64)),
        1..6,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (x, y, z, load))| (format!("c{i}"), Location3D::new(x, y, z), load))
            .collect()
    })
}

/// Rotating about a vertical axis and translating horizontally moves every
/// site, the drone and its beam together; the objective must not change.
pub fn rigid_invariance(
    stations: &[Station],
    l: Location3D,
    dir: Direction,
    theta: f64,
    shift: (f64, f64, f64),
    sigma: f64,
) -> Result<(), TestCaseError> {
    let (s, c) = theta.sin_cos();
    let map = |p: Location3D| Location3D::new(c * p.x - s * p.y + shift.0, s * p.x + c * p.y + shift.1, p.z + shift.2);
    let moved: Vec<Station> = stations.iter().map(|(id, p, w)| (id.clone(), map(*p), *w)).collect();
    let a = build(stations, sigma);
    let b = build(&moved, sigma);
    let serving = select_serving_cell(&a, l);
    let before = evaluate_objective(&a, serving, l, dir);
    let after = evaluate_objective(&b, serving, map(l), Direction::new(dir.azimuth + theta, dir.polar));
    prop_assert!(close(before, after, 1e-9), "{before} vs {after}");
    Ok(())
}

/// Renaming and reordering the cells must not change the objective.
pub fn relabel_invariance(stations: &[Station], l: Location3D, dir: Direction, rotate: usize) -> Result<(), TestCaseError> {
    let n = stations.len();
    let perm: Vec<usize> = (0..n).map(|i| (i + rotate) % n).collect();
    let renamed: Vec<Station> = perm
        .iter()
        .map(|&i| (format!("z{}", n - i), stations[i].1, stations[i].2))
        .collect();
    let a = build(stations, 0.0);
    let b = build(&renamed, 0.0);
    let serving = select_serving_cell(&a, l);
    let serving_b = perm.iter().position(|&i| i == serving).unwrap();
    let before = evaluate_objective(&a, serving, l, dir);
    let after = evaluate_objective(&b, serving_b, l, dir);
    prop_assert!(close(before, after, 1e-9), "{before} vs {after}");
    Ok(())
}
