use std::f64::consts::{PI, TAU};

use crate::geometry::{direction_to, project_feasible, Direction, Location3D};
use crate::netmodel::{AppRequest, NetworkSnapshot};

/// Starting points for the parallel local searches, one per station.
///
/// All seeds sit at the projected POI. The first points at the serving
/// station; the rest point along the azimuth bisectors between cyclically
/// adjacent neighbor stations (as seen from the POI) at the serving-station
/// elevation, where the low-interference valleys lie.
pub fn seed_set(
    snapshot: &NetworkSnapshot,
    serving: usize,
    request: &AppRequest,
) -> Vec<(Location3D, Direction)> {
    let n = snapshot.len();
    let loc = project_feasible(request.poi, &request.region());
    let boresight = direction_to(loc, snapshot.station(serving).location)
        .unwrap_or(Direction::new(0.0, PI / 2.0));
    let mut seeds = Vec::with_capacity(n);
    seeds.push((loc, boresight));

    let mut azimuths: Vec<f64> = (0..n)
        .filter(|&j| j != serving)
        .map(|j| {
            let bs = snapshot.station(j).location;
            direction_to(loc, bs).map_or(0.0, |d| d.azimuth)
        })
        .collect();
    azimuths.sort_by(f64::total_cmp);

    let m = azimuths.len();
    for k in 0..m {
        let from = azimuths[k];
        let to = azimuths[(k + 1) % m];
        let mut arc = (to - from).rem_euclid(TAU);
        if k + 1 == m && arc == 0.0 {
            arc = TAU;
        }
        seeds.push((loc, Direction::new(from + arc / 2.0, boresight.polar)));
    }

    let fan = n.saturating_sub(seeds.len());
    for i in 0..fan {
        let az = boresight.azimuth + TAU * (i + 1) as f64 / (fan + 1) as f64;
        seeds.push((loc, Direction::new(az, boresight.polar)));
    }
    seeds.truncate(n);
    seeds
}
