use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Location3D;

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counterclockwise convex hull of the horizontal projections (monotone
/// chain); collinear points are dropped.
pub fn convex_hull(points: &[Location3D]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// `n` points drawn uniformly over the convex hull of `stations`, all at
/// altitude `z`. Degenerate hulls (one station, or all collinear) are
/// sampled along the segment they span.
pub fn sample_pois(stations: &[Location3D], n: usize, z: f64, seed: u64) -> Vec<Location3D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hull = convex_hull(stations);
    let area2 = |i: usize| cross(hull[0], hull[i], hull[i + 1]);
    let fan: Vec<f64> = if hull.len() >= 3 {
        (1..hull.len() - 1).map(area2).collect()
    } else {
        Vec::new()
    };
    let total: f64 = fan.iter().sum();

    (0..n)
        .map(|_| {
            if total > 0.0 {
                let mut pick = rng.random_range(0.0..total);
                let mut tri = fan.len() - 1;
                for (i, a) in fan.iter().enumerate() {
                    if pick < *a {
                        tri = i;
                        break;
                    }
                    pick -= a;
                }
                let (a, b, c) = (hull[0], hull[tri + 1], hull[tri + 2]);
                let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                Location3D::new(
                    a.0 + u * (b.0 - a.0) + v * (c.0 - a.0),
                    a.1 + u * (b.1 - a.1) + v * (c.1 - a.1),
                    z,
                )
            } else {
                let a = hull[0];
                let b = *hull.last().expect("at least one station");
                let t: f64 = rng.random();
                Location3D::new(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1), z)
            }
        })
        .collect()
}
