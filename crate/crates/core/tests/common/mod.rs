//! Shared oracles for the integration suites. Everything here is
//! deliberately brute-force and independent of the incremental code paths it
//! checks.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simplan::geometry::{
    in_sphere_perturbed, orientation, simplex_volume, AxisBox, Point, Sign,
};
use simplan::triangulation::Triangulation;

/// All (d+1)-subsets of `points` that are nondegenerate and whose
/// circumsphere contains no other point under the canonical symbolic
/// perturbation: the Delaunay simplex set, by definition.
pub fn brute_force_delaunay(points: &[Point]) -> BTreeSet<Vec<u32>> {
    let n = points.len();
    let d = points[0].dim();
    let k = d + 1;
    let mut out = BTreeSet::new();
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        let pts: Vec<Point> = combo.iter().map(|&i| points[i].clone()).collect();
        let orient = orientation(&pts).unwrap();
        if orient != Sign::Zero {
            let ids: Vec<u32> = combo.iter().map(|&i| i as u32).collect();
            let empty = (0..n).filter(|i| !combo.contains(i)).all(|i| {
                !in_sphere_perturbed(&pts, &ids, orient, &points[i], i as u32)
            });
            if empty {
                out.insert(ids);
            }
        }
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] != i + n - k {
                break;
            }
        }
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// The childless simplices of a triangulation as sorted vertex-id lists.
pub fn alive_simplex_set(t: &Triangulation) -> BTreeSet<Vec<u32>> {
    t.alive_ids()
        .map(|s| t.simplex(s).vertices().iter().map(|v| v.0).collect())
        .collect()
}

pub fn total_alive_volume(t: &Triangulation) -> f64 {
    t.alive_ids()
        .map(|s| simplex_volume(&t.simplex_points(s)))
        .sum()
}

pub fn uniform_point(rng: &mut ChaCha8Rng, domain: &AxisBox) -> Point {
    let coords: Vec<f64> = (0..domain.dim())
        .map(|i| {
            let lo = domain.min()[i];
            let hi = domain.max()[i];
            lo + rng.gen::<f64>() * (hi - lo)
        })
        .collect();
    Point::from_slice(&coords)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Structured right-isoceles triangulation of the unit square: an m-by-m
/// grid of cells, each split along the same diagonal. Every triangle is
/// marked Free.
pub fn right_isoceles_mesh(m: usize) -> Triangulation {
    let n = m + 1;
    let mut points = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            points.push(Point::from_slice(&[i as f64 / m as f64, j as f64 / m as f64]));
        }
    }
    let v = |i: usize, j: usize| (j * n + i) as u32;
    let mut cells = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            cells.push((
                vec![v(i, j), v(i + 1, j), v(i, j + 1)],
                simplan::triangulation::Collision::Free,
            ));
            cells.push((
                vec![v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)],
                simplan::triangulation::Collision::Free,
            ));
        }
    }
    Triangulation::from_parts(&[0.0, 0.0], &[1.0, 1.0], points, cells).unwrap()
}

/// Independent classical single-pass fast-marching solver on a 2D
/// triangulated mesh (unit cost), used as an oracle for the wavefront
/// engine. Two-point triangle updates are solved by golden-section search,
/// deliberately sharing no code with the production facet solver.
pub fn classical_fmm(
    tri: &Triangulation,
    world: &simplan::obstacles::ObstacleWorld,
    cost: f64,
) -> Vec<f64> {
    use simplan::triangulation::{Collision, VertexId};
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = tri.vertex_count();
    let mut value = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    // (value bits, vertex) min-heap via Reverse; f64 bits order nonneg floats.
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    for v in tri.vertex_ids() {
        if world.point_in_goal(tri.point(v)) {
            value[v.index()] = 0.0;
            heap.push(Reverse((0u64, v.0)));
        }
    }
    let golden_update = |a: &Point, ta: f64, b: &Point, tb: f64, x: &Point| -> f64 {
        let f = |lam: f64| {
            let y = Point::from_slice(&[
                lam * a[0] + (1.0 - lam) * b[0],
                lam * a[1] + (1.0 - lam) * b[1],
            ]);
            lam * ta + (1.0 - lam) * tb + cost * x.distance(&y)
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        while hi - lo > 1e-13 {
            let p = hi - phi * (hi - lo);
            let q = lo + phi * (hi - lo);
            if f(p) < f(q) {
                hi = q;
            } else {
                lo = p;
            }
        }
        f(0.5 * (lo + hi))
    };
    while let Some(Reverse((_, x))) = heap.pop() {
        let x = VertexId(x);
        if accepted[x.index()] {
            continue;
        }
        accepted[x.index()] = true;
        // Relax every unaccepted vertex sharing a Free simplex with x.
        let mut neighbors: Vec<VertexId> = Vec::new();
        for &sid in tri.star(x) {
            if tri.simplex(sid).collision() != Collision::Free {
                continue;
            }
            neighbors.extend(
                tri.simplex(sid)
                    .vertices()
                    .iter()
                    .copied()
                    .filter(|&u| u != x && !accepted[u.index()]),
            );
        }
        neighbors.sort_unstable();
        neighbors.dedup();
        for v in neighbors {
            if world.point_in_goal(tri.point(v)) {
                continue;
            }
            let xv = tri.point(v);
            let mut best = value[v.index()];
            for &sid in tri.star(v) {
                let s = tri.simplex(sid);
                if s.collision() != Collision::Free {
                    continue;
                }
                let others: Vec<VertexId> = s
                    .vertices()
                    .iter()
                    .copied()
                    .filter(|&u| u != v)
                    .collect();
                let (a, b) = (others[0], others[1]);
                let (ta, tb) = (value[a.index()], value[b.index()]);
                let (pa, pb) = (tri.point(a), tri.point(b));
                if ta.is_finite() {
                    best = best.min(ta + cost * xv.distance(pa));
                }
                if tb.is_finite() {
                    best = best.min(tb + cost * xv.distance(pb));
                }
                if ta.is_finite() && tb.is_finite() {
                    best = best.min(golden_update(pa, ta, pb, tb, xv));
                }
            }
            if best < value[v.index()] {
                value[v.index()] = best;
                heap.push(Reverse((best.to_bits(), v.0)));
            }
        }
    }
    value
}

/// Distance from a point to the boundary of a goal ball (zero inside).
pub fn ball_goal_distance(p: &Point, center: &Point, radius: f64) -> f64 {
    (p.distance(center) - radius).max(0.0)
}

/// A uniformly random point inside a simplex (exponential-spacings weights).
pub fn random_point_in_simplex(rng: &mut ChaCha8Rng, pts: &[Point]) -> Point {
    let mut w: Vec<f64> = (0..pts.len())
        .map(|_| -(rng.gen::<f64>().max(1e-300)).ln())
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    let d = pts[0].dim();
    let coords: Vec<f64> = (0..d)
        .map(|j| pts.iter().zip(&w).map(|(p, wi)| p[j] * wi).sum())
        .collect();
    Point::from_slice(&coords)
}
