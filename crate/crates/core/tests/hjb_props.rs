//! Properties of the local HJB solver: agreement with dense sampling,
//! symmetry and equivariance laws, and the Lipschitz lower bound of planned
//! fields.

mod common;

use common::*;
use rand::Rng;

use simplan::geometry::Point;
use simplan::hjb::{minloc, CostField, ValueField};
use simplan::obstacles::{ConvexShape, GoalRegion, ObstacleWorld};
use simplan::planner::{Planner, PlannerConfig};
use simplan::sampling::{SamplerConfig, Strategy};
use simplan::triangulation::{Collision, Triangulation, VertexId};

fn far_goal() -> ObstacleWorld {
    ObstacleWorld::empty(GoalRegion {
        shape: ConvexShape::ball(&[500.0, 500.0], 0.5).unwrap(),
    })
}

/// One Free triangle with prescribed facet values, anchored at vertex 0.
fn triangle_setup(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    vb: f64,
    vc: f64,
) -> (Triangulation, ValueField) {
    let t = Triangulation::from_parts(
        &[-10.0, -10.0],
        &[10.0, 10.0],
        vec![
            Point::from_slice(a),
            Point::from_slice(b),
            Point::from_slice(c),
        ],
        vec![(vec![0, 1, 2], Collision::Free)],
    )
    .unwrap();
    let mut f = ValueField::new(3);
    f.set_vhat(VertexId(1), vb);
    f.set_vhat(VertexId(2), vc);
    (t, f)
}

/// The facet solver must match dense sampling over the facet simplex.
#[test]
fn minloc_matches_dense_sampling() {
    let mut rng = seeded_rng(301);
    let world = far_goal();
    let cost = CostField::unit();
    for case in 0..300 {
        let p: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let (vb, vc) = (rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0);
        let (t, f) = triangle_setup(&p[0..2], &p[2..4], &p[4..6], vb, vc);
        if t.star(VertexId(0)).is_empty() {
            continue;
        }
        let got = minloc(VertexId(0), &t, &world, &f, &cost);
        // Dense sweep over the facet parameter.
        let (bp, cp) = (t.point(VertexId(1)), t.point(VertexId(2)));
        let anchor = t.point(VertexId(0));
        let mut best = f64::INFINITY;
        let n = 200_000;
        for i in 0..=n {
            let lam = i as f64 / n as f64;
            let y = Point::from_slice(&[
                lam * bp[0] + (1.0 - lam) * cp[0],
                lam * bp[1] + (1.0 - lam) * cp[1],
            ]);
            best = best.min(lam * vb + (1.0 - lam) * vc + anchor.distance(&y));
        }
        assert!(
            got <= best + 1e-9,
            "case {case}: solver {got} above sampled {best}"
        );
        assert!(
            best - got <= 1e-7,
            "case {case}: solver {got} too far below sampled {best}"
        );
    }
}

/// Relabeling the triangle's vertices must not change the answer.
#[test]
fn minloc_is_permutation_invariant() {
    let mut rng = seeded_rng(302);
    let world = far_goal();
    let cost = CostField::unit();
    for _ in 0..100 {
        let p: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let (vb, vc) = (rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0);
        let (t1, f1) = triangle_setup(&p[0..2], &p[2..4], &p[4..6], vb, vc);
        // Swap the facet vertices.
        let (t2, f2) = triangle_setup(&p[0..2], &p[4..6], &p[2..4], vc, vb);
        if t1.star(VertexId(0)).is_empty() {
            continue;
        }
        let a = minloc(VertexId(0), &t1, &world, &f1, &cost);
        let b = minloc(VertexId(0), &t2, &world, &f2, &cost);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

/// Adding a constant to all facet values shifts the result by exactly that
/// constant.
#[test]
fn minloc_is_translation_equivariant() {
    let mut rng = seeded_rng(303);
    let world = far_goal();
    let cost = CostField::unit();
    for _ in 0..100 {
        let p: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let (vb, vc) = (rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0);
        let k = rng.gen::<f64>() * 10.0;
        let (t, f) = triangle_setup(&p[0..2], &p[2..4], &p[4..6], vb, vc);
        let (t2, f2) = triangle_setup(&p[0..2], &p[2..4], &p[4..6], vb + k, vc + k);
        if t.star(VertexId(0)).is_empty() {
            continue;
        }
        let a = minloc(VertexId(0), &t, &world, &f, &cost);
        let b = minloc(VertexId(0), &t2, &world, &f2, &cost);
        assert!((a + k - b).abs() < 1e-9, "{a} + {k} vs {b}");
    }
}

/// Positive local cost makes the solve strictly causal: the result is never
/// below the smallest participating value.
#[test]
fn minloc_respects_causality_floor() {
    let mut rng = seeded_rng(304);
    let world = far_goal();
    let cost = CostField::unit();
    for _ in 0..200 {
        let p: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let (vb, vc) = (rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0);
        let (t, f) = triangle_setup(&p[0..2], &p[2..4], &p[4..6], vb, vc);
        if t.star(VertexId(0)).is_empty() {
            continue;
        }
        let got = minloc(VertexId(0), &t, &world, &f, &cost);
        assert!(got >= vb.min(vc) - 1e-12);
    }
}

/// With unit cost the planned field dominates the Euclidean distance to the
/// goal minus the local mesh size (values are 1-Lipschitz per unit cost).
#[test]
fn planned_field_obeys_lipschitz_lower_bound() {
    let goal_center = Point::from_slice(&[0.8, 0.75]);
    let world = ObstacleWorld::new(
        GoalRegion {
            shape: ConvexShape::ball(goal_center.as_slice(), 0.05).unwrap(),
        },
        vec![simplan::obstacles::ConvexObstacle {
            id: 0,
            shape: ConvexShape::aligned_box(&[0.35, 0.2], &[0.55, 0.7]).unwrap(),
        }],
        Vec::new(),
    )
    .unwrap();
    let mut cfg = PlannerConfig::new(
        &[0.0, 0.0],
        &[1.0, 1.0],
        SamplerConfig::new(Strategy::UniformRandom, 17),
    );
    cfg.termination.max_vertices = Some(1500);
    let mut p = Planner::new(cfg, world).unwrap();
    p.run().unwrap();
    let tri = p.triangulation();
    for v in tri.vertex_ids() {
        let val = p.field().vhat(v);
        if !val.is_finite() {
            continue;
        }
        let x = tri.point(v);
        let dist = ball_goal_distance(x, &goal_center, 0.05);
        // Local mesh size: the longest edge among the star's simplices.
        let mut h: f64 = 0.0;
        for &sid in tri.star(v) {
            let vs = tri.simplex(sid).vertices();
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    h = h.max(tri.point(vs[i]).distance(tri.point(vs[j])));
                }
            }
        }
        assert!(
            val >= dist - h - 1e-9,
            "vertex {v}: value {val} below distance {dist} - h {h}"
        );
    }
}
