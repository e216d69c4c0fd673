//! Conservativeness and symmetry properties of the volumetric collision
//! classifier, checked against dense point sampling.

mod common;

use common::*;
use rand::Rng;

use simplan::geometry::{orientation, AxisBox, Point, Sign};
use simplan::obstacles::{
    simplex_point_distance_sq, ConvexObstacle, ConvexShape, GoalRegion, ObstacleWorld,
};
use simplan::triangulation::Collision;

fn far_goal(dim: usize) -> GoalRegion {
    GoalRegion {
        shape: ConvexShape::ball(&vec![100.0; dim], 0.5).unwrap(),
    }
}

fn random_world(rng: &mut rand_chacha::ChaCha8Rng, dim: usize, count: usize) -> ObstacleWorld {
    let mut obstacles = Vec::new();
    for id in 0..count {
        let shape = if rng.gen::<bool>() {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            ConvexShape::ball(&c, 0.05 + 0.2 * rng.gen::<f64>()).unwrap()
        } else {
            let lo: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 0.8).collect();
            let hi: Vec<f64> = lo
                .iter()
                .map(|&l| l + 0.05 + 0.3 * rng.gen::<f64>())
                .collect();
            ConvexShape::aligned_box(&lo, &hi).unwrap()
        };
        obstacles.push(ConvexObstacle {
            id: id as u32,
            shape,
        });
    }
    ObstacleWorld::new(far_goal(dim), obstacles, Vec::new()).unwrap()
}

fn random_simplex(rng: &mut rand_chacha::ChaCha8Rng, dim: usize, scale: f64) -> Vec<Point> {
    loop {
        let center: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let pts: Vec<Point> = (0..=dim)
            .map(|_| {
                let c: Vec<f64> = center
                    .iter()
                    .map(|&x| x + (rng.gen::<f64>() - 0.5) * scale)
                    .collect();
                Point::from_slice(&c)
            })
            .collect();
        if orientation(&pts).unwrap() != Sign::Zero {
            return pts;
        }
    }
}

/// A Free classification must be sound: no sampled point of the simplex may
/// hit an obstacle.
#[test]
fn free_simplices_are_actually_free() {
    let mut rng = seeded_rng(201);
    let mut free_seen = 0;
    for dim in [2usize, 3] {
        for _ in 0..100 {
            let world = random_world(&mut rng, dim, 4);
            let s = random_simplex(&mut rng, dim, 0.4);
            if world.classify_simplex(&s) != Collision::Free {
                continue;
            }
            free_seen += 1;
            for _ in 0..10_000 {
                let q = random_point_in_simplex(&mut rng, &s);
                assert!(!world.contains_obstacle_at(&q));
            }
        }
    }
    assert!(free_seen > 10, "not enough Free cases sampled");
}

/// Sampled obstacle hits must never coexist with a Free classification, and
/// all-vertex hits force Obstructed or Mixed.
#[test]
fn sampled_hits_refute_free() {
    let mut rng = seeded_rng(202);
    for _ in 0..300 {
        let world = random_world(&mut rng, 2, 3);
        let s = random_simplex(&mut rng, 2, 0.6);
        let class = world.classify_simplex(&s);
        let mut hit = false;
        for _ in 0..2000 {
            let q = random_point_in_simplex(&mut rng, &s);
            if world.contains_obstacle_at(&q) {
                hit = true;
                break;
            }
        }
        if hit {
            assert_ne!(class, Collision::Free);
        }
    }
}

/// Growing a ball obstacle never turns Mixed or Obstructed into Free.
#[test]
fn growth_is_monotone() {
    let mut rng = seeded_rng(203);
    for _ in 0..200 {
        let c: Vec<f64> = (0..2).map(|_| rng.gen::<f64>()).collect();
        let r = 0.05 + 0.2 * rng.gen::<f64>();
        let s = random_simplex(&mut rng, 2, 0.5);
        let rank = |radius: f64| {
            let world = ObstacleWorld::new(
                far_goal(2),
                vec![ConvexObstacle {
                    id: 0,
                    shape: ConvexShape::ball(&c, radius).unwrap(),
                }],
                Vec::new(),
            )
            .unwrap();
            match world.classify_simplex(&s) {
                Collision::Free => 0,
                Collision::Mixed => 1,
                Collision::Obstructed => 2,
                Collision::Unknown => unreachable!(),
            }
        };
        let mut prev = rank(r);
        for grow in [1.5, 2.5, 5.0] {
            let cur = rank(r * grow);
            assert!(cur >= prev, "growing a ball must not free a simplex");
            prev = cur;
        }
    }
}

/// Classification must not depend on vertex order.
#[test]
fn classification_is_permutation_invariant() {
    let mut rng = seeded_rng(204);
    for _ in 0..200 {
        let world = random_world(&mut rng, 2, 3);
        let mut s = random_simplex(&mut rng, 2, 0.5);
        let base = world.classify_simplex(&s);
        s.rotate_left(1);
        assert_eq!(world.classify_simplex(&s), base);
        s.swap(0, 2);
        assert_eq!(world.classify_simplex(&s), base);
    }
}

/// Goal tangency agrees with a dense-sampling oracle away from the sampling
/// resolution, and is conservative at the boundary.
#[test]
fn goal_touching_matches_distance_oracle() {
    let mut rng = seeded_rng(205);
    let mut decisive = 0;
    for _ in 0..100 {
        let s = random_simplex(&mut rng, 2, 0.5);
        let c: Vec<f64> = (0..2).map(|_| rng.gen::<f64>()).collect();
        let center = Point::from_slice(&c);
        // Radius chosen near the true distance to stress tangency.
        let true_dist = simplex_point_distance_sq(&s, &center).sqrt();
        let radius = (true_dist + (rng.gen::<f64>() - 0.5) * 0.02).max(1e-3);
        let goal = GoalRegion {
            shape: ConvexShape::ball(&c, radius).unwrap(),
        };
        let world = ObstacleWorld::empty(goal);
        let touching = world.goal_touching(&s);
        // Dense sampling as an independent lower-bound oracle.
        let mut sampled = f64::INFINITY;
        for _ in 0..20_000 {
            let q = random_point_in_simplex(&mut rng, &s);
            sampled = sampled.min(q.distance(&center));
        }
        // `sampled` only upper-bounds the true distance, so the negative
        // direction needs a fatter margin than the (rigorous) positive one.
        if sampled <= radius - 1e-6 {
            assert!(touching, "sampled point inside goal but not touching");
            decisive += 1;
        } else if sampled >= radius + 0.05 {
            assert!(!touching, "goal far from simplex but touching");
            decisive += 1;
        }
    }
    assert!(decisive > 30);
}
