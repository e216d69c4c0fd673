//! Obstacle world and goal region: convex obstacles (halfspace polytopes and
//! balls), conservative volumetric simplex classification, and timed
//! obstacle events for replanning.
//!
//! Simplex-obstacle intersection is decided exactly: linear-program
//! feasibility in barycentric form for polytopes, and an exact convex
//! projection (minimum squared distance over the simplex) for balls. A solve
//! that fails to converge classifies the simplex Mixed, never Free.

use std::collections::BTreeMap;

use smallvec::SmallVec;
use thiserror::Error;

use crate::geometry::{AxisBox, Point, MAX_DIM};
use crate::triangulation::Collision;

/// Objective tolerance for the LP/QP solves.
pub const SOLVE_TOL: f64 = 1e-10;

/// Barycentric feasibility slack.
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("unknown obstacle id {0}")]
    UnknownObstacle(u32),
    #[error("duplicate obstacle id {0}")]
    DuplicateObstacle(u32),
    #[error("schedule time must not decrease (advancing to {to} after {at})")]
    TimeRegression { at: f64, to: f64 },
    #[error("event times must be nondecreasing")]
    NonMonotoneSchedule,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}

/// A convex region: either an intersection of halfspaces `n·x <= b` or a
/// ball.
#[derive(Debug, Clone)]
pub enum ConvexShape {
    Ball {
        center: Point,
        radius: f64,
    },
    Polytope {
        normals: Vec<Point>,
        offsets: Vec<f64>,
        /// Enclosing box when known; `None` means unbounded for broad-phase
        /// purposes.
        bbox: Option<AxisBox>,
    },
}

impl ConvexShape {
    /// Axis-aligned box `[min, max]` as 2d halfspaces with an exact bbox.
    pub fn aligned_box(min: &[f64], max: &[f64]) -> Result<Self, WorldError> {
        let bbox = AxisBox::new(Point::from_slice(min), Point::from_slice(max))
            .ok_or_else(|| WorldError::InvalidShape("box must have positive extent".into()))?;
        let d = min.len();
        let mut normals = Vec::with_capacity(2 * d);
        let mut offsets = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut n = vec![0.0; d];
            n[i] = 1.0;
            normals.push(Point::from_slice(&n));
            offsets.push(max[i]);
            n[i] = -1.0;
            normals.push(Point::from_slice(&n));
            offsets.push(-min[i]);
        }
        Ok(ConvexShape::Polytope {
            normals,
            offsets,
            bbox: Some(bbox),
        })
    }

    pub fn ball(center: &[f64], radius: f64) -> Result<Self, WorldError> {
        if !(radius > 0.0) {
            return Err(WorldError::InvalidShape("ball radius must be positive".into()));
        }
        Ok(ConvexShape::Ball {
            center: Point::from_slice(center),
            radius,
        })
    }

    pub fn bbox(&self) -> Option<AxisBox> {
        match self {
            ConvexShape::Ball { center, radius } => {
                let d = center.dim();
                let min: Vec<f64> = (0..d).map(|i| center[i] - radius).collect();
                let max: Vec<f64> = (0..d).map(|i| center[i] + radius).collect();
                AxisBox::new(Point::from_slice(&min), Point::from_slice(&max))
            }
            ConvexShape::Polytope { bbox, .. } => bbox.clone(),
        }
    }

    /// Closed membership.
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            ConvexShape::Ball { center, radius } => {
                p.distance_sq(center) <= radius * radius
            }
            ConvexShape::Polytope {
                normals, offsets, ..
            } => normals
                .iter()
                .zip(offsets)
                .all(|(n, &b)| dot(n, p) <= b),
        }
    }

    /// Exact intersection test against the closed simplex spanned by
    /// `vertices`.
    pub fn intersects_simplex(&self, vertices: &[Point]) -> bool {
        match self {
            ConvexShape::Ball { center, radius } => {
                simplex_point_distance_sq(vertices, center) <= radius * radius
            }
            ConvexShape::Polytope {
                normals, offsets, ..
            } => match simplex_polytope_feasible(vertices, normals, offsets) {
                Feasibility::Feasible => true,
                Feasibility::Infeasible => false,
                // Never report Free without proof.
                Feasibility::Unresolved => true,
            },
        }
    }

    fn translate(&mut self, t: &Point) {
        match self {
            ConvexShape::Ball { center, .. } => {
                for i in 0..center.dim() {
                    center.as_mut_slice()[i] += t[i];
                }
            }
            ConvexShape::Polytope {
                normals,
                offsets,
                bbox,
            } => {
                for (n, b) in normals.iter().zip(offsets.iter_mut()) {
                    *b += dot(n, t);
                }
                if let Some(bx) = bbox {
                    let d = t.dim();
                    let min: Vec<f64> = (0..d).map(|i| bx.min()[i] + t[i]).collect();
                    let max: Vec<f64> = (0..d).map(|i| bx.max()[i] + t[i]).collect();
                    *bbox = AxisBox::new(Point::from_slice(&min), Point::from_slice(&max));
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvexObstacle {
    pub id: u32,
    pub shape: ConvexShape,
}

/// The goal region; same convex representations as obstacles.
#[derive(Debug, Clone)]
pub struct GoalRegion {
    pub shape: ConvexShape,
}

impl GoalRegion {
    /// A point in the goal interior suitable for pinning a goal vertex, when
    /// one can be derived from the representation.
    pub fn interior_point(&self) -> Option<Point> {
        match &self.shape {
            ConvexShape::Ball { center, .. } => Some(center.clone()),
            ConvexShape::Polytope { bbox, .. } => {
                let c = bbox.as_ref()?.center();
                self.shape.contains(&c).then_some(c)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum EventAction {
    Appear(ConvexObstacle),
    Disappear(u32),
    Move { id: u32, translation: Point },
}

#[derive(Debug, Clone)]
pub struct ObstacleEvent {
    pub time: f64,
    pub action: EventAction,
}

/// An applied event together with the broad-phase regions (old and/or new
/// bounding boxes) whose simplices need re-classification. `None` stands for
/// an unbounded region.
#[derive(Debug, Clone)]
pub struct AppliedEvent {
    pub time: f64,
    pub regions: Vec<Option<AxisBox>>,
}

#[derive(Debug, Clone)]
pub struct ObstacleWorld {
    obstacles: BTreeMap<u32, ConvexObstacle>,
    goal: GoalRegion,
    schedule: Vec<ObstacleEvent>,
    cursor: usize,
    time: f64,
}

impl ObstacleWorld {
    pub fn new(
        goal: GoalRegion,
        obstacles: Vec<ConvexObstacle>,
        schedule: Vec<ObstacleEvent>,
    ) -> Result<Self, WorldError> {
        let mut map = BTreeMap::new();
        for ob in obstacles {
            if map.insert(ob.id, ob.clone()).is_some() {
                return Err(WorldError::DuplicateObstacle(ob.id));
            }
        }
        if schedule.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(WorldError::NonMonotoneSchedule);
        }
        Ok(Self {
            obstacles: map,
            goal,
            schedule,
            cursor: 0,
            time: 0.0,
        })
    }

    pub fn empty(goal: GoalRegion) -> Self {
        Self::new(goal, Vec::new(), Vec::new()).unwrap()
    }

    pub fn goal(&self) -> &GoalRegion {
        &self.goal
    }

    pub fn obstacles(&self) -> impl Iterator<Item = &ConvexObstacle> {
        self.obstacles.values()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn pending_events(&self) -> &[ObstacleEvent] {
        &self.schedule[self.cursor..]
    }

    /// Conservative volumetric classification of a simplex against the
    /// active obstacles.
    pub fn classify_simplex(&self, vertices: &[Point]) -> Collision {
        let sbox = points_bbox(vertices);
        let mut any_hit = false;
        for ob in self.obstacles.values() {
            if let Some(obox) = ob.shape.bbox() {
                if !obox.intersects(&sbox) {
                    continue;
                }
            }
            let inside = vertices.iter().filter(|p| ob.shape.contains(p)).count();
            if inside == vertices.len() {
                // All vertices inside one convex obstacle: fully obstructed.
                return Collision::Obstructed;
            }
            if inside > 0 || ob.shape.intersects_simplex(vertices) {
                any_hit = true;
            }
        }
        if any_hit {
            Collision::Mixed
        } else {
            Collision::Free
        }
    }

    /// Closed membership in the goal region.
    pub fn point_in_goal(&self, p: &Point) -> bool {
        self.goal.shape.contains(p)
    }

    /// Whether any active obstacle contains `p`.
    pub fn contains_obstacle_at(&self, p: &Point) -> bool {
        self.obstacles.values().any(|ob| ob.shape.contains(p))
    }

    /// Whether the simplex intersects the goal region.
    pub fn goal_touching(&self, vertices: &[Point]) -> bool {
        if let Some(gbox) = self.goal.shape.bbox() {
            if !gbox.intersects(&points_bbox(vertices)) {
                return false;
            }
        }
        if vertices.iter().any(|p| self.goal.shape.contains(p)) {
            return true;
        }
        self.goal.shape.intersects_simplex(vertices)
    }

    /// Apply every scheduled event with `time <= to_time`, in order.
    pub fn advance_schedule(&mut self, to_time: f64) -> Result<Vec<AppliedEvent>, WorldError> {
        if to_time < self.time {
            return Err(WorldError::TimeRegression {
                at: self.time,
                to: to_time,
            });
        }
        let mut applied = Vec::new();
        while self.cursor < self.schedule.len() && self.schedule[self.cursor].time <= to_time {
            let event = self.schedule[self.cursor].clone();
            self.cursor += 1;
            let regions = match &event.action {
                EventAction::Appear(ob) => {
                    if self.obstacles.contains_key(&ob.id) {
                        return Err(WorldError::DuplicateObstacle(ob.id));
                    }
                    let r = ob.shape.bbox();
                    self.obstacles.insert(ob.id, ob.clone());
                    vec![r]
                }
                EventAction::Disappear(id) => {
                    let ob = self
                        .obstacles
                        .remove(id)
                        .ok_or(WorldError::UnknownObstacle(*id))?;
                    vec![ob.shape.bbox()]
                }
                EventAction::Move { id, translation } => {
                    let ob = self
                        .obstacles
                        .get_mut(id)
                        .ok_or(WorldError::UnknownObstacle(*id))?;
                    let old = ob.shape.bbox();
                    ob.shape.translate(translation);
                    vec![old, ob.shape.bbox()]
                }
            };
            applied.push(AppliedEvent {
                time: event.time,
                regions,
            });
        }
        self.time = to_time;
        Ok(applied)
    }
}

fn dot(a: &Point, b: &Point) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

fn points_bbox(pts: &[Point]) -> AxisBox {
    let d = pts[0].dim();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for p in pts {
        for i in 0..d {
            min[i] = min[i].min(p[i]);
            max[i] = max[i].max(p[i]);
        }
    }
    // Degenerate extents are widened so AxisBox stays valid.
    for i in 0..d {
        if !(min[i] < max[i]) {
            let eps = 1e-300_f64.max(max[i].abs() * f64::EPSILON);
            min[i] -= eps;
            max[i] += eps;
        }
    }
    AxisBox::new(Point::from_slice(&min), Point::from_slice(&max)).expect("widened box is valid")
}

/// Exact minimum squared distance from `center` to the closed simplex, by
/// projecting onto the affine hull of every face and keeping feasible
/// candidates. Convexity guarantees the minimizer lies in the relative
/// interior of some face, so the enumeration is exhaustive.
pub fn simplex_point_distance_sq(vertices: &[Point], center: &Point) -> f64 {
    let m = vertices.len();
    let d = center.dim();
    let mut best = f64::INFINITY;
    for v in vertices {
        best = best.min(v.distance_sq(center));
    }
    if best == 0.0 {
        return 0.0;
    }
    let mut gram: SmallVec<[f64; 64]> = SmallVec::new();
    let mut rhs: SmallVec<[f64; MAX_DIM + 1]> = SmallVec::new();
    for mask in 1u32..(1 << m) {
        let k = mask.count_ones() as usize;
        if k < 2 {
            continue;
        }
        let ids: SmallVec<[usize; MAX_DIM + 1]> =
            (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let base = vertices[ids[k - 1]].clone();
        let cols = k - 1;
        // Normal equations for the projection onto the affine hull.
        gram.clear();
        gram.resize(cols * cols, 0.0);
        rhs.clear();
        rhs.resize(cols, 0.0);
        for a in 0..cols {
            for b in a..cols {
                let mut s = 0.0;
                for j in 0..d {
                    s += (vertices[ids[a]][j] - base[j]) * (vertices[ids[b]][j] - base[j]);
                }
                gram[a * cols + b] = s;
                gram[b * cols + a] = s;
            }
            let mut s = 0.0;
            for j in 0..d {
                s += (vertices[ids[a]][j] - base[j]) * (center[j] - base[j]);
            }
            rhs[a] = s;
        }
        if !crate::geometry::linalg::solve_in_place(cols, &mut gram, &mut rhs) {
            continue;
        }
        let last_w = 1.0 - rhs.iter().sum::<f64>();
        if last_w < -WEIGHT_TOL || rhs.iter().any(|&w| w < -WEIGHT_TOL) {
            continue;
        }
        let mut dist = 0.0;
        for j in 0..d {
            let mut x = base[j];
            for a in 0..cols {
                x += rhs[a] * (vertices[ids[a]][j] - base[j]);
            }
            let diff = center[j] - x;
            dist += diff * diff;
        }
        best = best.min(dist);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Feasibility {
    Feasible,
    Infeasible,
    Unresolved,
}

/// Phase-1 simplex method (Bland's rule) deciding whether some convex
/// combination of `vertices` satisfies every halfspace `n·x <= b`.
fn simplex_polytope_feasible(
    vertices: &[Point],
    normals: &[Point],
    offsets: &[f64],
) -> Feasibility {
    let nv = vertices.len();
    let m = normals.len();
    let rows = m + 1; // inequalities plus the convexity equality
    let structural = nv + m; // lambda variables plus slacks
    let cols = structural + rows; // plus one artificial per row
    let mut t = vec![0.0f64; rows * cols];
    let mut rhs = vec![0.0f64; rows];
    let mut basis: Vec<usize> = Vec::with_capacity(rows);

    for (r, (n, &b)) in normals.iter().zip(offsets).enumerate() {
        for (c, v) in vertices.iter().enumerate() {
            t[r * cols + c] = dot(n, v);
        }
        t[r * cols + nv + r] = 1.0; // slack
        rhs[r] = b;
        if b < 0.0 {
            for c in 0..structural {
                t[r * cols + c] = -t[r * cols + c];
            }
            rhs[r] = -b;
        }
        t[r * cols + structural + r] = 1.0; // artificial
        basis.push(structural + r);
    }
    let eq = m;
    for c in 0..nv {
        t[eq * cols + c] = 1.0;
    }
    rhs[eq] = 1.0;
    t[eq * cols + structural + eq] = 1.0;
    basis.push(structural + eq);

    let max_iters = 100 * (vertices[0].dim() + 2) * rows.max(4);
    for _ in 0..max_iters {
        // Phase-1 reduced cost of column j is -sum of rows where the basis
        // is still artificial.
        let mut entering = None;
        'cols: for j in 0..structural {
            if basis.contains(&j) {
                continue;
            }
            let mut score = 0.0;
            for r in 0..rows {
                if basis[r] >= structural {
                    score += t[r * cols + j];
                }
            }
            if score > SOLVE_TOL {
                entering = Some(j);
                break 'cols; // Bland: smallest eligible index
            }
        }
        let Some(j) = entering else {
            let w: f64 = (0..rows)
                .filter(|&r| basis[r] >= structural)
                .map(|r| rhs[r])
                .sum();
            return if w <= SOLVE_TOL {
                Feasibility::Feasible
            } else {
                Feasibility::Infeasible
            };
        };
        // Ratio test; ties resolved toward the smallest basis index.
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let a = t[r * cols + j];
            if a > SOLVE_TOL {
                let ratio = rhs[r] / a;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - SOLVE_TOL
                            || (ratio <= lratio + SOLVE_TOL && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((piv, _)) = leave else {
            // Unbounded phase-1 cannot happen; bail out conservatively.
            return Feasibility::Unresolved;
        };
        // Pivot.
        let p = t[piv * cols + j];
        for c in 0..cols {
            t[piv * cols + c] /= p;
        }
        rhs[piv] /= p;
        for r in 0..rows {
            if r == piv {
                continue;
            }
            let f = t[r * cols + j];
            if f != 0.0 {
                for c in 0..cols {
                    t[r * cols + c] -= f * t[piv * cols + c];
                }
                rhs[r] -= f * rhs[piv];
                if rhs[r] < 0.0 && rhs[r] > -1e-13 {
                    rhs[r] = 0.0;
                }
            }
        }
        basis[piv] = j;
    }
    Feasibility::Unresolved
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::from_slice(c)
    }

    fn tri() -> Vec<Point> {
        vec![p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[0.0, 1.0])]
    }

    fn world_with(shapes: Vec<ConvexShape>) -> ObstacleWorld {
        let goal = GoalRegion {
            shape: ConvexShape::ball(&[10.0, 10.0], 0.5).unwrap(),
        };
        let obstacles = shapes
            .into_iter()
            .enumerate()
            .map(|(i, shape)| ConvexObstacle {
                id: i as u32,
                shape,
            })
            .collect();
        ObstacleWorld::new(goal, obstacles, Vec::new()).unwrap()
    }

    #[test]
    fn classify_far_simplex_is_free() {
        let w = world_with(vec![ConvexShape::ball(&[50.0, 50.0], 1.0).unwrap()]);
        assert_eq!(w.classify_simplex(&tri()), Collision::Free);
    }

    #[test]
    fn classify_corner_ball_is_mixed() {
        let w = world_with(vec![ConvexShape::ball(&[0.0, 0.0], 0.1).unwrap()]);
        assert_eq!(w.classify_simplex(&tri()), Collision::Mixed);
    }

    #[test]
    fn classify_enclosing_ball_is_obstructed() {
        let w = world_with(vec![ConvexShape::ball(&[0.3, 0.3], 10.0).unwrap()]);
        assert_eq!(w.classify_simplex(&tri()), Collision::Obstructed);
    }

    #[test]
    fn classify_disjoint_box_is_free() {
        let w = world_with(vec![ConvexShape::aligned_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap()]);
        let far = vec![p(&[2.0, 2.0]), p(&[3.0, 2.0]), p(&[2.0, 3.0])];
        assert_eq!(w.classify_simplex(&far), Collision::Free);
        // The bbox overlaps but the LP must still prove disjointness.
        let near = vec![p(&[1.2, -0.5]), p(&[3.0, 2.0]), p(&[2.0, 3.0])];
        assert_eq!(w.classify_simplex(&near), Collision::Free);
    }

    #[test]
    fn classify_box_overlap_is_mixed() {
        let w = world_with(vec![ConvexShape::aligned_box(&[0.4, 0.4], &[0.6, 0.6]).unwrap()]);
        // Triangle passes near the origin-side corner of the box.
        let t = vec![p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[0.5, 0.5])];
        assert_eq!(w.classify_simplex(&t), Collision::Mixed);
    }

    #[test]
    fn ball_simplex_distance_known_values() {
        let t = tri();
        // Projection onto the hypotenuse x + y = 1.
        let d2 = simplex_point_distance_sq(&t, &p(&[1.0, 1.0]));
        assert!((d2 - 0.5).abs() < 1e-12);
        // Inside the triangle (projection residue only).
        assert!(simplex_point_distance_sq(&t, &p(&[0.2, 0.2])) < 1e-24);
        // Closest to a vertex.
        let d2 = simplex_point_distance_sq(&t, &p(&[-3.0, -4.0]));
        assert!((d2 - 25.0).abs() < 1e-12);
    }

    #[test]
    fn goal_membership_is_closed() {
        let goal = GoalRegion {
            shape: ConvexShape::ball(&[0.0, 0.0], 1.0).unwrap(),
        };
        let w = ObstacleWorld::empty(goal);
        assert!(w.point_in_goal(&p(&[0.0, 0.0])));
        assert!(w.point_in_goal(&p(&[1.0, 0.0])));
        assert!(!w.point_in_goal(&p(&[1.001, 0.0])));
    }

    #[test]
    fn goal_touching_cases() {
        let goal = GoalRegion {
            shape: ConvexShape::ball(&[0.2, 0.2], 0.05).unwrap(),
        };
        let w = ObstacleWorld::empty(goal);
        assert!(w.goal_touching(&tri()));
        let far = vec![p(&[5.0, 5.0]), p(&[6.0, 5.0]), p(&[5.0, 6.0])];
        assert!(!w.goal_touching(&far));
    }

    #[test]
    fn schedule_applies_in_order() {
        let goal = GoalRegion {
            shape: ConvexShape::ball(&[9.0, 9.0], 0.5).unwrap(),
        };
        let ball = ConvexObstacle {
            id: 7,
            shape: ConvexShape::ball(&[1.0, 1.0], 0.5).unwrap(),
        };
        let schedule = vec![
            ObstacleEvent {
                time: 1.0,
                action: EventAction::Appear(ball),
            },
            ObstacleEvent {
                time: 2.0,
                action: EventAction::Move {
                    id: 7,
                    translation: p(&[1.0, 0.0]),
                },
            },
            ObstacleEvent {
                time: 3.0,
                action: EventAction::Disappear(7),
            },
        ];
        let mut w = ObstacleWorld::new(goal, Vec::new(), schedule).unwrap();
        assert!(w.advance_schedule(0.5).unwrap().is_empty());
        let a = w.advance_schedule(1.0).unwrap();
        assert_eq!(a.len(), 1);
        assert!(w.contains_obstacle_at(&p(&[1.0, 1.0])));
        let a = w.advance_schedule(2.5).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].regions.len(), 2);
        assert!(!w.contains_obstacle_at(&p(&[1.0, 1.4])));
        assert!(w.contains_obstacle_at(&p(&[2.0, 1.0])));
        w.advance_schedule(5.0).unwrap();
        assert!(!w.contains_obstacle_at(&p(&[2.0, 1.0])));
        assert!(matches!(
            w.advance_schedule(4.0),
            Err(WorldError::TimeRegression { .. })
        ));
    }

    #[test]
    fn schedule_rejects_unknown_ids() {
        let goal = GoalRegion {
            shape: ConvexShape::ball(&[9.0, 9.0], 0.5).unwrap(),
        };
        let schedule = vec![ObstacleEvent {
            time: 0.5,
            action: EventAction::Disappear(3),
        }];
        let mut w = ObstacleWorld::new(goal, Vec::new(), schedule).unwrap();
        assert!(matches!(
            w.advance_schedule(1.0),
            Err(WorldError::UnknownObstacle(3))
        ));
    }
}
