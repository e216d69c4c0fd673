//! Discrete Hamilton-Jacobi-Bellman machinery for the isotropic
//! (bounded-speed single integrator) case: piecewise-linear value
//! interpolation, the per-vertex local solver, feedback extraction, and
//! trajectory integration.
//!
//! The local solve at a vertex minimizes, over every Free simplex of its
//! star and over nonnegative barycentric weights on the facet opposite the
//! vertex, the interpolated facet value plus travel cost. The objective is
//! convex on each face, so the global minimum is found by visiting the
//! stationary point of every face of the facet; a face whose stationary
//! point leaves the weight simplex simply contributes nothing.

use smallvec::SmallVec;
use thiserror::Error;

use crate::geometry::{barycentric, linalg, Point, MAX_DIM};
use crate::obstacles::ObstacleWorld;
use crate::triangulation::{
    Collision, SimplexId, Triangulation, TriangulationError, VertexId,
};

/// Weights within this of zero are treated as zero (face feasibility).
const WEIGHT_TOL: f64 = 1e-12;

/// Barycentric weights above this participate in interpolation.
const PARTICIPATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HjbError {
    #[error("point lies outside the domain")]
    OutOfDomain,
    #[error("no policy at this point (infinite cost-to-go)")]
    NoPolicy,
    #[error("feedback direction is degenerate")]
    NoDirection,
}

impl From<TriangulationError> for HjbError {
    fn from(_: TriangulationError) -> Self {
        HjbError::OutOfDomain
    }
}

/// Per-vertex cost-to-go and look-ahead values. Vertices start at infinity
/// until the wavefront engine assigns them.
#[derive(Debug, Clone)]
pub struct ValueField {
    vhat: Vec<f64>,
    vstar: Vec<f64>,
}

impl ValueField {
    pub fn new(vertices: usize) -> Self {
        Self {
            vhat: vec![f64::INFINITY; vertices],
            vstar: vec![f64::INFINITY; vertices],
        }
    }

    /// Grow to cover `vertices` entries (new ones at infinity).
    pub fn ensure(&mut self, vertices: usize) {
        if self.vhat.len() < vertices {
            self.vhat.resize(vertices, f64::INFINITY);
            self.vstar.resize(vertices, f64::INFINITY);
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vhat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vhat.is_empty()
    }

    #[inline]
    pub fn vhat(&self, v: VertexId) -> f64 {
        self.vhat[v.index()]
    }

    #[inline]
    pub fn vstar(&self, v: VertexId) -> f64 {
        self.vstar[v.index()]
    }

    #[inline]
    pub fn set_vhat(&mut self, v: VertexId, value: f64) {
        self.vhat[v.index()] = value;
    }

    #[inline]
    pub fn set_vstar(&mut self, v: VertexId, value: f64) {
        self.vstar[v.index()] = value;
    }

    /// Cost-to-go values as a slice (for dumps and sweeps).
    pub fn vhat_slice(&self) -> &[f64] {
        &self.vhat
    }
}

/// State-dependent isotropic traversal cost (cost per unit distance),
/// bounded below by a positive constant.
#[derive(Debug, Clone)]
pub struct CostField {
    constant: f64,
}

impl CostField {
    pub fn unit() -> Self {
        Self { constant: 1.0 }
    }

    pub fn constant(c: f64) -> Option<Self> {
        (c > 0.0 && c.is_finite()).then_some(Self { constant: c })
    }

    #[inline]
    pub fn at(&self, _p: &Point) -> f64 {
        self.constant
    }

    #[inline]
    pub fn min_cost(&self) -> f64 {
        self.constant
    }
}

/// Piecewise-linear interpolation of the cost-to-go at `q`; infinite when
/// any participating vertex is infinite.
pub fn interpolate(
    field: &ValueField,
    tri: &Triangulation,
    q: &Point,
) -> Result<f64, HjbError> {
    let sid = tri.find_simplex(q)?;
    let pts = tri.simplex_points(sid);
    let b = barycentric(&pts, q).map_err(|_| HjbError::OutOfDomain)?;
    let mut acc = 0.0;
    for (w, v) in b.weights.iter().zip(tri.simplex(sid).vertices()) {
        if *w > PARTICIPATION_TOL {
            let val = field.vhat(*v);
            if !val.is_finite() {
                return Ok(f64::INFINITY);
            }
            acc += w * val;
        }
    }
    Ok(acc)
}

/// Minimum of `sum(w_i v_i) + c * |anchor - sum(w_i y_i)|` over the closed
/// weight simplex of the vertex list, visiting the stationary point of each
/// face. Returns the best value and the minimizing point.
///
/// Vertices with non-finite values are excluded. `best_bound` prunes faces
/// that cannot beat an already-known value.
pub(crate) fn min_over_faces(
    anchor: &Point,
    cost: f64,
    pts: &[&Point],
    vals: &[f64],
    best_bound: f64,
    target: Option<&mut Point>,
) -> f64 {
    let dim = anchor.dim();
    let m = pts.len();
    debug_assert_eq!(vals.len(), m);
    let mut best = f64::INFINITY;
    let mut best_point: Option<Point> = None;

    // Finite-valued vertices only.
    let live: SmallVec<[usize; MAX_DIM + 1]> = (0..m).filter(|&i| vals[i].is_finite()).collect();
    if live.is_empty() {
        return best;
    }

    // Singletons first; they are cheap and give a pruning bound.
    for &i in &live {
        let f = vals[i] + cost * anchor.distance(pts[i]);
        if f < best {
            best = f;
            if target.is_some() {
                best_point = Some(pts[i].clone());
            }
        }
    }

    let mut gram: SmallVec<[f64; 64]> = SmallVec::new();
    let mut p_rhs: SmallVec<[f64; MAX_DIM]> = SmallVec::new();
    let mut q_rhs: SmallVec<[f64; MAX_DIM]> = SmallVec::new();
    let n_live = live.len();
    for mask in 1u32..(1 << n_live) {
        let k = mask.count_ones() as usize;
        if k < 2 {
            continue;
        }
        let ids: SmallVec<[usize; MAX_DIM + 1]> = (0..n_live)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| live[i])
            .collect();
        // Value lower bound: any convex combination is at least the minimum
        // vertex value.
        let face_min = ids.iter().map(|&i| vals[i]).fold(f64::INFINITY, f64::min);
        if face_min >= best.min(best_bound) {
            continue;
        }
        let base = ids[k - 1];
        let cols = k - 1;
        gram.clear();
        gram.resize(cols * cols, 0.0);
        p_rhs.clear();
        q_rhs.clear();
        for a in 0..cols {
            for b in a..cols {
                let mut s = 0.0;
                for j in 0..dim {
                    s += (pts[ids[a]][j] - pts[base][j]) * (pts[ids[b]][j] - pts[base][j]);
                }
                gram[a * cols + b] = s;
                gram[b * cols + a] = s;
            }
            let mut s = 0.0;
            for j in 0..dim {
                s += (pts[ids[a]][j] - pts[base][j]) * (anchor[j] - pts[base][j]);
            }
            p_rhs.push(s);
            q_rhs.push(vals[ids[a]] - vals[base]);
        }
        // Two solves against the same Gram matrix.
        let mut g1 = gram.clone();
        if !linalg::solve_in_place(cols, &mut g1, &mut p_rhs) {
            continue;
        }
        let mut g2 = gram.clone();
        if !linalg::solve_in_place(cols, &mut g2, &mut q_rhs) {
            continue;
        }
        // |A q|^2 = q^T b where b are the value differences.
        let s_sq: f64 = q_rhs
            .iter()
            .zip(ids.iter().take(cols))
            .map(|(qa, &i)| qa * (vals[i] - vals[base]))
            .sum();
        let beta_sq = 1.0 - s_sq / (cost * cost);
        if beta_sq <= 1e-15 {
            continue; // no stationary point on this face's affine hull
        }
        // Residual of the anchor against the face's affine hull.
        let mut w_sq = 0.0;
        for j in 0..dim {
            let mut r = anchor[j] - pts[base][j];
            for a in 0..cols {
                r -= p_rhs[a] * (pts[ids[a]][j] - pts[base][j]);
            }
            w_sq += r * r;
        }
        let t = w_sq.sqrt() / beta_sq.sqrt();
        // Stationary weights mu = p - (t/c) q.
        let mut feasible = true;
        let mut mu: SmallVec<[f64; MAX_DIM]> = SmallVec::with_capacity(cols);
        let mut mu_sum = 0.0;
        for a in 0..cols {
            let w = p_rhs[a] - (t / cost) * q_rhs[a];
            if w < -WEIGHT_TOL {
                feasible = false;
                break;
            }
            mu.push(w.max(0.0));
            mu_sum += w.max(0.0);
        }
        if !feasible || 1.0 - mu_sum < -WEIGHT_TOL {
            continue;
        }
        let mut f = vals[base] + cost * t;
        for a in 0..cols {
            f += mu[a] * (vals[ids[a]] - vals[base]);
        }
        if f < best {
            best = f;
            if target.is_some() {
                let coords: SmallVec<[f64; MAX_DIM]> = (0..dim)
                    .map(|j| {
                        let mut x = pts[base][j];
                        for a in 0..cols {
                            x += mu[a] * (pts[ids[a]][j] - pts[base][j]);
                        }
                        x
                    })
                    .collect();
                best_point = Some(Point::new(coords));
            }
        }
    }
    if let (Some(slot), Some(bp)) = (target, best_point) {
        *slot = bp;
    }
    best
}

/// The local HJB solve at a vertex: zero inside the goal, otherwise the
/// minimum over Free star simplices of the facet minimization opposite the
/// vertex. Infinite when no Free simplex supports the vertex.
pub fn minloc(
    x: VertexId,
    tri: &Triangulation,
    world: &ObstacleWorld,
    field: &ValueField,
    cost: &CostField,
) -> f64 {
    let p = tri.point(x);
    if world.point_in_goal(p) {
        return 0.0;
    }
    let c = cost.at(p);
    let mut best = f64::INFINITY;
    let mut pts: SmallVec<[&Point; MAX_DIM + 1]> = SmallVec::new();
    let mut vals: SmallVec<[f64; MAX_DIM + 1]> = SmallVec::new();
    for &sid in tri.star(x) {
        let s = tri.simplex(sid);
        if s.collision() != Collision::Free {
            continue;
        }
        pts.clear();
        vals.clear();
        let mut facet_min = f64::INFINITY;
        for &v in s.vertices() {
            if v != x {
                pts.push(tri.point(v));
                let val = field.vhat(v);
                vals.push(val);
                facet_min = facet_min.min(val);
            }
        }
        if facet_min >= best {
            continue;
        }
        let f = min_over_faces(p, c, &pts, &vals, best, None);
        best = best.min(f);
    }
    best
}

/// Feedback policy evaluated at a point.
#[derive(Debug, Clone)]
pub enum Feedback {
    /// The point is inside the goal region.
    Terminal,
    Step {
        /// Unit direction toward the minimizing interpolation point.
        direction: Point,
        /// The minimizing interpolation point itself (on the boundary of
        /// the step simplex).
        target: Point,
        /// Objective value of the step.
        value: f64,
        /// The Free childless simplex the step moves through.
        simplex: SimplexId,
    },
}

/// Direction of motion at `q`: the unit vector toward the point minimizing
/// interpolated value plus travel cost over the Free childless simplices
/// containing `q`, excluding faces that contain `q` itself.
pub fn feedback(
    q: &Point,
    tri: &Triangulation,
    world: &ObstacleWorld,
    field: &ValueField,
    cost: &CostField,
) -> Result<Feedback, HjbError> {
    if world.point_in_goal(q) {
        return Ok(Feedback::Terminal);
    }
    let sid = tri.find_simplex(q)?;
    let pts = tri.simplex_points(sid);
    let b = barycentric(&pts, q).map_err(|_| HjbError::OutOfDomain)?;
    let s = tri.simplex(sid);
    let support: SmallVec<[VertexId; MAX_DIM + 1]> = s
        .vertices()
        .iter()
        .zip(b.weights.iter())
        .filter(|(_, &w)| w > PARTICIPATION_TOL)
        .map(|(&v, _)| v)
        .collect();

    // Candidate simplices: every childless Free simplex containing the
    // whole support face (for interior points that is just the located
    // simplex).
    let mut candidates: SmallVec<[SimplexId; 16]> = SmallVec::new();
    if support.len() == tri.dim() + 1 {
        candidates.push(sid);
    } else {
        for &cand in tri.star(support[0]) {
            let cs = tri.simplex(cand);
            if support.iter().all(|&v| cs.contains_vertex(v)) {
                candidates.push(cand);
            }
        }
    }

    let c = cost.at(q);
    let mut best = f64::INFINITY;
    let mut best_target = Point::zeros(q.dim());
    let mut best_simplex = None;
    let mut fpts: SmallVec<[&Point; MAX_DIM + 1]> = SmallVec::new();
    let mut fvals: SmallVec<[f64; MAX_DIM + 1]> = SmallVec::new();
    for &cand in &candidates {
        let cs = tri.simplex(cand);
        if cs.collision() != Collision::Free {
            continue;
        }
        // Exclude faces containing q by dropping each support vertex in
        // turn; the union covers exactly the faces missing some support
        // vertex.
        for &drop in &support {
            fpts.clear();
            fvals.clear();
            for &v in cs.vertices() {
                if v != drop {
                    fpts.push(tri.point(v));
                    fvals.push(field.vhat(v));
                }
            }
            let mut tgt = Point::zeros(q.dim());
            let f = min_over_faces(q, c, &fpts, &fvals, best, Some(&mut tgt));
            if f < best {
                best = f;
                best_target = tgt;
                best_simplex = Some(cand);
            }
        }
    }
    let Some(simplex) = best_simplex else {
        return Err(HjbError::NoPolicy);
    };
    if !best.is_finite() {
        return Err(HjbError::NoPolicy);
    }
    let len = q.distance(&best_target);
    if len < 1e-15 * (1.0 + tri.domain().diameter()) {
        return Err(HjbError::NoDirection);
    }
    let direction = Point::new(
        (0..q.dim())
            .map(|j| (best_target[j] - q[j]) / len)
            .collect::<SmallVec<[f64; MAX_DIM]>>(),
    );
    Ok(Feedback::Step {
        direction,
        target: best_target,
        value: best,
        simplex,
    })
}

/// A trajectory produced by following the feedback field.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub waypoints: Vec<Point>,
    /// Accumulated traversal cost (integral of the cost field).
    pub cost: f64,
    pub reached_goal: bool,
    /// Total traversal time at unit speed (path length).
    pub t_f: f64,
    /// Childless simplices the trajectory moved through, in order.
    pub simplices: Vec<SimplexId>,
}

/// Follow the feedback field from `start`, emitting simplex-exact segments.
///
/// Terminates on goal entry, when the accumulated cost exceeds `max_cost`,
/// or when the policy gives out (infinite value or no progress);
/// `reached_goal` distinguishes the cases. `step` caps individual segment
/// lengths.
pub fn integrate(
    start: &Point,
    tri: &Triangulation,
    world: &ObstacleWorld,
    field: &ValueField,
    cost: &CostField,
    step: f64,
    max_cost: f64,
) -> Result<Trajectory, HjbError> {
    integrate_inner(start, tri, world, field, cost, step, max_cost, f64::INFINITY)
}

/// Follow the feedback field for at most `length` of arc; used by the
/// replanning control loop. Errors mirror `integrate`.
pub fn advance(
    start: &Point,
    tri: &Triangulation,
    world: &ObstacleWorld,
    field: &ValueField,
    cost: &CostField,
    step: f64,
    length: f64,
) -> Result<Trajectory, HjbError> {
    integrate_inner(start, tri, world, field, cost, step, f64::INFINITY, length)
}

#[allow(clippy::too_many_arguments)]
fn integrate_inner(
    start: &Point,
    tri: &Triangulation,
    world: &ObstacleWorld,
    field: &ValueField,
    cost: &CostField,
    step: f64,
    max_cost: f64,
    max_length: f64,
) -> Result<Trajectory, HjbError> {
    if world.point_in_goal(start) {
        return Ok(Trajectory {
            waypoints: vec![start.clone()],
            cost: 0.0,
            reached_goal: true,
            t_f: 0.0,
            simplices: Vec::new(),
        });
    }
    if !interpolate(field, tri, start)?.is_finite() {
        return Err(HjbError::NoPolicy);
    }
    let mut waypoints = vec![start.clone()];
    let mut simplices = Vec::new();
    let mut pos = start.clone();
    let mut total_cost = 0.0;
    let mut length = 0.0;
    let mut reached = false;
    let tiny = 1e-13 * (1.0 + tri.domain().diameter());
    let mut stalls = 0;
    // Cost is positive and bounded below, so max_cost bounds the step count;
    // the cap guards against boundary chattering.
    let max_steps = 1_000_000usize;
    for _ in 0..max_steps {
        let fb = match feedback(&pos, tri, world, field, cost) {
            Ok(f) => f,
            Err(HjbError::NoPolicy) | Err(HjbError::NoDirection) => break,
            Err(e) => return Err(e),
        };
        let (target, simplex) = match fb {
            Feedback::Terminal => {
                reached = true;
                break;
            }
            Feedback::Step {
                target, simplex, ..
            } => (target, simplex),
        };
        let seg = pos.distance(&target);
        let capped = seg > step;
        let next = if capped {
            let f = step / seg;
            Point::new(
                (0..pos.dim())
                    .map(|j| pos[j] + f * (target[j] - pos[j]))
                    .collect::<SmallVec<[f64; MAX_DIM]>>(),
            )
        } else {
            target
        };
        let seg_len = pos.distance(&next);
        // Goal entry along the segment ends the trajectory at the entry
        // point.
        if let Some(entry) = goal_entry(world, &pos, &next) {
            let entry_len = pos.distance(&entry);
            total_cost += cost.at(&pos) * entry_len;
            length += entry_len;
            waypoints.push(entry);
            simplices.push(simplex);
            reached = true;
            break;
        }
        total_cost += cost.at(&pos) * seg_len;
        length += seg_len;
        if seg_len < tiny {
            stalls += 1;
            if stalls > 32 {
                break;
            }
        } else {
            stalls = 0;
        }
        pos = next;
        waypoints.push(pos.clone());
        simplices.push(simplex);
        if world.point_in_goal(&pos) {
            reached = true;
            break;
        }
        if total_cost > max_cost || length >= max_length {
            break;
        }
    }
    Ok(Trajectory {
        waypoints,
        cost: total_cost,
        reached_goal: reached,
        t_f: length,
        simplices,
    })
}

/// First goal-entry point on the segment [a, b], if any.
fn goal_entry(world: &ObstacleWorld, a: &Point, b: &Point) -> Option<Point> {
    use crate::obstacles::ConvexShape;
    let d = a.dim();
    let len = a.distance(b);
    if len == 0.0 {
        return None;
    }
    let dir: SmallVec<[f64; MAX_DIM]> = (0..d).map(|j| (b[j] - a[j]) / len).collect();
    let t = match &world.goal().shape {
        ConvexShape::Ball { center, radius } => {
            let u: SmallVec<[f64; MAX_DIM]> = (0..d).map(|j| a[j] - center[j]).collect();
            let udir: f64 = u.iter().zip(&dir).map(|(x, y)| x * y).sum();
            let uu: f64 = u.iter().map(|x| x * x).sum();
            let disc = udir * udir - (uu - radius * radius);
            if disc < 0.0 {
                return None;
            }
            let t = -udir - disc.sqrt();
            if !(0.0..=len).contains(&t) {
                return None;
            }
            t
        }
        ConvexShape::Polytope {
            normals, offsets, ..
        } => {
            let mut t_lo: f64 = 0.0;
            let mut t_hi: f64 = len;
            for (n, &b0) in normals.iter().zip(offsets) {
                let v0: f64 = (0..d).map(|j| n[j] * a[j]).sum::<f64>() - b0;
                let slope: f64 = (0..d).map(|j| n[j] * dir[j]).sum();
                if slope.abs() < 1e-300 {
                    if v0 > 0.0 {
                        return None;
                    }
                } else {
                    let tc = -v0 / slope;
                    if slope > 0.0 {
                        t_hi = t_hi.min(tc);
                    } else {
                        t_lo = t_lo.max(tc);
                    }
                }
            }
            if t_lo > t_hi {
                return None;
            }
            t_lo
        }
    };
    Some(Point::new(
        (0..d)
            .map(|j| a[j] + t * dir[j])
            .collect::<SmallVec<[f64; MAX_DIM]>>(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obstacles::{ConvexShape, GoalRegion};
    use crate::triangulation::Collision;

    fn p(c: &[f64]) -> Point {
        Point::from_slice(c)
    }

    fn goal_at(center: &[f64], r: f64) -> ObstacleWorld {
        ObstacleWorld::empty(GoalRegion {
            shape: ConvexShape::ball(center, r).unwrap(),
        })
    }

    /// Triangulation with one triangle (1,0), (0,0), (0,1) inside a padded
    /// domain.
    fn one_triangle(collision: Collision) -> Triangulation {
        Triangulation::from_parts(
            &[-1.0, -1.0],
            &[2.0, 2.0],
            vec![p(&[1.0, 0.0]), p(&[0.0, 0.0]), p(&[0.0, 1.0])],
            vec![(vec![0, 1, 2], collision)],
        )
        .unwrap()
    }

    #[test]
    fn interpolate_linear_cases() {
        let mut t = Triangulation::init(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        t.insert_vertex(p(&[0.5, 0.5])).unwrap();
        let mut field = ValueField::new(t.vertex_count());
        for v in 0..t.vertex_count() {
            field.set_vhat(VertexId(v as u32), v as f64);
        }
        // At a vertex.
        let v = interpolate(&field, &t, &p(&[0.5, 0.5])).unwrap();
        assert!((v - 4.0).abs() < 1e-9);
        // Midpoint of the edge from vertex 0 (value 0) to vertex 4 (value
        // 4).
        let v = interpolate(&field, &t, &p(&[0.25, 0.25])).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        // An infinite vertex poisons its simplices.
        field.set_vhat(VertexId(0), f64::INFINITY);
        let v = interpolate(&field, &t, &p(&[0.25, 0.25])).unwrap();
        assert!(v.is_infinite());
        assert!(matches!(
            interpolate(&field, &t, &p(&[5.0, 5.0])),
            Err(HjbError::OutOfDomain)
        ));
    }

    #[test]
    fn minloc_goal_vertex_is_zero() {
        let t = one_triangle(Collision::Free);
        let world = goal_at(&[1.0, 0.0], 0.25);
        let field = ValueField::new(t.vertex_count());
        let cost = CostField::unit();
        assert_eq!(minloc(VertexId(0), &t, &world, &field, &cost), 0.0);
    }

    #[test]
    fn minloc_perpendicular_foot_case() {
        // Vertex x = (1,0); facet (0,0)-(0,1) with both values zero. The
        // objective sqrt(1 + s^2) over the facet parameter s is minimized at
        // the foot s = 0 with value 1.
        let t = one_triangle(Collision::Free);
        let world = goal_at(&[50.0, 50.0], 0.25);
        let mut field = ValueField::new(t.vertex_count());
        field.set_vhat(VertexId(1), 0.0);
        field.set_vhat(VertexId(2), 0.0);
        let cost = CostField::unit();
        let got = minloc(VertexId(0), &t, &world, &field, &cost);
        // Golden-section oracle over the facet parameter.
        let f = |s: f64| (1.0f64 + s * s).sqrt();
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        while hi - lo > 1e-12 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let oracle = f(0.5 * (lo + hi));
        assert!((got - oracle).abs() < 1e-9, "got {got}, oracle {oracle}");
        assert!((got - 1.0).abs() < 1e-9);
    }

    #[test]
    fn minloc_single_point_update() {
        // Facet with one finite vertex at distance 2 carrying value 3.
        let t = Triangulation::from_parts(
            &[-3.0, -3.0],
            &[3.0, 3.0],
            vec![p(&[0.0, 0.0]), p(&[2.0, 0.0]), p(&[0.0, 2.5])],
            vec![(vec![0, 1, 2], Collision::Free)],
        )
        .unwrap();
        let world = goal_at(&[50.0, 50.0], 0.25);
        let mut field = ValueField::new(t.vertex_count());
        field.set_vhat(VertexId(1), 3.0);
        let cost = CostField::unit();
        let got = minloc(VertexId(0), &t, &world, &field, &cost);
        assert!((got - 5.0).abs() < 1e-12);
    }

    #[test]
    fn minloc_obstructed_star_is_infinite() {
        let t = one_triangle(Collision::Obstructed);
        let world = goal_at(&[50.0, 50.0], 0.25);
        let mut field = ValueField::new(t.vertex_count());
        field.set_vhat(VertexId(1), 0.0);
        field.set_vhat(VertexId(2), 0.0);
        let cost = CostField::unit();
        assert!(minloc(VertexId(0), &t, &world, &field, &cost).is_infinite());
    }

    #[test]
    fn feedback_terminal_and_direction() {
        let t = one_triangle(Collision::Free);
        let world = goal_at(&[0.0, 0.0], 0.05);
        let mut field = ValueField::new(t.vertex_count());
        field.set_vhat(VertexId(0), 1.0);
        field.set_vhat(VertexId(1), 0.0);
        field.set_vhat(VertexId(2), 1.0);
        let cost = CostField::unit();
        assert!(matches!(
            feedback(&p(&[0.0, 0.0]), &t, &world, &field, &cost).unwrap(),
            Feedback::Terminal
        ));
        // From the triangle interior the step must aim at the zero-valued
        // vertex (the goal).
        match feedback(&p(&[0.3, 0.3]), &t, &world, &field, &cost).unwrap() {
            Feedback::Step { direction, .. } => {
                let expect = 1.0 / 2.0f64.sqrt();
                assert!((direction[0] + expect).abs() < 1e-6);
                assert!((direction[1] + expect).abs() < 1e-6);
            }
            Feedback::Terminal => panic!("not terminal"),
        }
    }

    #[test]
    fn integrate_straight_line_in_free_triangle() {
        let t = one_triangle(Collision::Free);
        let world = goal_at(&[0.0, 0.0], 0.05);
        let mut field = ValueField::new(t.vertex_count());
        field.set_vhat(VertexId(0), 1.0);
        field.set_vhat(VertexId(1), 0.0);
        field.set_vhat(VertexId(2), 1.0);
        let cost = CostField::unit();
        let start = p(&[0.5, 0.25]);
        let traj = integrate(&start, &t, &world, &field, &cost, 10.0, 100.0).unwrap();
        assert!(traj.reached_goal);
        let direct = start.distance(&p(&[0.0, 0.0])) - 0.05;
        assert!(
            traj.cost >= direct - 1e-9 && traj.cost <= direct * 1.2,
            "cost {} vs direct {}",
            traj.cost,
            direct
        );
        // Starting inside the goal is a single-waypoint trajectory.
        let traj = integrate(&p(&[0.01, 0.0]), &t, &world, &field, &cost, 10.0, 100.0).unwrap();
        assert!(traj.reached_goal);
        assert_eq!(traj.waypoints.len(), 1);
        assert_eq!(traj.cost, 0.0);
    }

    #[test]
    fn integrate_without_policy_errors() {
        let t = one_triangle(Collision::Obstructed);
        let world = goal_at(&[50.0, 50.0], 0.25);
        let field = ValueField::new(t.vertex_count());
        let cost = CostField::unit();
        assert!(matches!(
            integrate(&p(&[0.3, 0.3]), &t, &world, &field, &cost, 10.0, 100.0),
            Err(HjbError::NoPolicy)
        ));
    }
}
