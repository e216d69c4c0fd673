//! Incremental Delaunay triangulation of the configuration-space box.
//!
//! Simplices are never deleted: destroyed (rewired) simplices receive all
//! simplices created by the insertion as children, and the resulting history
//! DAG drives point location. Only childless simplices belong to the current
//! triangulation; they tile the domain box exactly because the box corners
//! are pre-inserted as the initial vertex set.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::geometry::{
    barycentric, circumsphere, in_sphere_perturbed, orientation, AxisBox, GeometryError, Point,
    Sign, MAX_DIM,
};

/// Barycentric slack for closed-simplex containment tests.
pub const CONTAINMENT_TOL: f64 = 1e-12;

/// Two vertices closer than this (relative to the domain diameter) are
/// treated as coincident; insertion reports a duplicate so the caller can
/// resample.
pub const DUPLICATE_RELATIVE_TOL: f64 = 1e-12;

const NO_NEIGHBOR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimplexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl SimplexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for SimplexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Collision status of a simplex against the obstacle world.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collision {
    Unknown,
    Free,
    Mixed,
    Obstructed,
}

impl Collision {
    pub fn as_str(self) -> &'static str {
        match self {
            Collision::Unknown => "unknown",
            Collision::Free => "free",
            Collision::Mixed => "mixed",
            Collision::Obstructed => "obstructed",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        match s {
            "unknown" => Some(Collision::Unknown),
            "free" => Some(Collision::Free),
            "mixed" => Some(Collision::Mixed),
            "obstructed" => Some(Collision::Obstructed),
            _ => None,
        }
    }
}

type VertexList = SmallVec<[VertexId; MAX_DIM + 1]>;
type FacetList = SmallVec<[VertexId; MAX_DIM]>;

/// A simplex record in the history DAG.
#[derive(Debug, Clone)]
pub struct Simplex {
    vertices: VertexList, // sorted by id
    neighbors: SmallVec<[u32; MAX_DIM + 1]>, // neighbors[k] shares the facet opposite vertices[k]
    circumcenter: Point,
    circumradius: f64,
    orientation: Sign,
    children: Option<Arc<[SimplexId]>>, // None while childless (alive)
    collision: Collision,
    goal_touching: bool,
}

impl Simplex {
    #[inline]
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    /// Neighbor sharing the facet opposite `vertices()[k]`, if any (`None`
    /// on the domain boundary). Meaningful only while childless.
    #[inline]
    pub fn neighbor(&self, k: usize) -> Option<SimplexId> {
        let n = self.neighbors[k];
        (n != NO_NEIGHBOR).then_some(SimplexId(n))
    }

    #[inline]
    pub fn is_childless(&self) -> bool {
        self.children.is_none()
    }

    #[inline]
    pub fn children(&self) -> &[SimplexId] {
        self.children.as_deref().unwrap_or(&[])
    }

    #[inline]
    pub fn circumcenter(&self) -> &Point {
        &self.circumcenter
    }

    #[inline]
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    #[inline]
    pub fn collision(&self) -> Collision {
        self.collision
    }

    #[inline]
    pub fn goal_touching(&self) -> bool {
        self.goal_touching
    }

    #[inline]
    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    fn facet_without(&self, k: usize) -> FacetList {
        let mut f: FacetList = SmallVec::with_capacity(self.vertices.len() - 1);
        for (i, &v) in self.vertices.iter().enumerate() {
            if i != k {
                f.push(v);
            }
        }
        f
    }
}

/// Result of a vertex insertion.
#[derive(Debug, Clone)]
pub struct Insertion {
    pub vertex: VertexId,
    pub created: Vec<SimplexId>,
    pub destroyed: Vec<SimplexId>,
}

/// A (d-1)-facet on the cavity boundary together with the surviving simplex
/// on its far side (`None` on the domain boundary).
#[derive(Debug, Clone)]
pub struct Ridge {
    pub facet: FacetList,
    pub outside: Option<SimplexId>,
}

#[derive(Debug, Error)]
pub enum TriangulationError {
    #[error("dimension {0} outside supported range [2, {MAX_DIM}]")]
    UnsupportedDimension(usize),
    #[error("domain box must have positive extent on every axis")]
    InvalidDomain,
    #[error("point lies outside the domain box")]
    OutOfDomain,
    #[error("point coincides with existing vertex {0}")]
    DuplicateVertex(VertexId),
    #[error("insertion would create a degenerate simplex")]
    DegenerateInsertion,
    #[error("internal consistency violation: {0}")]
    Inconsistency(&'static str),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Monotone work counters for the scaling diagnostics.
#[derive(Debug, Default)]
pub struct OpCounters {
    descent_steps: AtomicU64,
    visible_visits: AtomicU64,
}

/// Snapshot of the work counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    pub descent_steps: u64,
    pub visible_visits: u64,
}

type RadiusKey = (u64, Reverse<u32>);

fn radius_key(radius: f64, sid: SimplexId) -> RadiusKey {
    // Radii are nonnegative, so the IEEE bit pattern is order-preserving.
    (radius.to_bits(), Reverse(sid.0))
}

#[derive(Debug)]
pub struct Triangulation {
    dim: usize,
    domain: AxisBox,
    points: Vec<Point>,
    simplices: Vec<Simplex>,
    stars: Vec<Vec<SimplexId>>,
    roots: Vec<SimplexId>,
    root_by_perm: Vec<SimplexId>, // Lehmer-indexed; empty for meshes built from parts
    by_radius: BTreeSet<RadiusKey>, // childless with circumcenter inside the box
    mixed_by_radius: BTreeSet<RadiusKey>,
    goal_by_radius: BTreeSet<RadiusKey>,
    alive_count: usize,
    counters: OpCounters,
}

impl Triangulation {
    /// Triangulate the domain box by inserting its 2^d corners and splitting
    /// it into d! path simplices (one per coordinate ordering).
    pub fn init(min: &[f64], max: &[f64]) -> Result<Self, TriangulationError> {
        let dim = min.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(TriangulationError::UnsupportedDimension(dim));
        }
        let domain = AxisBox::new(Point::from_slice(min), Point::from_slice(max))
            .ok_or(TriangulationError::InvalidDomain)?;

        // Corner with bitmask m becomes vertex m.
        let points: Vec<Point> = (0..1usize << dim).map(|m| domain.corner(m)).collect();

        let perms = permutations(dim);
        let mut simplices = Vec::with_capacity(perms.len());
        let mut root_by_perm = vec![SimplexId(0); perms.len()];
        let mut scratch: SmallVec<[Point; MAX_DIM + 1]> = SmallVec::new();
        for perm in &perms {
            let mut mask = 0usize;
            let mut vertices: VertexList = SmallVec::with_capacity(dim + 1);
            vertices.push(VertexId(0));
            for &axis in perm {
                mask |= 1 << axis;
                vertices.push(VertexId(mask as u32));
            }
            // Masks grow along the path, so the list is already sorted.
            scratch.clear();
            scratch.extend(vertices.iter().map(|v| points[v.index()].clone()));
            let orient = orientation(&scratch)?;
            debug_assert_ne!(orient, Sign::Zero);
            let cs = circumsphere(&scratch)?;
            let sid = SimplexId(simplices.len() as u32);
            root_by_perm[lehmer_index(perm)] = sid;
            simplices.push(Simplex {
                vertices,
                neighbors: SmallVec::from_elem(NO_NEIGHBOR, dim + 1),
                circumcenter: cs.center,
                circumradius: cs.radius,
                orientation: orient,
                children: None,
                collision: Collision::Unknown,
                goal_touching: false,
            });
        }
        link_neighbors(&mut simplices)?;

        let mut tri = Self {
            dim,
            domain,
            points,
            stars: Vec::new(),
            roots: (0..simplices.len() as u32).map(SimplexId).collect(),
            root_by_perm,
            by_radius: BTreeSet::new(),
            mixed_by_radius: BTreeSet::new(),
            goal_by_radius: BTreeSet::new(),
            alive_count: simplices.len(),
            counters: OpCounters::default(),
            simplices,
        };
        tri.rebuild_indexes();
        Ok(tri)
    }

    /// Build a triangulation from an explicit simplex list (structured
    /// meshes, dump verification). No history DAG: every simplex is a root.
    pub fn from_parts(
        min: &[f64],
        max: &[f64],
        points: Vec<Point>,
        cells: Vec<(Vec<u32>, Collision)>,
    ) -> Result<Self, TriangulationError> {
        let dim = min.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(TriangulationError::UnsupportedDimension(dim));
        }
        let domain = AxisBox::new(Point::from_slice(min), Point::from_slice(max))
            .ok_or(TriangulationError::InvalidDomain)?;
        if points.iter().any(|p| p.dim() != dim) {
            return Err(TriangulationError::InvalidMesh(
                "vertex dimension mismatch".into(),
            ));
        }

        let mut simplices = Vec::with_capacity(cells.len());
        let mut scratch: SmallVec<[Point; MAX_DIM + 1]> = SmallVec::new();
        for (ids, collision) in cells {
            if ids.len() != dim + 1 {
                return Err(TriangulationError::InvalidMesh(format!(
                    "simplex must have {} vertices",
                    dim + 1
                )));
            }
            let mut vertices: VertexList = ids.iter().map(|&i| VertexId(i)).collect();
            vertices.sort_unstable();
            if vertices.windows(2).any(|w| w[0] == w[1])
                || vertices.last().is_some_and(|v| v.index() >= points.len())
            {
                return Err(TriangulationError::InvalidMesh(
                    "invalid simplex vertex ids".into(),
                ));
            }
            scratch.clear();
            scratch.extend(vertices.iter().map(|v| points[v.index()].clone()));
            let orient = orientation(&scratch)?;
            if orient == Sign::Zero {
                return Err(TriangulationError::InvalidMesh(
                    "degenerate simplex in mesh".into(),
                ));
            }
            let cs = circumsphere(&scratch)?;
            simplices.push(Simplex {
                vertices,
                neighbors: SmallVec::from_elem(NO_NEIGHBOR, dim + 1),
                circumcenter: cs.center,
                circumradius: cs.radius,
                orientation: orient,
                children: None,
                collision,
                goal_touching: false,
            });
        }
        link_neighbors(&mut simplices)?;

        let mut tri = Self {
            dim,
            domain,
            points,
            stars: Vec::new(),
            roots: (0..simplices.len() as u32).map(SimplexId).collect(),
            root_by_perm: Vec::new(),
            by_radius: BTreeSet::new(),
            mixed_by_radius: BTreeSet::new(),
            goal_by_radius: BTreeSet::new(),
            alive_count: simplices.len(),
            counters: OpCounters::default(),
            simplices,
        };
        tri.rebuild_indexes();
        Ok(tri)
    }

    fn rebuild_indexes(&mut self) {
        self.stars = vec![Vec::new(); self.points.len()];
        for (i, s) in self.simplices.iter().enumerate() {
            if !s.is_childless() {
                continue;
            }
            let sid = SimplexId(i as u32);
            for v in &s.vertices {
                self.stars[v.index()].push(sid);
            }
            if self.domain.contains(&s.circumcenter) {
                self.by_radius.insert(radius_key(s.circumradius, sid));
            }
            if s.collision == Collision::Mixed {
                self.mixed_by_radius.insert(radius_key(s.circumradius, sid));
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    #[inline]
    pub fn total_simplices(&self) -> usize {
        self.simplices.len()
    }

    #[inline]
    pub fn point(&self, v: VertexId) -> &Point {
        &self.points[v.index()]
    }

    #[inline]
    pub fn simplex(&self, s: SimplexId) -> &Simplex {
        &self.simplices[s.index()]
    }

    /// Childless simplices containing `v`.
    #[inline]
    pub fn star(&self, v: VertexId) -> &[SimplexId] {
        &self.stars[v.index()]
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.points.len() as u32).map(VertexId)
    }

    pub fn alive_ids(&self) -> impl Iterator<Item = SimplexId> + '_ {
        self.simplices
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_childless())
            .map(|(i, _)| SimplexId(i as u32))
    }

    pub fn counts(&self) -> OpCounts {
        OpCounts {
            descent_steps: self.counters.descent_steps.load(Ordering::Relaxed),
            visible_visits: self.counters.visible_visits.load(Ordering::Relaxed),
        }
    }

    /// Copies of a simplex's vertex points, in vertex order.
    pub fn simplex_points(&self, s: SimplexId) -> SmallVec<[Point; MAX_DIM + 1]> {
        self.simplices[s.index()]
            .vertices
            .iter()
            .map(|v| self.points[v.index()].clone())
            .collect()
    }

    /// Update the collision status of a childless simplex, maintaining the
    /// mixed-simplex priority index.
    pub fn set_collision(&mut self, sid: SimplexId, status: Collision) {
        let s = &mut self.simplices[sid.index()];
        debug_assert!(s.is_childless());
        if s.collision == status {
            return;
        }
        let key = radius_key(s.circumradius, sid);
        if s.collision == Collision::Mixed {
            self.mixed_by_radius.remove(&key);
        }
        if status == Collision::Mixed {
            self.mixed_by_radius.insert(key);
        }
        self.simplices[sid.index()].collision = status;
    }

    /// Mark whether a childless simplex touches the goal region.
    pub fn set_goal_touching(&mut self, sid: SimplexId, touching: bool) {
        let s = &mut self.simplices[sid.index()];
        debug_assert!(s.is_childless());
        if s.goal_touching == touching {
            return;
        }
        let key = radius_key(s.circumradius, sid);
        if touching {
            self.goal_by_radius.insert(key);
        } else {
            self.goal_by_radius.remove(&key);
        }
        self.simplices[sid.index()].goal_touching = touching;
    }

    fn min_bary_weight(&self, sid: SimplexId, q: &Point) -> f64 {
        let pts = self.simplex_points(sid);
        match barycentric(&pts, q) {
            Ok(b) => b.min_weight(),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Locate a childless simplex whose closed realization contains `q` by
    /// descending the history DAG. At each level the first child containing
    /// `q` is taken; if rounding leaves no child containing it, the
    /// most-contained child (largest minimum barycentric weight) is used.
    pub fn find_simplex(&self, q: &Point) -> Result<SimplexId, TriangulationError> {
        if q.dim() != self.dim || !self.domain.contains(q) {
            return Err(TriangulationError::OutOfDomain);
        }
        let mut cur = self.locate_root(q);
        loop {
            let children = match &self.simplices[cur.index()].children {
                None => return Ok(cur),
                Some(ch) => ch.clone(),
            };
            let mut best = children[0];
            let mut best_min = f64::NEG_INFINITY;
            let mut chosen = None;
            for &c in children.iter() {
                self.counters.descent_steps.fetch_add(1, Ordering::Relaxed);
                let w = self.min_bary_weight(c, q);
                if w >= -CONTAINMENT_TOL {
                    chosen = Some(c);
                    break;
                }
                if w > best_min {
                    best_min = w;
                    best = c;
                }
            }
            cur = chosen.unwrap_or(best);
        }
    }

    fn locate_root(&self, q: &Point) -> SimplexId {
        if self.root_by_perm.is_empty() {
            // Mesh without a known root layout: scan.
            let mut best = self.roots[0];
            let mut best_min = f64::NEG_INFINITY;
            for &r in &self.roots {
                self.counters.descent_steps.fetch_add(1, Ordering::Relaxed);
                let w = self.min_bary_weight(r, q);
                if w >= -CONTAINMENT_TOL {
                    return r;
                }
                if w > best_min {
                    best_min = w;
                    best = r;
                }
            }
            return best;
        }
        // The path simplex containing q is given by the descending order of
        // the normalized coordinates.
        let mut axes: SmallVec<[usize; MAX_DIM]> = (0..self.dim).collect();
        let min = self.domain.min();
        let max = self.domain.max();
        let key = |a: usize| (q[a] - min[a]) / (max[a] - min[a]);
        axes.sort_by(|&a, &b| key(b).partial_cmp(&key(a)).unwrap());
        self.root_by_perm[lehmer_index(&axes)]
    }

    /// Cavity membership for a prospective vertex `q` (which would receive
    /// the next vertex id): strictly inside the circumsphere, with exact
    /// cospherical ties broken by the canonical symbolic perturbation.
    fn cavity_contains(&self, sid: SimplexId, q: &Point) -> bool {
        let s = &self.simplices[sid.index()];
        let pts = self.simplex_points(sid);
        let ids: SmallVec<[u32; MAX_DIM + 1]> = s.vertices.iter().map(|v| v.0).collect();
        in_sphere_perturbed(&pts, &ids, s.orientation, q, self.points.len() as u32)
    }

    /// The Delaunay cavity: the maximal facet-connected set of childless
    /// simplices whose circumspheres strictly contain `q`, grown from `seed`.
    pub fn compute_visible(
        &self,
        q: &Point,
        seed: SimplexId,
    ) -> Result<Vec<SimplexId>, TriangulationError> {
        if !self.simplices[seed.index()].is_childless() {
            return Err(TriangulationError::Inconsistency(
                "visibility seed must be childless",
            ));
        }
        debug_assert!(self.cavity_contains(seed, q));
        let mut visible = vec![seed];
        let mut tested: HashSet<SimplexId> = HashSet::new();
        tested.insert(seed);
        let mut stack = vec![seed];
        while let Some(s) = stack.pop() {
            let sx = &self.simplices[s.index()];
            for k in 0..sx.neighbors.len() {
                let Some(nb) = sx.neighbor(k) else { continue };
                if !tested.insert(nb) {
                    continue;
                }
                self.counters.visible_visits.fetch_add(1, Ordering::Relaxed);
                if self.cavity_contains(nb, q) {
                    visible.push(nb);
                    stack.push(nb);
                }
            }
        }
        Ok(visible)
    }

    /// Boundary facets of a cavity: every (d-1)-facet separating a visible
    /// simplex from an invisible one (or from the outside of the box),
    /// each exactly once.
    pub fn compute_ridges(&self, visible: &[SimplexId]) -> Vec<Ridge> {
        let inside: HashSet<SimplexId> = visible.iter().copied().collect();
        let mut ridges = Vec::new();
        for &s in visible {
            let sx = &self.simplices[s.index()];
            for k in 0..sx.vertices.len() {
                match sx.neighbor(k) {
                    Some(nb) if inside.contains(&nb) => {}
                    outside => ridges.push(Ridge {
                        facet: sx.facet_without(k),
                        outside,
                    }),
                }
            }
        }
        ridges
    }

    /// Insert a vertex: locate, carve the cavity, retriangulate it around
    /// the new vertex, and rewire history, neighbor links and stars.
    pub fn insert_vertex(&mut self, q: Point) -> Result<Insertion, TriangulationError> {
        if q.dim() != self.dim || !self.domain.contains(&q) {
            return Err(TriangulationError::OutOfDomain);
        }
        let nearest = self.nearest_vertex(&q);
        if self.points[nearest.index()].distance(&q)
            < DUPLICATE_RELATIVE_TOL * self.domain.diameter()
        {
            return Err(TriangulationError::DuplicateVertex(nearest));
        }
        let located = self.find_simplex(&q)?;
        let seed = self.cavity_seed(&q, located)?;
        let visible = self.compute_visible(&q, seed)?;
        let ridges = self.compute_ridges(&visible);

        // Validate all new simplices before mutating anything.
        let v_new = VertexId(self.points.len() as u32);
        let mut staged: Vec<Simplex> = Vec::with_capacity(ridges.len());
        let mut pts: SmallVec<[Point; MAX_DIM + 1]> = SmallVec::new();
        for ridge in &ridges {
            pts.clear();
            pts.extend(ridge.facet.iter().map(|v| self.points[v.index()].clone()));
            pts.push(q.clone());
            let orient = orientation(&pts)?;
            if orient == Sign::Zero {
                return Err(TriangulationError::DegenerateInsertion);
            }
            let cs = circumsphere(&pts)?;
            debug_assert!(!cs.degenerate);
            let mut vertices: VertexList = SmallVec::with_capacity(self.dim + 1);
            vertices.extend_from_slice(&ridge.facet);
            vertices.push(v_new); // largest id, so the list stays sorted
            staged.push(Simplex {
                vertices,
                neighbors: SmallVec::from_elem(NO_NEIGHBOR, self.dim + 1),
                circumcenter: cs.center,
                circumradius: cs.radius,
                orientation: orient,
                children: None,
                collision: Collision::Unknown,
                goal_touching: false,
            });
        }

        // Commit: new vertex, new simplices, neighbor wiring.
        self.points.push(q);
        self.stars.push(Vec::new());
        let base = self.simplices.len() as u32;
        let created: Vec<SimplexId> = (0..staged.len() as u32)
            .map(|i| SimplexId(base + i))
            .collect();

        // Ridge-side links (slot opposite the new vertex is the last one).
        for (i, ridge) in ridges.iter().enumerate() {
            let last = self.dim;
            match ridge.outside {
                None => staged[i].neighbors[last] = NO_NEIGHBOR,
                Some(o) => {
                    staged[i].neighbors[last] = o.0;
                    let os = &mut self.simplices[o.index()];
                    let k = os
                        .vertices
                        .iter()
                        .position(|v| !ridge.facet.contains(v))
                        .expect("outside simplex shares the ridge facet");
                    os.neighbors[k] = base + i as u32;
                }
            }
        }
        // Links among created simplices: two of them are adjacent iff their
        // ridges share d-1 vertices.
        let mut facet_map: HashMap<FacetList, (usize, usize)> = HashMap::new();
        for (i, ridge) in ridges.iter().enumerate() {
            for wi in 0..ridge.facet.len() {
                let mut key = ridge.facet.clone();
                key.remove(wi);
                match facet_map.remove(&key) {
                    Some((j, wj)) => {
                        staged[i].neighbors[wi] = base + j as u32;
                        staged[j].neighbors[wj] = base + i as u32;
                    }
                    None => {
                        facet_map.insert(key, (i, wi));
                    }
                }
            }
        }

        for s in staged {
            self.simplices.push(s);
        }
        for &sid in &created {
            let s = &self.simplices[sid.index()];
            for v in s.vertices.clone() {
                self.stars[v.index()].push(sid);
            }
            if self.domain.contains(&self.simplices[sid.index()].circumcenter) {
                self.by_radius
                    .insert(radius_key(self.simplices[sid.index()].circumradius, sid));
            }
        }

        // Retire the cavity.
        let children: Arc<[SimplexId]> = created.clone().into();
        for &sid in &visible {
            let s = &mut self.simplices[sid.index()];
            s.children = Some(children.clone());
            let key = radius_key(s.circumradius, sid);
            let was_mixed = s.collision == Collision::Mixed;
            let was_goal = s.goal_touching;
            let center_inside = self.domain.contains(&s.circumcenter);
            if center_inside {
                self.by_radius.remove(&key);
            }
            if was_mixed {
                self.mixed_by_radius.remove(&key);
            }
            if was_goal {
                self.goal_by_radius.remove(&key);
            }
            for v in self.simplices[sid.index()].vertices.clone() {
                self.stars[v.index()].retain(|&x| x != sid);
            }
        }
        self.alive_count = self.alive_count + created.len() - visible.len();

        Ok(Insertion {
            vertex: v_new,
            created,
            destroyed: visible,
        })
    }

    /// A childless simplex whose circumsphere strictly contains `q`. The
    /// located simplex works except in razor-thin boundary cases, where an
    /// alive neighbor is tried instead.
    fn cavity_seed(
        &self,
        q: &Point,
        located: SimplexId,
    ) -> Result<SimplexId, TriangulationError> {
        if self.cavity_contains(located, q) {
            return Ok(located);
        }
        let s = &self.simplices[located.index()];
        for k in 0..s.neighbors.len() {
            if let Some(nb) = s.neighbor(k) {
                if self.cavity_contains(nb, q) {
                    return Ok(nb);
                }
            }
        }
        Err(TriangulationError::DegenerateInsertion)
    }

    /// The vertex minimizing Euclidean distance to `q` (ties broken toward
    /// the lower id), found by greedy descent over vertex links.
    pub fn nearest_vertex(&self, q: &Point) -> VertexId {
        let inside = self.domain.clamp(q);
        let start = self
            .find_simplex(&inside)
            .unwrap_or_else(|_| self.roots[0]);
        let mut cur = self.simplices[start.index()].vertices[0];
        let mut cur_d = self.points[cur.index()].distance_sq(q);
        for &v in &self.simplices[start.index()].vertices {
            let d = self.points[v.index()].distance_sq(q);
            if d < cur_d || (d == cur_d && v < cur) {
                cur = v;
                cur_d = d;
            }
        }
        loop {
            let mut improved = false;
            for &sid in &self.stars[cur.index()] {
                for &v in &self.simplices[sid.index()].vertices {
                    let d = self.points[v.index()].distance_sq(q);
                    if d < cur_d || (d == cur_d && v < cur) {
                        cur = v;
                        cur_d = d;
                        improved = true;
                    }
                }
            }
            if !improved {
                return cur;
            }
        }
    }

    /// Among childless simplices passing `filter` whose circumcenter lies
    /// inside the domain box, the one with the largest circumradius (ties
    /// toward the lower id).
    pub fn max_circumradius_simplex(
        &self,
        mut filter: impl FnMut(&Simplex) -> bool,
    ) -> Option<SimplexId> {
        self.by_radius
            .iter()
            .rev()
            .map(|&(_, Reverse(id))| SimplexId(id))
            .find(|&sid| filter(&self.simplices[sid.index()]))
    }

    /// Largest-circumradius childless simplex currently classified Mixed.
    pub fn max_radius_mixed(&self) -> Option<SimplexId> {
        self.mixed_by_radius
            .iter()
            .next_back()
            .map(|&(_, Reverse(id))| SimplexId(id))
    }

    /// Largest-circumradius childless simplex touching the goal region.
    pub fn max_radius_goal_touching(&self) -> Option<SimplexId> {
        self.goal_by_radius
            .iter()
            .next_back()
            .map(|&(_, Reverse(id))| SimplexId(id))
    }

    /// Text dump: one `v` line per vertex (id, coordinates, value) and one
    /// `s` line per childless simplex (id, vertex ids, collision status).
    pub fn dump_mesh<W: Write>(&self, values: &[f64], w: &mut W) -> io::Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            write!(w, "v {}", i)?;
            for c in p.as_slice() {
                write!(w, " {:.16e}", c)?;
            }
            writeln!(w, " {:.16e}", values.get(i).copied().unwrap_or(f64::INFINITY))?;
        }
        for sid in self.alive_ids() {
            let s = self.simplex(sid);
            write!(w, "s {}", sid)?;
            for v in s.vertices() {
                write!(w, " {}", v)?;
            }
            writeln!(w, " {}", s.collision().as_str())?;
        }
        Ok(())
    }
}

/// Wire up symmetric neighbor links from shared facets.
fn link_neighbors(simplices: &mut [Simplex]) -> Result<(), TriangulationError> {
    let mut map: HashMap<FacetList, (usize, usize)> = HashMap::new();
    let mut pairs: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (i, s) in simplices.iter().enumerate() {
        for k in 0..s.vertices.len() {
            let facet = s.facet_without(k);
            match map.remove(&facet) {
                Some((j, kj)) => pairs.push((i, k, j, kj)),
                None => {
                    if map.insert(facet, (i, k)).is_some() {
                        unreachable!()
                    }
                }
            }
        }
    }
    for (i, k, j, kj) in pairs {
        if simplices[i].neighbors[k] != NO_NEIGHBOR || simplices[j].neighbors[kj] != NO_NEIGHBOR {
            return Err(TriangulationError::InvalidMesh(
                "facet shared by more than two simplices".into(),
            ));
        }
        simplices[i].neighbors[k] = j as u32;
        simplices[j].neighbors[kj] = i as u32;
    }
    Ok(())
}

/// All permutations of 0..d in lexicographic order.
fn permutations(d: usize) -> Vec<SmallVec<[usize; MAX_DIM]>> {
    let mut out = Vec::new();
    let mut cur: SmallVec<[usize; MAX_DIM]> = (0..d).collect();
    loop {
        out.push(cur.clone());
        // next_permutation
        let Some(i) = (0..d.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..d).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// Factorial-base index of a permutation of 0..d.
fn lehmer_index(perm: &[usize]) -> usize {
    let d = perm.len();
    let mut idx = 0;
    for i in 0..d {
        let smaller_after = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        idx = idx * (d - i) + smaller_after;
    }
    idx
}
