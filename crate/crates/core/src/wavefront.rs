//! Modified fast-marching engine: propagates increase and decrease
//! cost-to-go wavefronts through the triangulation with epsilon-truncation,
//! handling vertex insertion (extend), global repair (reduce), and obstacle
//! changes (repair_after_world_change).
//!
//! Vertices are keyed by K = min(cost-to-go, look-ahead) with the vertex id
//! as a deterministic tie-breaker. An increase (a vertex whose support got
//! worse) is processed by flushing it to infinity ahead of the decrease
//! wavefront, in the D*-Lite style.

use thiserror::Error;

use crate::hjb::{minloc, CostField, ValueField};
use crate::obstacles::ObstacleWorld;
use crate::triangulation::{Collision, Insertion, SimplexId, Triangulation, VertexId};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(
        "wavefront did not settle within {0} pops (nonacute cycling with epsilon = 0?)"
    )]
    NonTermination(u64),
}

/// Priority key: (min of the two values, vertex id).
type Key = (f64, u32);

/// Indexed binary min-heap over vertices; supports update and removal by
/// vertex id.
#[derive(Debug, Default)]
struct IndexedHeap {
    heap: Vec<(Key, VertexId)>,
    pos: Vec<u32>, // per vertex; NOT_QUEUED when absent
}

const NOT_QUEUED: u32 = u32::MAX;

impl IndexedHeap {
    fn ensure(&mut self, vertices: usize) {
        if self.pos.len() < vertices {
            self.pos.resize(vertices, NOT_QUEUED);
        }
    }

    fn len(&self) -> usize {
        self.heap.len()
    }

    fn contains(&self, v: VertexId) -> bool {
        self.pos
            .get(v.index())
            .is_some_and(|&p| p != NOT_QUEUED)
    }

    fn push_or_update(&mut self, v: VertexId, key: Key) {
        self.ensure(v.index() + 1);
        let p = self.pos[v.index()];
        if p == NOT_QUEUED {
            self.heap.push((key, v));
            self.pos[v.index()] = (self.heap.len() - 1) as u32;
            self.sift_up(self.heap.len() - 1);
        } else {
            let i = p as usize;
            let old = self.heap[i].0;
            self.heap[i].0 = key;
            if key < old {
                self.sift_up(i);
            } else {
                self.sift_down(i);
            }
        }
    }

    fn remove(&mut self, v: VertexId) {
        let Some(&p) = self.pos.get(v.index()) else {
            return;
        };
        if p == NOT_QUEUED {
            return;
        }
        let i = p as usize;
        let last = self.heap.len() - 1;
        self.heap.swap(i, last);
        self.pos[self.heap[i].1.index()] = i as u32;
        self.heap.pop();
        self.pos[v.index()] = NOT_QUEUED;
        if i < self.heap.len() {
            self.sift_up(i);
            self.sift_down(i);
        }
    }

    fn pop(&mut self) -> Option<(Key, VertexId)> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        self.remove(top.1);
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.heap[i].0 < self.heap[parent].0 {
                self.heap.swap(i, parent);
                self.pos[self.heap[i].1.index()] = i as u32;
                self.pos[self.heap[parent].1.index()] = parent as u32;
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let l = 2 * i + 1;
            let r = 2 * i + 2;
            let mut m = i;
            if l < self.heap.len() && self.heap[l].0 < self.heap[m].0 {
                m = l;
            }
            if r < self.heap.len() && self.heap[r].0 < self.heap[m].0 {
                m = r;
            }
            if m == i {
                return;
            }
            self.heap.swap(i, m);
            self.pos[self.heap[i].1.index()] = i as u32;
            self.pos[self.heap[m].1.index()] = m as u32;
            i = m;
        }
    }
}

/// Engine counters exposed to metrics.
#[derive(Debug, Default, Clone, Copy)]
pub struct EngineStats {
    pub pops: u64,
    pub decrease_pops: u64,
    pub increase_pops: u64,
    pub updates: u64,
}

#[derive(Debug)]
pub struct Engine {
    epsilon: f64,
    queue: IndexedHeap,
    pub stats: EngineStats,
    /// When set, every popped key is recorded (test diagnostics).
    pub record_pop_keys: bool,
    pub pop_keys: Vec<f64>,
    scratch_neighbors: Vec<VertexId>,
}

/// Epsilon-inconsistency with the convention that two infinities agree.
///
/// A relative floor absorbs floating-point limit cycles: Gauss-Seidel-style
/// revisiting can oscillate by an ulp between mutually supporting vertices,
/// which with an exact test at epsilon = 0 would never settle. The floor is
/// orders of magnitude below the 1e-9-per-value consistency contract.
#[inline]
pub fn inconsistent(vhat: f64, vstar: f64, epsilon: f64) -> bool {
    if vhat == vstar {
        return false;
    }
    if !vhat.is_finite() || !vstar.is_finite() {
        return true;
    }
    let floor = 1e-13 * (1.0 + vhat.abs().min(vstar.abs()));
    (vhat - vstar).abs() > epsilon + floor
}

impl Engine {
    pub fn new(epsilon: f64) -> Self {
        assert!(epsilon >= 0.0);
        Self {
            epsilon,
            queue: IndexedHeap::default(),
            stats: EngineStats::default(),
            record_pop_keys: false,
            pop_keys: Vec::new(),
            scratch_neighbors: Vec::new(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Recompute the look-ahead value of `x` and synchronize its queue
    /// membership: enqueued with key min(vhat, vstar) iff
    /// epsilon-inconsistent.
    pub fn update_vertex(
        &mut self,
        x: VertexId,
        tri: &Triangulation,
        world: &ObstacleWorld,
        field: &mut ValueField,
        cost: &CostField,
    ) {
        self.stats.updates += 1;
        let vstar = minloc(x, tri, world, field, cost);
        field.set_vstar(x, vstar);
        let vhat = field.vhat(x);
        if inconsistent(vhat, vstar, self.epsilon) {
            self.queue.push_or_update(x, (vhat.min(vstar), x.0));
        } else {
            self.queue.remove(x);
        }
    }

    /// Initiate the wavefront after a vertex insertion: the new vertex and
    /// every vertex of a destroyed (rewired) simplex get fresh look-ahead
    /// values. Created simplices must already be classified.
    pub fn extend(
        &mut self,
        ins: &Insertion,
        tri: &Triangulation,
        world: &ObstacleWorld,
        field: &mut ValueField,
        cost: &CostField,
    ) {
        field.ensure(tri.vertex_count());
        self.queue.ensure(tri.vertex_count());
        self.update_vertex(ins.vertex, tri, world, field, cost);
        let mut cavity: Vec<VertexId> = ins
            .destroyed
            .iter()
            .flat_map(|&s| tri.simplex(s).vertices().iter().copied())
            .collect();
        cavity.sort_unstable();
        cavity.dedup();
        for v in cavity {
            self.update_vertex(v, tri, world, field, cost);
        }
    }

    /// Drain the queue, propagating decrease and increase wavefronts until
    /// every vertex is epsilon-consistent.
    pub fn reduce(
        &mut self,
        tri: &Triangulation,
        world: &ObstacleWorld,
        field: &mut ValueField,
        cost: &CostField,
    ) -> Result<(), EngineError> {
        // Termination is guaranteed for epsilon > 0; for epsilon = 0 a pop
        // budget guards against nonacute cycling.
        let cap = if self.epsilon == 0.0 {
            Some(100 * tri.vertex_count() as u64 + 1000)
        } else {
            None
        };
        let mut pops = 0u64;
        while let Some(((key, _), x)) = self.queue.pop() {
            pops += 1;
            if let Some(cap) = cap {
                if pops > cap {
                    return Err(EngineError::NonTermination(cap));
                }
            }
            self.stats.pops += 1;
            if self.record_pop_keys {
                self.pop_keys.push(key);
            }
            let vhat = field.vhat(x);
            let vstar = field.vstar(x);
            if vstar < vhat && inconsistent(vhat, vstar, self.epsilon) {
                // Decrease: commit the better estimate and relax neighbors.
                field.set_vhat(x, vstar);
                self.stats.decrease_pops += 1;
                self.relax_neighbors(x, tri, world, field, cost);
            } else if vstar > vhat && inconsistent(vhat, vstar, self.epsilon) {
                // Increase: flush to infinity; the decrease wavefront
                // repairs the region afterwards.
                field.set_vhat(x, f64::INFINITY);
                self.stats.increase_pops += 1;
                self.update_vertex(x, tri, world, field, cost);
                self.relax_neighbors(x, tri, world, field, cost);
            }
        }
        Ok(())
    }

    fn relax_neighbors(
        &mut self,
        x: VertexId,
        tri: &Triangulation,
        world: &ObstacleWorld,
        field: &mut ValueField,
        cost: &CostField,
    ) {
        // Neighbors are vertices sharing a Free childless simplex with x;
        // only Free simplices carry characteristics.
        let mut neighbors = std::mem::take(&mut self.scratch_neighbors);
        neighbors.clear();
        for &sid in tri.star(x) {
            let s = tri.simplex(sid);
            if s.collision() != Collision::Free {
                continue;
            }
            neighbors.extend(s.vertices().iter().copied().filter(|&v| v != x));
        }
        neighbors.sort_unstable();
        neighbors.dedup();
        for &v in &neighbors {
            self.update_vertex(v, tri, world, field, cost);
        }
        self.scratch_neighbors = neighbors;
    }

    /// Repair the field after obstacle changes: refresh every vertex of a
    /// simplex whose collision status flipped, then reduce.
    pub fn repair_after_world_change(
        &mut self,
        changed: &[SimplexId],
        tri: &Triangulation,
        world: &ObstacleWorld,
        field: &mut ValueField,
        cost: &CostField,
    ) -> Result<(), EngineError> {
        let mut touched: Vec<VertexId> = changed
            .iter()
            .flat_map(|&s| tri.simplex(s).vertices().iter().copied())
            .collect();
        touched.sort_unstable();
        touched.dedup();
        for v in touched {
            self.update_vertex(v, tri, world, field, cost);
        }
        self.reduce(tri, world, field, cost)
    }

    /// Full consistency sweep: the first vertex violating
    /// |vhat - minloc| <= epsilon (with the infinity convention), if any.
    pub fn consistency_violation(
        &self,
        tri: &Triangulation,
        world: &ObstacleWorld,
        field: &ValueField,
        cost: &CostField,
    ) -> Option<(VertexId, f64, f64)> {
        for v in tri.vertex_ids() {
            let fresh = minloc(v, tri, world, field, cost);
            if inconsistent(field.vhat(v), fresh, self.epsilon) {
                return Some((v, field.vhat(v), fresh));
            }
        }
        None
    }
}

/// Solve the value field from scratch on the current triangulation and
/// world: reset everything to infinity, refresh every vertex, and drain.
pub fn solve_from_scratch(
    tri: &Triangulation,
    world: &ObstacleWorld,
    cost: &CostField,
    epsilon: f64,
) -> Result<(ValueField, EngineStats), EngineError> {
    let mut field = ValueField::new(tri.vertex_count());
    let mut engine = Engine::new(epsilon);
    for v in tri.vertex_ids() {
        engine.update_vertex(v, tri, world, &mut field, cost);
    }
    engine.reduce(tri, world, &mut field, cost)?;
    Ok((field, engine.stats))
}
