//! Planner orchestration: the sample -> insert -> classify -> extend ->
//! reduce loop for static planning, and the replanning control loop that
//! advances the obstacle schedule, repairs the value field, and steps a
//! simulated robot along the feedback policy.

use std::time::Instant;

use thiserror::Error;

use crate::geometry::{jitter_sample, AxisBox, Point};
use crate::hjb::{self, CostField, HjbError, Trajectory, ValueField};
use crate::obstacles::{ObstacleWorld, WorldError};
use crate::sampling::{Sampler, SamplerConfig};
use crate::triangulation::{
    Collision, SimplexId, Triangulation, TriangulationError, VertexId,
};
use crate::wavefront::{Engine, EngineError};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("sampling stalled: {0} consecutive samples were rejected")]
    SamplingStuck(u32),
}

/// Termination criteria; at least one must be set.
#[derive(Debug, Clone, Default)]
pub struct Termination {
    pub max_vertices: Option<usize>,
    pub max_wall_seconds: Option<f64>,
    /// Stop once the relative path error against `analytic_optimum` drops
    /// below this (requires a start and the optimum).
    pub target_relative_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub domain_min: Vec<f64>,
    pub domain_max: Vec<f64>,
    pub epsilon: f64,
    pub sampler: SamplerConfig,
    pub termination: Termination,
    pub start: Option<Point>,
    /// Insert a vertex at the goal interior point before planning, so the
    /// field is seeded even when no sample lands inside a small goal.
    pub pin_goal: bool,
    /// Metrics record cadence, in accepted insertions.
    pub metrics_every: usize,
    pub analytic_optimum: Option<f64>,
    pub cost: CostField,
    /// Segment-length cap for trajectory integration.
    pub integrate_step: f64,
    /// Trajectory cost budget as a multiple of (domain diameter x cost).
    pub max_cost_factor: f64,
    // Replanning parameters.
    pub control_dt: f64,
    pub insertions_per_tick: usize,
    pub robot_speed: f64,
    pub sim_time_budget: f64,
}

impl PlannerConfig {
    pub fn new(domain_min: &[f64], domain_max: &[f64], sampler: SamplerConfig) -> Self {
        Self {
            domain_min: domain_min.to_vec(),
            domain_max: domain_max.to_vec(),
            epsilon: 0.0,
            sampler,
            termination: Termination::default(),
            start: None,
            pin_goal: true,
            metrics_every: 500,
            analytic_optimum: None,
            cost: CostField::unit(),
            integrate_step: f64::INFINITY,
            max_cost_factor: 10.0,
            control_dt: 0.05,
            insertions_per_tick: 20,
            robot_speed: 1.0,
            sim_time_budget: 60.0,
        }
    }
}

/// One metrics row. Missing quantities (no start configured, or an infinite
/// value) are NaN/inf so the CSV stays rectangular.
#[derive(Debug, Clone, Copy)]
pub struct MetricsRecord {
    pub wall_s: f64,
    pub vertices: usize,
    pub simplices: usize,
    pub pops: u64,
    pub path_cost: f64,
    pub v_start: f64,
}

/// A batch of repairs triggered by obstacle events at one control tick.
#[derive(Debug, Clone, Copy)]
pub struct RepairRecord {
    pub sim_time: f64,
    pub events: usize,
    pub reclassified: usize,
    pub pops: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub sim_time: f64,
    pub value_at_robot: f64,
    pub stalled: bool,
}

pub struct Planner {
    cfg: PlannerConfig,
    tri: Triangulation,
    world: ObstacleWorld,
    field: ValueField,
    engine: Engine,
    sampler: Sampler,
    sample_index: u64,
    inserted: usize,
    start_vertex: Option<VertexId>,
    last_path: Option<Trajectory>,
    pub metrics: Vec<MetricsRecord>,
    started: Instant,
}

impl Planner {
    pub fn new(cfg: PlannerConfig, world: ObstacleWorld) -> Result<Self, PlanError> {
        if !cfg.sampler.valid() {
            return Err(PlanError::Config("focus_mix must lie in [0, 1]".into()));
        }
        if cfg.termination.max_vertices.is_none()
            && cfg.termination.max_wall_seconds.is_none()
            && cfg.termination.target_relative_error.is_none()
        {
            return Err(PlanError::Config(
                "at least one termination criterion must be set".into(),
            ));
        }
        if cfg.termination.target_relative_error.is_some()
            && (cfg.analytic_optimum.is_none() || cfg.start.is_none())
        {
            return Err(PlanError::Config(
                "target_relative_error needs a start and an analytic optimum".into(),
            ));
        }
        if !(cfg.epsilon >= 0.0) {
            return Err(PlanError::Config("epsilon must be nonnegative".into()));
        }
        let tri = Triangulation::init(&cfg.domain_min, &cfg.domain_max)?;
        if let Some(start) = &cfg.start {
            if !tri.domain().contains(start) {
                return Err(PlanError::Config("start lies outside the domain".into()));
            }
        }
        let field = ValueField::new(tri.vertex_count());
        let engine = Engine::new(cfg.epsilon);
        let sampler = Sampler::new(cfg.sampler.clone());
        let mut planner = Self {
            cfg,
            tri,
            world,
            field,
            engine,
            sampler,
            sample_index: 0,
            inserted: 0,
            start_vertex: None,
            last_path: None,
            metrics: Vec::new(),
            started: Instant::now(),
        };
        // Classify the initial simplices and seed the field.
        let roots: Vec<SimplexId> = planner.tri.alive_ids().collect();
        planner.classify(&roots);
        for v in planner.tri.vertex_ids() {
            planner.engine.update_vertex(
                v,
                &planner.tri,
                &planner.world,
                &mut planner.field,
                &planner.cfg.cost,
            );
        }
        planner
            .engine
            .reduce(&planner.tri, &planner.world, &mut planner.field, &planner.cfg.cost)?;

        if planner.cfg.pin_goal {
            if let Some(g) = planner.world.goal().interior_point() {
                if planner.tri.domain().contains(&g) {
                    planner.try_insert(&g)?;
                }
            }
        }
        if let Some(start) = planner.cfg.start.clone() {
            if let Some(v) = planner.try_insert(&start)? {
                planner.start_vertex = Some(v);
            }
        }
        Ok(planner)
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    pub fn world(&self) -> &ObstacleWorld {
        &self.world
    }

    pub fn field(&self) -> &ValueField {
        &self.field
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn cost(&self) -> &CostField {
        &self.cfg.cost
    }

    pub fn start_vertex(&self) -> Option<VertexId> {
        self.start_vertex
    }

    pub fn inserted_samples(&self) -> usize {
        self.inserted
    }

    pub fn last_path(&self) -> Option<&Trajectory> {
        self.last_path.as_ref()
    }

    /// Insert one (jittered) sample; `None` when it was rejected as a
    /// duplicate or degenerate and the caller should resample.
    fn try_insert(&mut self, raw: &Point) -> Result<Option<VertexId>, PlanError> {
        let q = jitter_sample(self.sample_index, raw, self.tri.domain());
        self.sample_index += 1;
        match self.tri.insert_vertex(q) {
            Ok(ins) => {
                self.classify(&ins.created);
                self.engine.extend(
                    &ins,
                    &self.tri,
                    &self.world,
                    &mut self.field,
                    &self.cfg.cost,
                );
                self.engine
                    .reduce(&self.tri, &self.world, &mut self.field, &self.cfg.cost)?;
                self.inserted += 1;
                Ok(Some(ins.vertex))
            }
            Err(TriangulationError::DuplicateVertex(_))
            | Err(TriangulationError::DegenerateInsertion) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn classify(&mut self, simplices: &[SimplexId]) {
        for &sid in simplices {
            let pts = self.tri.simplex_points(sid);
            self.tri.set_collision(sid, self.world.classify_simplex(&pts));
            self.tri
                .set_goal_touching(sid, self.world.goal_touching(&pts));
        }
    }

    /// One planning iteration: draw samples (with bounded resampling) until
    /// one inserts, then record metrics on cadence.
    fn step(&mut self) -> Result<(), PlanError> {
        for _ in 0..100u32 {
            let raw = self.sampler.next_sample(&self.tri, self.last_path.as_ref());
            if self.try_insert(&raw)?.is_some() {
                if self.inserted % self.cfg.metrics_every == 0 {
                    self.record_metrics();
                }
                return Ok(());
            }
        }
        Err(PlanError::SamplingStuck(100))
    }

    fn max_trajectory_cost(&self) -> f64 {
        self.cfg.max_cost_factor * self.tri.domain().diameter() * self.cfg.cost.min_cost()
    }

    /// Integrate from the configured start on the current field.
    pub fn path_from_start(&self) -> Option<Trajectory> {
        let start_vertex = self.start_vertex?;
        let start = self.tri.point(start_vertex).clone();
        if !self.field.vhat(start_vertex).is_finite() {
            return None;
        }
        hjb::integrate(
            &start,
            &self.tri,
            &self.world,
            &self.field,
            &self.cfg.cost,
            self.cfg.integrate_step,
            self.max_trajectory_cost(),
        )
        .ok()
    }

    fn record_metrics(&mut self) {
        let path = self.path_from_start();
        let path_cost = path
            .as_ref()
            .filter(|t| t.reached_goal)
            .map_or(f64::NAN, |t| t.cost);
        if path.is_some() {
            self.last_path = path;
        }
        let v_start = self
            .start_vertex
            .map_or(f64::NAN, |v| self.field.vhat(v));
        self.metrics.push(MetricsRecord {
            wall_s: self.started.elapsed().as_secs_f64(),
            vertices: self.tri.vertex_count(),
            simplices: self.tri.alive_count(),
            pops: self.engine.stats.pops,
            path_cost,
            v_start,
        });
    }

    fn terminated(&self) -> bool {
        if let Some(n) = self.cfg.termination.max_vertices {
            if self.inserted >= n {
                return true;
            }
        }
        if let Some(s) = self.cfg.termination.max_wall_seconds {
            if self.started.elapsed().as_secs_f64() >= s {
                return true;
            }
        }
        if let (Some(target), Some(opt)) = (
            self.cfg.termination.target_relative_error,
            self.cfg.analytic_optimum,
        ) {
            if let Some(m) = self.metrics.last() {
                if m.path_cost.is_finite() && relative_path_error(m.path_cost, opt) <= target {
                    return true;
                }
            }
        }
        false
    }

    /// The static planning loop.
    pub fn run(&mut self) -> Result<(), PlanError> {
        self.started = Instant::now();
        while !self.terminated() {
            self.step()?;
        }
        self.record_metrics();
        Ok(())
    }

    /// Apply obstacle changes for simulation time `now` and repair the
    /// field. Returns the repair record when events fired.
    pub fn advance_world(&mut self, now: f64) -> Result<Option<RepairRecord>, PlanError> {
        let applied = self.world.advance_schedule(now)?;
        if applied.is_empty() {
            return Ok(None);
        }
        let regions: Vec<Option<AxisBox>> = applied
            .iter()
            .flat_map(|a| a.regions.iter().cloned())
            .collect();
        let mut changed = Vec::new();
        let candidates: Vec<SimplexId> = self.tri.alive_ids().collect();
        for sid in candidates {
            let pts = self.tri.simplex_points(sid);
            let sbox = bbox_of(&pts);
            let affected = regions
                .iter()
                .any(|r| r.as_ref().is_none_or(|r| r.intersects(&sbox)));
            if !affected {
                continue;
            }
            let fresh = self.world.classify_simplex(&pts);
            if fresh != self.tri.simplex(sid).collision() {
                self.tri.set_collision(sid, fresh);
                changed.push(sid);
            }
        }
        let pops_before = self.engine.stats.pops;
        self.engine.repair_after_world_change(
            &changed,
            &self.tri,
            &self.world,
            &mut self.field,
            &self.cfg.cost,
        )?;
        Ok(Some(RepairRecord {
            sim_time: now,
            events: applied.len(),
            reclassified: changed.len(),
            pops: self.engine.stats.pops - pops_before,
        }))
    }

    /// The replanning simulation: advance the schedule, repair, move the
    /// robot along the feedback policy, and keep sampling in the
    /// background.
    pub fn replan_run(&mut self) -> Result<ReplanOutcome, PlanError> {
        let start = self
            .cfg
            .start
            .clone()
            .ok_or_else(|| PlanError::Config("replanning requires a start".into()))?;
        // Build the initial plan.
        self.run()?;
        let mut robot = start;
        let mut trace = Vec::new();
        let mut repairs = Vec::new();
        let mut positions = vec![robot.clone()];
        let mut reached = false;
        let mut stalls = 0usize;
        let mut now = 0.0;
        while now < self.cfg.sim_time_budget {
            if let Some(r) = self.advance_world(now)? {
                repairs.push(r);
            }
            if self.world.point_in_goal(&robot) {
                reached = true;
                trace.push(TraceRecord {
                    sim_time: now,
                    value_at_robot: 0.0,
                    stalled: false,
                });
                positions.push(robot.clone());
                break;
            }
            let step_len = self.cfg.robot_speed * self.cfg.control_dt;
            let mut stalled = false;
            match hjb::advance(
                &robot,
                &self.tri,
                &self.world,
                &self.field,
                &self.cfg.cost,
                self.cfg.integrate_step,
                step_len,
            ) {
                Ok(traj) => {
                    if let Some(last) = traj.waypoints.last() {
                        if last.distance(&robot) < 1e-12 * self.tri.domain().diameter() {
                            stalled = true;
                        }
                        robot = last.clone();
                    }
                    if traj.reached_goal {
                        reached = true;
                    }
                }
                Err(HjbError::NoPolicy) | Err(HjbError::NoDirection) => {
                    // Wait in place; a later repair may restore a route.
                    stalled = true;
                }
                Err(HjbError::OutOfDomain) => {
                    return Err(PlanError::Config("robot left the domain".into()))
                }
            }
            if stalled {
                stalls += 1;
            }
            let value = hjb::interpolate(&self.field, &self.tri, &robot)
                .unwrap_or(f64::INFINITY);
            trace.push(TraceRecord {
                sim_time: now,
                value_at_robot: value,
                stalled,
            });
            positions.push(robot.clone());
            if reached {
                break;
            }
            // Background refinement between control steps.
            for _ in 0..self.cfg.insertions_per_tick {
                self.step()?;
            }
            now += self.cfg.control_dt;
        }
        self.record_metrics();
        Ok(ReplanOutcome {
            trace,
            positions,
            repairs,
            reached,
            stalls,
        })
    }
}

#[derive(Debug)]
pub struct ReplanOutcome {
    pub trace: Vec<TraceRecord>,
    pub positions: Vec<Point>,
    pub repairs: Vec<RepairRecord>,
    pub reached: bool,
    pub stalls: usize,
}

/// Relative path error against a known optimum.
pub fn relative_path_error(cost: f64, optimum: f64) -> f64 {
    (cost - optimum) / optimum
}

fn bbox_of(pts: &[Point]) -> AxisBox {
    let d = pts[0].dim();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for p in pts {
        for i in 0..d {
            min[i] = min[i].min(p[i]);
            max[i] = max[i].max(p[i]);
        }
    }
    for i in 0..d {
        if !(min[i] < max[i]) {
            min[i] -= 1e-300;
            max[i] += 1e-300;
        }
    }
    AxisBox::new(Point::from_slice(&min), Point::from_slice(&max)).unwrap()
}
