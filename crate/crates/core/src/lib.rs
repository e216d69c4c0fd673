//! Sampling-based feedback motion planning on an incrementally refined
//! Delaunay triangulation of the configuration space.
//!
//! The planner grows a d-dimensional Delaunay triangulation one sample at a
//! time, classifies simplices against convex obstacles, and maintains an
//! approximately optimal cost-to-go field with a fast-marching wavefront
//! engine that supports both static planning and dynamic replanning.

pub mod geometry;
pub mod hjb;
pub mod obstacles;
pub mod planner;
pub mod sampling;
pub mod wavefront;
pub mod triangulation;

pub use geometry::{AxisBox, Point};
