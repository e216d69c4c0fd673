//! Sampling strategies: uniform random, largest-simplex Delaunay
//! refinement, and goal/obstacle-focused refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::geometry::{Point, MAX_DIM};
use crate::hjb::Trajectory;
use crate::triangulation::{SimplexId, Triangulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    UniformRandom,
    DelaunayRefinement,
    FocusedRefinement,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub seed: u64,
    /// Probability of choosing a focused target when one exists
    /// (FocusedRefinement only).
    pub focus_mix: f64,
}

impl SamplerConfig {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        Self {
            strategy,
            seed,
            focus_mix: 0.5,
        }
    }

    pub fn valid(&self) -> bool {
        (0.0..=1.0).contains(&self.focus_mix)
    }
}

#[derive(Debug)]
pub struct Sampler {
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(cfg: SamplerConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self { cfg, rng }
    }

    pub fn strategy(&self) -> Strategy {
        self.cfg.strategy
    }

    /// The next point to insert (before general-position jitter).
    pub fn next_sample(
        &mut self,
        tri: &Triangulation,
        current_path: Option<&Trajectory>,
    ) -> Point {
        match self.cfg.strategy {
            Strategy::UniformRandom => self.uniform(tri),
            Strategy::DelaunayRefinement => self.refine(tri),
            Strategy::FocusedRefinement => {
                if self.rng.gen::<f64>() < self.cfg.focus_mix {
                    if let Some(p) = self.focused_target(tri, current_path) {
                        return p;
                    }
                }
                self.refine(tri)
            }
        }
    }

    fn uniform(&mut self, tri: &Triangulation) -> Point {
        let domain = tri.domain();
        let coords: SmallVec<[f64; MAX_DIM]> = (0..domain.dim())
            .map(|i| {
                let lo = domain.min()[i];
                let hi = domain.max()[i];
                lo + self.rng.gen::<f64>() * (hi - lo)
            })
            .collect();
        Point::new(coords)
    }

    /// Circumcenter of the largest-circumradius childless simplex.
    fn refine(&mut self, tri: &Triangulation) -> Point {
        match tri.max_circumradius_simplex(|_| true) {
            Some(sid) => self.center_into_domain(tri, sid),
            None => self.uniform(tri),
        }
    }

    /// Largest-circumradius simplex among the Mixed set, the goal-touching
    /// set, and the simplices traversed by the current path.
    fn focused_target(
        &mut self,
        tri: &Triangulation,
        current_path: Option<&Trajectory>,
    ) -> Option<Point> {
        let mut best: Option<SimplexId> = None;
        let mut consider = |sid: SimplexId| {
            let better = match best {
                None => true,
                Some(b) => {
                    let (rb, rs) = (tri.simplex(b).circumradius(), tri.simplex(sid).circumradius());
                    rs > rb || (rs == rb && sid < b)
                }
            };
            if better {
                best = Some(sid);
            }
        };
        if let Some(s) = tri.max_radius_mixed() {
            consider(s);
        }
        if let Some(s) = tri.max_radius_goal_touching() {
            consider(s);
        }
        if let Some(path) = current_path {
            for &sid in &path.simplices {
                if tri.simplex(sid).is_childless() {
                    consider(sid);
                }
            }
        }
        best.map(|sid| self.center_into_domain(tri, sid))
    }

    /// Circumcenters of boundary simplices can fall outside the box;
    /// project in and nudge so the sample is insertable.
    fn center_into_domain(&mut self, tri: &Triangulation, sid: SimplexId) -> Point {
        let center = tri.simplex(sid).circumcenter().clone();
        let domain = tri.domain();
        if domain.contains(&center) {
            return center;
        }
        let nudge = 1e-6 * domain.diameter();
        let coords: SmallVec<[f64; MAX_DIM]> = center
            .as_slice()
            .iter()
            .map(|&c| c + (self.rng.gen::<f64>() * 2.0 - 1.0) * nudge)
            .collect();
        domain.clamp(&Point::new(coords))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_reproducible_and_in_domain() {
        let t = Triangulation::init(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let mut a = Sampler::new(SamplerConfig::new(Strategy::UniformRandom, 42));
        let mut b = Sampler::new(SamplerConfig::new(Strategy::UniformRandom, 42));
        for _ in 0..100 {
            let pa = a.next_sample(&t, None);
            let pb = b.next_sample(&t, None);
            assert_eq!(pa, pb);
            assert!(t.domain().contains(&pa));
        }
    }

    #[test]
    fn refinement_picks_the_square_center_first() {
        let t = Triangulation::init(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let mut s = Sampler::new(SamplerConfig::new(Strategy::DelaunayRefinement, 1));
        let p = s.next_sample(&t, None);
        // Both initial triangles share the square's circumcircle centered at
        // the middle.
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn focused_without_candidates_falls_back_to_refinement() {
        let t = Triangulation::init(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let mut focused = Sampler::new(SamplerConfig {
            strategy: Strategy::FocusedRefinement,
            seed: 7,
            focus_mix: 1.0,
        });
        let mut refine = Sampler::new(SamplerConfig::new(Strategy::DelaunayRefinement, 7));
        assert_eq!(focused.next_sample(&t, None), refine.next_sample(&t, None));
    }
}
