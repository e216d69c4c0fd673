//! Exact-sign geometric predicates and metric computations in dimension
//! d >= 2: orientation, in-sphere via the paraboloid lifting map,
//! circumspheres and barycentric coordinates.
//!
//! Predicate signs are decided by a conservative interval filter backed by
//! exact dyadic-integer arithmetic, so orientation and in-sphere never return
//! a wrong sign regardless of input conditioning. Metric computations
//! (circumcenters, barycentric weights) are plain f64 and are only called on
//! simplices certified nondegenerate by the exact predicates.

mod exact;
mod interval;
pub(crate) mod linalg;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;
use thiserror::Error;

use interval::Interval;

/// Maximum supported configuration-space dimension.
pub const MAX_DIM: usize = 8;

/// Relative magnitude (times domain diameter) of the deterministic insertion
/// jitter that enforces general position.
pub const JITTER_RELATIVE_MAGNITUDE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("expected {expected} points of dimension {dim}, got {got}")]
    DimensionMismatch {
        expected: usize,
        dim: usize,
        got: usize,
    },
    #[error("degenerate (affinely dependent) simplex")]
    DegenerateSimplex,
}

/// Sign of an exact determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    #[inline]
    pub fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

/// Classification of a query point against a circumsphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InSphere {
    Inside,
    On,
    Outside,
}

/// A configuration-space point with runtime dimension (2 to 8 coordinates,
/// stored inline).
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: SmallVec<[f64; MAX_DIM]>,
}

impl Point {
    pub fn new(coords: impl Into<SmallVec<[f64; MAX_DIM]>>) -> Self {
        let coords = coords.into();
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self::new(SmallVec::from_slice(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(SmallVec::from_elem(0.0, dim))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    #[inline]
    pub fn distance_sq(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    #[inline]
    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// An axis-aligned box with positive extent on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    min: Point,
    max: Point,
}

impl AxisBox {
    pub fn new(min: Point, max: Point) -> Option<Self> {
        if min.dim() != max.dim() || min.dim() == 0 {
            return None;
        }
        if min
            .as_slice()
            .iter()
            .zip(max.as_slice())
            .any(|(a, b)| !(a < b))
        {
            return None;
        }
        Some(Self { min, max })
    }

    /// Unit cube [0,1]^d.
    pub fn unit(dim: usize) -> Self {
        Self::new(Point::zeros(dim), Point::new(SmallVec::from_elem(1.0, dim))).unwrap()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.min.dim()
    }

    pub fn min(&self) -> &Point {
        &self.min
    }

    pub fn max(&self) -> &Point {
        &self.max
    }

    /// Closed containment.
    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p.as_slice()
                .iter()
                .enumerate()
                .all(|(i, &c)| c >= self.min[i] && c <= self.max[i])
    }

    pub fn clamp(&self, p: &Point) -> Point {
        let coords: SmallVec<[f64; MAX_DIM]> = p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &c)| c.clamp(self.min[i], self.max[i]))
            .collect();
        Point::new(coords)
    }

    pub fn diameter(&self) -> f64 {
        self.min.distance(&self.max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.max[i] - self.min[i]).product()
    }

    pub fn center(&self) -> Point {
        let coords: SmallVec<[f64; MAX_DIM]> = (0..self.dim())
            .map(|i| 0.5 * (self.min[i] + self.max[i]))
            .collect();
        Point::new(coords)
    }

    /// Corner selected by bitmask: bit i set means the max coordinate on
    /// axis i.
    pub fn corner(&self, mask: usize) -> Point {
        let coords: SmallVec<[f64; MAX_DIM]> = (0..self.dim())
            .map(|i| {
                if mask >> i & 1 == 1 {
                    self.max[i]
                } else {
                    self.min[i]
                }
            })
            .collect();
        Point::new(coords)
    }

    pub fn intersects(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }
}

/// Barycentric coordinates of a point with respect to a d-simplex; d+1
/// weights summing to one.
#[derive(Debug, Clone)]
pub struct Barycentric {
    pub weights: SmallVec<[f64; MAX_DIM + 1]>,
}

impl Barycentric {
    #[inline]
    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Inside the closed simplex, up to `tol` below zero.
    #[inline]
    pub fn inside(&self, tol: f64) -> bool {
        self.min_weight() >= -tol
    }
}

/// Circumscribed sphere of a d-simplex. `degenerate` is set exactly when the
/// simplex is affinely dependent; center and radius are then meaningless.
#[derive(Debug, Clone)]
pub struct Circumsphere {
    pub center: Point,
    pub radius: f64,
    pub degenerate: bool,
}

fn check_simplex(simplex: &[Point]) -> Result<usize, GeometryError> {
    let dim = simplex.first().map(Point::dim).unwrap_or(0);
    if dim < 2 || simplex.len() != dim + 1 || simplex.iter().any(|p| p.dim() != dim) {
        return Err(GeometryError::DimensionMismatch {
            expected: dim + 1,
            dim,
            got: simplex.len(),
        });
    }
    Ok(dim)
}

/// Orientation of a d-simplex: the exact sign of the d×d determinant of edge
/// vectors from vertex 0. `Zero` iff the vertices are affinely dependent.
pub fn orientation(simplex: &[Point]) -> Result<Sign, GeometryError> {
    let dim = check_simplex(simplex)?;
    // Interval filter.
    let mut m: SmallVec<[Interval; 64]> = SmallVec::with_capacity(dim * dim);
    for i in 1..=dim {
        for j in 0..dim {
            m.push(Interval::sub_exact(simplex[i][j], simplex[0][j]));
        }
    }
    if let Some(sign) = interval::det_sign(dim, &mut m) {
        return Ok(sign);
    }
    // Exact fallback.
    let mut dm: Vec<exact::Dyadic> = Vec::with_capacity(dim * dim);
    for i in 1..=dim {
        for j in 0..dim {
            dm.push(
                exact::Dyadic::from_f64(simplex[i][j]).sub(&exact::Dyadic::from_f64(simplex[0][j])),
            );
        }
    }
    Ok(exact::det_sign(dim, &dm))
}

/// Exact position of `query` relative to the circumsphere of `simplex`,
/// normalized by the simplex orientation (the answer does not depend on
/// vertex order).
pub fn in_sphere(simplex: &[Point], query: &Point) -> Result<InSphere, GeometryError> {
    let orient = orientation(simplex)?;
    if orient == Sign::Zero {
        return Err(GeometryError::DegenerateSimplex);
    }
    Ok(in_sphere_oriented(simplex, query, orient))
}

/// `in_sphere` with a pre-computed (cached) orientation sign.
pub fn in_sphere_oriented(simplex: &[Point], query: &Point, orient: Sign) -> InSphere {
    debug_assert_ne!(orient, Sign::Zero);
    let dim = simplex[0].dim();
    debug_assert_eq!(query.dim(), dim);
    let n = dim + 1;

    // Lifting map: rows (x_i - q, |x_i - q|^2); the sign of this determinant
    // classifies q against the circumsphere once normalized by orientation.
    let lifted = {
        let mut m: SmallVec<[Interval; 128]> = SmallVec::with_capacity(n * n);
        for p in simplex {
            let mut norm = Interval::exact(0.0);
            for j in 0..dim {
                let d = Interval::sub_exact(p[j], query[j]);
                m.push(d);
                norm = norm.add(d.mul(d));
            }
            m.push(norm);
        }
        interval::det_sign(n, &mut m)
    };
    let lifted = lifted.unwrap_or_else(|| {
        let mut dm: Vec<exact::Dyadic> = Vec::with_capacity(n * n);
        for p in simplex {
            let mut norm = exact::Dyadic::zero();
            let row_start = dm.len();
            for j in 0..dim {
                let d =
                    exact::Dyadic::from_f64(p[j]).sub(&exact::Dyadic::from_f64(query[j]));
                dm.push(d);
            }
            for j in 0..dim {
                let d = &dm[row_start + j];
                norm = norm.add(&d.mul(d));
            }
            dm.push(norm);
        }
        exact::det_sign(n, &dm)
    });

    // Evaluating the lifted determinant at the circumcenter gives
    // (-1)^d r^2 times the orientation determinant, so the inside sign is
    // (-1)^d times the orientation sign.
    let mut normalized = if orient == Sign::Negative {
        lifted.flip()
    } else {
        lifted
    };
    if dim % 2 == 1 {
        normalized = normalized.flip();
    }
    match normalized {
        Sign::Positive => InSphere::Inside,
        Sign::Zero => InSphere::On,
        Sign::Negative => InSphere::Outside,
    }
}

/// In-sphere with symbolic tie-breaking, as used for Delaunay cavity
/// membership: returns true when `query` lies strictly inside the
/// circumsphere, and resolves exact cospherical ties by an infinitesimal
/// per-vertex lifting perturbation keyed on vertex ids.
///
/// The domain-box corners are structurally cospherical (every cube face is a
/// cocircular quad), so ties are not a measure-zero event that jitter could
/// remove; the perturbation makes the triangulation canonical and
/// insertion-order independent. Vertex id v is lowered on the paraboloid by
/// eps^(v+1), which resolves corner ties as the lexicographic pulling
/// triangulation; on the box corners that is exactly the path triangulation
/// the initial mesh is built from. The perturbed determinant is
/// D(eps) = D0 - sum_k C_k eps^{v_k+1} + S eps^{q_id+1}, where C_k is the
/// last-column cofactor for row k and S = sum_k C_k; for eps -> 0+ the
/// smallest id with a nonzero coefficient decides the sign.
pub fn in_sphere_perturbed(
    simplex: &[Point],
    simplex_ids: &[u32],
    orient: Sign,
    query: &Point,
    query_id: u32,
) -> bool {
    debug_assert_eq!(simplex.len(), simplex_ids.len());
    debug_assert!(simplex_ids.iter().all(|&v| v != query_id));
    match in_sphere_oriented(simplex, query, orient) {
        InSphere::Inside => return true,
        InSphere::Outside => return false,
        InSphere::On => {}
    }
    let dim = simplex[0].dim();
    // Exact translated coordinate rows (x_i - q).
    let rows: Vec<Vec<exact::Dyadic>> = simplex
        .iter()
        .map(|p| {
            (0..dim)
                .map(|j| exact::Dyadic::from_f64(p[j]).sub(&exact::Dyadic::from_f64(query[j])))
                .collect()
        })
        .collect();
    // Visit simplex vertices in increasing id order; the first nonzero
    // coefficient -C_k decides. At least one cofactor is nonzero because
    // their sum is (up to sign) the orientation determinant.
    let mut order: SmallVec<[usize; MAX_DIM + 1]> = (0..simplex.len()).collect();
    order.sort_by_key(|&k| simplex_ids[k]);
    for &k in &order {
        if simplex_ids[k] > query_id {
            break;
        }
        let mut minor: Vec<exact::Dyadic> = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if i != k {
                minor.extend(row.iter().cloned());
            }
        }
        let det = exact::det_sign(dim, &minor);
        if det == Sign::Zero {
            continue;
        }
        // Coefficient of eps^{v_k+1} is -C_k with C_k = (-1)^{k+dim} * minor.
        let mut coeff = det.flip();
        if (k + dim) % 2 == 1 {
            coeff = coeff.flip();
        }
        let mut normalized = if orient == Sign::Negative {
            coeff.flip()
        } else {
            coeff
        };
        if dim % 2 == 1 {
            normalized = normalized.flip();
        }
        return normalized == Sign::Positive;
    }
    // Reachable only when the query id is smaller than every simplex vertex
    // id with a nonzero cofactor; then the query's own coefficient S (the
    // sum of cofactors) decides.
    let mut m: Vec<exact::Dyadic> = Vec::with_capacity((dim + 1) * (dim + 1));
    for row in &rows {
        m.extend(row.iter().cloned());
        m.push(exact::Dyadic::from_f64(1.0));
    }
    let mut normalized = exact::det_sign(dim + 1, &m);
    if orient == Sign::Negative {
        normalized = normalized.flip();
    }
    if dim % 2 == 1 {
        normalized = normalized.flip();
    }
    normalized == Sign::Positive
}

/// Circumcenter and circumradius of a d-simplex.
///
/// Solves 2(x_i - x_0)·(c - x_0) = |x_i - x_0|^2 in translated coordinates.
/// Degeneracy is reported in-band (exact orientation test), never as an
/// error.
pub fn circumsphere(simplex: &[Point]) -> Result<Circumsphere, GeometryError> {
    let dim = check_simplex(simplex)?;
    if orientation(simplex)? == Sign::Zero {
        return Ok(Circumsphere {
            center: centroid(simplex),
            radius: f64::INFINITY,
            degenerate: true,
        });
    }
    let mut a: SmallVec<[f64; 64]> = SmallVec::with_capacity(dim * dim);
    let mut b: SmallVec<[f64; MAX_DIM]> = SmallVec::with_capacity(dim);
    for i in 1..=dim {
        let mut norm = 0.0;
        for j in 0..dim {
            let d = simplex[i][j] - simplex[0][j];
            a.push(2.0 * d);
            norm += d * d;
        }
        b.push(norm);
    }
    let ok = linalg::solve_in_place(dim, &mut a, &mut b);
    debug_assert!(ok, "nondegenerate simplex must be solvable");
    let center = Point::new(
        (0..dim)
            .map(|j| simplex[0][j] + b[j])
            .collect::<SmallVec<[f64; MAX_DIM]>>(),
    );
    let radius = center.distance(&simplex[0]);
    Ok(Circumsphere {
        center,
        radius,
        degenerate: false,
    })
}

/// Barycentric coordinates of `query` in `simplex`.
pub fn barycentric(simplex: &[Point], query: &Point) -> Result<Barycentric, GeometryError> {
    let dim = check_simplex(simplex)?;
    if query.dim() != dim {
        return Err(GeometryError::DimensionMismatch {
            expected: dim + 1,
            dim,
            got: simplex.len(),
        });
    }
    // Columns are edge vectors x_i - x_0; solve for the weights of x_1..x_d.
    let mut a: SmallVec<[f64; 64]> = SmallVec::from_elem(0.0, dim * dim);
    let mut b: SmallVec<[f64; MAX_DIM]> = SmallVec::with_capacity(dim);
    for j in 0..dim {
        for i in 1..=dim {
            a[j * dim + (i - 1)] = simplex[i][j] - simplex[0][j];
        }
        b.push(query[j] - simplex[0][j]);
    }
    if !linalg::solve_in_place(dim, &mut a, &mut b) {
        return Err(GeometryError::DegenerateSimplex);
    }
    let mut weights: SmallVec<[f64; MAX_DIM + 1]> = SmallVec::with_capacity(dim + 1);
    weights.push(1.0 - b.iter().sum::<f64>());
    weights.extend_from_slice(&b);
    Ok(Barycentric { weights })
}

/// Euclidean volume of a d-simplex: |det of edge vectors| / d!.
pub fn simplex_volume(simplex: &[Point]) -> f64 {
    let dim = simplex[0].dim();
    debug_assert_eq!(simplex.len(), dim + 1);
    let mut a: SmallVec<[f64; 64]> = SmallVec::with_capacity(dim * dim);
    for i in 1..=dim {
        for j in 0..dim {
            a.push(simplex[i][j] - simplex[0][j]);
        }
    }
    let factorial: f64 = (1..=dim).map(|k| k as f64).product();
    linalg::det(dim, &mut a).abs() / factorial
}

pub fn centroid(points: &[Point]) -> Point {
    let dim = points[0].dim();
    let inv = 1.0 / points.len() as f64;
    Point::new(
        (0..dim)
            .map(|j| points.iter().map(|p| p[j]).sum::<f64>() * inv)
            .collect::<SmallVec<[f64; MAX_DIM]>>(),
    )
}

/// Deterministic general-position jitter: a pseudorandom offset of magnitude
/// at most [`JITTER_RELATIVE_MAGNITUDE`] times the domain diameter, seeded
/// from the sample index alone. The result is clamped back into the domain.
pub fn jitter_sample(index: u64, point: &Point, domain: &AxisBox) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(index);
    let magnitude = JITTER_RELATIVE_MAGNITUDE * domain.diameter();
    let coords: SmallVec<[f64; MAX_DIM]> = point
        .as_slice()
        .iter()
        .map(|&c| c + (rng.gen::<f64>() * 2.0 - 1.0) * magnitude)
        .collect();
    domain.clamp(&Point::new(coords))
}
