//! Domain oracles, the test corpus, boundary sampling and point-cloud files.

mod cloud;
mod corpus;
mod sampling;
mod shapes;

pub use cloud::{load_cloud, read_cloud, save_cloud, write_cloud, SampledBoundary};
pub use corpus::{make_domain, CorpusKind, CorpusSpec, Domain, Placement};
pub use sampling::{max_resolution, sample_boundary};
pub use shapes::BoundaryPiece;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Ball, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error("resolution h = {h} is too coarse (need h <= {max})")]
    Resolution { h: f64, max: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: expected {expected}, file has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("io: {0}")]
    Io(String),
}

/// Which side of the boundary a point lies on. Boundary points are not in
/// the open domain and report `Outside` with zero distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Inside,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extent {
    Bounded(f64),
    Unbounded,
}

/// Queryable domain `Ω`.
///
/// `boundary_distance` must be 1-Lipschitz and vanish exactly on `∂Ω`;
/// `side` must be locally constant off the boundary.
pub trait DomainOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn side(&self, x: &Point) -> Side;
    /// `δ(X) = dist(X, ∂Ω)`.
    fn boundary_distance(&self, x: &Point) -> f64;
    /// A closest boundary point, when the oracle can produce one.
    fn nearest_boundary(&self, _x: &Point) -> Option<Point> {
        None
    }
    /// Diameter of the boundary.
    fn diameter_hint(&self) -> Extent;

    fn is_inside(&self, x: &Point) -> bool {
        self.side(x) == Side::Inside
    }

    /// In the open exterior `ℝ^d ∖ Ω̄`.
    fn is_exterior(&self, x: &Point) -> bool {
        self.side(x) == Side::Outside && self.boundary_distance(x) > 0.0
    }
}

/// Axis-aligned box (possibly unbounded) inside which a sampled boundary is
/// complete; analysis balls must fit inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Aabb {
    pub fn unbounded() -> Self {
        Self { lo: [f64::NEG_INFINITY; 3], hi: [f64::INFINITY; 3] }
    }

    pub fn contains_ball(&self, b: &Ball) -> bool {
        (0..b.dim()).all(|a| {
            let c = b.center.get(a);
            c - b.radius >= self.lo[a] && c + b.radius <= self.hi[a]
        })
    }

    /// Distance from `p` to the box boundary when `p` is inside, else 0.
    pub fn inner_margin(&self, p: &Point) -> f64 {
        (0..p.dim())
            .map(|a| (p.get(a) - self.lo[a]).min(self.hi[a] - p.get(a)))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}
