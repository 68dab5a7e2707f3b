//! Corkscrew certificates, Harnack chains over Whitney balls and good curves
//! with measured uniform-domain constants. All searches query a
//! [`DomainOracle`](crate::domain::DomainOracle).

mod chain;
mod corkscrew;
mod curve;

pub use chain::{chain_to_curve, harnack_chain, verify_chain, HarnackChain};
pub use corkscrew::{c0_exterior_test, exterior_corkscrew, interior_corkscrew, validate, C0Outcome};
pub use curve::{curve_constants, curve_sidecar, good_curve, write_curve, GoodCurve, GoodCurveFailure, CURVE_SAMPLES};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AccessError {
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("lattice step {step} is invalid (need 0 < step <= {max})")]
    InvalidStep { step: f64, max: f64 },
    #[error("c0 = {0} is outside (0, 1/8)")]
    InvalidC0(f64),
    #[error("point {0:?} is not inside the domain")]
    NotInside(Point),
    #[error("search exceeded {cells} lattice cells")]
    SearchTooLarge { cells: usize },
    #[error("certificate failed validation: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorkscrewKind {
    Interior,
    Exterior,
    C0Exterior,
}

/// A ball `B(point, radius) ⊆ B(anchor, r)` on one side of the boundary.
/// For `C0Exterior` the ball lies in `B(witness, r)` instead, where `r` is the
/// test window `r_Q/4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorkscrewCert {
    pub anchor: Point,
    pub r: f64,
    pub point: Point,
    pub radius: f64,
    /// `radius / r`.
    pub constant: f64,
    pub kind: CorkscrewKind,
    pub witness: Option<Point>,
}
