//! The flatness-to-access argument as executable pipelines: side
//! classification of flat windows, exterior corkscrews from flatness, the
//! dyadic packing diagnostic, the single-layer energy, ADR estimates and the
//! domain classifier.

mod classify;
mod config;
mod measure;
mod side;

pub use classify::{
    classify_cloud, classify_domain, sweep_windows, AdrSection, BwglEntry, BwglSection, ClassificationReport,
    CorkscrewSection, CurveSection, EnergyEntry, PackingEntry, PackingSection, PairRecord, Provenance, SpecEntry, Status,
    Verdict, Verdicts, Versions, WindowRecord, REPORT_SCHEMA, SCHEMA_VERSION,
};
pub use config::{AnalysisConfig, Thresholds, CONFIG_KEYS};
pub use measure::{
    adr_estimate, bad_collection, layer_energy, packing_ratio, packing_ratio_with, AdrEstimate, BadCollection,
    LayerEnergy, ENERGY_LATTICE,
};
pub use side::{
    exterior_corkscrew_via_flatness, side_classify, FlatnessCorkscrew, FlatnessFailure, FlatnessStage, LemmaConstants,
    SideClassification, SideSign,
};

use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoremError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Neither `X_±` is exterior: the window was not flat enough for `ε`.
    #[error("flatness violation at {x:?}, r = {r}: no exterior point at ε = {eps}")]
    FlatnessViolation { x: Point, r: f64, eps: f64 },
    #[error("oracle inconsistency at {x:?}, r = {r}: both X_+ and X_- are exterior")]
    OracleInconsistency { x: Point, r: f64 },
    #[error("boundary sample {sample:?} inside the exterior half-ball of B({x:?}, {r})")]
    SampleInHalfBall { x: Point, r: f64, sample: Point },
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
