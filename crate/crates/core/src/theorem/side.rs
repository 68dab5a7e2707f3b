use serde::Serialize;

use super::TheoremError;
use crate::access::{validate, CorkscrewCert, CorkscrewKind};
use crate::domain::{DomainOracle, SampledBoundary, Side};
use crate::flatness::{low_beta_window, LowBetaWindow};
use crate::geometry::{inscribed_halfball, Ball, Hyperplane, Point};

/// Measured interior corkscrew constant `c` and good-curve length constant
/// `C`; they fix `k = 1/(2C + 1)` and the admissible flatness `ε < ck/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaConstants {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
}

impl LemmaConstants {
    pub fn new(c: f64, big_c: f64) -> Self {
        Self { c, big_c }
    }

    pub fn k(&self) -> f64 {
        1.0 / (2.0 * self.big_c + 1.0)
    }

    /// Supremum of admissible `ε`.
    pub fn eps_bound(&self) -> f64 {
        self.c * self.k() / 4.0
    }

    pub fn check(&self, eps: f64) -> Result<(), TheoremError> {
        if !(self.c > 0.0 && self.big_c >= 1.0) {
            return Err(TheoremError::Precondition(format!("need c > 0 and C >= 1, got c={} C={}", self.c, self.big_c)));
        }
        if !(eps > 0.0 && eps < self.eps_bound()) {
            return Err(TheoremError::Precondition(format!("ε = {eps} is not below ck/4 = {}", self.eps_bound())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SideSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideClassification {
    pub exterior_side: SideSign,
    pub interior_side: SideSign,
    pub x_plus: Point,
    pub x_minus: Point,
    /// Unit normal `v` of the plane; `X_± = x ± k r v / 2`.
    pub normal: Point,
    pub k: f64,
    pub constants: LemmaConstants,
    pub eps: f64,
    /// Largest ball in `B(x, r)` beyond the `εr`-slab around the plane on the
    /// exterior side.
    pub corkscrew: Ball,
}

/// Decides which of `X_± = x ± k r v/2` is exterior for a flat window.
///
/// The caller certifies `β(x, r) <= ε` with `plane`. Exactly one of `X_±` must
/// be in the open exterior: both Inside means the window was not flat enough
/// and is logged and returned as [`TheoremError::FlatnessViolation`]; both
/// Outside is an oracle inconsistency. The exterior ball is the half-ball of
/// `B(x, r)` beyond the slab `{|offset| <= εr}` of the plane, shrunk when `x`
/// sits on the interior side of the plane; a boundary sample inside it means
/// the flatness precondition failed.
pub fn side_classify(
    oracle: &dyn DomainOracle,
    s: &SampledBoundary,
    x: &Point,
    r: f64,
    plane: &Hyperplane,
    consts: LemmaConstants,
    eps: f64,
) -> Result<SideClassification, TheoremError> {
    consts.check(eps)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(TheoremError::Precondition(format!("radius must be positive, got {r}")));
    }
    match s.nearest(x) {
        Some((_, d)) if d <= s.h() * (1.0 + 1e-9) => {}
        _ => return Err(TheoremError::Precondition(format!("{x:?} is farther than h from every sample"))),
    }
    let v = plane.normal;
    let k = consts.k();
    let x_plus = *x + v * (k * r / 2.0);
    let x_minus = *x - v * (k * r / 2.0);
    let (ext_plus, ext_minus) = (oracle.is_exterior(&x_plus), oracle.is_exterior(&x_minus));
    let exterior_side = match (ext_plus, ext_minus) {
        (true, false) => SideSign::Plus,
        (false, true) => SideSign::Minus,
        (true, true) => return Err(TheoremError::OracleInconsistency { x: *x, r }),
        (false, false) => {
            let inside = oracle.side(&x_plus) == Side::Inside && oracle.side(&x_minus) == Side::Inside;
            log::warn!("side_classify at {x:?}, r = {r}: neither X_+ nor X_- is exterior (both inside: {inside})");
            return Err(TheoremError::FlatnessViolation { x: *x, r, eps });
        }
    };
    let u = match exterior_side {
        SideSign::Plus => v,
        SideSign::Minus => -v,
    };
    // `x` may sit up to εr off the plane; measure the slab from the plane.
    let behind = (-(*x - plane.base).dot(&u)).max(0.0) / r;
    let gap = eps + behind;
    if gap >= 1.0 {
        return Err(TheoremError::Precondition(format!("x is {behind}r behind the plane")));
    }
    let corkscrew = inscribed_halfball(&Ball { center: *x, radius: r }, &u, gap)
        .map_err(|e| TheoremError::Precondition(e.to_string()))?;
    if let Some(&i) = s.within(&corkscrew.center, corkscrew.radius).first() {
        return Err(TheoremError::SampleInHalfBall { x: *x, r, sample: s.points()[i] });
    }
    let interior_side = match exterior_side {
        SideSign::Plus => SideSign::Minus,
        SideSign::Minus => SideSign::Plus,
    };
    Ok(SideClassification {
        exterior_side,
        interior_side,
        x_plus,
        x_minus,
        normal: v,
        k,
        constants: consts,
        eps,
        corkscrew,
    })
}

/// Where the flatness route stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatnessStage {
    RhoScan,
    Classification,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessFailure {
    pub stage: FlatnessStage,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessCorkscrew {
    /// Certificate relative to `B(x, r)`.
    pub cert: CorkscrewCert,
    pub window: LowBetaWindow,
    pub classification: SideClassification,
}

/// Exterior corkscrew for `B(x, r)` from flatness alone: the first flat
/// window `B(y, s) ⊆ B(x, r)` of the ρ-scan is side-classified with its
/// β-optimal plane, and the exterior half-ball is certified relative to
/// `B(x, r)`. Its constant is at least `(s/r)(1 - ε)/2` when `y` is on the
/// plane.
pub fn exterior_corkscrew_via_flatness(
    oracle: &dyn DomainOracle,
    s: &SampledBoundary,
    x: &Point,
    r: f64,
    eps: f64,
    consts: LemmaConstants,
) -> Result<FlatnessCorkscrew, FlatnessFailure> {
    let fail = |stage, reason: String| FlatnessFailure { stage, reason };
    consts.check(eps).map_err(|e| fail(FlatnessStage::Classification, e.to_string()))?;
    let window = low_beta_window(s, x, r, eps)
        .map_err(|e| fail(FlatnessStage::RhoScan, e.to_string()))?
        .ok_or_else(|| fail(FlatnessStage::RhoScan, format!("no window with β < {eps} inside B(x, {r})")))?;
    let classification = side_classify(oracle, s, &window.y, window.s, &window.record.plane, consts, eps)
        .map_err(|e| fail(FlatnessStage::Classification, e.to_string()))?;
    let ball = classification.corkscrew;
    let cert = CorkscrewCert {
        anchor: *x,
        r,
        point: ball.center,
        radius: ball.radius,
        constant: ball.radius / r,
        kind: CorkscrewKind::Exterior,
        witness: None,
    };
    validate(oracle, &cert).map_err(|e| fail(FlatnessStage::Validation, e.to_string()))?;
    Ok(FlatnessCorkscrew { cert, window, classification })
}
