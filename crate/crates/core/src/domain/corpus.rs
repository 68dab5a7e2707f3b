use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::shapes::{cantor_squares, BoundaryPiece, Shape};
use super::{Aabb, DomainError, DomainOracle, Extent, Side};
use crate::geometry::Point;

/// Corpus shapes. Hypotheses they satisfy or break:
///
/// * `HalfSpace`, `Ball`, `Square`, `LipschitzGraph`: chord-arc.
/// * `CantorComplement`: complement of the level-`k` four-corners squares;
///   uniform with ADR boundary but exterior corkscrews only below `4^-k`.
/// * `Cusp`: `{y > 0, |x| < y^α}`, an inward cusp at the origin that breaks
///   interior corkscrews and Harnack chains near the tip.
/// * `SlitDisk`: open disk minus a radial segment reaching the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusKind {
    /// `{x_d > 0}`, sampled on `|x_i| <= window` for `i < d`.
    HalfSpace { dim: usize, window: f64 },
    Ball { dim: usize, radius: f64 },
    /// Axis-parallel square centred at the origin.
    Square { side: f64 },
    /// `{y > f(x)}` with `f` piecewise linear through the breakpoints and
    /// constant beyond them; sampled between the first and last breakpoint.
    LipschitzGraph { breakpoints: Vec<(f64, f64)>, slope_bound: f64 },
    CantorComplement { level: u32 },
    /// Sampled for `0 <= y <= height`.
    Cusp { exponent: f64, height: f64 },
    /// Slit from `(radius - slit, 0)` to `(radius, 0)`.
    SlitDisk { radius: f64, slit: f64 },
}

/// Similarity placing the shape: `X = offset + scale · X_local`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub offset: Option<Point>,
    pub scale: f64,
}

impl Default for Placement {
    fn default() -> Self {
        Self { offset: None, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    #[serde(flatten)]
    pub kind: CorpusKind,
    #[serde(default)]
    pub placement: Placement,
}

impl CorpusSpec {
    pub fn new(kind: CorpusKind) -> Self {
        Self { kind, placement: Placement::default() }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            CorpusKind::HalfSpace { dim, .. } | CorpusKind::Ball { dim, .. } => *dim,
            _ => 2,
        }
    }

    /// The Lipschitz graph on `[0, 1]` with slopes `±slope` and breakpoints
    /// every quarter.
    pub fn zigzag(slope: f64) -> Self {
        let a = slope / 4.0;
        Self::new(CorpusKind::LipschitzGraph {
            breakpoints: vec![(0.0, 0.0), (0.25, a), (0.5, 0.0), (0.75, a), (1.0, 0.0)],
            slope_bound: slope,
        })
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: &str| Err(DomainError::InvalidSpec(m.to_string()));
        let pos = |v: f64| v > 0.0 && v.is_finite();
        match &self.kind {
            CorpusKind::HalfSpace { dim, window } => {
                if !(2..=3).contains(dim) {
                    return bad("half-space dimension must be 2 or 3");
                }
                if !pos(*window) {
                    return bad("half-space window must be positive");
                }
            }
            CorpusKind::Ball { dim, radius } => {
                if !(2..=3).contains(dim) {
                    return bad("ball dimension must be 2 or 3");
                }
                if !pos(*radius) {
                    return bad("ball radius must be positive");
                }
            }
            CorpusKind::Square { side } => {
                if !pos(*side) {
                    return bad("square side must be positive");
                }
            }
            CorpusKind::LipschitzGraph { breakpoints, slope_bound } => {
                if breakpoints.len() < 2 {
                    return bad("graph needs at least two breakpoints");
                }
                for w in breakpoints.windows(2) {
                    let dx = w[1].0 - w[0].0;
                    if !(dx > 0.0) {
                        return bad("graph breakpoints must be strictly increasing in x");
                    }
                    if (w[1].1 - w[0].1).abs() > slope_bound * dx * (1.0 + 1e-12) {
                        return bad("graph slope exceeds the stated bound");
                    }
                }
            }
            CorpusKind::CantorComplement { level } => {
                if *level < 1 || *level > 8 {
                    return bad("cantor level must be in 1..=8");
                }
            }
            CorpusKind::Cusp { exponent, height } => {
                if !(*exponent > 1.0 && exponent.is_finite()) {
                    return bad("cusp exponent must exceed 1");
                }
                if !pos(*height) {
                    return bad("cusp height must be positive");
                }
            }
            CorpusKind::SlitDisk { radius, slit } => {
                if !pos(*radius) || !(*slit > 0.0 && slit < radius) {
                    return bad("slit disk needs 0 < slit < radius");
                }
            }
        }
        if !pos(self.placement.scale) {
            return bad("placement scale must be positive");
        }
        if let Some(o) = self.placement.offset {
            if o.dim() != self.dim() {
                return bad("placement offset has the wrong dimension");
            }
        }
        Ok(())
    }
}

impl FromStr for CorpusSpec {
    type Err = DomainError;

    /// Short names: `line`, `halfspace`, `halfspace3`, `disk[:R]`, `ball3[:R]`,
    /// `square[:s]`, `lipschitz[:L]`, `cantor:k`, `cusp[:α]`, `slit[:R:len]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let args: Vec<f64> = parts
            .map(|a| a.parse::<f64>().map_err(|_| DomainError::InvalidSpec(format!("bad number {a:?} in {s:?}"))))
            .collect::<Result<_, _>>()?;
        let arg = |i: usize, d: f64| args.get(i).copied().unwrap_or(d);
        let spec = match name.as_str() {
            "line" | "halfspace" => Self::new(CorpusKind::HalfSpace { dim: 2, window: arg(0, 1.0) }),
            "halfspace3" | "plane" => Self::new(CorpusKind::HalfSpace { dim: 3, window: arg(0, 1.0) }),
            "disk" => Self::new(CorpusKind::Ball { dim: 2, radius: arg(0, 1.0) }),
            "ball3" | "sphere" => Self::new(CorpusKind::Ball { dim: 3, radius: arg(0, 1.0) }),
            "square" => Self::new(CorpusKind::Square { side: arg(0, 1.0) }),
            "lipschitz" => Self::zigzag(arg(0, 0.5)),
            "cantor" => {
                let k = arg(0, 3.0);
                if k.fract() != 0.0 || k < 0.0 {
                    return Err(DomainError::InvalidSpec(format!("cantor level must be an integer, got {k}")));
                }
                Self::new(CorpusKind::CantorComplement { level: k as u32 })
            }
            "cusp" => Self::new(CorpusKind::Cusp { exponent: arg(0, 2.0), height: arg(1, 1.0) }),
            "slit" => Self::new(CorpusKind::SlitDisk { radius: arg(0, 1.0), slit: arg(1, 0.5) }),
            _ => return Err(DomainError::InvalidSpec(format!("unknown corpus name {name:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for CorpusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CorpusKind::HalfSpace { dim: 2, window } => write!(f, "halfspace:{window}"),
            CorpusKind::HalfSpace { window, .. } => write!(f, "halfspace3:{window}"),
            CorpusKind::Ball { dim: 2, radius } => write!(f, "disk:{radius}"),
            CorpusKind::Ball { radius, .. } => write!(f, "ball3:{radius}"),
            CorpusKind::Square { side } => write!(f, "square:{side}"),
            CorpusKind::LipschitzGraph { slope_bound, breakpoints } => {
                write!(f, "lipschitz:{slope_bound}[{} breakpoints]", breakpoints.len())
            }
            CorpusKind::CantorComplement { level } => write!(f, "cantor:{level}"),
            CorpusKind::Cusp { exponent, height } => write!(f, "cusp:{exponent}:{height}"),
            CorpusKind::SlitDisk { radius, slit } => write!(f, "slit:{radius}:{slit}"),
        }
    }
}

/// A corpus domain: the oracle together with its exact boundary.
#[derive(Debug, Clone)]
pub struct Domain {
    spec: CorpusSpec,
    shape: Shape,
}

/// Builds the oracle for `spec`.
pub fn make_domain(spec: &CorpusSpec) -> Result<Domain, DomainError> {
    spec.validate()?;
    let shape = match &spec.kind {
        CorpusKind::HalfSpace { .. } => Shape::HalfSpace,
        CorpusKind::Ball { radius, .. } => Shape::Ball { radius: *radius },
        CorpusKind::Square { side } => Shape::Square { side: *side },
        CorpusKind::LipschitzGraph { breakpoints, .. } => Shape::Graph { nodes: breakpoints.clone() },
        CorpusKind::CantorComplement { level } => Shape::Cantor { level: *level },
        CorpusKind::Cusp { exponent, .. } => Shape::Cusp { exponent: *exponent },
        CorpusKind::SlitDisk { radius, slit } => Shape::Slit { radius: *radius, slit: *slit },
    };
    Ok(Domain { spec: spec.clone(), shape })
}

impl Domain {
    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    fn offset(&self) -> Point {
        self.spec.placement.offset.unwrap_or_else(|| Point::zero(self.spec.dim()))
    }

    pub fn to_local(&self, x: &Point) -> Point {
        (*x - self.offset()) * (1.0 / self.spec.placement.scale)
    }

    pub fn from_local(&self, x: &Point) -> Point {
        self.offset() + *x * self.spec.placement.scale
    }

    /// Exact boundary in local coordinates; map with [`Domain::from_local`].
    pub fn boundary(&self) -> Vec<BoundaryPiece> {
        let d = self.spec.dim();
        match &self.spec.kind {
            CorpusKind::HalfSpace { window, .. } if d == 2 => {
                vec![BoundaryPiece::Segment { a: Point::xy(-window, 0.0), b: Point::xy(*window, 0.0) }]
            }
            CorpusKind::HalfSpace { window, .. } => vec![BoundaryPiece::PlanePatch { half_width: *window }],
            CorpusKind::Ball { radius, .. } if d == 2 => {
                vec![BoundaryPiece::Circle { center: Point::zero(2), radius: *radius }]
            }
            CorpusKind::Ball { radius, .. } => vec![BoundaryPiece::Sphere { center: Point::zero(3), radius: *radius }],
            CorpusKind::Square { side } => vec![square_polygon(-side / 2.0, -side / 2.0, *side)],
            CorpusKind::LipschitzGraph { breakpoints, .. } => vec![BoundaryPiece::Path {
                vertices: breakpoints.iter().map(|&(x, y)| Point::xy(x, y)).collect(),
            }],
            CorpusKind::CantorComplement { level } => {
                let s = 0.25f64.powi(*level as i32);
                cantor_squares(*level).into_iter().map(|(x, y)| square_polygon(x, y, s)).collect()
            }
            CorpusKind::Cusp { exponent, height } => vec![
                BoundaryPiece::PowerCurve { exponent: *exponent, sign: 1.0, height: *height },
                BoundaryPiece::PowerCurve { exponent: *exponent, sign: -1.0, height: *height },
            ],
            CorpusKind::SlitDisk { radius, slit } => vec![
                BoundaryPiece::Circle { center: Point::zero(2), radius: *radius },
                BoundaryPiece::Segment { a: Point::xy(radius - slit, 0.0), b: Point::xy(*radius, 0.0) },
            ],
        }
    }

    /// Box outside of which the sampled boundary is truncated, in placed
    /// coordinates. `None` for bounded boundaries.
    pub fn complete_box(&self) -> Option<Aabb> {
        let inf = f64::INFINITY;
        let local = match &self.spec.kind {
            CorpusKind::HalfSpace { dim: 2, window } => Aabb { lo: [-window, -inf, -inf], hi: [*window, inf, inf] },
            CorpusKind::HalfSpace { window, .. } => Aabb { lo: [-window, -window, -inf], hi: [*window, *window, inf] },
            CorpusKind::LipschitzGraph { breakpoints, .. } => Aabb {
                lo: [breakpoints[0].0, -inf, -inf],
                hi: [breakpoints[breakpoints.len() - 1].0, inf, inf],
            },
            CorpusKind::Cusp { height, .. } => Aabb { lo: [-inf, -inf, -inf], hi: [inf, *height, inf] },
            _ => return None,
        };
        let o = self.offset();
        let s = self.spec.placement.scale;
        let mut out = local;
        for a in 0..3 {
            out.lo[a] = o.raw()[a] + s * local.lo[a];
            out.hi[a] = o.raw()[a] + s * local.hi[a];
        }
        Some(out)
    }

    /// Exact total boundary measure of the sampled region, in placed units.
    pub fn sampled_measure(&self) -> f64 {
        let s = self.spec.placement.scale;
        let n = self.spec.dim() as i32 - 1;
        let local = match &self.spec.kind {
            CorpusKind::HalfSpace { dim: 2, window } => 2.0 * window,
            CorpusKind::HalfSpace { window, .. } => 4.0 * window * window,
            CorpusKind::Ball { dim: 2, radius } => std::f64::consts::TAU * radius,
            CorpusKind::Ball { radius, .. } => 4.0 * std::f64::consts::PI * radius * radius,
            CorpusKind::Square { side } => 4.0 * side,
            CorpusKind::LipschitzGraph { breakpoints, .. } => breakpoints
                .windows(2)
                .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
                .sum(),
            CorpusKind::CantorComplement { .. } => 4.0,
            CorpusKind::Cusp { exponent, height } => 2.0 * power_curve_length(*exponent, *height),
            CorpusKind::SlitDisk { radius, slit } => std::f64::consts::TAU * radius + slit,
        };
        local * s.powi(n)
    }
}

pub(crate) fn power_curve_length(a: f64, height: f64) -> f64 {
    // Composite Simpson on sqrt(1 + (a t^(a-1))^2).
    let n = 20_000;
    let hstep = height / n as f64;
    let f = |t: f64| (1.0 + (a * t.powf(a - 1.0)).powi(2)).sqrt();
    let mut s = f(0.0) + f(height);
    for i in 1..n {
        s += f(i as f64 * hstep) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * hstep / 3.0
}

fn square_polygon(x0: f64, y0: f64, s: f64) -> BoundaryPiece {
    BoundaryPiece::Polygon {
        vertices: vec![Point::xy(x0, y0), Point::xy(x0 + s, y0), Point::xy(x0 + s, y0 + s), Point::xy(x0, y0 + s)],
    }
}

impl DomainOracle for Domain {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn side(&self, x: &Point) -> Side {
        self.shape.side(&self.to_local(x))
    }

    fn boundary_distance(&self, x: &Point) -> f64 {
        self.shape.nearest(&self.to_local(x)).0 * self.spec.placement.scale
    }

    fn nearest_boundary(&self, x: &Point) -> Option<Point> {
        Some(self.from_local(&self.shape.nearest(&self.to_local(x)).1))
    }

    fn diameter_hint(&self) -> Extent {
        let s = self.spec.placement.scale;
        match &self.spec.kind {
            CorpusKind::Ball { radius, .. } => Extent::Bounded(2.0 * radius * s),
            CorpusKind::Square { side } => Extent::Bounded(side * 2f64.sqrt() * s),
            CorpusKind::CantorComplement { .. } => Extent::Bounded(2f64.sqrt() * s),
            CorpusKind::SlitDisk { radius, .. } => Extent::Bounded(2.0 * radius * s),
            _ => Extent::Unbounded,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn dom(s: &str) -> Domain {
        make_domain(&s.parse().unwrap()).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let hs = dom("halfspace");
        assert_eq!(hs.side(&Point::xy(0.0, 3.0)), Side::Inside);
        assert_eq!(hs.boundary_distance(&Point::xy(0.0, 3.0)), 3.0);

        let b = dom("disk");
        assert_eq!(b.side(&Point::xy(2.0, 0.0)), Side::Outside);
        assert_eq!(b.boundary_distance(&Point::xy(2.0, 0.0)), 1.0);

        let c = dom("cantor:1");
        let x = Point::xy(0.5, 0.5);
        assert_eq!(c.side(&x), Side::Inside);
        assert!((c.boundary_distance(&x) - 2f64.sqrt() / 4.0).abs() < 1e-15);
        // Interior of a corner square is exterior to the complement domain.
        assert!(c.is_exterior(&Point::xy(0.1, 0.1)));
    }

    #[test]
    fn slit_and_cusp_sides() {
        let s = dom("slit");
        assert_eq!(s.side(&Point::xy(0.75, 0.0)), Side::Outside);
        assert_eq!(s.boundary_distance(&Point::xy(0.75, 0.0)), 0.0);
        assert_eq!(s.side(&Point::xy(0.75, 0.01)), Side::Inside);
        assert_eq!(s.side(&Point::xy(0.25, 0.0)), Side::Inside);

        let c = dom("cusp:2");
        assert_eq!(c.side(&Point::xy(0.0, 0.5)), Side::Inside);
        assert_eq!(c.side(&Point::xy(0.3, 0.5)), Side::Outside);
        assert_eq!(c.side(&Point::xy(0.0, -0.1)), Side::Outside);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!("cantor:0".parse::<CorpusSpec>().is_err());
        assert!("cusp:0.5".parse::<CorpusSpec>().is_err());
        assert!("slit:1:2".parse::<CorpusSpec>().is_err());
        assert!("disk:-1".parse::<CorpusSpec>().is_err());
        assert!("banana".parse::<CorpusSpec>().is_err());
        let steep = CorpusSpec::new(CorpusKind::LipschitzGraph { breakpoints: vec![(0.0, 0.0), (1.0, 2.0)], slope_bound: 1.0 });
        assert!(make_domain(&steep).is_err());
    }

    #[test]
    fn placement_scales_distances() {
        let mut spec: CorpusSpec = "disk".parse().unwrap();
        spec.placement = Placement { offset: Some(Point::xy(3.0, -1.0)), scale: 2.0 };
        let d = make_domain(&spec).unwrap();
        assert_eq!(d.side(&Point::xy(3.0, -1.0)), Side::Inside);
        assert!((d.boundary_distance(&Point::xy(3.0, -1.0)) - 2.0).abs() < 1e-15);
        let q = d.nearest_boundary(&Point::xy(6.0, -1.0)).unwrap();
        assert!(q.dist(&Point::xy(5.0, -1.0)) < 1e-12);
    }

    #[test]
    fn oracles_are_one_lipschitz() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for name in ["halfspace", "disk", "square", "lipschitz", "cantor:3", "cusp:2", "slit", "ball3", "halfspace3"] {
            let d = dom(name);
            let dim = d.dim();
            let pt = |rng: &mut rand_chacha::ChaCha8Rng| {
                let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                Point::from_slice(&c).unwrap()
            };
            for _ in 0..10_000 {
                let x = pt(&mut rng);
                let y = if rng.gen_bool(0.5) { pt(&mut rng) } else { x + pt(&mut rng) * 0.01 };
                let dx = d.boundary_distance(&x);
                let dy = d.boundary_distance(&y);
                assert!((dx - dy).abs() <= x.dist(&y) + 1e-9, "{name}: {x:?} {y:?}");
            }
        }
    }

    #[test]
    fn cantor_exterior_components_have_expected_diameter() {
        for k in 1..=4u32 {
            let d = dom(&format!("cantor:{k}"));
            let s = 0.25f64.powi(k as i32);
            // Each exterior component is the open interior of one square.
            let pieces = d.boundary();
            assert_eq!(pieces.len(), 4usize.pow(k));
            for piece in pieces.iter().take(8) {
                let BoundaryPiece::Polygon { vertices } = piece else { panic!() };
                assert!((vertices[0].dist(&vertices[2]) - 2f64.sqrt() * s).abs() < 1e-15);
                let c = vertices[0].lerp(&vertices[2], 0.5);
                assert!(d.is_exterior(&c));
                assert!((d.boundary_distance(&c) - s / 2.0).abs() < 1e-15);
            }
        }
    }
}
