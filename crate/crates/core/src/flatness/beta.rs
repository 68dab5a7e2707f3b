use super::FlatnessError;
use crate::domain::SampledBoundary;
use crate::geometry::{fit_plane, Ball, Hyperplane, Point};
use serde::Serialize;

/// Angular resolution of the direction net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaOptions {
    pub theta: f64,
}

impl Default for BetaOptions {
    fn default() -> Self {
        Self { theta: std::f64::consts::PI / 180.0 }
    }
}

impl BetaOptions {
    /// `θ = ε/8`, tying the net to the decision threshold.
    pub fn for_eps(eps: f64) -> Self {
        Self { theta: eps / 8.0 }
    }
}

/// Bilateral β of the samples in `B(x, r)` against the best plane found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaRecord {
    pub x: Point,
    pub r: f64,
    /// `term_e_to_p + term_p_to_e`.
    pub value: f64,
    pub plane: Hyperplane,
    /// `sup_{E∩B} dist(y, P) / r`.
    pub term_e_to_p: f64,
    /// `sup_{P∩B} dist(y, E) / r`, including the sampling slack.
    pub term_p_to_e: f64,
    /// No plane has a smaller value on these samples.
    pub lower_bound: f64,
    pub theta: f64,
    pub n_samples: usize,
}

pub fn bbeta(s: &SampledBoundary, x: &Point, r: f64) -> Result<BetaRecord, FlatnessError> {
    bbeta_with(s, x, r, &BetaOptions::default(), &[])
}

/// `bbeta` with an explicit net resolution and extra candidate planes.
///
/// The value is the best of: the total-least-squares plane; the four
/// directions of the net with the thinnest sample slabs, each at five
/// offsets `r/32` apart around the slab midline; small rotations of the
/// best plane found; and `extra`.
pub fn bbeta_with(
    s: &SampledBoundary,
    x: &Point,
    r: f64,
    opts: &BetaOptions,
    extra: &[Hyperplane],
) -> Result<BetaRecord, FlatnessError> {
    let d = s.dim();
    if !(r >= 10.0 * s.h() * (1.0 - 1e-12)) {
        return Err(FlatnessError::RadiusBelowResolution { r, min: 10.0 * s.h() });
    }
    let ball = Ball::new(*x, r).map_err(|e| FlatnessError::Geometry(e.to_string()))?;
    if !s.window_ok(&ball) {
        return Err(FlatnessError::Truncated { r });
    }
    let idx = s.within(x, r);
    if idx.len() < d {
        return Err(FlatnessError::InsufficientData { got: idx.len(), need: d });
    }
    let theta = if d == 3 { opts.theta.max(2f64.to_radians()) } else { opts.theta };
    let ev = Evaluator::new(s, *x, r, idx);

    let (dirs, cover) = direction_net(d, theta);
    let slabs: Vec<Slab> = dirs.iter().map(|n| ev.slab(n)).collect();
    let thinnest = slabs.iter().map(|sl| sl.half_width).fold(f64::INFINITY, f64::min);
    let lower_bound = (thinnest / r - cover).max(0.0);

    let mut best = Best::default();
    let pts: Vec<Point> = ev.idx.iter().map(|&i| s.points()[i]).collect();
    let wts: Vec<f64> = ev.idx.iter().map(|&i| s.weights()[i]).collect();
    if let Ok(fit) = fit_plane(&pts, &wts) {
        best.consider(&ev, fit.plane);
    }

    let mut order: Vec<usize> = (0..dirs.len()).collect();
    order.sort_by(|&a, &b| slabs[a].half_width.total_cmp(&slabs[b].half_width).then(a.cmp(&b)));
    for &j in order.iter().take(4) {
        for m in -2..=2 {
            let t = slabs[j].mid + m as f64 * r / 32.0;
            best.consider(&ev, Hyperplane { base: *x + dirs[j] * t, normal: dirs[j] });
        }
    }
    // Far from flat, the best plane may sit well off the slab midline.
    if best.value.unwrap_or(f64::INFINITY) > 0.25 {
        let (coarse, _) = direction_net(d, theta.max(2f64.to_radians()));
        for n in coarse {
            let sl = ev.slab(&n);
            let reach = best.value.unwrap_or(f64::INFINITY) * r - sl.half_width;
            let steps = (reach / (r / 32.0)).ceil().min(64.0) as i32;
            for m in -steps..=steps {
                let t = sl.mid + m as f64 * r / 32.0;
                best.consider(&ev, Hyperplane { base: *x + n * t, normal: n });
            }
        }
    }

    for scale in [0.5, 0.25, 0.125] {
        let Some(cur) = best.plane else { break };
        for n in rotations(&cur.normal, theta * scale) {
            let sl = ev.slab(&n);
            for m in [0.0, -1.0, 1.0] {
                let t = sl.mid + m * r / 64.0;
                best.consider(&ev, Hyperplane { base: *x + n * t, normal: n });
            }
        }
    }

    // Last, so extra planes can only lower the value.
    for p in extra {
        best.consider(&ev, *p);
    }

    let plane = best.plane.expect("at least one candidate plane");
    let (t1, t2) = best.terms;
    Ok(BetaRecord {
        x: *x,
        r,
        value: t1 + t2,
        plane,
        term_e_to_p: t1,
        term_p_to_e: t2,
        lower_bound: lower_bound.min(t1 + t2),
        theta,
        n_samples: ev.idx.len(),
    })
}

/// The certified lower bound of [`bbeta_with`] alone, without searching
/// planes; `None` when the window is not evaluable.
pub fn beta_lower_bound(s: &SampledBoundary, x: &Point, r: f64, opts: &BetaOptions) -> Option<f64> {
    let d = s.dim();
    let idx = s.within(x, r);
    if idx.len() < d || !s.window_ok(&Ball { center: *x, radius: r }) {
        return None;
    }
    let theta = if d == 3 { opts.theta.max(2f64.to_radians()) } else { opts.theta };
    let ev = Evaluator::new(s, *x, r, idx);
    let (dirs, cover) = direction_net(d, theta);
    let thinnest = dirs.iter().map(|n| ev.slab(n).half_width).fold(f64::INFINITY, f64::min);
    Some((thinnest / r - cover).max(0.0))
}

#[derive(Default)]
struct Best {
    plane: Option<Hyperplane>,
    terms: (f64, f64),
    value: Option<f64>,
}

impl Best {
    fn consider(&mut self, ev: &Evaluator, p: Hyperplane) {
        let bound = self.value.unwrap_or(f64::INFINITY);
        if let Some((t1, t2)) = ev.eval(&p, bound) {
            if t1 + t2 < bound {
                self.plane = Some(p);
                self.terms = (t1, t2);
                self.value = Some(t1 + t2);
            }
        }
    }
}

struct Slab {
    half_width: f64,
    mid: f64,
}

pub(crate) struct Evaluator<'a> {
    s: &'a SampledBoundary,
    x: Point,
    r: f64,
    idx: Vec<usize>,
    step: f64,
    slack: f64,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(s: &'a SampledBoundary, x: Point, r: f64, idx: Vec<usize>) -> Self {
        let (step, slack) = if s.dim() == 2 { (s.h(), s.h()) } else { (s.h().max(r / 32.0), s.h().max(r / 32.0)) };
        Self { s, x, r, idx, step, slack }
    }

    fn slab(&self, n: &Point) -> Slab {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in &self.idx {
            let o = (self.s.points()[i] - self.x).dot(n);
            lo = lo.min(o);
            hi = hi.max(o);
        }
        Slab { half_width: (hi - lo) / 2.0, mid: (hi + lo) / 2.0 }
    }

    /// Both normalized terms for `p`, or `None` once their sum reaches `bound`.
    pub(crate) fn eval(&self, p: &Hyperplane, bound: f64) -> Option<(f64, f64)> {
        let mut t1 = 0.0f64;
        let cut = bound * self.r;
        for &i in &self.idx {
            t1 = t1.max(p.offset(&self.s.points()[i]).abs());
            if t1 >= cut {
                return None;
            }
        }
        let t1 = t1 / self.r;
        if t1 >= bound {
            return None;
        }
        let mut section = Vec::new();
        for_each_section_point(p, &self.x, self.r, self.step, |y| section.push(y));
        // Coarse-to-fine order finds wide gaps first, so hopeless planes stop
        // early; the sup covers every point either way.
        let mut sup = 0.0f64;
        for stride in [64, 8, 1] {
            for (j, y) in section.iter().enumerate().step_by(stride) {
                if stride < 64 && j % (stride * 8) == 0 {
                    continue;
                }
                let (_, d) = self.s.nearest(y).expect("nonempty cloud");
                sup = sup.max(d);
                if t1 + (sup + self.slack) / self.r >= bound {
                    return None;
                }
            }
        }
        let t2 = if sup == 0.0 && !section_nonempty(p, &self.x, self.r) { 0.0 } else { (sup + self.slack) / self.r };
        Some((t1, t2))
    }
}

fn section_nonempty(p: &Hyperplane, x: &Point, r: f64) -> bool {
    p.offset(x).abs() < r
}

/// Grid on `P ∩ B(x, r)` with spacing at most `step`; points of boundary
/// cells are pulled onto the rim.
pub(crate) fn for_each_section_point(p: &Hyperplane, x: &Point, r: f64, step: f64, mut f: impl FnMut(Point)) {
    let t = p.offset(x);
    if t.abs() >= r {
        return;
    }
    let rho = (r * r - t * t).sqrt();
    let c = *x - p.normal * t;
    let (u, v) = tangent_basis(&p.normal);
    if x.dim() == 2 {
        let m = (2.0 * rho / step).ceil().max(1.0) as usize;
        for j in 0..=m {
            f(c + u * (-rho + 2.0 * rho * j as f64 / m as f64));
        }
    } else {
        let v = v.expect("tangent pair in 3D");
        let m = (2.0 * rho / step).ceil().max(1.0) as usize;
        let g = 2.0 * rho / m as f64;
        for i in 0..m {
            for j in 0..m {
                let a = -rho + (i as f64 + 0.5) * g;
                let b = -rho + (j as f64 + 0.5) * g;
                let len = a.hypot(b);
                if len <= rho {
                    f(c + u * a + v * b);
                } else if len - rho < g * std::f64::consts::FRAC_1_SQRT_2 {
                    let k = rho / len;
                    f(c + u * (a * k) + v * (b * k));
                }
            }
        }
    }
}

/// Unit vectors spanning the plane orthogonal to `n`; the second one only in 3D.
pub(crate) fn tangent_basis(n: &Point) -> (Point, Option<Point>) {
    if n.dim() == 2 {
        return (Point::xy(-n.get(1), n.get(0)), None);
    }
    let axis = (0..3).min_by(|&a, &b| n.get(a).abs().total_cmp(&n.get(b).abs())).unwrap();
    let e = Point::basis(3, axis);
    let u = (e - *n * e.dot(n)).normalized().unwrap();
    let c = n.coords();
    let uc = u.coords();
    let v = Point::xyz(c[1] * uc[2] - c[2] * uc[1], c[2] * uc[0] - c[0] * uc[2], c[0] * uc[1] - c[1] * uc[0]);
    (u, Some(v))
}

/// Unit normals modulo sign covering the sphere to within the returned
/// angle, which is at most `theta`.
pub(crate) fn direction_net(dim: usize, theta: f64) -> (Vec<Point>, f64) {
    use std::f64::consts::PI;
    if dim == 2 {
        let m = (PI / theta).ceil() as usize;
        let step = PI / m as f64;
        let dirs = (0..m).map(|j| {
            let a = j as f64 * step;
            Point::xy(a.cos(), a.sin())
        });
        return (dirs.collect(), step / 2.0);
    }
    let bands = (PI / 2.0 / theta).ceil() as usize;
    let dphi = PI / 2.0 / bands as f64;
    let mut dirs = Vec::new();
    for i in 0..=bands {
        let phi = i as f64 * dphi;
        let m = ((2.0 * PI * phi.sin() / dphi).ceil() as usize).max(1);
        for j in 0..m {
            let a = 2.0 * PI * j as f64 / m as f64;
            dirs.push(Point::xyz(phi.sin() * a.cos(), phi.sin() * a.sin(), phi.cos()));
        }
    }
    (dirs, dphi)
}

fn rotations(n: &Point, angle: f64) -> Vec<Point> {
    let (u, v) = tangent_basis(n);
    let (s, c) = angle.sin_cos();
    let mut out = vec![*n * c + u * s, *n * c - u * s];
    if let Some(v) = v {
        out.push(*n * c + v * s);
        out.push(*n * c - v * s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, sample_boundary, CorpusSpec};

    fn cloud(name: &str, h: f64) -> SampledBoundary {
        let spec: CorpusSpec = name.parse().unwrap();
        sample_boundary(&make_domain(&spec).unwrap(), h).unwrap()
    }

    #[test]
    fn direction_net_covers() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 3] {
            let theta = 0.05;
            let (dirs, cover) = direction_net(dim, theta);
            assert!(cover <= theta);
            for _ in 0..2000 {
                let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let Some(u) = Point::from_slice(&c).unwrap().normalized() else { continue };
                let best = dirs.iter().map(|n| u.dot(n).abs().min(1.0).acos()).fold(f64::INFINITY, f64::min);
                assert!(best <= cover * 1.0001, "dim {dim}: {best} > {cover}");
            }
        }
    }

    #[test]
    fn line_is_flat() {
        let s = cloud("halfspace", 0.001);
        for (x, r) in [(0.0, 0.5), (0.3, 0.1), (-0.4, 0.02)] {
            let b = bbeta(&s, &Point::xy(x, 0.0), r).unwrap();
            assert!(b.value <= 2.0 * s.h() / r, "value {} at r {r}", b.value);
            assert!(b.lower_bound <= b.value);
        }
    }

    #[test]
    fn circle_beta_is_half_the_radius() {
        let s = cloud("disk", 0.001);
        let b = bbeta(&s, &Point::xy(1.0, 0.0), 0.2).unwrap();
        assert!((b.value - 0.1).abs() <= 0.025, "value {}", b.value);
        assert_eq!(b.value, b.term_e_to_p + b.term_p_to_e);
    }

    #[test]
    fn insufficient_and_truncated_windows() {
        let s = cloud("disk", 0.01);
        assert!(matches!(
            bbeta(&s, &Point::xy(5.0, 0.0), 0.5),
            Err(FlatnessError::InsufficientData { got: 0, need: 2 })
        ));
        let line = cloud("halfspace", 0.01);
        assert!(matches!(bbeta(&line, &Point::xy(0.9, 0.0), 0.5), Err(FlatnessError::Truncated { .. })));
        assert!(matches!(bbeta(&s, &Point::xy(1.0, 0.0), 0.05), Err(FlatnessError::RadiusBelowResolution { .. })));
    }

    #[test]
    fn sphere_is_curved_and_plane_is_flat() {
        let s = cloud("ball3", 0.02);
        let b = bbeta(&s, &Point::xyz(0.0, 0.0, 1.0), 0.4).unwrap();
        assert!(b.value > 0.1 && b.value < 0.4, "sphere value {}", b.value);
        let p = cloud("halfspace3", 0.02);
        let b = bbeta(&p, &Point::xyz(0.0, 0.0, 0.0), 0.4).unwrap();
        assert!(b.value <= 3.0 * (0.4f64 / 32.0) / 0.4, "plane value {}", b.value);
    }

    #[test]
    fn extra_planes_never_increase_the_value() {
        let s = cloud("cantor:3", 0.002);
        let x = s.points()[s.len() / 3];
        let base = bbeta(&s, &x, 0.2).unwrap();
        let extra = [
            Hyperplane::new(x, Point::xy(1.0, 0.0)).unwrap(),
            Hyperplane::new(x, Point::xy(0.0, 1.0)).unwrap(),
            Hyperplane::new(x + Point::xy(0.0, 0.03), Point::xy(0.0, 1.0)).unwrap(),
        ];
        let more = bbeta_with(&s, &x, 0.2, &BetaOptions::default(), &extra).unwrap();
        assert!(more.value <= base.value);
    }
}
