use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Aabb, DomainError};
use crate::geometry::{set_diameter, Ball, Point};
use crate::index::KdTree;

/// Weighted point cloud standing in for `(∂Ω, σ)` at resolution `h`.
#[derive(Debug, Clone)]
pub struct SampledBoundary {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
    h: f64,
    diam: f64,
    complete: Option<Aabb>,
    index: KdTree,
}

impl SampledBoundary {
    /// `complete` is the box outside of which the cloud truncates the
    /// boundary; `None` means the whole boundary is sampled.
    pub fn new(points: Vec<Point>, weights: Vec<f64>, h: f64, complete: Option<Aabb>) -> Result<Self, DomainError> {
        let invalid = |m: String| Err(DomainError::InvalidSpec(m));
        let Some(first) = points.first() else {
            return invalid("empty point cloud".into());
        };
        let dim = first.dim();
        if points.len() != weights.len() {
            return invalid(format!("{} points but {} weights", points.len(), weights.len()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return invalid(format!("resolution must be positive, got {h}"));
        }
        for (i, (p, w)) in points.iter().zip(&weights).enumerate() {
            if p.dim() != dim {
                return Err(DomainError::DimensionMismatch { expected: dim, got: p.dim() });
            }
            if !(*w > 0.0 && w.is_finite()) {
                return invalid(format!("sample {i} has nonpositive weight {w}"));
            }
        }
        let diam = set_diameter(&points);
        let index = KdTree::new(&points);
        Ok(Self { dim, points, weights, h, diam, complete, index })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn complete(&self) -> Option<&Aabb> {
        self.complete.as_ref()
    }

    pub fn index(&self) -> &KdTree {
        &self.index
    }

    /// Σ weights in index order.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Sorted indices of the samples in the open ball `B(x, r)`.
    pub fn within(&self, x: &Point, r: f64) -> Vec<usize> {
        self.index.within(x, r)
    }

    pub fn nearest(&self, x: &Point) -> Option<(usize, f64)> {
        self.index.nearest(x)
    }

    /// `σ(Δ(x, r))`, summed in index order.
    pub fn mass_in_ball(&self, x: &Point, r: f64) -> f64 {
        self.within(x, r).iter().map(|&i| self.weights[i]).sum()
    }

    /// True when the cloud is complete on `ball`, so queries there see the
    /// whole boundary.
    pub fn window_ok(&self, ball: &Ball) -> bool {
        self.complete.map_or(true, |b| b.contains_ball(ball))
    }
}

/// Writes the cloud format: a `dim=<d> h=<h>` header, an optional
/// `# window=` comment with the completeness box, then `x1 x2 [x3] weight`
/// rows in shortest round-trip notation.
pub fn write_cloud<W: Write>(out: W, s: &SampledBoundary) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "dim={} h={}", s.dim, s.h)?;
    if let Some(b) = &s.complete {
        let axes: Vec<String> = (0..s.dim).map(|a| format!("{},{}", b.lo[a], b.hi[a])).collect();
        writeln!(out, "# window={}", axes.join(";"))?;
    }
    for (p, w) in s.points.iter().zip(&s.weights) {
        writeln!(out, "{p} {w}")?;
    }
    out.flush()
}

pub fn save_cloud(path: impl AsRef<Path>, s: &SampledBoundary) -> Result<(), DomainError> {
    let f = std::fs::File::create(path.as_ref()).map_err(|e| DomainError::Io(e.to_string()))?;
    write_cloud(f, s).map_err(|e| DomainError::Io(e.to_string()))
}

/// Parses the cloud format. `expected_dim` rejects clouds of the wrong
/// dimension.
pub fn read_cloud<R: Read>(input: R, expected_dim: Option<usize>) -> Result<SampledBoundary, DomainError> {
    let reader = BufReader::new(input);
    let mut header: Option<(usize, f64)> = None;
    let mut complete = None;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let parse_err = |line: usize, msg: String| DomainError::Parse { line, msg };

    for (i, line) in reader.lines().enumerate() {
        let ln = i + 1;
        let line = line.map_err(|e| DomainError::Io(e.to_string()))?;
        let text = line.trim();
        if let Some(comment) = text.strip_prefix('#') {
            if let Some(spec) = comment.trim().strip_prefix("window=") {
                let Some((dim, _)) = header else {
                    return Err(parse_err(ln, "window comment before header".into()));
                };
                complete = Some(parse_window(spec, dim).map_err(|m| parse_err(ln, m))?);
            }
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let Some((dim, _)) = header else {
            let h = parse_header(text).map_err(|m| parse_err(ln, m))?;
            if let Some(e) = expected_dim {
                if e != h.0 {
                    return Err(DomainError::DimensionMismatch { expected: e, got: h.0 });
                }
            }
            header = Some(h);
            continue;
        };
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(ln, format!("expected {} fields, found {}", dim + 1, fields.len())));
        }
        let mut nums = Vec::with_capacity(dim + 1);
        for f in &fields {
            let v: f64 = f.parse().map_err(|_| parse_err(ln, format!("not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(ln, format!("non-finite value {f:?}")));
            }
            nums.push(v);
        }
        let w = nums[dim];
        if !(w > 0.0) {
            return Err(parse_err(ln, format!("weight must be positive, got {w}")));
        }
        points.push(Point::from_slice(&nums[..dim]).map_err(|e| parse_err(ln, e.to_string()))?);
        weights.push(w);
    }
    let Some((_, h)) = header else {
        return Err(parse_err(1, "missing `dim=<d> h=<h>` header".into()));
    };
    if points.is_empty() {
        return Err(parse_err(1, "no sample rows".into()));
    }
    SampledBoundary::new(points, weights, h, complete)
}

pub fn load_cloud(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<SampledBoundary, DomainError> {
    let f = std::fs::File::open(path.as_ref()).map_err(|e| DomainError::Io(e.to_string()))?;
    read_cloud(f, expected_dim)
}

fn parse_header(text: &str) -> Result<(usize, f64), String> {
    let mut dim = None;
    let mut h = None;
    for tok in text.split_whitespace() {
        match tok.split_once('=') {
            Some(("dim", v)) => dim = Some(v.parse::<usize>().map_err(|_| format!("bad dim {v:?}"))?),
            Some(("h", v)) => h = Some(v.parse::<f64>().map_err(|_| format!("bad h {v:?}"))?),
            _ => return Err(format!("unexpected header token {tok:?}")),
        }
    }
    let dim = dim.ok_or("header lacks dim=")?;
    let h = h.ok_or("header lacks h=")?;
    if !(2..=3).contains(&dim) {
        return Err(format!("dim must be 2 or 3, got {dim}"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(format!("h must be positive, got {h}"));
    }
    Ok((dim, h))
}

fn parse_window(spec: &str, dim: usize) -> Result<Aabb, String> {
    let mut b = Aabb::unbounded();
    let axes: Vec<&str> = spec.trim().split(';').collect();
    if axes.len() != dim {
        return Err(format!("window has {} axes, expected {dim}", axes.len()));
    }
    for (a, ax) in axes.iter().enumerate() {
        let (lo, hi) = ax.split_once(',').ok_or_else(|| format!("bad window axis {ax:?}"))?;
        b.lo[a] = lo.trim().parse().map_err(|_| format!("bad window bound {lo:?}"))?;
        b.hi[a] = hi.trim().parse().map_err(|_| format!("bad window bound {hi:?}"))?;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, sample_boundary, CorpusSpec};

    fn generated(name: &str, h: f64) -> SampledBoundary {
        let spec: CorpusSpec = name.parse().unwrap();
        sample_boundary(&make_domain(&spec).unwrap(), h).unwrap()
    }

    fn round_trip(s: &SampledBoundary) -> SampledBoundary {
        let mut buf = Vec::new();
        write_cloud(&mut buf, s).unwrap();
        read_cloud(buf.as_slice(), Some(s.dim())).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for (name, h) in [("disk", 0.01), ("lipschitz", 0.003), ("cusp:2", 0.01), ("ball3", 0.02), ("halfspace", 0.007)] {
            let s = generated(name, h);
            let t = round_trip(&s);
            assert_eq!(s.points(), t.points(), "{name}");
            assert_eq!(s.weights(), t.weights(), "{name}");
            assert_eq!(s.h().to_bits(), t.h().to_bits());
            assert_eq!(s.complete(), t.complete());
        }
    }

    #[test]
    fn file_round_trip() {
        let s = generated("cantor:2", 0.01);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cloud");
        save_cloud(&path, &s).unwrap();
        let t = load_cloud(&path, None).unwrap();
        assert_eq!(s.points(), t.points());
        assert_eq!(s.weights(), t.weights());
    }

    #[test]
    fn zero_weight_is_a_parse_error() {
        let text = "dim=2 h=0.1\n# a comment\n0 0 1\n1 0 0\n";
        match read_cloud(text.as_bytes(), None) {
            Err(DomainError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = generated("ball3", 0.02);
        let mut buf = Vec::new();
        write_cloud(&mut buf, &s).unwrap();
        assert_eq!(
            read_cloud(buf.as_slice(), Some(2)).unwrap_err(),
            DomainError::DimensionMismatch { expected: 2, got: 3 }
        );
    }

    #[test]
    fn malformed_rows() {
        for (text, bad_line) in [
            ("dim=2 h=0.1\n0 0\n", 2),
            ("dim=2 h=0.1\n0 x 1\n", 2),
            ("dim=2 h=0.1\n0 0 1\n0 0 1 1\n", 3),
            ("dim=4 h=0.1\n", 1),
            ("0 0 1\n", 1),
            ("dim=2 h=0.1\n0 0 -1\n", 2),
            ("dim=2 h=0.1\n0 inf 1\n", 2),
        ] {
            match read_cloud(text.as_bytes(), None) {
                Err(DomainError::Parse { line, .. }) => assert_eq!(line, bad_line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn ball_mass_on_a_line() {
        let s = generated("halfspace", 1.0 / 1024.0);
        let m = s.mass_in_ball(&Point::xy(0.1, 0.0), 0.25);
        assert!((m - 0.5).abs() <= 2.0 / 1024.0);
        assert!(s.window_ok(&Ball::new(Point::xy(0.0, 0.0), 0.9).unwrap()));
        assert!(!s.window_ok(&Ball::new(Point::xy(0.5, 0.0), 0.9).unwrap()));
    }
}
