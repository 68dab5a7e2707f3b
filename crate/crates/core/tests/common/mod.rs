use chordarc::domain::{make_domain, sample_boundary, CorpusSpec, SampledBoundary};
use chordarc::geometry::Point;

pub fn cloud(name: &str, h: f64) -> SampledBoundary {
    let spec: CorpusSpec = name.parse().unwrap();
    sample_boundary(&make_domain(&spec).unwrap(), h).unwrap()
}

/// Exhaustive bilateral β over `dirs` directions and `offs` offsets across
/// `[-r, r]`, with distances to samples computed by brute force.
pub fn brute_beta(s: &SampledBoundary, x: Point, r: f64, dirs: usize, offs: usize) -> f64 {
    let near: Vec<Point> = s.points().iter().copied().filter(|p| p.dist(&x) < 2.0 * r + 2.0 * s.h()).collect();
    let inside: Vec<Point> = near.iter().copied().filter(|p| p.dist(&x) < r).collect();
    let h = s.h();
    let mut best = f64::INFINITY;
    for i in 0..dirs {
        let a = std::f64::consts::PI * i as f64 / dirs as f64;
        let n = Point::xy(a.cos(), a.sin());
        let u = Point::xy(-a.sin(), a.cos());
        for j in 0..offs {
            let t = -r + 2.0 * r * (j as f64 + 0.5) / offs as f64;
            let mut t1 = 0.0f64;
            for p in &inside {
                t1 = t1.max(((*p - x).dot(&n) - t).abs());
            }
            let t1 = t1 / r;
            if t1 >= best {
                continue;
            }
            let rho = (r * r - t * t).sqrt();
            let m = (2.0 * rho / h).ceil() as usize;
            let mut sup = 0.0f64;
            for k in 0..=m {
                let y = x + n * t + u * (-rho + 2.0 * rho * k as f64 / m as f64);
                let d = near.iter().map(|p| p.dist(&y)).fold(f64::INFINITY, f64::min);
                sup = sup.max(d);
                if t1 + (sup + h) / r >= best {
                    break;
                }
            }
            best = best.min(t1 + (sup + h) / r);
        }
    }
    best
}
