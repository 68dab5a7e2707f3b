use nalgebra::{Matrix3, SymmetricEigen};

use super::{GeometryError, Hyperplane, Point};

/// Weighted total-least-squares hyperplane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    pub plane: Hyperplane,
    /// `Σ w_i · offset(p_i)²` for the returned plane.
    pub residual: f64,
    /// Rank of the weighted scatter matrix.
    pub rank: usize,
}

const RANK_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-9;

/// Fits the hyperplane through the weighted centroid whose normal is the
/// eigenvector of the smallest scatter eigenvalue.
///
/// When that eigenvalue is repeated the normal is the lexicographically
/// smallest unit vector of the eigenspace whose first nonzero coordinate is
/// positive, so equal inputs always give equal planes.
pub fn fit_plane(points: &[Point], weights: &[f64]) -> Result<PlaneFit, GeometryError> {
    let dim = match points.first() {
        Some(p) => p.dim(),
        None => return Err(GeometryError::InsufficientPoints { got: 0, need: 2 }),
    };
    if points.len() < dim {
        return Err(GeometryError::InsufficientPoints { got: points.len(), need: dim });
    }
    assert_eq!(points.len(), weights.len(), "one weight per point");
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(GeometryError::ZeroWeight);
    }

    let mut centroid = Point::zero(dim);
    for (p, w) in points.iter().zip(weights) {
        if p.dim() != dim {
            return Err(GeometryError::DimensionMismatch(dim, p.dim()));
        }
        centroid += *p * *w;
    }
    let centroid = centroid * (1.0 / total);

    let mut scatter = Matrix3::<f64>::zeros();
    for (p, w) in points.iter().zip(weights) {
        let d = *p - centroid;
        for i in 0..dim {
            for j in 0..dim {
                scatter[(i, j)] += w * d.get(i) * d.get(j);
            }
        }
    }
    let sub = scatter.fixed_view::<3, 3>(0, 0).into_owned();
    let (values, vectors) = eigen(&sub, dim);

    let top = values.iter().cloned().fold(0.0f64, f64::max);
    let rank = values.iter().filter(|&&v| top > 0.0 && v > RANK_TOL * top).count();
    if rank + 1 < dim {
        return Err(GeometryError::Degenerate { rank, needed: dim - 1 });
    }

    let smallest = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let space: Vec<Point> = values
        .iter()
        .zip(&vectors)
        .filter(|(v, _)| **v <= smallest + TIE_TOL * top.max(f64::MIN_POSITIVE))
        .map(|(_, e)| *e)
        .collect();
    let normal = lex_min_unit(space, dim);

    let plane = Hyperplane { base: centroid, normal };
    let residual = points
        .iter()
        .zip(weights)
        .map(|(p, w)| {
            let o = plane.offset(p);
            w * o * o
        })
        .sum();
    Ok(PlaneFit { plane, residual, rank })
}

fn eigen(m: &Matrix3<f64>, dim: usize) -> (Vec<f64>, Vec<Point>) {
    if dim == 2 {
        let m2 = m.fixed_view::<2, 2>(0, 0).into_owned();
        let e = SymmetricEigen::new(m2);
        let vecs = (0..2)
            .map(|k| Point::xy(e.eigenvectors[(0, k)], e.eigenvectors[(1, k)]))
            .collect();
        (e.eigenvalues.iter().cloned().collect(), vecs)
    } else {
        let e = SymmetricEigen::new(*m);
        let vecs = (0..3)
            .map(|k| Point::xyz(e.eigenvectors[(0, k)], e.eigenvectors[(1, k)], e.eigenvectors[(2, k)]))
            .collect();
        (e.eigenvalues.iter().cloned().collect(), vecs)
    }
}

/// Lexicographically smallest unit vector in `span(basis)` with first nonzero
/// coordinate positive. `basis` must be orthonormal and nonempty.
pub(crate) fn lex_min_unit(mut basis: Vec<Point>, dim: usize) -> Point {
    const TINY: f64 = 1e-12;
    for i in 0..dim {
        if basis.len() <= 1 {
            break;
        }
        let pivot = (0..basis.len())
            .max_by(|&a, &b| basis[a].get(i).abs().total_cmp(&basis[b].get(i).abs()))
            .unwrap();
        let pv = basis[pivot];
        if pv.get(i).abs() < TINY {
            continue;
        }
        // Restrict to the subspace with coordinate i equal to zero.
        let mut reduced: Vec<Point> = Vec::new();
        for (k, b) in basis.iter().enumerate() {
            if k == pivot {
                continue;
            }
            let mut v = *b - pv * (b.get(i) / pv.get(i));
            v = v.with(i, 0.0);
            for q in &reduced {
                v = v - *q * v.dot(q);
            }
            if let Some(u) = v.normalized() {
                if v.norm() > TINY {
                    reduced.push(u);
                }
            }
        }
        if reduced.is_empty() {
            break;
        }
        basis = reduced;
    }
    let v = basis[0].normalized().expect("unit basis vector");
    let lead = v.coords().iter().find(|c| c.abs() > TINY).copied().unwrap_or(1.0);
    let v = if lead < 0.0 { -v } else { v };
    // Snap exact-zero coordinates so -0.0 never leaks into output.
    let mut out = v;
    for i in 0..dim {
        if out.get(i).abs() < TINY {
            out = out.with(i, 0.0);
        }
    }
    out.normalized().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn collinear_points_fit_exactly() {
        let pts: Vec<_> = (0..5).map(|i| Point::xy(i as f64, 2.0 * i as f64 + 1.0)).collect();
        let f = fit_plane(&pts, &[1.0; 5]).unwrap();
        assert!(f.residual < 1e-20);
        for p in &pts {
            assert!(f.plane.offset(p).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_square_corners_tie_break() {
        // Scatter is 4 · (1/4) · I; every direction through the centroid leaves
        // each corner at offset 1/2, so the residual is 4 · 1/4 = 1.
        let pts = [Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0), Point::xy(1.0, 1.0)];
        let f = fit_plane(&pts, &[1.0; 4]).unwrap();
        assert!((f.residual - 1.0).abs() < 1e-12);
        assert_eq!(f.plane.base, Point::xy(0.5, 0.5));
        assert_eq!(f.plane.normal, Point::xy(0.0, 1.0));
    }

    #[test]
    fn symmetric_about_x_axis() {
        let pts = [
            Point::xy(-1.0, 0.1),
            Point::xy(1.0, 0.1),
            Point::xy(-1.0, -0.1),
            Point::xy(1.0, -0.1),
            Point::xy(0.0, 0.0),
        ];
        let f = fit_plane(&pts, &[2.0, 2.0, 2.0, 2.0, 1.0]).unwrap();
        assert!((f.plane.normal.get(1).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cloud_reports_rank() {
        let pts = [Point::xyz(1.0, 1.0, 1.0), Point::xyz(2.0, 2.0, 2.0), Point::xyz(3.0, 3.0, 3.0)];
        assert_eq!(fit_plane(&pts, &[1.0; 3]), Err(GeometryError::Degenerate { rank: 1, needed: 2 }));
        assert!(matches!(
            fit_plane(&[Point::xy(0.0, 0.0)], &[1.0]),
            Err(GeometryError::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn tie_in_three_dimensions() {
        // Isotropic in the xy-plane, flat in z would pick e3; here isotropic in all.
        let pts = [
            Point::xyz(1.0, 0.0, 0.0),
            Point::xyz(-1.0, 0.0, 0.0),
            Point::xyz(0.0, 1.0, 0.0),
            Point::xyz(0.0, -1.0, 0.0),
            Point::xyz(0.0, 0.0, 1.0),
            Point::xyz(0.0, 0.0, -1.0),
        ];
        let f = fit_plane(&pts, &[1.0; 6]).unwrap();
        assert_eq!(f.plane.normal, Point::xyz(0.0, 0.0, 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn fit_beats_rotated_planes(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(3..40);
            let pts: Vec<_> = (0..n).map(|_| Point::xy(rng.gen_range(-2.0..2.0), rng.gen_range(-0.5..0.5))).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
            let f = fit_plane(&pts, &w).unwrap();
            for _ in 0..20 {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                let rot = Hyperplane::new(f.plane.base, Point::xy(a.cos(), a.sin())).unwrap();
                let res: f64 = pts.iter().zip(&w).map(|(p, w)| w * rot.offset(p).powi(2)).sum();
                prop_assert!(f.residual <= res + 1e-9 * res.max(1.0));
            }
        }
    }
}
