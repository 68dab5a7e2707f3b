use chordarc::domain::{make_domain, sample_boundary, CorpusSpec};
use chordarc::dyadic::build_grid;
use chordarc::flatness::{
    bbeta, bbeta_with, bad_set, carleson_norm, low_beta_window, BetaOptions, CubeFlag, DEFAULT_DILATION,
};
use chordarc::geometry::Point;
use rand::{Rng, SeedableRng};

mod common;

use common::{brute_beta, cloud};

#[test]
fn brute_force_agreement_on_small_windows() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let clouds = [cloud("disk", 0.004), cloud("cantor:3", 0.004), cloud("lipschitz", 0.004), cloud("square", 0.004)];
    let mut checked = 0;
    while checked < 25 {
        let s = &clouds[checked % clouds.len()];
        let x = s.points()[rng.gen_range(0..s.len())];
        let r = rng.gen_range(0.05..0.3);
        let n = s.within(&x, r).len();
        if n > 200 || bbeta(s, &x, r).is_err() {
            continue;
        }
        let rec = bbeta(s, &x, r).unwrap();
        let brute = brute_beta(s, x, r, 720, 128);
        let cover = 2.0 * rec.theta + 1.0 / 32.0 + 2.0 * s.h() / r;
        assert!((rec.value - brute).abs() <= cover, "x={x:?} r={r}: {} vs brute {brute}", rec.value);
        assert!(rec.lower_bound <= brute + 1e-12);
        checked += 1;
    }
}

#[test]
fn cantor_is_far_from_flat_at_half_scale() {
    let s = cloud("cantor:4", 0.002);
    let centroid = s
        .points()
        .iter()
        .zip(s.weights())
        .fold(Point::zero(2), |acc, (p, w)| acc + *p * *w)
        * (1.0 / s.total_weight());
    let (i, _) = s.nearest(&centroid).unwrap();
    let rec = bbeta(&s, &s.points()[i], 0.5).unwrap();
    assert!(rec.value >= 0.15, "value {}", rec.value);
}

#[test]
fn window_monotonicity_with_shared_plane() {
    let s = cloud("disk", 0.002);
    let x = Point::xy(0.0, -1.0);
    let big = bbeta(&s, &x, 0.4).unwrap();
    for r in [0.05, 0.1, 0.2] {
        let small = bbeta_with(&s, &x, r, &BetaOptions::default(), &[big.plane]).unwrap();
        assert!(small.value <= 0.4 / r * big.value + 4.0 * s.h() / r);
    }
}

#[test]
fn lipschitz_graph_finds_flat_windows() {
    let spec = CorpusSpec::zigzag(0.05);
    let s = sample_boundary(&make_domain(&spec).unwrap(), 0.001).unwrap();
    let w = low_beta_window(&s, &Point::xy(0.5, 0.0), 0.4, 0.2).unwrap().unwrap();
    assert!(w.s >= 0.4 / 8.0);
    assert!(w.record.value < 0.2);
}

#[test]
fn cantor_has_no_flat_window() {
    let s = cloud("cantor:4", 0.001);
    let x = s.points()[0];
    assert!(10.0 * s.h() > 0.25f64.powi(4));
    assert_eq!(low_beta_window(&s, &x, 0.5, 0.05).unwrap(), None);
}

#[test]
fn cantor_flags_every_coarse_generation() {
    let s = cloud("cantor:3", 2f64.powi(-10));
    let g = build_grid(&s, 0, 6).unwrap();
    let bad = bad_set(&g, &s, 0.1, DEFAULT_DILATION);
    for (gi, flags) in bad.flags.iter().enumerate() {
        let flagged = flags.iter().filter(|&&f| f == CubeFlag::Flagged).count();
        assert_eq!(flagged, flags.len(), "generation {}", gi);
    }
    let rep = carleson_norm(&g, &bad);
    assert!((rep.norm - 7.0 * std::f64::consts::LN_2).abs() < 1e-9);
}
