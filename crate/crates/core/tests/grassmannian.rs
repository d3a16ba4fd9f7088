mod common;

use common::*;
use linemv::grassmannian::*;
use linemv::projective::ProjectivePoint;
use linemv::seeds::{gaussian, gaussian_vector4};
use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use proptest::prelude::*;

/// Orthonormal basis recovered from the Plücker vector alone: the two leading
/// eigenvectors of `S S*` for its skew matrix `S`.
fn oracle_basis(p: &[Complex64; 6]) -> DMatrix<Complex64> {
    let mut s = DMatrix::zeros(4, 4);
    for (k, &(i, j)) in PLUECKER_PAIRS.iter().enumerate() {
        s[(i, j)] = p[k];
        s[(j, i)] = -p[k];
    }
    let eig = (&s * s.adjoint()).symmetric_eigen();
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    DMatrix::from_columns(&[eig.eigenvectors.column(idx[0]).into_owned(), eig.eigenvectors.column(idx[1]).into_owned()])
}

/// max sin of the principal angles; cosines are the singular values of `B_L* B_K`.
fn principal_angle_distance(l: &[Complex64; 6], k: &[Complex64; 6]) -> f64 {
    let m = oracle_basis(l).adjoint() * oracle_basis(k);
    let cos2 = (&m * m.adjoint()).symmetric_eigen().eigenvalues;
    let cmin2 = cos2.iter().copied().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    (1.0 - cmin2).sqrt()
}

/// Operator norm of the Hermitian difference of projectors.
fn projector_distance(l: &[Complex64; 6], k: &[Complex64; 6]) -> f64 {
    let bl = oracle_basis(l);
    let bk = oracle_basis(k);
    let d = &bl * bl.adjoint() - &bk * bk.adjoint();
    d.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[test]
fn random_points_satisfy_quadric() {
    let mut r = rng(10);
    for _ in 0..500 {
        let l = random_line(&mut r);
        assert!(l.quadric_residual() < 1e-12);
        let c = random_complex_line(&mut r);
        assert!(c.quadric_residual() < 1e-12);
    }
}

#[test]
fn independent_of_spanning_pair() {
    let mut r = rng(11);
    for _ in 0..100 {
        let x = gaussian_vector4(&mut r);
        let y = gaussian_vector4(&mut r);
        let l = PlueckerLine::from_vectors(&x, &y).unwrap();
        let (a, b, c, d) = (gaussian(&mut r), gaussian(&mut r), gaussian(&mut r), gaussian(&mut r));
        let k = PlueckerLine::from_vectors(&(x * a + y * b), &(x * c + y * d)).unwrap();
        let pl = ProjectivePoint::from_slice(l.coords()).unwrap();
        let pk = ProjectivePoint::from_slice(k.coords()).unwrap();
        assert!(pl.approx_eq(&pk, 1e-10));
        let ks = PlueckerLine::from_points(
            &ProjectivePoint::from_slice((x * -3.0).as_slice()).unwrap(),
            &ProjectivePoint::from_slice((y * 0.01).as_slice()).unwrap(),
        )
        .unwrap();
        assert!(ks.approx_eq(&l, 1e-12));
    }
}

#[test]
fn chart_round_trip() {
    let mut r = rng(12);
    for _ in 0..500 {
        let (v, l) = random_chart_line(&mut r);
        assert!(l.quadric_residual() < 1e-12);
        let back = chart_coordinates(&l).unwrap();
        for (a, b) in v.to_array().iter().zip(back.to_array()) {
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
        // Row reduction oracle: the chart rows lie on the line.
        let (a, b) = v.rows();
        assert!(l.contains(&a) && l.contains(&b));
    }
}

#[test]
fn chart_coordinate_never_vanishes() {
    let mut r = rng(13);
    for _ in 0..500 {
        let v = ChartPoint::new(gaussian(&mut r) * 1e3, gaussian(&mut r), gaussian(&mut r), gaussian(&mut r) * 1e3);
        let l = chart(&v);
        assert!(l.coords()[0].abs() > 0.0);
        assert!(chart_coordinates(&l).is_ok());
    }
}

#[test]
fn real_duals_coincide_and_annihilate() {
    let mut r = rng(14);
    for _ in 0..200 {
        let l = random_line(&mut r);
        let e = dual_line(&l, DualMode::Euclidean);
        let h = dual_line(&l, DualMode::Hermitian);
        assert!(grassmann_distance(&e, &h) < 1e-12);
        let prod = e.basis().transpose() * l.basis();
        assert!(prod.norm() < 1e-12);
        let hodge = ProjectivePoint::from_slice(&hodge_star(l.coords())).unwrap();
        assert!(hodge.approx_eq(&ProjectivePoint::from_slice(e.coords()).unwrap(), 1e-12));
    }
}

#[test]
fn complex_duals_annihilate_in_their_form() {
    let mut r = rng(15);
    for _ in 0..200 {
        let l = random_complex_line(&mut r);
        let e = dual_line(&l, DualMode::Euclidean);
        let h = dual_line(&l, DualMode::Hermitian);
        assert!((e.basis().transpose() * l.basis()).norm() < 1e-12);
        assert!((h.basis().adjoint() * l.basis()).norm() < 1e-12);
        for mode in [DualMode::Euclidean, DualMode::Hermitian] {
            assert!(grassmann_distance(&dual_line(&dual_line(&l, mode), mode), &l) < 1e-10);
        }
    }
}

#[test]
fn distance_matches_principal_angles_and_projectors() {
    let mut r = rng(16);
    for _ in 0..100 {
        let (l, k) = (random_complex_line(&mut r), random_complex_line(&mut r));
        let d = grassmann_distance(&l, &k);
        assert!((d - principal_angle_distance(l.coords(), k.coords())).abs() < 1e-10);
        assert!((d - projector_distance(l.coords(), k.coords())).abs() < 1e-10);
        assert!((d - grassmann_distance(&k, &l)).abs() < 1e-12);
        let (lr, kr) = (random_line(&mut r), random_line(&mut r));
        let dr = grassmann_distance(&lr, &kr);
        assert!((dr - principal_angle_distance(lr.to_complex().coords(), kr.to_complex().coords())).abs() < 1e-10);
    }
}

#[test]
fn distance_is_accurate_for_close_lines() {
    let mut r = rng(17);
    for _ in 0..50 {
        let (v, l) = random_chart_line(&mut r);
        let w = ChartPoint::from_array(v.to_array().map(|x| x + 1e-11));
        let d = grassmann_distance(&l, &chart(&w));
        assert!(d > 1e-13 && d < 1e-10);
    }
}

#[test]
fn unitary_invariance() {
    let mut r = rng(18);
    for _ in 0..100 {
        let (l, k) = (random_complex_line(&mut r), random_complex_line(&mut r));
        let u = random_unitary(&mut r);
        let d = grassmann_distance(&l, &k);
        let du = grassmann_distance(&l.transform(&u).unwrap(), &k.transform(&u).unwrap());
        assert!((d - du).abs() < 1e-10);
    }
}

#[test]
fn lines_through_a_common_point_meet() {
    let mut r = rng(19);
    for _ in 0..200 {
        let l = random_line(&mut r);
        let p = l.point(gaussian(&mut r), gaussian(&mut r));
        let k = PlueckerLine::from_vectors(&p, &gaussian_vector4(&mut r)).unwrap();
        assert!(meet_pairing(&l, &k).abs() < 1e-10);
        assert!(lines_meet(&l, &k));
        assert!(meet_pairing(&l, &l).abs() < 1e-15);
        assert!(!lines_meet(&l, &random_line(&mut r)));
    }
}

#[test]
fn point_incidence() {
    let mut r = rng(20);
    for _ in 0..200 {
        let x = gaussian_vector4(&mut r);
        let y = gaussian_vector4(&mut r);
        let l = PlueckerLine::from_vectors(&x, &y).unwrap();
        let pt = |v: Vector4<f64>| ProjectivePoint::from_slice(v.as_slice()).unwrap();
        assert!(point_on_line(&l, &pt(x)) && point_on_line(&l, &pt(y)));
        let t = gaussian(&mut r);
        assert!(point_on_line(&l, &pt(x * t + y * (1.0 - t))));
        let d = dual_line(&l, DualMode::Euclidean);
        assert!(!point_on_line(&l, &pt(d.point(gaussian(&mut r), gaussian(&mut r)))));
    }
}

#[test]
fn orthogonal_change_of_coordinates_preserves_incidence() {
    let mut r = rng(21);
    for _ in 0..100 {
        let (l, k) = (random_line(&mut r), random_line(&mut r));
        let q: Matrix4<f64> = random_orthogonal(&mut r);
        let (lq, kq) = (l.transform(&q).unwrap(), k.transform(&q).unwrap());
        assert!((grassmann_distance(&l, &k) - grassmann_distance(&lq, &kq)).abs() < 1e-12);
        assert!((meet_pairing(&l, &k).abs() - meet_pairing(&lq, &kq).abs()).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quadric_and_involution(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let l = random_line(&mut r);
        let c = random_complex_line(&mut r);
        prop_assert!(l.quadric_residual() < 1e-10);
        prop_assert!(c.quadric_residual() < 1e-10);
        for mode in [DualMode::Euclidean, DualMode::Hermitian] {
            let d = dual_line(&l, mode);
            prop_assert!(d.quadric_residual() < 1e-10);
            prop_assert!(grassmann_distance(&dual_line(&d, mode), &l) < 1e-10);
        }
        let coords = *l.coords();
        let rebuilt = PlueckerLine::from_coords(coords.map(|x| x * -7.5)).unwrap();
        prop_assert!(rebuilt.quadric_residual() < 1e-10);
        prop_assert!(grassmann_distance(&rebuilt, &l) < 1e-12);
    }
}
