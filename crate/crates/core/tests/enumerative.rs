mod common;

use common::*;
use linemv::enumerative::*;
use linemv::grassmannian::{grassmann_distance, hodge_star, meet_pairing, PlueckerLine};
use linemv::rigs;
use linemv::seeds::{gaussian_matrix3x4, gaussian_vector4};
use linemv::{Camera, Error};
use nalgebra::{Matrix3, Vector3, Vector4};
use proptest::prelude::*;

/// Plane through three points of `P^3`, by cofactors; linear in each argument.
fn plane_through(x: &Vector4<f64>, a: &Vector4<f64>, b: &Vector4<f64>) -> Vector4<f64> {
    let rows = [x, a, b];
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&j| j != skip).collect();
        Matrix3::from_fn(|i, j| rows[i][cols[j]]).determinant()
    };
    Vector4::new(minor(0), -minor(1), minor(2), -minor(3))
}

/// Transversals by a resultant in the parameter `s` of the point `x(s)` on the
/// fourth line: the line through `x(s)` meeting the first two lines meets the
/// third iff a 2×2 determinant vanishes, a quadratic in `s`.
fn resultant_oracle(lines: &[PlueckerLine<f64>; 4]) -> (usize, Vec<PlueckerLine<f64>>) {
    let b = |l: &PlueckerLine<f64>, k| l.basis_vector(k);
    let x = |s: f64| b(&lines[3], 0) + b(&lines[3], 1) * s;
    let planes = |s: f64| {
        let xs = x(s);
        (plane_through(&xs, &b(&lines[0], 0), &b(&lines[0], 1)), plane_through(&xs, &b(&lines[1], 0), &b(&lines[1], 1)))
    };
    let (c0, c1) = (b(&lines[2], 0), b(&lines[2], 1));
    let f = |s: f64| {
        let (h1, h2) = planes(s);
        h1.dot(&c0) * h2.dot(&c1) - h1.dot(&c1) * h2.dot(&c0)
    };
    let (fm, f0, fp) = (f(-1.0), f(0.0), f(1.0));
    let (a2, a1, a0) = ((fp + fm) / 2.0 - f0, (fp - fm) / 2.0, f0);
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return (0, vec![]);
    }
    let roots = [(-a1 + disc.sqrt()) / (2.0 * a2), (-a1 - disc.sqrt()) / (2.0 * a2)];
    let found = roots
        .iter()
        .map(|&s| {
            let (h1, _) = planes(s);
            let y = c0 * h1.dot(&c1) - c1 * h1.dot(&c0);
            PlueckerLine::from_vectors(&x(s), &y).unwrap()
        })
        .collect();
    (2, found)
}

fn four_lines(r: &mut impl rand::Rng) -> [PlueckerLine<f64>; 4] {
    std::array::from_fn(|_| random_line(r))
}

#[test]
fn transversals_match_resultant_oracle() {
    let mut r = rng(11);
    let mut real_seen = [0usize; 3];
    for _ in 0..300 {
        let ls = four_lines(&mut r);
        let sol = transversals_of_four(&ls);
        assert_eq!(sol.status, TransversalStatus::Finite);
        assert_eq!(sol.lines.len(), 2);
        let (count, oracle) = resultant_oracle(&ls);
        assert_eq!(sol.real_count, count);
        real_seen[count] += 1;
        for t in &sol.lines {
            assert!(t.quadric_residual() < 1e-9);
            for l in &ls {
                assert!(meet_pairing(t, &l.to_complex()).norm() < 1e-9);
            }
        }
        for o in &oracle {
            let best = sol
                .lines
                .iter()
                .filter_map(|t| t.real_view(1e-8))
                .map(|t| grassmann_distance(&t, o))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-7, "oracle line missing: {best}");
        }
        if count == 0 {
            assert!(sol.lines.iter().all(|t| t.imaginary_part() > 1e-8));
        }
    }
    assert!(real_seen[0] > 0 && real_seen[2] > 0);
}

#[test]
fn real_transversals_lie_on_the_quadric_of_three() {
    let mut r = rng(12);
    for _ in 0..100 {
        let ls = four_lines(&mut r);
        let q = quadric_through_three_lines(&[ls[0].clone(), ls[1].clone(), ls[2].clone()]).unwrap();
        assert_eq!(q.kind(1e-8), QuadricKind::Smooth);
        for l in &ls[..3] {
            assert!(q.line_residual(l, 17) < 1e-10);
        }
        for t in transversals_of_four(&ls).lines.iter().filter_map(|t| t.real_view(1e-8)) {
            assert!(q.line_residual(&t, 17) < 1e-8);
        }
    }
}

#[test]
fn degenerate_configurations_are_infinite() {
    let mut r = rng(13);
    // Four lines in one plane.
    let plane: [Vector4<f64>; 3] = std::array::from_fn(|_| gaussian_vector4(&mut r));
    let in_plane = |r: &mut _| {
        let mut pt = || {
            let c = Vector3::new(gaussian(r), gaussian(r), gaussian(r));
            plane[0] * c[0] + plane[1] * c[1] + plane[2] * c[2]
        };
        PlueckerLine::from_vectors(&pt(), &pt()).unwrap()
    };
    let ls = [in_plane(&mut r), in_plane(&mut r), in_plane(&mut r), in_plane(&mut r)];
    assert_eq!(transversals_of_four(&ls).status, TransversalStatus::Infinite);

    // Four lines through a common point.
    let p = gaussian_vector4(&mut r);
    let ls: [PlueckerLine<f64>; 4] =
        std::array::from_fn(|_| PlueckerLine::from_vectors(&p, &gaussian_vector4(&mut r)).unwrap());
    assert_eq!(transversals_of_four(&ls).status, TransversalStatus::Infinite);
}

fn gaussian(r: &mut impl rand::Rng) -> f64 {
    linemv::seeds::gaussian(r)
}

#[test]
fn tangent_configuration_is_degenerate() {
    // Four lines of one ruling of x0 x3 = x1 x2 all meet every line of the other
    // ruling; moving the fourth off the quadric leaves two transversals, one of
    // which is fixed. A fourth line tangent to the quadric gives a double root.
    let ruling = |a: f64, b: f64| {
        PlueckerLine::from_vectors(&Vector4::new(a, 0.0, b, 0.0), &Vector4::new(0.0, a, 0.0, b)).unwrap()
    };
    // Tangent line at the point (1,0,0,0): lies in the tangent plane x3 = 0 and
    // is not one of the two rulings through the point.
    let tangent = PlueckerLine::from_vectors(&Vector4::new(1.0, 0.0, 0.0, 0.0), &Vector4::new(0.0, 1.0, 1.0, 0.0)).unwrap();
    let ls = [ruling(1.0, 1.0), ruling(1.0, 2.0), ruling(1.0, -1.0), tangent];
    let sol = transversals_of_four(&ls);
    assert_eq!(sol.status, TransversalStatus::Degenerate);
    assert_eq!(sol.real_count, 1);
}

#[test]
fn extra_points_lie_on_interpolated_quadric() {
    let mut r = rng(14);
    for _ in 0..50 {
        let ls: [PlueckerLine<f64>; 3] = std::array::from_fn(|_| random_line(&mut r));
        let q = quadric_through_three_lines(&ls).unwrap();
        assert!((q.a - q.a.transpose()).norm() < 1e-15);
        assert!((q.a.norm() - 1.0).abs() < 1e-12);
        for l in &ls {
            let x = l.point(gaussian(&mut r), gaussian(&mut r));
            assert!(q.evaluate(&x).abs() < 1e-10 * x.norm_squared());
        }
    }
}

#[test]
fn coplanar_pair_has_no_unique_quadric() {
    let mut r = rng(15);
    let p = gaussian_vector4(&mut r);
    let a = PlueckerLine::from_vectors(&p, &gaussian_vector4(&mut r)).unwrap();
    let b = PlueckerLine::from_vectors(&p, &gaussian_vector4(&mut r)).unwrap();
    let c = random_line(&mut r);
    assert!(matches!(quadric_through_three_lines(&[a, b, c]), Err(Error::NonUniqueQuadric { dimension: 2 })));
}

#[test]
fn multidegrees_on_random_rigs() {
    let mut r = rng(16);
    for m in 4..=6 {
        let rig = rigs::gaussian_rig(&mut r, m);
        let mut patterns = vec![vec![2, 2], vec![2, 1, 1], vec![1, 2, 1], vec![1, 1, 1, 1]];
        for p in &mut patterns {
            p.resize(m, 0);
            p.rotate_right(m - 4);
        }
        for d in patterns {
            let rep = multidegree_check(&rig, &d, 30, 99).unwrap();
            assert!(rep.all_match(), "{d:?}: {:?}", rep.counts);
            assert_eq!(rep.counts.len(), 30);
        }
    }
}

#[test]
fn multidegree_is_deterministic_and_validates() {
    let rig = rigs::gaussian_rig(&mut rng(17), 4);
    let a = multidegree_check(&rig, &[1, 1, 1, 1], 20, 5).unwrap();
    let b = multidegree_check(&rig, &[1, 1, 1, 1], 20, 5).unwrap();
    assert_eq!(a, b);
    assert!(matches!(multidegree_check(&rig, &[2, 2, 0], 1, 0), Err(Error::LengthMismatch { .. })));
    assert!(matches!(multidegree_check(&rig, &[3, 1, 0, 0], 1, 0), Err(Error::InvalidArgument(_))));
    assert!(matches!(multidegree_check(&rig, &[1, 1, 1, 0], 1, 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn fast_count_agrees_with_general_solver() {
    let mut r = rng(18);
    let pts = RealCountConfig::default().image_points;
    for _ in 0..2000 {
        let rays: Vec<PlueckerLine<f64>> = pts
            .iter()
            .map(|x| Camera::new(gaussian_matrix3x4(&mut r)).unwrap().back_project_point(x).unwrap())
            .collect();
        let rows: [[f64; 6]; 4] = std::array::from_fn(|i| hodge_star(rays[i].coords()));
        let sol = common_transversals(&rays);
        assert_eq!(real_transversal_count(&rows), Some(sol.real_count));
    }
}

#[test]
fn real_count_is_reproducible() {
    let a = expected_real_transversals(20_000, 3);
    let b = expected_real_transversals(20_000, 3);
    assert_eq!(a, b);
    let c = expected_real_transversals(20_000, 4);
    assert_ne!(a.mean, c.mean);
    assert_eq!(a.histogram[1], 0);
    assert_eq!(a.histogram.iter().sum::<usize>() + a.discarded, 20_000);
    // Block size changes the streams, not the estimator.
    let small = RealCountConfig { block_size: 100, ..Default::default() };
    let d = expected_real_transversals_with(20_000, 3, &small);
    assert!((d.mean - a.mean).abs() < 6.0 * a.std_error);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_invariance(seed in any::<u64>(), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let mut r = rng(seed);
        let ls = four_lines(&mut r);
        let permuted: [PlueckerLine<f64>; 4] = std::array::from_fn(|i| ls[perm[i]].clone());
        let a = transversals_of_four(&ls);
        let b = transversals_of_four(&permuted);
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.real_count, b.real_count);
        for t in &a.lines {
            let best = b.lines.iter().map(|u| grassmann_distance(t, u)).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-7);
        }
    }
}
