//! Lines meeting four lines, the quadric through three lines, multidegree
//! counts of the line multiview variety and the expected number of real
//! transversals of random back-projected rays.

use nalgebra::{DMatrix, Matrix4, Vector3, Vector4};
use num_complex::Complex64;

use crate::cameras::{cofactor_kernel, CameraRig};
use crate::error::{Error, Result};
use crate::grassmannian::{hodge_star, plucker_pairing, plucker_quadric, wedge, PlueckerLine};
use crate::linalg::{jacobi_svd, singular_values};
use crate::multiview::{build_m, forward_map, LineTuple};
use crate::projective::{numerical_rank, ProjectivePoint, DEFAULT_RANK_TOL};
use crate::seeds::{gaussian, gaussian_matrix3x4, gaussian_vector3, rng_for};

/// Pencil coefficients below this (relative) mean the pencil lies on the quadric.
pub const INFINITE_COEFF_TOL: f64 = 1e-10;

/// Guard band around a vanishing discriminant, relative to the squared
/// largest pencil coefficient.
pub const DISCRIMINANT_BAND: f64 = 1e-12;

const STREAM_MULTIDEGREE: u64 = 0x4d44;
const STREAM_REAL_COUNT: u64 = 0x5243;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransversalStatus {
    Finite,
    Infinite,
    /// Double root: the discriminant lies inside the guard band.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TransversalDiagnostics {
    /// Projective dimension plus one of the solution space of the linear conditions.
    pub nullity: usize,
    pub singular_values: Vec<f64>,
    /// `[A, B, C]` of `A s² + B s t + C t²` on the pencil, when the nullity is 2.
    pub coefficients: Option<[f64; 3]>,
    pub discriminant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalSolution {
    pub status: TransversalStatus,
    pub lines: Vec<PlueckerLine<Complex64>>,
    pub real_count: usize,
    pub diagnostics: TransversalDiagnostics,
}

fn column6(v: &DMatrix<f64>, j: usize) -> [f64; 6] {
    std::array::from_fn(|i| v[(i, j)])
}

/// Common transversals of `k ≥ 1` real lines.
pub fn common_transversals(lines: &[PlueckerLine<f64>]) -> TransversalSolution {
    let k = lines.len();
    let a = DMatrix::from_fn(k, 6, |r, c| hodge_star(lines[r].coords())[c]);
    let (v, sv) = jacobi_svd(&a);
    let s1 = sv[0].max(f64::MIN_POSITIVE);
    let nullity = sv.iter().filter(|&&s| s / s1 <= DEFAULT_RANK_TOL).count();
    let mut diagnostics = TransversalDiagnostics { nullity, singular_values: sv, coefficients: None, discriminant: None };
    let empty = |status, diagnostics| TransversalSolution { status, lines: vec![], real_count: 0, diagnostics };

    match nullity {
        0 => empty(TransversalStatus::Finite, diagnostics),
        1 => {
            let n = column6(&v, 5);
            if plucker_quadric(&n).abs() < INFINITE_COEFF_TOL {
                let line = PlueckerLine::from_coords(n).expect("on the quadric").to_complex();
                TransversalSolution { status: TransversalStatus::Finite, lines: vec![line], real_count: 1, diagnostics }
            } else {
                empty(TransversalStatus::Finite, diagnostics)
            }
        }
        2 => {
            let (n1, n2) = (column6(&v, 4), column6(&v, 5));
            let (qa, qb, qc) = (plucker_quadric(&n1), plucker_pairing(&n1, &n2), plucker_quadric(&n2));
            diagnostics.coefficients = Some([qa, qb, qc]);
            let scale = qa.abs().max(qb.abs()).max(qc.abs());
            if scale < INFINITE_COEFF_TOL {
                return empty(TransversalStatus::Infinite, diagnostics);
            }
            let disc = qb * qb - 4.0 * qa * qc;
            diagnostics.discriminant = Some(disc);
            let band = DISCRIMINANT_BAND * scale * scale;
            let (status, real_count) = if disc.abs() <= band {
                (TransversalStatus::Degenerate, 1)
            } else if disc > 0.0 {
                (TransversalStatus::Finite, 2)
            } else {
                (TransversalStatus::Finite, 0)
            };
            let lines = pencil_roots(qa, qb, qc, disc)
                .into_iter()
                .filter_map(|(s, t)| {
                    let p: [Complex64; 6] = std::array::from_fn(|i| s * n1[i] + t * n2[i]);
                    PlueckerLine::from_coords(p).ok()
                })
                .collect();
            TransversalSolution { status, lines, real_count, diagnostics }
        }
        _ => empty(TransversalStatus::Infinite, diagnostics),
    }
}

/// Both roots `(s : t)` of `A s² + B s t + C t²`, homogeneous so that a root at
/// `t = 0` is kept.
fn pencil_roots(a: f64, b: f64, c: f64, disc: f64) -> Vec<(Complex64, Complex64)> {
    let sq = Complex64::new(disc, 0.0).sqrt();
    let sign = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -(Complex64::new(b, 0.0) + sq * sign) / 2.0;
    let (a, c) = (Complex64::new(a, 0.0), Complex64::new(c, 0.0));
    if q.norm() == 0.0 {
        // B = 0 and a double root: A s² + C t² with A C = 0.
        return if a.norm() > c.norm() { vec![(0.0.into(), 1.0.into()); 2] } else { vec![(1.0.into(), 0.0.into()); 2] };
    }
    vec![(q, a), (c, q)]
}

pub fn transversals_of_four(lines: &[PlueckerLine<f64>; 4]) -> TransversalSolution {
    common_transversals(lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadricKind {
    DoublePlane,
    PlanePair,
    Cone,
    Smooth,
}

/// Quadric surface `xᵀ A x = 0` of `P^3`, `A` symmetric with unit Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadric3 {
    pub a: Matrix4<f64>,
    /// Numerical rank of the `9 × 10` interpolation system it was solved from.
    pub system_rank: usize,
}

impl Quadric3 {
    pub fn evaluate(&self, x: &Vector4<f64>) -> f64 {
        (x.transpose() * self.a * x)[(0, 0)]
    }

    pub fn rank(&self, tol: f64) -> usize {
        let sv = singular_values(&DMatrix::from_column_slice(4, 4, self.a.as_slice()));
        sv.iter().filter(|&&s| s / sv[0] > tol).count()
    }

    pub fn kind(&self, tol: f64) -> QuadricKind {
        match self.rank(tol) {
            4 => QuadricKind::Smooth,
            3 => QuadricKind::Cone,
            2 => QuadricKind::PlanePair,
            _ => QuadricKind::DoublePlane,
        }
    }

    /// Largest `|xᵀAx|` over sampled unit points of the line.
    pub fn line_residual(&self, line: &PlueckerLine<f64>, samples: usize) -> f64 {
        (0..samples)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / samples as f64;
                self.evaluate(&line.point(th.cos(), th.sin())).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn monomials(x: &Vector4<f64>) -> [f64; 10] {
    let mut m = [0.0; 10];
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            m[k] = x[i] * x[j];
            k += 1;
        }
    }
    m
}

/// The quadric containing three pairwise disjoint lines, from nine points.
pub fn quadric_through_three_lines(lines: &[PlueckerLine<f64>; 3]) -> Result<Quadric3> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut rows = Vec::with_capacity(9);
    for l in lines {
        for (s, t) in [(1.0, 0.0), (0.0, 1.0), (h, h)] {
            rows.push(monomials(&l.point(s, t)));
        }
    }
    let sys = DMatrix::from_fn(9, 10, |r, c| rows[r][c]);
    let (v, sv) = jacobi_svd(&sys);
    let rank = sv.iter().filter(|&&s| s / sv[0] > DEFAULT_RANK_TOL).count();
    let nullity = 10 - rank;
    if nullity != 1 {
        return Err(Error::NonUniqueQuadric { dimension: nullity });
    }
    let c = v.column(9);
    let mut a = Matrix4::zeros();
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            if i == j {
                a[(i, i)] = c[k];
            } else {
                a[(i, j)] = c[k] / 2.0;
                a[(j, i)] = c[k] / 2.0;
            }
            k += 1;
        }
    }
    let n = a.norm();
    Ok(Quadric3 { a: a / n, system_rank: rank })
}

/// Expected count for the degree patterns handled by [`multidegree_check`].
pub fn expected_multidegree(d: &[usize]) -> Option<usize> {
    let mut parts: Vec<usize> = d.iter().copied().filter(|&x| x > 0).collect();
    parts.sort_unstable_by(|a, b| b.cmp(a));
    match parts.as_slice() {
        [2, 2] | [2, 1, 1] => Some(1),
        [1, 1, 1, 1] => Some(2),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MultidegreeReport {
    pub d: Vec<usize>,
    pub expected: usize,
    /// Complex solution count of every trial, in trial order.
    pub counts: Vec<usize>,
    /// Samples rejected as degenerate and redrawn.
    pub degenerate_resamples: usize,
    /// Trials that stayed degenerate after all redraws.
    pub failed_trials: usize,
}

impl MultidegreeReport {
    pub fn all_match(&self) -> bool {
        self.failed_trials == 0 && self.counts.iter().all(|&c| c == self.expected)
    }
}

const MAX_RESAMPLES: usize = 20;
const VERIFY_TOL: f64 = 1e-7;

enum Constraint {
    /// The image must equal this line: back-projected plane.
    Line { plane: Vector4<f64>, image: Vector3<f64> },
    /// The image must pass through this point: back-projected ray.
    Point { ray: PlueckerLine<f64>, point: Vector3<f64> },
}

fn plane_meets_line(h: &Vector4<f64>, l: &PlueckerLine<f64>) -> Vector4<f64> {
    let (k0, k1) = (l.basis_vector(0), l.basis_vector(1));
    k0 * h.dot(&k1) - k1 * h.dot(&k0)
}

fn verify(rig: &CameraRig, d: &[usize], cons: &[Option<Constraint>], line: &PlueckerLine<Complex64>) -> bool {
    let Ok(images) = forward_map(rig, line) else { return false };
    let Ok(m) = build_m(rig, &images) else { return false };
    if !matches!(numerical_rank(&m, DEFAULT_RANK_TOL), Ok(r) if r.numerical_rank <= 2) {
        return false;
    }
    d.iter().zip(cons).zip(images.lines()).all(|((_, c), img)| match c {
        None => true,
        Some(Constraint::Line { image, .. }) => {
            let target = ProjectivePoint::from_slice(image.map(Complex64::from).as_slice()).expect("nonzero");
            img.approx_eq(&target, VERIFY_TOL)
        }
        Some(Constraint::Point { point, .. }) => {
            let v: Complex64 = img.coords().iter().zip(point.iter()).map(|(a, b)| a * b).sum();
            v.norm() < VERIFY_TOL * point.norm()
        }
    })
}

fn multidegree_trial(rig: &CameraRig, d: &[usize], rng: &mut impl rand::Rng) -> Result<usize> {
    let cons: Vec<Option<Constraint>> = rig
        .cameras()
        .iter()
        .zip(d)
        .map(|(cam, &di)| match di {
            2 => {
                let image = gaussian_vector3(rng);
                Ok(Some(Constraint::Line { plane: cam.matrix().transpose() * image, image }))
            }
            1 => {
                let point = gaussian_vector3(rng);
                Ok(Some(Constraint::Point { ray: cam.back_project_point(&point)?, point }))
            }
            _ => Ok(None),
        })
        .collect::<Result<_>>()?;
    let planes: Vec<&Vector4<f64>> = cons.iter().flatten().filter_map(|c| match c {
        Constraint::Line { plane, .. } => Some(plane),
        _ => None,
    }).collect();
    let rays: Vec<&PlueckerLine<f64>> = cons.iter().flatten().filter_map(|c| match c {
        Constraint::Point { ray, .. } => Some(ray),
        _ => None,
    }).collect();
    let solutions: Vec<PlueckerLine<Complex64>> = match (planes.len(), rays.len()) {
        (2, 0) => vec![PlueckerLine::from_planes(planes[0], planes[1])?.to_complex()],
        (1, 2) => {
            let q = plane_meets_line(planes[0], rays[0]);
            let q2 = plane_meets_line(planes[0], rays[1]);
            vec![PlueckerLine::from_vectors(&q, &q2)?.to_complex()]
        }
        (0, 4) => {
            let sol = transversals_of_four(&[rays[0].clone(), rays[1].clone(), rays[2].clone(), rays[3].clone()]);
            if sol.status != TransversalStatus::Finite {
                return Err(Error::DegenerateSample(format!("transversal status {:?}", sol.status)));
            }
            sol.lines
        }
        _ => return Err(Error::InvalidArgument("unsupported degree pattern".into())),
    };
    for s in &solutions {
        if !verify(rig, d, &cons, s) {
            return Err(Error::DegenerateSample("solution failed verification".into()));
        }
    }
    Ok(solutions.len())
}

/// Counts the lines whose images satisfy generic conditions of codimension
/// `d_i` in camera `i` (a fixed image line for 2, a point on it for 1).
pub fn multidegree_check(rig: &CameraRig, d: &[usize], trials: usize, seed: u64) -> Result<MultidegreeReport> {
    if d.len() != rig.len() {
        return Err(Error::LengthMismatch { left: rig.len(), right: d.len() });
    }
    let expected = expected_multidegree(d)
        .ok_or_else(|| Error::InvalidArgument(format!("degree vector {d:?} is not a permutation of (2,2), (2,1,1) or (1,1,1,1)")))?;
    if d.iter().any(|&x| x > 2) || d.iter().sum::<usize>() != 4 {
        return Err(Error::InvalidArgument(format!("degree vector {d:?} must sum to 4")));
    }
    let results = crate::parallel::map_indexed(trials, |t| {
        let mut rng = rng_for(seed, STREAM_MULTIDEGREE, t as u64);
        let mut rejected = 0;
        for _ in 0..MAX_RESAMPLES {
            match multidegree_trial(rig, d, &mut rng) {
                Ok(c) => return (Some(c), rejected),
                Err(Error::InvalidArgument(msg)) => panic!("{msg}"),
                Err(_) => rejected += 1,
            }
        }
        (None, rejected)
    });
    let degenerate_resamples = results.iter().map(|r| r.1).sum();
    let failed_trials = results.iter().filter(|r| r.0.is_none()).count();
    let counts = results.iter().filter_map(|r| r.0).collect();
    Ok(MultidegreeReport { d: d.to_vec(), expected, counts, degenerate_resamples, failed_trials })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealCountConfig {
    /// Image points `x_i`, one per camera.
    pub image_points: [Vector3<f64>; 4],
    /// Samples per deterministic sub-stream.
    pub block_size: usize,
}

impl Default for RealCountConfig {
    fn default() -> Self {
        Self {
            image_points: [
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
                Vector3::new(1.0, 1.0, 1.0),
            ],
            block_size: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RealCountEstimate {
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
    /// Number of samples with 0, 1 and 2 real transversals.
    pub histogram: [usize; 3],
    /// Samples discarded (guard band, infinite families, rank-deficient cameras).
    pub discarded: usize,
}

/// Real transversal count of one sample, `None` when it is discarded.
pub fn real_count_sample(rng: &mut impl rand::Rng, points: &[Vector3<f64>; 4]) -> Option<usize> {
    let mut rows = [[0.0; 6]; 4];
    for (row, x) in rows.iter_mut().zip(points) {
        let c = gaussian_matrix3x4(rng);
        let y = c.transpose() * (c * c.transpose()).try_inverse()? * x;
        let center = cofactor_kernel(&c);
        let p = hodge_star(&wedge(&center, &y));
        let n = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return None;
        }
        *row = p.map(|v| v / n);
    }
    real_transversal_count(&rows)
}

fn dot6(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(v: &mut [f64; 6], basis: &[[f64; 6]]) {
    for _ in 0..2 {
        for b in basis {
            let d = dot6(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
    }
}

/// Number of real transversals given the dual rows of four unit lines, or
/// `None` for infinite families and double roots. Allocation-free: the sign of
/// the pencil discriminant does not depend on the null basis, so any
/// orthonormal complement of the rows will do.
pub fn real_transversal_count(rows: &[[f64; 6]; 4]) -> Option<usize> {
    let mut q = [[0.0; 6]; 6];
    let mut len = 0;
    for r in rows {
        let mut v = *r;
        orthogonalize(&mut v, &q[..len]);
        let n = dot6(&v, &v).sqrt();
        if n <= DEFAULT_RANK_TOL {
            return None;
        }
        q[len] = v.map(|x| x / n);
        len += 1;
    }
    // Complete with the two unit vectors of largest residual.
    for _ in 0..2 {
        let mut best = ([0.0; 6], 0.0);
        for k in 0..6 {
            let mut e = [0.0; 6];
            e[k] = 1.0;
            orthogonalize(&mut e, &q[..len]);
            let n = dot6(&e, &e);
            if n > best.1 {
                best = (e, n);
            }
        }
        q[len] = best.0.map(|x| x / best.1.sqrt());
        len += 1;
    }
    let (n1, n2) = (&q[4], &q[5]);
    let (a, b, c) = (plucker_quadric(n1), plucker_pairing(n1, n2), plucker_quadric(n2));
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale < INFINITE_COEFF_TOL {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc.abs() <= DISCRIMINANT_BAND * scale * scale {
        return None;
    }
    Some(if disc > 0.0 { 2 } else { 0 })
}

/// Monte-Carlo mean of the number of real lines meeting four back-projected
/// rays of i.i.d. Gaussian cameras.
pub fn expected_real_transversals(samples: usize, seed: u64) -> RealCountEstimate {
    expected_real_transversals_with(samples, seed, &RealCountConfig::default())
}

pub fn expected_real_transversals_with(samples: usize, seed: u64, config: &RealCountConfig) -> RealCountEstimate {
    let bs = config.block_size.max(1);
    let blocks = samples.div_ceil(bs);
    let partial = crate::parallel::map_indexed(blocks, |b| {
        let mut rng = rng_for(seed, STREAM_REAL_COUNT, b as u64);
        let n = bs.min(samples - b * bs);
        let mut hist = [0usize; 3];
        let mut discarded = 0;
        for _ in 0..n {
            match real_count_sample(&mut rng, &config.image_points) {
                Some(c) => hist[c.min(2)] += 1,
                None => discarded += 1,
            }
        }
        (hist, discarded)
    });
    let mut histogram = [0usize; 3];
    let mut discarded = 0;
    for (h, d) in partial {
        for k in 0..3 {
            histogram[k] += h[k];
        }
        discarded += d;
    }
    let used = histogram.iter().sum::<usize>();
    let sum = (histogram[1] + 2 * histogram[2]) as f64;
    let sum_sq = (histogram[1] + 4 * histogram[2]) as f64;
    let n = used.max(1) as f64;
    let mean = sum / n;
    let var = if used > 1 { (sum_sq - n * mean * mean) / (n - 1.0) } else { 0.0 };
    RealCountEstimate { samples, mean, std_error: (var / n).sqrt(), histogram, discarded }
}

/// A random image line through a given image point.
pub fn random_line_through<R: rand::Rng + ?Sized>(rng: &mut R, x: &Vector3<f64>) -> Vector3<f64> {
    let v = Vector3::new(gaussian(rng), gaussian(rng), gaussian(rng));
    x.cross(&v)
}

/// Tuple of random image lines for a rig.
pub fn random_tuple<R: rand::Rng + ?Sized>(rng: &mut R, m: usize) -> LineTuple<f64> {
    LineTuple::from_vectors(&(0..m).map(|_| gaussian_vector3(rng)).collect::<Vec<_>>()).expect("nonzero almost surely")
}
